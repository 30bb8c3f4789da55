#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ndro/activation.hpp"
#include "ndro/dataset.hpp"
#include "ndro/solvers.hpp"

namespace ndro {

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t instances = 100;  // random instances per suite
  std::size_t max_n = 50;       // largest sample count in random instances
  /// Test hook: corrupts one closed-form output so the qhat suite must fail.
  bool perturb = false;
  /// 0 means NEURON_DRO_THREADS, else the hardware concurrency.
  std::size_t threads = 0;
};

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::size_t checks = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest observed error, suite-specific units
  std::string detail;
  double seconds = 0.0;
};

/// Runs the suites qhat, risk, dual_step, simplex_project, step_sizes and
/// gap_sandwich, in parallel across suites.
std::vector<SuiteResult> run_verification(const VerifyOptions& opts);

std::size_t verify_thread_count(const VerifyOptions& opts);

/// A small random regression instance for closed-form checks.
struct QhatInstance {
  Dataset data;
  Eigen::VectorXd w;
  double nu = 1.0;
};

/// N in [2, max_n]. In the closed-form regime nu >= E_{p0} l(w); otherwise
/// nu < E_{p0} l(w) / 2, so the nonnegativity clamp can bind.
QhatInstance random_qhat_instance(std::mt19937_64& rng, std::size_t max_n, bool closed_form_regime);

/// Losses, p0, p_prev random; a, m, nu log-uniform in [1e-3, 1e3].
DualStepProblem random_dual_problem(std::mt19937_64& rng, std::size_t max_n);

/// Uniform draw from the simplex.
Eigen::VectorXd random_simplex_point(std::mt19937_64& rng, std::size_t n);

}  // namespace ndro
