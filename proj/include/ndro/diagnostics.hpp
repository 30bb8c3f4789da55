#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "ndro/activation.hpp"
#include "ndro/dataset.hpp"
#include "ndro/empirical.hpp"
#include "ndro/weights.hpp"

namespace ndro {

/// Smallest eigenvalue of sum_j weights_j x_j x_j^T 1{w*.x_j >= gamma ||w*||}.
double check_margin(const WeightVector& weights, const Dataset& ds, const Eigen::VectorXd& w_star,
                    double gamma);

struct MarginEntry {
  double gamma = 0.0;
  double lambda_hat = 0.0;
};

/// check_margin over gamma in {0.05, 0.1, 0.2, 0.5}.
std::vector<MarginEntry> margin_sweep(const WeightVector& weights, const Dataset& ds,
                                      const Eigen::VectorXd& w_star);

struct SharpnessReport {
  double c0_hat = 0.0;
  double moment2_max = 0.0;
  double moment4_max = 0.0;
  double margin_lambda_hat = 0.0;  // best over the gamma sweep
  double c1_hat = 0.0;             // c0_hat^2 / (24 B)
  std::size_t trials_used = 0;
  std::vector<MarginEntry> margin;
};

struct SharpnessOptions {
  std::size_t trials = 1000;
  double epsilon = 1e-3;
  double B = 1.0;
  std::uint64_t seed = 0;
};

/// Minimum over random w in B(2||w*||) with ||w - w*|| >= sqrt(epsilon) of
/// E_weights[(sigma(w.x) - sigma(w*.x))(w.x - w*.x)] / ||w - w*||^2, doubled.
SharpnessReport estimate_sharpness(const WeightVector& weights, const Dataset& ds,
                                   const Eigen::VectorXd& w_star, const Activation& act,
                                   const SharpnessOptions& opts = {});

struct AmbiguityCheck {
  double chi2_value = 0.0;  // chi2(p*, p0)
  double bound = 0.0;       // c1 / (1536 beta^4 B)
  bool pass = false;
};

AmbiguityCheck check_ambiguity_radius(const Eigen::VectorXd& w_star, const RegularizedObjective& obj,
                                      double B, double c1);

struct BoundCheck {
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - value
  bool pass = false;
};

struct FinalBoundsReport {
  bool applicable = false;
  double C3 = 0.0;
  double C4 = 0.0;
  double opt = 0.0;
  double epsilon = 0.0;
  BoundCheck distance;     // ||w - w*|| <= C3 sqrt(OPT) + sqrt(eps)
  BoundCheck square_loss;  // E_{p*} l(w) <= (2 + 20 B beta^2 C3^2) OPT + 10 beta^2 B eps
  BoundCheck risk;         // R(w) - R(w*) <= C4 (OPT + eps)
  AmbiguityCheck ambiguity;
  bool all_pass = false;
};

/// C3 = 16 beta sqrt(B) / c1.
double constant_C3(double beta, double B, double c1);
/// C4 = 1 + 2 (10 B beta^2 + c1) C3 + c1 sqrt(5B) beta^2 C3^2.
double constant_C4(double beta, double B, double c1);

/// Not applicable when w_star is absent.
FinalBoundsReport final_bounds_report(const Eigen::VectorXd& w_hat,
                                      const std::optional<Eigen::VectorXd>& w_star,
                                      const RegularizedObjective& obj, double B, double c1,
                                      double epsilon);

}  // namespace ndro
