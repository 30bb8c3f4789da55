#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "ndro/activation.hpp"
#include "ndro/dataset.hpp"
#include "ndro/empirical.hpp"
#include "ndro/weights.hpp"

namespace ndro {

/// Whether a constant was given by the user or measured from data.
enum class ParamSource { supplied, estimated };

struct AlgoConfig {
  double nu = 1.0;
  double nu0 = 0.25;
  double c1 = 1.0;
  double W = 1.0;
  double epsilon = 1e-3;
  double B = 1.0;
  std::size_t k_max = 1000;
  BoundMode bound_mode = BoundMode::tight;
  ParamSource c1_source = ParamSource::supplied;
  ParamSource nu_source = ParamSource::supplied;
  bool record_diagnostics = true;
  std::uint64_t seed = 0;
  /// Early stop once ||w_i - w_{i-1}|| <= stop_tol for stop_window
  /// consecutive iterations.
  double stop_tol = 1e-12;
  std::size_t stop_window = 10;

  void validate() const;
};

/// 768 beta^4 B epsilon / c1.
double default_nu0(double beta, double B, double epsilon, double c1);

/// 8 beta^2 sqrt(6B) sqrt(opt2 + epsilon) / c1.
double nu_threshold(double opt2, double epsilon, double beta, double B, double c1);

/// Smallest nu (up to 1e-9 relative) with nu >= nu_threshold(OPT2(nu)),
/// where OPT2(nu) is the second loss moment at w_star under the target
/// distribution for that nu.
double calibrate_nu(const Eigen::VectorXd& w_star, const Dataset& ds, const Activation& act,
                    double c1, double B, double epsilon);

struct StepSize {
  double a = 0.0;    // a_i
  double eta = 0.0;  // growth rate of the schedule
};

/// a_i = (1 + eta)^(i-1) min(nu0, 1/4) / (2 max(kappa, G)) with
/// eta = min(nu, c1/8) / (2 max(kappa, G)).
class StepSchedule {
 public:
  StepSchedule(double nu, double c1, double kappa, double G, double nu0);

  double eta() const { return eta_; }
  double a(std::size_t i) const;
  /// Closed form for A_k = a_1 + ... + a_k.
  double A(std::size_t k) const;

 private:
  double eta_;
  double base_;   // a_1
  double ratio_;  // min(nu0, 1/4) / min(nu, c1/8)
};

StepSize step_size(std::size_t i, double nu, double c1, double kappa, double G, double nu0);

struct IterateState {
  std::size_t i = 0;
  Eigen::VectorXd w_curr, w_prev;
  WeightVector p_curr, p_prev;
  double a_curr = 0.0, a_prev = 0.0;
  double A_curr = 0.0, A_prev = 0.0;
};

/// g_{i-1} = E_{p_{i-1}} v(w_{i-1}) + (a_{i-1} / a_i) (E_{p_{i-1}} v(w_{i-1}) - E_{p_{i-2}} v(w_{i-2}))
/// for a state holding iterates i-1 (curr) and i-2 (prev).
Eigen::VectorXd extrapolated_gradient(const IterateState& state, double a_next, const Dataset& ds,
                                      const Activation& act, double M);

/// The known optimum used for trace diagnostics.
struct Reference {
  Eigen::VectorXd w_star;
  WeightVector p_star;
  double opt = 0.0;
  double opt2 = 0.0;
  double c1 = 0.0;
  double B = 1.0;
};

Reference make_reference(const Eigen::VectorXd& w_star, const RegularizedObjective& obj, double c1,
                         double B);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TraceRecord {
  std::size_t i = 0;
  double a = 0.0;
  double A = 0.0;
  double w_norm = 0.0;
  double step_norm = 0.0;  // ||w_i - w_{i-1}||
  double L = 0.0;          // L(w_i, p_i)
  // Reference-dependent quantities; NaN when no reference is known.
  double dist = kNaN;           // ||w_i - w*||
  double gap = kNaN;            // L(w_i, p*) - L(w*, p_i)
  double gap_lower = kNaN;      // per-iterate lower bound on gap
  double cum_gap = kNaN;        // sum_{j<=i} a_j gap_j
  double cum_lower = kNaN;      // sum_{j<=i} a_j gap_lower_j
  double cum_upper = kNaN;      // upper bound on cum_gap from the iterates
  double chi2_to_pstar = kNaN;  // sum (p_i - p*)^2 / p*
  double breg_pstar = kNaN;     // D(p*, p_i)
  double local_S = kNaN;        // E_{p_i}[(s* - s_i)^2 + 2 (s_i - y)(s* - s_i)]
  double local_rhs = kNaN;      // E_{p_i}<v(w_i), w* - w_i> - E_i
};

struct RunResult {
  Eigen::VectorXd w_hat;
  WeightVector p_hat;
  std::vector<TraceRecord> trace;
  bool has_reference = false;
  std::size_t iterations = 0;
  bool early_stopped = false;
  VectorFieldBounds bounds;
  double eta = 0.0;
  double A = 0.0;
};

/// Runs the primal-dual iteration on a truncated dataset.
RunResult run(const Dataset& ds, const Activation& act, const AlgoConfig& cfg,
              const Reference* ref = nullptr);

struct ZeroTestResult {
  Eigen::VectorXd w;
  double risk_zero = 0.0;
  double risk_candidate = 0.0;
  bool chose_zero = false;
};

/// Returns whichever of 0 and w_hat has the lower empirical DRO risk;
/// ties keep w_hat.
ZeroTestResult zero_test(const Dataset& ds, const Activation& act, const AlgoConfig& cfg,
                         const Eigen::VectorXd& w_hat);

/// ceil((1 + 1/eta) log(D0 / epsilon)), or 1 when D0 <= epsilon.
std::size_t theoretical_iteration_budget(const AlgoConfig& cfg, double kappa, double G, double D0);
std::size_t iteration_budget_for_eta(double eta, double D0, double epsilon);

/// 1/2 ||w*||^2 + nu0 chi2(p*, p0).
double initial_distance(const Reference& ref, const WeightVector& p0, double nu0);

}  // namespace ndro
