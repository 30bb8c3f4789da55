#pragma once

#include <Eigen/Core>

#include "ndro/empirical.hpp"
#include "ndro/weights.hpp"

namespace ndro {

/// v if ||v|| <= W, else v W / ||v||.
Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double W);

/// argmin over B(W) of a <g, w> + (1 + c1 A_prev / 2) / 2 ||w - w_prev||^2.
Eigen::VectorXd primal_step(const Eigen::VectorXd& w_prev, const Eigen::VectorXd& g, double a,
                            double A_prev, double c1, double W);

/// max over the simplex of
///   a (sum p_j l_j - nu chi2(p, p0)) - m sum (p_j - p_prev_j)^2 / p0_j.
struct DualStepProblem {
  Eigen::VectorXd losses;
  double a = 0.0;
  double prox_weight = 0.0;  // m = nu0 + nu A_{i-1}
  double nu = 0.0;
  WeightVector p0;
  WeightVector p_prev;

  /// Throws on negative scalars, mismatched sizes, non-positive p0 entries,
  /// or a nu + m == 0.
  void validate() const;
  double objective(const Eigen::VectorXd& p) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const;
};

WeightVector dual_step(const DualStepProblem& prob);

/// Spread of the partial derivatives over the support of p, plus any excess
/// of an off-support partial over the support mean. Zero at the optimum.
double dual_stationarity_residual(const DualStepProblem& prob, const WeightVector& p);

struct DualMax {
  double value = 0.0;
  WeightVector argmax;
};

/// Oracle for max_p L(w, p) by projected gradient ascent; for nu = 0 the
/// maximum loss with uniform weights over its maximizers.
DualMax brute_dual_max(const ModelParams& w, const RegularizedObjective& obj, double tol = 1e-13);
DualMax brute_dual_max_losses(const Eigen::VectorXd& losses, const WeightVector& p0, double nu,
                              double tol = 1e-13);

/// Oracle for a general dual prox problem by projected gradient ascent.
DualMax brute_dual_step(const DualStepProblem& prob, double tol = 1e-13);

/// Uniform weights over indices whose loss is within 1e-12 of the maximum.
WeightVector brute_dual_argmax(const Eigen::VectorXd& losses, const WeightVector& p0);

/// argmin over the simplex of sum_j (p_j - v_j)^2 / weights_j.
WeightVector simplex_project(const Eigen::VectorXd& v, const WeightVector& weights);

namespace detail {
/// Solves sum_j max(b_j - c_j lambda, 0) = h for lambda (c > 0, h > 0) and
/// returns p_j = max(b_j - c_j lambda, 0) / h.
WeightVector waterfill(const Eigen::VectorXd& b, const Eigen::VectorXd& c, double h);

/// In-place dual step for callers that hold validated inputs; `b` is
/// scratch space. `out` sums to one and is nonnegative on return.
void dual_step_into(const Eigen::VectorXd& losses, double a, double m, double nu,
                    const Eigen::VectorXd& p0, const Eigen::VectorXd& p_prev, Eigen::VectorXd& b,
                    Eigen::VectorXd& out);
}  // namespace detail

}  // namespace ndro
