#pragma once

#include <Eigen/Core>

#include "ndro/activation.hpp"
#include "ndro/dataset.hpp"
#include "ndro/weights.hpp"

namespace ndro {

/// A primal point w constrained to the ball B(W).
struct ModelParams {
  Eigen::VectorXd w;
  double W = 1.0;

  ModelParams() = default;
  ModelParams(Eigen::VectorXd w_, double W_);
};

/// L(w, p) = E_p[(sigma(w.x) - y)^2] - nu * chi2(p, p0) over a fixed sample,
/// with p0 the dataset's reference weights. The dataset must outlive it.
class RegularizedObjective {
 public:
  RegularizedObjective(const Dataset& data, Activation act, double nu);

  const Dataset& data() const { return *data_; }
  const Activation& activation() const { return act_; }
  double nu() const { return nu_; }
  const WeightVector& p0() const { return data_->ref_weights(); }

 private:
  const Dataset* data_;
  Activation act_;
  double nu_;
};

/// (sigma(w.x) - y)^2.
double loss(const ModelParams& w, const LabeledSample& s, const Activation& act);

/// 2 beta (sigma(w.x) - clamp(y, M)) x.
Eigen::VectorXd vfield(const ModelParams& w, const LabeledSample& s, const Activation& act,
                       double M);

/// Per-sample losses at w.
Eigen::VectorXd sample_losses(const Eigen::VectorXd& w, const Dataset& ds, const Activation& act);

/// E_p[v(w; x, y)] with labels clamped at M.
Eigen::VectorXd expected_field(const Eigen::VectorXd& w, const WeightVector& p, const Dataset& ds,
                               const Activation& act, double M);

/// sum_j (p_j - p0_j)^2 / p0_j. Throws SupportError if p charges a
/// coordinate where p0 vanishes.
double chi2(const WeightVector& p, const WeightVector& p0);

/// Bregman divergence of chi2(., p0): sum_j (p_j - q_j)^2 / p0_j.
double bregman(const WeightVector& p, const WeightVector& q, const WeightVector& p0);

double objective_L(const ModelParams& w, const WeightVector& p, const RegularizedObjective& obj);
/// Same as objective_L for precomputed losses.
double objective_from_losses(const Eigen::VectorXd& losses, const WeightVector& p,
                             const WeightVector& p0, double nu);

/// Worst-case reweighting p0_i (1 + (l_i - E l) / (2 nu)), valid when
/// nu >= E_{p0} l / 2. Otherwise defers to qhat_general.
WeightVector qhat_closed_form(const ModelParams& w, const RegularizedObjective& obj);
WeightVector qhat_closed_form_losses(const Eigen::VectorXd& losses, const WeightVector& p0,
                                     double nu);

/// Worst-case reweighting p0_i max(l_i - xi + 2 nu, 0) / (2 nu) with xi set
/// by water-filling so the weights sum to one. Requires nu > 0.
WeightVector qhat_general(const ModelParams& w, const RegularizedObjective& obj);
WeightVector qhat_general_losses(const Eigen::VectorXd& losses, const WeightVector& p0, double nu);

/// qhat_general for nu > 0, otherwise the uniform distribution over the
/// loss maximizers.
WeightVector target_distribution(const Eigen::VectorXd& losses, const WeightVector& p0, double nu);

struct RiskValue {
  double risk = 0.0;
  double chi2 = 0.0;        // chi2(q_w, p0)
  bool closed_form = true;  // false when the oracle was used
};

/// R(w) = E l + Var(l) / (4 nu) and chi2(q_w, p0) = Var(l) / (4 nu^2) when
/// nu >= E l / 2; otherwise the maximum from brute_dual_max.
RiskValue risk_closed_form(const ModelParams& w, const RegularizedObjective& obj);
RiskValue risk_from_losses(const Eigen::VectorXd& losses, const WeightVector& p0, double nu);

/// L(w, p_star) - L(w_star, p). Not sign-definite.
double gap(const ModelParams& w, const WeightVector& p, const ModelParams& w_star,
           const WeightVector& p_star, const RegularizedObjective& obj);

struct OptStatistics {
  double opt = 0.0;   // E_{p*} l(w*)
  double opt2 = 0.0;  // E_{p*} l(w*)^2
  WeightVector p_star;
};

OptStatistics opt_statistics(const ModelParams& w_star, const RegularizedObjective& obj);

}  // namespace ndro
