#include "ndro/empirical.hpp"

#include <cmath>

#include "ndro/error.hpp"
#include "ndro/solvers.hpp"

namespace ndro {

ModelParams::ModelParams(Eigen::VectorXd w_, double W_) : w(std::move(w_)), W(W_) {
  if (!(W > 0.0)) throw ParameterError("ball radius W must be positive");
  if (!w.allFinite()) throw DomainError("model parameters are not finite");
  if (w.norm() > W + 1e-9) throw ParameterError("model parameters lie outside B(W)");
}

RegularizedObjective::RegularizedObjective(const Dataset& data, Activation act, double nu)
    : data_(&data), act_(act), nu_(nu) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw ParameterError("nu must be a nonnegative number");
}

namespace {

void check_dims(const Eigen::VectorXd& w, const Eigen::VectorXd& x) {
  if (w.size() != x.size()) throw DimensionError("parameter and covariate dimensions differ");
}

void check_sizes(const WeightVector& a, const WeightVector& b) {
  if (a.size() != b.size()) throw DimensionError("weight vectors differ in length");
}

}  // namespace

double loss(const ModelParams& w, const LabeledSample& s, const Activation& act) {
  check_dims(w.w, s.x);
  const double r = eval(act, w.w.dot(s.x)) - s.y;
  return r * r;
}

Eigen::VectorXd vfield(const ModelParams& w, const LabeledSample& s, const Activation& act,
                       double M) {
  check_dims(w.w, s.x);
  const double y = std::copysign(std::min(std::abs(s.y), M), s.y);
  return 2.0 * act.beta * (eval(act, w.w.dot(s.x)) - y) * s.x;
}

Eigen::VectorXd sample_losses(const Eigen::VectorXd& w, const Dataset& ds, const Activation& act) {
  if (static_cast<std::size_t>(w.size()) != ds.dim())
    throw DimensionError("parameter and covariate dimensions differ");
  const Eigen::VectorXd t = ds.X() * w;
  Eigen::VectorXd out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double r = eval(act, t[i]) - ds.y()[i];
    out[i] = r * r;
  }
  return out;
}

Eigen::VectorXd expected_field(const Eigen::VectorXd& w, const WeightVector& p, const Dataset& ds,
                               const Activation& act, double M) {
  if (static_cast<std::size_t>(w.size()) != ds.dim())
    throw DimensionError("parameter and covariate dimensions differ");
  if (p.size() != ds.size()) throw DimensionError("weights do not match the sample count");
  const Eigen::VectorXd t = ds.X() * w;
  Eigen::VectorXd r(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double y = ds.y()[i];
    r[i] = p.values()[i] * (eval(act, t[i]) - std::copysign(std::min(std::abs(y), M), y));
  }
  return 2.0 * act.beta * (ds.X().transpose() * r);
}

double chi2(const WeightVector& p, const WeightVector& p0) { return bregman(p, p0, p0); }

double bregman(const WeightVector& p, const WeightVector& q, const WeightVector& p0) {
  check_sizes(p, q);
  check_sizes(p, p0);
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double diff = p[j] - q[j];
    if (p0[j] == 0.0) {
      if (p[j] != 0.0 || q[j] != 0.0)
        throw SupportError("distribution charges a coordinate outside the reference support");
      continue;
    }
    s += diff * diff / p0[j];
  }
  return s;
}

double objective_from_losses(const Eigen::VectorXd& losses, const WeightVector& p,
                             const WeightVector& p0, double nu) {
  if (static_cast<std::size_t>(losses.size()) != p.size())
    throw DimensionError("losses and weights differ in length");
  const double penalty = nu == 0.0 ? 0.0 : nu * chi2(p, p0);
  return p.values().dot(losses) - penalty;
}

double objective_L(const ModelParams& w, const WeightVector& p, const RegularizedObjective& obj) {
  return objective_from_losses(sample_losses(w.w, obj.data(), obj.activation()), p, obj.p0(),
                               obj.nu());
}

WeightVector qhat_closed_form_losses(const Eigen::VectorXd& losses, const WeightVector& p0,
                                     double nu) {
  const double mean = p0.values().dot(losses);
  if (!(nu > 0.0) || nu < 0.5 * mean) return target_distribution(losses, p0, nu);
  Eigen::VectorXd q(losses.size());
  for (Eigen::Index i = 0; i < losses.size(); ++i)
    q[i] = p0.values()[i] + p0.values()[i] * (losses[i] - mean) / (2.0 * nu);
  return WeightVector::from_approximate(std::move(q));
}

WeightVector qhat_closed_form(const ModelParams& w, const RegularizedObjective& obj) {
  return qhat_closed_form_losses(sample_losses(w.w, obj.data(), obj.activation()), obj.p0(),
                                 obj.nu());
}

WeightVector qhat_general_losses(const Eigen::VectorXd& losses, const WeightVector& p0, double nu) {
  if (!(nu > 0.0)) throw ParameterError("qhat_general requires nu > 0");
  if (static_cast<std::size_t>(losses.size()) != p0.size())
    throw DimensionError("losses and weights differ in length");
  // q_i = max(b_i - p0_i xi, 0) / (2 nu) with b_i = p0_i (l_i + 2 nu).
  const Eigen::VectorXd& c = p0.values();
  const Eigen::VectorXd b = c.cwiseProduct((losses.array() + 2.0 * nu).matrix());
  return detail::waterfill(b, c, 2.0 * nu);
}

WeightVector qhat_general(const ModelParams& w, const RegularizedObjective& obj) {
  return qhat_general_losses(sample_losses(w.w, obj.data(), obj.activation()), obj.p0(), obj.nu());
}

WeightVector target_distribution(const Eigen::VectorXd& losses, const WeightVector& p0, double nu) {
  if (nu > 0.0) return qhat_general_losses(losses, p0, nu);
  return brute_dual_argmax(losses, p0);
}

RiskValue risk_from_losses(const Eigen::VectorXd& losses, const WeightVector& p0, double nu) {
  const Eigen::VectorXd& c = p0.values();
  const double mean = c.dot(losses);
  if (nu > 0.0 && nu >= 0.5 * mean) {
    const double var = c.dot((losses.array() - mean).square().matrix());
    return {mean + var / (4.0 * nu), var / (4.0 * nu * nu), true};
  }
  const DualMax dm = brute_dual_max_losses(losses, p0, nu);
  return {dm.value, chi2(dm.argmax, p0), false};
}

RiskValue risk_closed_form(const ModelParams& w, const RegularizedObjective& obj) {
  return risk_from_losses(sample_losses(w.w, obj.data(), obj.activation()), obj.p0(), obj.nu());
}

double gap(const ModelParams& w, const WeightVector& p, const ModelParams& w_star,
           const WeightVector& p_star, const RegularizedObjective& obj) {
  return objective_L(w, p_star, obj) - objective_L(w_star, p, obj);
}

OptStatistics opt_statistics(const ModelParams& w_star, const RegularizedObjective& obj) {
  const Eigen::VectorXd l = sample_losses(w_star.w, obj.data(), obj.activation());
  WeightVector p_star = target_distribution(l, obj.p0(), obj.nu());
  const double opt = p_star.values().dot(l);
  const double opt2 = p_star.values().dot(l.cwiseProduct(l));
  return {opt, opt2, std::move(p_star)};
}

}  // namespace ndro
