#include "ndro/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ndro/error.hpp"

namespace ndro {

namespace {

double min_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Eigen::VectorXd random_unit(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd u(d);
  do {
    for (Eigen::Index k = 0; k < d; ++k) u[k] = nd(rng);
  } while (u.norm() == 0.0);
  return u / u.norm();
}

}  // namespace

double check_margin(const WeightVector& weights, const Dataset& ds, const Eigen::VectorXd& w_star,
                    double gamma) {
  if (weights.size() != ds.size()) throw DimensionError("weights do not match the sample count");
  if (static_cast<std::size_t>(w_star.size()) != ds.dim())
    throw DimensionError("w_star does not match the data dimension");
  const double wn = w_star.norm();
  if (wn == 0.0) throw ParameterError("margin check needs a nonzero w_star");
  const Eigen::VectorXd t = ds.X() * w_star;
  Eigen::VectorXd mask(t.size());
  for (Eigen::Index j = 0; j < t.size(); ++j)
    mask[j] = t[j] >= gamma * wn ? weights.values()[j] : 0.0;
  const Eigen::MatrixXd second = ds.X().transpose() * mask.asDiagonal() * ds.X();
  return std::max(0.0, min_eigenvalue(second));
}

std::vector<MarginEntry> margin_sweep(const WeightVector& weights, const Dataset& ds,
                                      const Eigen::VectorXd& w_star) {
  std::vector<MarginEntry> out;
  for (double g : {0.05, 0.1, 0.2, 0.5}) out.push_back({g, check_margin(weights, ds, w_star, g)});
  return out;
}

SharpnessReport estimate_sharpness(const WeightVector& weights, const Dataset& ds,
                                   const Eigen::VectorXd& w_star, const Activation& act,
                                   const SharpnessOptions& opts) {
  if (weights.size() != ds.size()) throw DimensionError("weights do not match the sample count");
  if (static_cast<std::size_t>(w_star.size()) != ds.dim())
    throw DimensionError("w_star does not match the data dimension");
  const Eigen::Index d = static_cast<Eigen::Index>(ds.dim());
  const Eigen::VectorXd& p = weights.values();
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SharpnessReport rep;
  const Eigen::VectorXd t_star = ds.X() * w_star;
  Eigen::VectorXd s_star(t_star.size());
  for (Eigen::Index j = 0; j < t_star.size(); ++j) s_star[j] = eval(act, t_star[j]);

  const double radius = 2.0 * w_star.norm();
  const double min_sep = std::sqrt(opts.epsilon);
  double min_ratio = std::numeric_limits<double>::infinity();
  const std::size_t max_attempts = 100 * std::max<std::size_t>(opts.trials, 1);
  for (std::size_t attempt = 0; rep.trials_used < opts.trials && attempt < max_attempts;
       ++attempt) {
    const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(d));
    const Eigen::VectorXd w = r * random_unit(rng, d);
    const Eigen::VectorXd delta = w - w_star;
    const double sep2 = delta.squaredNorm();
    if (sep2 < min_sep * min_sep || sep2 == 0.0) continue;
    const Eigen::VectorXd t = ds.X() * w;
    double num = 0.0;
    for (Eigen::Index j = 0; j < t.size(); ++j)
      num += p[j] * (eval(act, t[j]) - s_star[j]) * (t[j] - t_star[j]);
    min_ratio = std::min(min_ratio, num / sep2);
    ++rep.trials_used;
  }
  rep.c0_hat = rep.trials_used > 0 ? std::max(0.0, 2.0 * min_ratio) : 0.0;
  rep.c1_hat = rep.c0_hat * rep.c0_hat / (24.0 * opts.B);

  // Second moment: exact maximum over unit directions.
  const Eigen::MatrixXd second = ds.X().transpose() * p.asDiagonal() * ds.X();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(second, Eigen::EigenvaluesOnly);
  rep.moment2_max = es.eigenvalues().maxCoeff();
  for (std::size_t k = 0; k < opts.trials; ++k) {
    const Eigen::VectorXd u = random_unit(rng, d);
    const Eigen::ArrayXd proj = (ds.X() * u).array();
    rep.moment4_max = std::max(rep.moment4_max, p.dot(proj.square().square().matrix()));
  }

  if (w_star.norm() > 0.0) {
    rep.margin = margin_sweep(weights, ds, w_star);
    for (const auto& m : rep.margin) rep.margin_lambda_hat = std::max(rep.margin_lambda_hat, m.lambda_hat);
  }
  return rep;
}

AmbiguityCheck check_ambiguity_radius(const Eigen::VectorXd& w_star, const RegularizedObjective& obj,
                                      double B, double c1) {
  const Eigen::VectorXd l = sample_losses(w_star, obj.data(), obj.activation());
  const WeightVector q = target_distribution(l, obj.p0(), obj.nu());
  AmbiguityCheck r;
  r.chi2_value = chi2(q, obj.p0());
  r.bound = c1 / (1536.0 * std::pow(obj.activation().beta, 4) * B);
  r.pass = r.chi2_value <= r.bound + 1e-12;
  return r;
}

double constant_C3(double beta, double B, double c1) { return 16.0 * beta * std::sqrt(B) / c1; }

double constant_C4(double beta, double B, double c1) {
  const double c3 = constant_C3(beta, B, c1);
  return 1.0 + 2.0 * (10.0 * B * beta * beta + c1) * c3 +
         c1 * std::sqrt(5.0 * B) * beta * beta * c3 * c3;
}

namespace {

BoundCheck make_check(double value, double bound) {
  return {value, bound, bound - value, value <= bound};
}

}  // namespace

FinalBoundsReport final_bounds_report(const Eigen::VectorXd& w_hat,
                                      const std::optional<Eigen::VectorXd>& w_star,
                                      const RegularizedObjective& obj, double B, double c1,
                                      double epsilon) {
  FinalBoundsReport rep;
  rep.epsilon = epsilon;
  const double beta = obj.activation().beta;
  rep.C3 = constant_C3(beta, B, c1);
  rep.C4 = constant_C4(beta, B, c1);
  if (!w_star) return rep;
  rep.applicable = true;

  const Dataset& ds = obj.data();
  const WeightVector& p0 = obj.p0();
  const Eigen::VectorXd l_star = sample_losses(*w_star, ds, obj.activation());
  const Eigen::VectorXd l_hat = sample_losses(w_hat, ds, obj.activation());
  const WeightVector p_star = target_distribution(l_star, p0, obj.nu());
  rep.opt = p_star.values().dot(l_star);

  const double b2 = beta * beta;
  rep.distance = make_check((w_hat - *w_star).norm(), rep.C3 * std::sqrt(rep.opt) + std::sqrt(epsilon));
  rep.square_loss = make_check(p_star.values().dot(l_hat),
                               (2.0 + 20.0 * B * b2 * rep.C3 * rep.C3) * rep.opt +
                                   10.0 * b2 * B * epsilon);
  const double r_hat = risk_from_losses(l_hat, p0, obj.nu()).risk;
  const double r_star = risk_from_losses(l_star, p0, obj.nu()).risk;
  rep.risk = make_check(r_hat - r_star, rep.C4 * (rep.opt + epsilon));
  rep.ambiguity = check_ambiguity_radius(*w_star, obj, B, c1);
  rep.all_pass = rep.distance.pass && rep.square_loss.pass && rep.risk.pass;
  return rep;
}

}  // namespace ndro
