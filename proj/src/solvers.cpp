#include "ndro/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ndro/error.hpp"

namespace ndro {

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double W) {
  if (!(W > 0.0)) throw ParameterError("ball radius must be positive");
  const double n = v.norm();
  if (n <= W) return v;
  return v * (W / n);
}

Eigen::VectorXd primal_step(const Eigen::VectorXd& w_prev, const Eigen::VectorXd& g, double a,
                            double A_prev, double c1, double W) {
  if (w_prev.size() != g.size()) throw DimensionError("gradient and iterate dimensions differ");
  return project_ball(w_prev - (a / (1.0 + 0.5 * c1 * A_prev)) * g, W);
}

void DualStepProblem::validate() const {
  const std::size_t n = static_cast<std::size_t>(losses.size());
  if (n == 0) throw DimensionError("empty dual problem");
  if (p0.size() != n || p_prev.size() != n) throw DimensionError("dual problem sizes disagree");
  if (!(a >= 0.0) || !(prox_weight >= 0.0) || !(nu >= 0.0))
    throw ParameterError("dual step scalars must be nonnegative");
  if (!losses.allFinite()) throw DomainError("non-finite losses in dual step");
  if (!(a * nu + prox_weight > 0.0))
    throw ParameterError("degenerate dual step: a * nu + m must be positive");
  if (p0.values().minCoeff() <= 0.0)
    throw ParameterError("reference weights must be strictly positive");
}

double DualStepProblem::objective(const Eigen::VectorXd& p) const {
  const Eigen::VectorXd& c = p0.values();
  const double pen = ((p - c).array().square() / c.array()).sum();
  const double prox = ((p - p_prev.values()).array().square() / c.array()).sum();
  return a * (p.dot(losses) - nu * pen) - prox_weight * prox;
}

Eigen::VectorXd DualStepProblem::gradient(const Eigen::VectorXd& p) const {
  const Eigen::ArrayXd c = p0.values().array();
  const Eigen::ArrayXd g = a * losses.array() - 2.0 * a * nu * (p.array() - c) / c -
                           2.0 * prox_weight * (p.array() - p_prev.values().array()) / c;
  return g.matrix();
}

namespace detail {

namespace {

Eigen::VectorXd clamp_weights(const Eigen::VectorXd& b, const Eigen::VectorXd& c, double h,
                              double lambda) {
  return ((b - c * lambda).array().max(0.0) / h).matrix();
}

}  // namespace

WeightVector waterfill(const Eigen::VectorXd& b, const Eigen::VectorXd& c, double h) {
  const Eigen::Index n = b.size();
  const double csum = c.sum();
  // Interior solution, valid when every coordinate stays nonnegative.
  double lambda = (b.sum() - h) / csum;
  Eigen::VectorXd p;
  if (((b - c * lambda).array() >= 0.0).all()) {
    p = (b - c * lambda) / h;
  } else {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index i, Eigen::Index j) { return b[i] / c[i] > b[j] / c[j]; });
    double sb = 0.0;
    double sc = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Eigen::Index j = order[k];
      sb += b[j];
      sc += c[j];
      lambda = (sb - h) / sc;
      const bool last = k + 1 == order.size();
      if (last || lambda >= b[order[k + 1]] / c[order[k + 1]]) break;
    }
    p = clamp_weights(b, c, h, lambda);
  }
  if (std::abs(p.sum() - 1.0) > 1e-12) {
    // Bisection on the monotone map lambda -> sum p(lambda).
    const Eigen::ArrayXd t = b.array() / c.array();
    double lo = t.minCoeff() - h / csum;
    double hi = t.maxCoeff();
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (clamp_weights(b, c, h, mid).sum() > 1.0)
        lo = mid;
      else
        hi = mid;
    }
    p = clamp_weights(b, c, h, 0.5 * (lo + hi));
    if (std::abs(p.sum() - 1.0) > 1e-12)
      throw NumericalError("simplex normalization did not reach the 1e-12 residual", 0);
  }
  return WeightVector::from_approximate(std::move(p));
}

}  // namespace detail

namespace detail {

void dual_step_into(const Eigen::VectorXd& losses, double a, double m, double nu,
                    const Eigen::VectorXd& p0, const Eigen::VectorXd& p_prev, Eigen::VectorXd& b,
                    Eigen::VectorXd& out) {
  const double an = a * nu;
  const double h = 2.0 * (an + m);
  // Interior solution first; it is the common case once the prox term
  // dominates. With b = p0 (a l + 2 a nu) + 2 m p_prev the weights are
  // (b - lambda p0) / h, and sum b is assembled from three reductions.
  const double c_sum = p0.sum();
  const double b_sum = a * p0.dot(losses) + 2.0 * an * c_sum + 2.0 * m * p_prev.sum();
  const double lambda = (b_sum - h) / c_sum;
  out = (p0.array() * (a * losses.array() + (2.0 * an - lambda)) + (2.0 * m) * p_prev.array()) / h;
  if (out.minCoeff() >= 0.0 && std::abs(out.sum() - 1.0) <= 1e-12) return;
  b = p0.cwiseProduct((a * losses.array() + 2.0 * an).matrix()) + (2.0 * m) * p_prev;
  out = waterfill(b, p0, h).values();
}

}  // namespace detail

WeightVector dual_step(const DualStepProblem& prob) {
  prob.validate();
  Eigen::VectorXd b, out;
  detail::dual_step_into(prob.losses, prob.a, prob.prox_weight, prob.nu, prob.p0.values(),
                         prob.p_prev.values(), b, out);
  return WeightVector(std::move(out));
}

double dual_stationarity_residual(const DualStepProblem& prob, const WeightVector& p) {
  const Eigen::VectorXd g = prob.gradient(p.values());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    const double gj = g[static_cast<Eigen::Index>(j)];
    lo = std::min(lo, gj);
    hi = std::max(hi, gj);
    sum += gj;
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::infinity();
  const double mean = sum / static_cast<double>(count);
  double off = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p[j] <= 0.0) off = std::max(off, g[static_cast<Eigen::Index>(j)] - mean);
  return std::max(hi - lo, off);
}

namespace {

// Euclidean projection onto the simplex (sort-based).
Eigen::VectorXd euclidean_simplex_projection(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

DualMax projected_ascent(const DualStepProblem& prob, double tol) {
  const double curvature = 2.0 * (prob.a * prob.nu + prob.prox_weight);
  const double step = prob.p0.values().minCoeff() / curvature;
  Eigen::VectorXd p = prob.p_prev.values();
  double val = prob.objective(p);
  constexpr int kMaxIter = 2'000'000;
  for (int it = 0; it < kMaxIter; ++it) {
    Eigen::VectorXd next = euclidean_simplex_projection(p + step * prob.gradient(p));
    const double nval = prob.objective(next);
    const double moved = (next - p).lpNorm<Eigen::Infinity>();
    p = std::move(next);
    const double improvement = nval - val;
    val = nval;
    // Strong concavity makes the iteration a contraction. A stalled
    // objective alone can precede convergence of the weights, so the
    // iterate must also have (nearly) stopped moving.
    if (moved <= 1e-15) break;
    if (improvement < tol * std::max(1.0, std::abs(val)) && moved <= 1e-13) break;
  }
  return {val, WeightVector::from_approximate(std::move(p))};
}

}  // namespace

DualMax brute_dual_step(const DualStepProblem& prob, double tol) {
  prob.validate();
  return projected_ascent(prob, tol);
}

WeightVector brute_dual_argmax(const Eigen::VectorXd& losses, const WeightVector& p0) {
  if (static_cast<std::size_t>(losses.size()) != p0.size())
    throw DimensionError("losses and weights differ in length");
  const double top = losses.maxCoeff();
  Eigen::VectorXd q = (losses.array() >= top - 1e-12).cast<double>().matrix();
  q /= q.sum();
  return WeightVector(std::move(q));
}

DualMax brute_dual_max_losses(const Eigen::VectorXd& losses, const WeightVector& p0, double nu,
                              double tol) {
  if (!(nu >= 0.0)) throw ParameterError("nu must be nonnegative");
  if (nu == 0.0) return {losses.maxCoeff(), brute_dual_argmax(losses, p0)};
  DualStepProblem prob{losses, 1.0, 0.0, nu, p0, p0};
  DualMax dm = brute_dual_step(prob, tol);
  dm.value = objective_from_losses(losses, dm.argmax, p0, nu);
  return dm;
}

DualMax brute_dual_max(const ModelParams& w, const RegularizedObjective& obj, double tol) {
  return brute_dual_max_losses(sample_losses(w.w, obj.data(), obj.activation()), obj.p0(),
                               obj.nu(), tol);
}

WeightVector simplex_project(const Eigen::VectorXd& v, const WeightVector& weights) {
  const std::size_t n = weights.size();
  if (static_cast<std::size_t>(v.size()) != n) throw DimensionError("projection sizes disagree");
  const Eigen::VectorXd& c = weights.values();
  if (c.minCoeff() <= 0.0) throw ParameterError("projection weights must be strictly positive");
  // KKT: p_j = max(v_j - c_j theta, 0); thresholds v_j / c_j sorted descending.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto thr = [&](std::size_t j) {
    const auto k = static_cast<Eigen::Index>(j);
    return v[k] / c[k];
  };
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return thr(i) > thr(j); });
  double sv = 0.0;
  double sc = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto j = static_cast<Eigen::Index>(order[k]);
    sv += v[j];
    sc += c[j];
    theta = (sv - 1.0) / sc;
    if (k + 1 == n || theta >= thr(order[k + 1])) break;
  }
  Eigen::VectorXd p = (v - c * theta).array().max(0.0).matrix();
  return WeightVector::from_approximate(std::move(p));
}

}  // namespace ndro
