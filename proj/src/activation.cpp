#include "ndro/activation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ndro/error.hpp"

namespace ndro {

namespace {

void require_finite(double t) {
  if (!std::isfinite(t)) throw DomainError("activation input is not finite");
}

// log(1 + exp(x)) without overflow.
double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Activation Activation::relu() { return Activation{ActivationKind::relu, 0.0, 1.0, 1.0, 1.0}; }

Activation Activation::leaky_relu(double slope) {
  if (!(slope > 0.0 && slope <= 1.0))
    throw ParameterError("leaky_relu slope must lie in (0, 1]");
  // The true growth rate on [0, inf) is 1; the slope is reported as a
  // conservative alpha.
  return Activation{ActivationKind::leaky_relu, slope, 1.0, slope, 1.0};
}

Activation Activation::softplus(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ParameterError("softplus temperature must be positive");
  // sigma'(t) = logistic(t / T) is increasing, so its minimum on [0, inf)
  // is sigma'(0) = 1/2.
  return Activation{ActivationKind::softplus, 0.0, temperature, 0.5, 1.0};
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::softplus: return "softplus";
  }
  return "unknown";
}

double eval(const Activation& act, double t) {
  require_finite(t);
  switch (act.kind) {
    case ActivationKind::relu: return t > 0.0 ? t : 0.0;
    case ActivationKind::leaky_relu: return t >= 0.0 ? t : act.slope * t;
    case ActivationKind::softplus: {
      const double T = act.temperature;
      return T * (log1pexp(t / T) - std::log(2.0));
    }
  }
  return 0.0;
}

void eval_batch(const Activation& act, const Eigen::VectorXd& t, Eigen::VectorXd& out) {
  // A finite sum rules out non-finite entries; the exact scan only runs
  // when the sum overflowed or was poisoned.
  if (!std::isfinite(t.sum()) && !t.allFinite())
    throw DomainError("activation input is not finite");
  out.resize(t.size());
  switch (act.kind) {
    case ActivationKind::relu:
      out = t.cwiseMax(0.0);
      return;
    case ActivationKind::leaky_relu:
      out = (t.array() >= 0.0).select(t, act.slope * t);
      return;
    case ActivationKind::softplus:
      for (Eigen::Index i = 0; i < t.size(); ++i) out[i] = eval(act, t[i]);
      return;
  }
}

double subgrad(const Activation& act, double t) {
  require_finite(t);
  switch (act.kind) {
    case ActivationKind::relu: return t >= 0.0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu: return t >= 0.0 ? 1.0 : act.slope;
    case ActivationKind::softplus: return logistic(t / act.temperature);
  }
  return 0.0;
}

ConvexityReport verify_unbounded_convex(const Activation& act, std::span<const double> grid,
                                        double tol) {
  if (grid.empty()) throw ParameterError("verification grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw ParameterError("verification grid must be sorted");

  ConvexityReport rep;
  rep.measured_alpha = std::numeric_limits<double>::infinity();
  rep.measured_beta = 0.0;
  auto flag = [&rep](const char* cond, double t1, double t2, double excess) {
    rep.pass = false;
    rep.violations.push_back({cond, t1, t2, excess});
  };

  const double s0 = eval(act, 0.0);
  if (s0 != 0.0) flag("origin", 0.0, 0.0, std::abs(s0));
  if (act.alpha > act.beta) flag("growth", 0.0, 0.0, act.alpha - act.beta);

  const std::size_t n = grid.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j + 1; i < n; ++i) {
      const double t1 = grid[i];
      const double t2 = grid[j];
      if (t1 == t2) continue;
      const double s1 = eval(act, t1);
      const double s2 = eval(act, t2);
      const double diff = s1 - s2;
      const double span = t1 - t2;
      rep.measured_beta = std::max(rep.measured_beta, diff / span);
      if (diff < -tol) flag("monotone", t1, t2, -diff);
      if (diff > act.beta * span + tol) flag("lipschitz", t1, t2, diff - act.beta * span);
      if (t2 >= 0.0) {
        rep.measured_alpha = std::min(rep.measured_alpha, diff / span);
        if (diff < act.alpha * span - tol) flag("growth", t1, t2, act.alpha * span - diff);
      }
      const double mid = eval(act, 0.5 * (t1 + t2));
      const double chord = 0.5 * (s1 + s2);
      if (mid > chord + tol) flag("convexity", t1, t2, mid - chord);
    }
  }
  if (!std::isfinite(rep.measured_alpha)) rep.measured_alpha = 0.0;
  return rep;
}

}  // namespace ndro
