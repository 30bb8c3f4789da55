#pragma once

// Reference implementations used only by the tests. They share no code with
// the library's solvers.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

/// Euclidean projection onto the simplex by bisection on the shift.
inline Eigen::VectorXd simplex_projection(const Eigen::VectorXd& v) {
  double lo = v.minCoeff() - 1.0;
  double hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((v.array() - mid).max(0.0).sum() > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).matrix();
}

/// Maximizes a smooth concave f over the simplex by projected gradient
/// ascent with a fixed step, starting from `start`.
inline Eigen::VectorXd maximize_on_simplex(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad, Eigen::VectorXd start,
    double step, int iters = 200000) {
  Eigen::VectorXd p = std::move(start);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd next = simplex_projection(p + step * grad(p));
    const double moved = (next - p).lpNorm<Eigen::Infinity>();
    p = std::move(next);
    if (moved < 1e-15) break;
  }
  return p;
}

/// max over p of sum p_j l_j - nu sum (p_j - c_j)^2 / c_j - m sum (p_j - q_j)^2 / c_j, times a.
inline Eigen::VectorXd dual_argmax(const Eigen::VectorXd& l, double a, double m, double nu,
                                   const Eigen::VectorXd& c, const Eigen::VectorXd& q) {
  auto grad = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return (a * l.array() - 2.0 * a * nu * (p - c).array() / c.array() -
            2.0 * m * (p - q).array() / c.array())
        .matrix();
  };
  const double step = c.minCoeff() / (2.0 * (a * nu + m));
  return maximize_on_simplex(grad, q, step);
}

/// Centered finite difference.
inline double derivative(const std::function<double(double)>& f, double t, double h = 1e-6) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

/// argmin over the disk of radius W in R^2 of f, by a polar grid followed
/// by shrinking local grid refinement.
inline Eigen::Vector2d minimize_on_disk(const std::function<double(const Eigen::Vector2d&)>& f,
                                        double W) {
  Eigen::Vector2d best(0.0, 0.0);
  double fbest = f(best);
  constexpr int kR = 200, kA = 720;
  for (int i = 1; i <= kR; ++i) {
    for (int j = 0; j < kA; ++j) {
      const double r = W * i / kR;
      const double th = 2.0 * M_PI * j / kA;
      const Eigen::Vector2d w(r * std::cos(th), r * std::sin(th));
      const double v = f(w);
      if (v < fbest) fbest = v, best = w;
    }
  }
  double h = W / kR;
  for (int round = 0; round < 60; ++round) {
    Eigen::Vector2d centre = best;
    for (int i = -10; i <= 10; ++i)
      for (int j = -10; j <= 10; ++j) {
        Eigen::Vector2d w = centre + Eigen::Vector2d(i * h / 10, j * h / 10);
        if (w.norm() > W) w *= W / w.norm();
        const double v = f(w);
        if (v < fbest) fbest = v, best = w;
      }
    h /= 3.0;
  }
  return best;
}

}  // namespace oracle
