#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

namespace ndro {

enum class ActivationKind { relu, leaky_relu, softplus };

/// A convex, non-decreasing activation with sigma(0) = 0 that is
/// beta-Lipschitz and grows at rate at least alpha on [0, inf).
///
/// Construct through the named factories; they set alpha and beta.
struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.0;        // leaky_relu only
  double temperature = 1.0;  // softplus only
  double alpha = 1.0;
  double beta = 1.0;

  static Activation relu();
  /// slope in (0, 1]; slope = 1 is the identity map.
  static Activation leaky_relu(double slope);
  /// Normalized softplus t*log(1+exp(x/t)) - t*log(2).
  static Activation softplus(double temperature);

  std::string name() const;
};

/// sigma(t). Throws DomainError for non-finite t.
double eval(const Activation& act, double t);

/// out = sigma(t) elementwise. Throws DomainError for non-finite entries.
void eval_batch(const Activation& act, const Eigen::VectorXd& t, Eigen::VectorXd& out);

/// A subderivative of sigma at t; the right derivative at kinks.
double subgrad(const Activation& act, double t);

struct ConvexityViolation {
  std::string condition;  // "monotone", "lipschitz", "growth", "convexity", "origin"
  double t1 = 0.0;
  double t2 = 0.0;
  double excess = 0.0;  // by how much the inequality fails
};

struct ConvexityReport {
  bool pass = true;
  std::vector<ConvexityViolation> violations;
  /// Smallest difference quotient over grid pairs t1 > t2 >= 0.
  double measured_alpha = 0.0;
  /// Largest difference quotient over all grid pairs.
  double measured_beta = 0.0;
};

/// Checks the unbounded-convex conditions on every pair of grid points
/// using the activation's declared alpha and beta. `grid` must be sorted
/// and nonempty.
ConvexityReport verify_unbounded_convex(const Activation& act,
                                        std::span<const double> grid,
                                        double tol = 1e-12);

}  // namespace ndro
