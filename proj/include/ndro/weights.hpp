#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace ndro {

/// A point on the probability simplex over N samples.
///
/// Construction checks nonnegativity and that the entries sum to one within
/// `kSimplexTol`, then renormalizes so the stored sum is one to rounding.
class WeightVector {
 public:
  static constexpr double kSimplexTol = 1e-9;

  WeightVector() = default;
  explicit WeightVector(Eigen::VectorXd values);

  static WeightVector uniform(std::size_t n);
  /// Point mass on index `i`.
  static WeightVector point_mass(std::size_t n, std::size_t i);
  /// Clips tiny negatives (>= -kSimplexTol) to zero and renormalizes.
  static WeightVector from_approximate(Eigen::VectorXd values);

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& values() const { return values_; }
  std::vector<double> to_std() const;

 private:
  Eigen::VectorXd values_;
};

}  // namespace ndro
