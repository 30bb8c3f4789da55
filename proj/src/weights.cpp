#include "ndro/weights.hpp"

#include <cmath>
#include <string>

#include "ndro/error.hpp"

namespace ndro {

WeightVector::WeightVector(Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() == 0) throw ParameterError("weight vector is empty");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!std::isfinite(v)) throw DomainError("weight vector has a non-finite entry");
    if (v < 0.0)
      throw ParameterError("weight vector has negative entry at index " + std::to_string(i));
  }
  const double total = values_.sum();
  if (std::abs(total - 1.0) > kSimplexTol)
    throw ParameterError("weight vector sums to " + std::to_string(total) + ", not 1");
  values_ /= total;
}

WeightVector WeightVector::uniform(std::size_t n) {
  if (n == 0) throw ParameterError("weight vector is empty");
  return WeightVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / double(n)));
}

WeightVector WeightVector::point_mass(std::size_t n, std::size_t i) {
  if (i >= n) throw ParameterError("point mass index out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  v[static_cast<Eigen::Index>(i)] = 1.0;
  return WeightVector(std::move(v));
}

WeightVector WeightVector::from_approximate(Eigen::VectorXd values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0 && values[i] >= -kSimplexTol) values[i] = 0.0;
  }
  return WeightVector(std::move(values));
}

std::vector<double> WeightVector::to_std() const {
  return std::vector<double>(values_.data(), values_.data() + values_.size());
}

}  // namespace ndro
