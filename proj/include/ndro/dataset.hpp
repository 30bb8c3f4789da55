#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "ndro/activation.hpp"
#include "ndro/weights.hpp"

namespace ndro {

struct LabeledSample {
  Eigen::VectorXd x;
  double y = 0.0;
};

/// N labeled samples stored row-wise, with reference weights and the
/// measured covariate bound S = max_i ||x_i||_2.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd y);
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd y, WeightVector ref_weights);

  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  const WeightVector& ref_weights() const { return ref_; }
  LabeledSample sample(std::size_t i) const;

  double S() const { return S_; }
  /// Per-row Euclidean norms.
  const Eigen::VectorXd& row_norms() const { return norms_; }
  double M() const { return M_; }
  bool truncated() const { return truncated_; }

  /// Copy with labels clamped to [-M, M].
  Dataset truncated_copy(double M) const;

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  WeightVector ref_;
  Eigen::VectorXd norms_;
  double S_ = 0.0;
  double M_ = 0.0;
  bool truncated_ = false;
};

enum class Marginal { gaussian_isotropic, discrete_cube };

struct LabelModel {
  enum class Kind { realizable, gaussian_noise, adversarial };
  Kind kind = Kind::realizable;
  double stddev = 0.0;     // gaussian_noise
  double fraction = 0.0;   // adversarial, in [0, 1)
  double magnitude = 0.0;  // adversarial label value is +/- magnitude
};

struct GeneratorConfig {
  Marginal marginal = Marginal::gaussian_isotropic;
  std::size_t d = 1;
  std::size_t n = 2;
  Eigen::VectorXd w_star;
  double W = 1.0;
  LabelModel label_model;
  Activation activation = Activation::relu();
  std::uint64_t seed = 0;
  double B = 1.0;
  /// Covariates with larger norm are redrawn. Unset means 10*sqrt(d).
  std::optional<double> clip_radius;

  void validate() const;
  double effective_clip_radius() const;
};

/// Draws a dataset; bitwise reproducible for a fixed config.
Dataset generate(const GeneratorConfig& cfg);

struct TruncationParams {
  double C_M = 1.0;
  double W = 1.0;
  double B = 1.0;
  double beta = 1.0;
  double epsilon = 1e-3;
};

/// M = C_M W B beta log(beta B W / epsilon).
double compute_truncation_level(const TruncationParams& p);

/// y' = sign(y) min(|y|, M). Idempotent.
Dataset truncate_labels(const Dataset& ds, double M);

enum class BoundMode { paper, tight };

struct VectorFieldBounds {
  double S = 0.0;
  double G = 0.0;      // sup ||v(w; x_i, y_i)||_2 over w in B(W)
  double kappa = 0.0;  // Lipschitz constant of w -> v(w; x_i, y_i)
};

/// Bounds on the vector field over B(W). Requires a truncated dataset.
VectorFieldBounds measure_bounds(const Dataset& ds, const Activation& act, double W, double M,
                                 BoundMode mode);

/// CSV with header "x1,...,xd,y". Throws DataError with the offending line.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const Dataset& ds);

}  // namespace ndro
