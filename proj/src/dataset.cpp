#include "ndro/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "ndro/error.hpp"

namespace ndro {

namespace {

void check_finite(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (!X.allFinite()) throw DomainError("covariates contain non-finite entries");
  if (!y.allFinite()) throw DomainError("labels contain non-finite entries");
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd X, Eigen::VectorXd y)
    : Dataset(X, y, WeightVector::uniform(static_cast<std::size_t>(std::max<Eigen::Index>(X.rows(), 1)))) {}

Dataset::Dataset(Eigen::MatrixXd X, Eigen::VectorXd y, WeightVector ref_weights)
    : X_(std::move(X)), y_(std::move(y)), ref_(std::move(ref_weights)) {
  if (X_.rows() < 1) throw ParameterError("dataset needs at least one sample");
  if (X_.cols() < 1) throw ParameterError("dataset dimension must be positive");
  if (y_.size() != X_.rows()) throw DimensionError("label count does not match sample count");
  if (ref_.size() != size()) throw DimensionError("reference weights do not match sample count");
  check_finite(X_, y_);
  norms_ = X_.rowwise().norm();
  S_ = norms_.maxCoeff();
}

LabeledSample Dataset::sample(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return {X_.row(r).transpose(), y_[r]};
}

Dataset Dataset::truncated_copy(double M) const {
  Dataset out = *this;
  for (Eigen::Index i = 0; i < out.y_.size(); ++i) {
    const double v = out.y_[i];
    out.y_[i] = std::copysign(std::min(std::abs(v), M), v);
  }
  out.M_ = M;
  out.truncated_ = true;
  return out;
}

void GeneratorConfig::validate() const {
  if (d == 0) throw ConfigError("generator.d must be positive");
  if (n == 0) throw ConfigError("generator.n must be positive");
  if (static_cast<std::size_t>(w_star.size()) != d)
    throw ConfigError("generator.w_star must have d entries");
  if (!(W > 0.0)) throw ConfigError("generator.W must be positive");
  if (w_star.norm() > W + 1e-12) throw ConfigError("generator.w_star must satisfy ||w_star|| <= W");
  if (!(B > 0.0)) throw ConfigError("generator.B must be positive");
  if (clip_radius && !(*clip_radius > 0.0)) throw ConfigError("generator.clip_radius must be positive");
  switch (label_model.kind) {
    case LabelModel::Kind::realizable: break;
    case LabelModel::Kind::gaussian_noise:
      if (!(label_model.stddev >= 0.0)) throw ConfigError("label_model.stddev must be nonnegative");
      break;
    case LabelModel::Kind::adversarial:
      if (!(label_model.fraction >= 0.0 && label_model.fraction < 1.0))
        throw ConfigError("label_model.fraction must lie in [0, 1)");
      if (!(label_model.magnitude >= 0.0))
        throw ConfigError("label_model.magnitude must be nonnegative");
      break;
  }
}

double GeneratorConfig::effective_clip_radius() const {
  return clip_radius.value_or(10.0 * std::sqrt(static_cast<double>(d)));
}

Dataset generate(const GeneratorConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const double clip = cfg.effective_clip_radius();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> cube(-1, 1);

  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd x(d);
  const std::size_t max_draws = 1000 * cfg.n;
  std::size_t draws = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (;;) {
      if (++draws > max_draws)
        throw GenerationError("rejection sampling exceeded 1000*n draws; clip_radius too small");
      for (Eigen::Index j = 0; j < d; ++j) {
        x[j] = cfg.marginal == Marginal::gaussian_isotropic ? normal(rng)
                                                             : static_cast<double>(cube(rng));
      }
      if (x.norm() <= clip) break;
    }
    X.row(i) = x.transpose();
  }

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = eval(cfg.activation, X.row(i).dot(cfg.w_star));

  const auto& lm = cfg.label_model;
  if (lm.kind == LabelModel::Kind::gaussian_noise) {
    std::normal_distribution<double> noise(0.0, lm.stddev);
    for (Eigen::Index i = 0; i < n; ++i) y[i] += lm.stddev > 0.0 ? noise(rng) : 0.0;
  } else if (lm.kind == LabelModel::Kind::adversarial) {
    const auto count = static_cast<std::size_t>(std::llround(lm.fraction * double(cfg.n)));
    std::vector<std::size_t> idx(cfg.n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates with our own draws keeps this independent of the
    // standard library's shuffle implementation.
    for (std::size_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, cfg.n - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    std::bernoulli_distribution coin(0.5);
    for (std::size_t k = 0; k < count; ++k) {
      y[static_cast<Eigen::Index>(idx[k])] = coin(rng) ? lm.magnitude : -lm.magnitude;
    }
  }
  return Dataset(std::move(X), std::move(y));
}

double compute_truncation_level(const TruncationParams& p) {
  if (!(p.C_M > 0.0 && p.W > 0.0 && p.B > 0.0 && p.beta > 0.0 && p.epsilon > 0.0))
    throw ParameterError("truncation parameters must be positive");
  const double ratio = p.beta * p.B * p.W / p.epsilon;
  if (!(ratio > 1.0)) throw ParameterError("truncation level needs beta*B*W/epsilon > 1");
  return p.C_M * p.W * p.B * p.beta * std::log(ratio);
}

Dataset truncate_labels(const Dataset& ds, double M) {
  if (!(M > 0.0)) throw ParameterError("truncation level M must be positive");
  return ds.truncated_copy(M);
}

VectorFieldBounds measure_bounds(const Dataset& ds, const Activation& act, double W, double M,
                                 BoundMode mode) {
  if (!ds.truncated()) throw PreconditionError("measure_bounds requires a truncated dataset");
  if (!(W > 0.0)) throw ParameterError("W must be positive");
  const double beta = act.beta;
  const double S = ds.S();
  VectorFieldBounds b;
  b.S = S;
  if (mode == BoundMode::paper) {
    const double d = static_cast<double>(ds.dim());
    b.G = 2.0 * beta * S * std::sqrt(d) * (std::sqrt(2.0) * beta * W * S + M);
    b.kappa = 2.0 * beta * beta * S * S * d;
  } else {
    double G = 0.0;
    for (Eigen::Index i = 0; i < ds.row_norms().size(); ++i) {
      const double r = ds.row_norms()[i];
      G = std::max(G, 2.0 * beta * (beta * W * r + M) * r);
    }
    b.G = G;
    b.kappa = 2.0 * beta * beta * S * S;
  }
  return b;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

static double parse_double(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw DataError("cannot parse number '" + std::string(field) + "'", line);
  if (!std::isfinite(v)) throw DataError("non-finite value", line);
  return v;
}

Dataset read_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split_commas(line);
    if (cols.size() < 2) throw DataError("header needs at least one covariate and a label", lineno);
    for (std::size_t j = 0; j + 1 < cols.size(); ++j) {
      if (trim(cols[j]) != "x" + std::to_string(j + 1))
        throw DataError("expected header column x" + std::to_string(j + 1), lineno);
    }
    if (trim(cols.back()) != "y") throw DataError("last header column must be y", lineno);
    d = cols.size() - 1;
    break;
  }
  if (d == 0) throw DataError("dataset is empty");

  std::vector<double> xs;
  std::vector<double> ys;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split_commas(line);
    if (cols.size() != d + 1)
      throw DataError("expected " + std::to_string(d + 1) + " fields, found " +
                          std::to_string(cols.size()),
                      lineno);
    for (std::size_t j = 0; j < d; ++j) xs.push_back(parse_double(cols[j], lineno));
    ys.push_back(parse_double(cols[d], lineno));
  }
  if (ys.empty()) throw DataError("dataset has no samples");

  const auto n = static_cast<Eigen::Index>(ys.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j)
      X(i, j) = xs[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)];
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  return Dataset(std::move(X), std::move(y));
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file " + path);
  return read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  const auto d = static_cast<Eigen::Index>(ds.dim());
  for (Eigen::Index j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < ds.X().rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out << ds.X()(i, j) << ',';
    out << ds.y()[i] << '\n';
  }
}

}  // namespace ndro
