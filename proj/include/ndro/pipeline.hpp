#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "ndro/activation.hpp"
#include "ndro/dataset.hpp"
#include "ndro/diagnostics.hpp"
#include "ndro/driver.hpp"

namespace ndro {

/// User-facing training settings; unset values are derived from the data.
struct TrainSettings {
  double W = 1.0;
  double epsilon = 1e-3;
  double B = 1.0;
  double C_M = 1.0;
  std::optional<double> nu;
  std::optional<double> nu0;
  std::optional<double> c1;
  std::optional<std::size_t> k_max;
  BoundMode bound_mode = BoundMode::tight;
  bool record_diagnostics = true;
  std::size_t sharpness_trials = 1000;
  std::uint64_t seed = 0;
};

struct PreparedRun {
  Dataset data;  // labels truncated at M
  AlgoConfig cfg;
  double M = 0.0;
  std::optional<Reference> ref;
  std::optional<SharpnessReport> sharpness;
  VectorFieldBounds bounds;
  double D0 = 0.0;
  std::size_t budget = 0;
};

/// Truncates labels, resolves c1 (estimated at the target distribution of
/// w_star when not supplied), nu (threshold calibration), nu0 and the
/// iteration budget. Estimation needs w_star; throws ConfigError otherwise.
PreparedRun prepare_run(const Dataset& raw, const Activation& act, const TrainSettings& s,
                        const std::optional<Eigen::VectorXd>& w_star);

struct TrainOutcome {
  RunResult run;
  ZeroTestResult zero;
  FinalBoundsReport bounds_report;
};

TrainOutcome train(const PreparedRun& prep, const Activation& act);

}  // namespace ndro
