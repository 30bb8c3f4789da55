#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndro/activation.hpp"
#include "ndro/dataset.hpp"
#include "ndro/pipeline.hpp"

namespace ndro::cli {

/// Exit-code contract of the command-line tool.
enum ExitCode : int { kOk = 0, kVerificationFailure = 1, kConfigError = 2, kDataError = 3 };

struct ExperimentConfig {
  std::optional<GeneratorConfig> generator;
  Activation activation = Activation::relu();
  TrainSettings train;
  std::string output_dir = "out";
  std::set<std::string> formats = {"csv", "json", "svg"};
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
Activation parse_activation(const nlohmann::json& j);

struct CommandOptions {
  std::string config;
  std::string dataset;
  std::string trace;
  std::string out;                 // overrides output_dir when set
  std::optional<std::uint64_t> seed;
  std::vector<std::string> formats;  // overrides the config when nonempty
  // verify only
  std::size_t instances = 100;
  std::size_t max_n = 50;
  std::size_t threads = 0;
  bool perturb = false;
};

/// Writes dataset.csv and dataset.meta.json.
int cmd_generate(const CommandOptions& opt, std::ostream& out, std::ostream& err);
/// Writes w_hat.json, p_hat.json, the trace and, when the dataset metadata
/// carries w*, diagnostics.json.
int cmd_train(const CommandOptions& opt, std::ostream& out, std::ostream& err);
int cmd_verify(const CommandOptions& opt, std::ostream& out, std::ostream& err);
/// Writes convergence.csv and/or convergence.svg from a trace CSV.
int cmd_report(const CommandOptions& opt, std::ostream& out, std::ostream& err);

/// "data.csv" -> "data.meta.json".
std::string metadata_path(const std::string& dataset_path);

}  // namespace ndro::cli
