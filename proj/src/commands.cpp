#include "ndro/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "ndro/error.hpp"
#include "ndro/trace_io.hpp"
#include "ndro/verify.hpp"

namespace ndro::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ConfigError("missing field '" + where + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError("field '" + name + "' must be a number");
  return v.get<double>();
}

std::size_t count(const json& v, const std::string& name) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError("field '" + name + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& name) {
  if (!v.is_string()) throw ConfigError("field '" + name + "' must be a string");
  return v.get<std::string>();
}

std::optional<double> opt_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return number(obj.at(key), where + key);
}

std::set<std::string> parse_formats(const std::vector<std::string>& items) {
  std::set<std::string> out;
  for (const auto& f : items) {
    if (f != "csv" && f != "json" && f != "svg")
      throw ConfigError("unknown format '" + f + "' (expected csv, json or svg)");
    out.insert(f);
  }
  if (out.empty()) throw ConfigError("field 'formats' must not be empty");
  return out;
}

GeneratorConfig parse_generator(const json& g, double truncation_level) {
  const std::string w = "generator.";
  GeneratorConfig cfg;
  const std::string marginal =
      g.contains("marginal") ? text(g.at("marginal"), w + "marginal") : "gaussian";
  if (marginal == "gaussian" || marginal == "gaussian_isotropic")
    cfg.marginal = Marginal::gaussian_isotropic;
  else if (marginal == "discrete_cube")
    cfg.marginal = Marginal::discrete_cube;
  else
    throw ConfigError("field 'generator.marginal' has unknown value '" + marginal + "'");
  cfg.d = count(require(g, "d", w), w + "d");
  cfg.n = count(require(g, "n", w), w + "n");
  try {
    cfg.w_star = vector_from_json(require(g, "w_star", w));
  } catch (const ConfigError& e) {
    if (std::string(e.what()).rfind("missing", 0) == 0) throw;
    throw ConfigError("field 'generator.w_star' must be a numeric array");
  }
  cfg.W = number(require(g, "W", w), w + "W");
  if (g.contains("seed")) cfg.seed = count(g.at("seed"), w + "seed");
  if (auto B = opt_number(g, "B", w)) cfg.B = *B;
  if (auto r = opt_number(g, "clip_radius", w)) cfg.clip_radius = *r;
  if (g.contains("label_model")) {
    const json& lm = g.at("label_model");
    const std::string lw = w + "label_model.";
    const std::string kind = text(require(lm, "kind", lw), lw + "kind");
    if (kind == "realizable") {
      cfg.label_model.kind = LabelModel::Kind::realizable;
    } else if (kind == "gaussian_noise") {
      cfg.label_model.kind = LabelModel::Kind::gaussian_noise;
      cfg.label_model.stddev = number(require(lm, "stddev", lw), lw + "stddev");
    } else if (kind == "adversarial") {
      cfg.label_model.kind = LabelModel::Kind::adversarial;
      cfg.label_model.fraction = number(require(lm, "fraction", lw), lw + "fraction");
      const json& mag = require(lm, "magnitude", lw);
      // "M" selects the label truncation level of the training settings.
      cfg.label_model.magnitude =
          mag.is_string() && mag.get<std::string>() == "M" ? truncation_level
                                                           : number(mag, lw + "magnitude");
    } else {
      throw ConfigError("field '" + lw + "kind' has unknown value '" + kind + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainSettings parse_algo(const json& a, const std::optional<double>& default_W, double default_B) {
  const std::string w = "algo.";
  TrainSettings s;
  if (auto W = opt_number(a, "W", w))
    s.W = *W;
  else if (default_W)
    s.W = *default_W;
  else
    throw ConfigError("missing field 'algo.W'");
  s.B = default_B;
  if (auto v = opt_number(a, "epsilon", w)) s.epsilon = *v;
  if (auto v = opt_number(a, "B", w)) s.B = *v;
  if (auto v = opt_number(a, "C_M", w)) s.C_M = *v;
  s.nu = opt_number(a, "nu", w);
  s.nu0 = opt_number(a, "nu0", w);
  s.c1 = opt_number(a, "c1", w);
  if (a.contains("k_max") && !a.at("k_max").is_null()) s.k_max = count(a.at("k_max"), w + "k_max");
  if (s.k_max && *s.k_max < 1) throw ConfigError("field 'algo.k_max' must be at least 1");
  if (a.contains("bound_mode")) {
    const std::string m = text(a.at("bound_mode"), w + "bound_mode");
    if (m == "tight")
      s.bound_mode = BoundMode::tight;
    else if (m == "paper")
      s.bound_mode = BoundMode::paper;
    else
      throw ConfigError("field 'algo.bound_mode' has unknown value '" + m + "'");
  }
  if (a.contains("record_diagnostics")) {
    if (!a.at("record_diagnostics").is_boolean())
      throw ConfigError("field 'algo.record_diagnostics' must be a boolean");
    s.record_diagnostics = a.at("record_diagnostics").get<bool>();
  }
  if (a.contains("sharpness_trials"))
    s.sharpness_trials = count(a.at("sharpness_trials"), w + "sharpness_trials");
  if (a.contains("seed")) s.seed = count(a.at("seed"), w + "seed");
  for (double v : {s.W, s.epsilon, s.B, s.C_M})
    if (!(v > 0.0)) throw ConfigError("algo.W, algo.epsilon, algo.B and algo.C_M must be positive");
  return s;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("output directory '" + dir + "' is not writable");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  return f;
}

void write_json(const fs::path& p, const json& j) {
  auto f = open_out(p);
  f << std::setw(2) << j << '\n';
}

json generator_json(const GeneratorConfig& g) {
  json lm;
  switch (g.label_model.kind) {
    case LabelModel::Kind::realizable: lm = {{"kind", "realizable"}}; break;
    case LabelModel::Kind::gaussian_noise:
      lm = {{"kind", "gaussian_noise"}, {"stddev", g.label_model.stddev}};
      break;
    case LabelModel::Kind::adversarial:
      lm = {{"kind", "adversarial"},
            {"fraction", g.label_model.fraction},
            {"magnitude", g.label_model.magnitude}};
      break;
  }
  return {{"marginal", g.marginal == Marginal::gaussian_isotropic ? "gaussian" : "discrete_cube"},
          {"d", g.d},
          {"n", g.n},
          {"label_model", lm},
          {"B", g.B},
          {"clip_radius", g.effective_clip_radius()}};
}

json activation_json(const Activation& a) {
  json j = {{"kind", a.name()}, {"alpha", a.alpha}, {"beta", a.beta}};
  if (a.kind == ActivationKind::leaky_relu) j["slope"] = a.slope;
  if (a.kind == ActivationKind::softplus) j["temperature"] = a.temperature;
  return j;
}

ExperimentConfig resolve(const CommandOptions& opt) {
  if (opt.config.empty()) throw ConfigError("missing option --config");
  ExperimentConfig cfg = load_config(opt.config);
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (!opt.formats.empty()) cfg.formats = parse_formats(opt.formats);
  if (opt.seed) {
    if (cfg.generator) cfg.generator->seed = *opt.seed;
    cfg.train.seed = *opt.seed;
  }
  return cfg;
}

// Maps library exceptions onto the exit-code contract.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParameterError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace

Activation parse_activation(const json& j) {
  const std::string w = "activation.";
  const std::string kind = text(require(j, "kind", w), w + "kind");
  if (kind == "relu") return Activation::relu();
  if (kind == "leaky_relu") return Activation::leaky_relu(number(require(j, "slope", w), w + "slope"));
  if (kind == "softplus")
    return Activation::softplus(j.contains("temperature") ? number(j.at("temperature"), w + "temperature")
                                                          : 1.0);
  throw ConfigError("field 'activation.kind' has unknown value '" + kind + "'");
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig cfg;
  if (j.contains("activation")) cfg.activation = parse_activation(j.at("activation"));
  const json empty = json::object();
  const json& algo = j.contains("algo") ? j.at("algo") : empty;
  if (!algo.is_object()) throw ConfigError("field 'algo' must be an object");

  std::optional<double> gen_W;
  double gen_B = 1.0;
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    if (!g.is_object()) throw ConfigError("field 'generator' must be an object");
    if (g.contains("W")) gen_W = number(g.at("W"), "generator.W");
    if (g.contains("B")) gen_B = number(g.at("B"), "generator.B");
  }
  cfg.train = parse_algo(algo, gen_W, gen_B);
  if (j.contains("generator")) {
    const double M = compute_truncation_level(
        {cfg.train.C_M, cfg.train.W, cfg.train.B, cfg.activation.beta, cfg.train.epsilon});
    cfg.generator = parse_generator(j.at("generator"), M);
    cfg.generator->activation = cfg.activation;
  }
  if (j.contains("output_dir")) cfg.output_dir = text(j.at("output_dir"), "output_dir");
  if (j.contains("formats")) {
    if (!j.at("formats").is_array()) throw ConfigError("field 'formats' must be an array");
    std::vector<std::string> f;
    for (const auto& v : j.at("formats")) f.push_back(text(v, "formats"));
    cfg.formats = parse_formats(f);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

std::string metadata_path(const std::string& dataset_path) {
  fs::path p(dataset_path);
  if (p.extension() == ".csv") p.replace_extension();
  return p.string() + ".meta.json";
}

int cmd_generate(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = resolve(opt);
    if (!cfg.generator) throw ConfigError("missing field 'generator'");
    const GeneratorConfig& g = *cfg.generator;
    const Dataset ds = generate(g);
    ensure_dir(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    {
      auto f = open_out(dir / "dataset.csv");
      write_csv(f, ds);
    }
    json meta = {{"seed", g.seed},
                 {"w_star", to_json(g.w_star)},
                 {"W", g.W},
                 {"S", ds.S()},
                 {"activation", activation_json(cfg.activation)},
                 {"generator", generator_json(g)}};
    write_json(dir / "dataset.meta.json", meta);
    out << "wrote " << (dir / "dataset.csv").string() << " (" << ds.size() << " samples, d = "
        << ds.dim() << ")\n";
    return kOk;
  });
}

int cmd_train(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = resolve(opt);
    if (opt.dataset.empty()) throw ConfigError("missing option --dataset");
    const Dataset raw = read_csv_file(opt.dataset);

    std::optional<Eigen::VectorXd> w_star;
    const std::string meta_path = metadata_path(opt.dataset);
    if (fs::exists(meta_path)) {
      std::ifstream in(meta_path);
      json meta;
      try {
        in >> meta;
      } catch (const json::parse_error& e) {
        throw DataError("metadata '" + meta_path + "' is not valid JSON");
      }
      if (meta.contains("w_star")) {
        try {
          w_star = vector_from_json(meta.at("w_star"));
        } catch (const ConfigError&) {
          throw DataError("metadata field 'w_star' must be a numeric array");
        }
        if (static_cast<std::size_t>(w_star->size()) != raw.dim())
          throw DimensionError("metadata w_star has dimension " + std::to_string(w_star->size()) +
                               " but the dataset has dimension " + std::to_string(raw.dim()));
      }
    }
    if (cfg.generator && cfg.generator->d != raw.dim())
      throw DimensionError("config expects dimension " + std::to_string(cfg.generator->d) +
                           " but the dataset has dimension " + std::to_string(raw.dim()));

    const PreparedRun prep = prepare_run(raw, cfg.activation, cfg.train, w_star);
    const TrainOutcome res = train(prep, cfg.activation);

    ensure_dir(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    const auto source = [](ParamSource s) { return s == ParamSource::supplied ? "supplied" : "estimated"; };
    json result = {{"w_hat", to_json(res.zero.w)},
                   {"w_run", to_json(res.run.w_hat)},
                   {"zero_test",
                    {{"risk_zero", res.zero.risk_zero},
                     {"risk_candidate", res.zero.risk_candidate},
                     {"chose_zero", res.zero.chose_zero}}},
                   {"iterations", res.run.iterations},
                   {"early_stopped", res.run.early_stopped},
                   {"iteration_budget", prep.budget},
                   {"k_max", prep.cfg.k_max},
                   {"nu", prep.cfg.nu},
                   {"nu_source", source(prep.cfg.nu_source)},
                   {"nu0", prep.cfg.nu0},
                   {"c1", prep.cfg.c1},
                   {"c1_source", source(prep.cfg.c1_source)},
                   {"epsilon", prep.cfg.epsilon},
                   {"W", prep.cfg.W},
                   {"B", prep.cfg.B},
                   {"M", prep.M},
                   {"S", res.run.bounds.S},
                   {"G", res.run.bounds.G},
                   {"kappa", res.run.bounds.kappa},
                   {"eta", res.run.eta},
                   {"A_final", res.run.A},
                   {"D0", prep.D0},
                   {"activation", activation_json(cfg.activation)}};
    if (w_star) result["distance_to_w_star"] = (res.zero.w - *w_star).norm();
    write_json(dir / "w_hat.json", result);
    write_json(dir / "p_hat.json", {{"p_hat", to_json(res.run.p_hat)}});

    const TraceData trace{res.run.trace, res.run.has_reference};
    if (cfg.formats.count("csv")) {
      auto f = open_out(dir / "trace.csv");
      write_trace_csv(f, trace);
    }
    if (cfg.formats.count("json")) write_json(dir / "trace.json", trace_to_json(trace));

    if (w_star) {
      json diag = {{"final_bounds", to_json(res.bounds_report)},
                   {"ambiguity", to_json(res.bounds_report.ambiguity)},
                   {"opt", prep.ref->opt},
                   {"opt2", prep.ref->opt2},
                   {"nu_threshold", nu_threshold(prep.ref->opt2, prep.cfg.epsilon,
                                                 cfg.activation.beta, prep.cfg.B, prep.cfg.c1)}};
      if (prep.sharpness) diag["sharpness"] = to_json(*prep.sharpness);
      write_json(dir / "diagnostics.json", diag);
    }
    out << "iterations " << res.run.iterations << (res.run.early_stopped ? " (early stop)" : "")
        << ", budget " << prep.budget << '\n';
    if (w_star) out << "||w_hat - w*|| = " << (res.zero.w - *w_star).norm() << '\n';
    return kOk;
  });
}

int cmd_verify(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    VerifyOptions v;
    v.seed = opt.seed.value_or(0);
    v.instances = opt.instances;
    v.max_n = opt.max_n;
    v.perturb = opt.perturb;
    v.threads = opt.threads;
    if (v.instances < 1 || v.max_n < 2) throw ConfigError("--instances must be >= 1 and --max-n >= 2");
    bool all = true;
    for (const SuiteResult& r : run_verification(v)) {
      all = all && r.pass;
      out << (r.pass ? "PASS " : "FAIL ") << std::left << std::setw(16) << r.name << std::right
          << " checks=" << r.checks << " failures=" << r.failures << " worst=" << r.worst
          << " time=" << std::fixed << std::setprecision(2) << r.seconds << "s"
          << std::defaultfloat << std::setprecision(6);
      if (!r.detail.empty()) out << "  " << r.detail;
      out << '\n';
    }
    return all ? kOk : kVerificationFailure;
  });
}

int cmd_report(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.trace.empty()) throw ConfigError("missing option --trace");
    std::ifstream in(opt.trace);
    if (!in) throw DataError("cannot open trace '" + opt.trace + "'");
    const TraceData trace = read_trace_csv(in);
    if (trace.records.empty()) throw DataError("trace has no rows");
    const std::set<std::string> formats =
        opt.formats.empty() ? std::set<std::string>{"csv", "svg"} : parse_formats(opt.formats);
    const std::string dir_s = opt.out.empty() ? fs::path(opt.trace).parent_path().string() : opt.out;
    const fs::path dir(dir_s.empty() ? "." : dir_s);
    ensure_dir(dir.string());
    if (formats.count("csv")) {
      auto f = open_out(dir / "convergence.csv");
      write_convergence_csv(f, trace);
    }
    if (formats.count("svg")) {
      auto f = open_out(dir / "convergence.svg");
      f << convergence_svg(trace);
    }
    if (formats.count("json")) write_json(dir / "convergence.json", trace_to_json(trace));
    out << "report for " << trace.records.size() << " iterations written to " << dir.string()
        << '\n';
    return kOk;
  });
}

}  // namespace ndro::cli
