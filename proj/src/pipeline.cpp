#include "ndro/pipeline.hpp"

#include <cmath>

#include "ndro/error.hpp"

namespace ndro {

namespace {

double estimate_c1(const WeightVector& weights, const Dataset& ds, const Eigen::VectorXd& w_star,
                   const Activation& act, const TrainSettings& s) {
  SharpnessOptions opts{s.sharpness_trials, s.epsilon, s.B, s.seed};
  return estimate_sharpness(weights, ds, w_star, act, opts).c1_hat;
}

}  // namespace

PreparedRun prepare_run(const Dataset& raw, const Activation& act, const TrainSettings& s,
                        const std::optional<Eigen::VectorXd>& w_star) {
  if (w_star && static_cast<std::size_t>(w_star->size()) != raw.dim())
    throw DimensionError("w_star has dimension " + std::to_string(w_star->size()) +
                         " but the data has dimension " + std::to_string(raw.dim()));
  const double M = compute_truncation_level({s.C_M, s.W, s.B, act.beta, s.epsilon});
  PreparedRun prep{truncate_labels(raw, M), {}, M, std::nullopt, std::nullopt, {}, 0.0, 0};
  const Dataset& ds = prep.data;

  if (!w_star && (!s.c1 || !s.nu))
    throw ConfigError("c1 and nu must be supplied when w_star is unknown");

  AlgoConfig& cfg = prep.cfg;
  cfg.W = s.W;
  cfg.epsilon = s.epsilon;
  cfg.B = s.B;
  cfg.bound_mode = s.bound_mode;
  cfg.record_diagnostics = s.record_diagnostics;
  cfg.seed = s.seed;

  // c1 and nu depend on each other through the target distribution: a
  // first c1 estimate under p0 fixes a provisional nu, whose target
  // distribution gives the final c1 estimate.
  if (s.c1) {
    cfg.c1 = *s.c1;
    cfg.c1_source = ParamSource::supplied;
  } else {
    const double c1_p0 = estimate_c1(ds.ref_weights(), ds, *w_star, act, s);
    if (!(c1_p0 > 0.0)) throw ConfigError("sharpness estimate is zero; supply algo.c1");
    const double nu_p0 = s.nu ? *s.nu : calibrate_nu(*w_star, ds, act, c1_p0, s.B, s.epsilon);
    const WeightVector p_star =
        target_distribution(sample_losses(*w_star, ds, act), ds.ref_weights(), nu_p0);
    prep.sharpness = estimate_sharpness(p_star, ds, *w_star, act,
                                        {s.sharpness_trials, s.epsilon, s.B, s.seed});
    cfg.c1 = prep.sharpness->c1_hat;
    if (!(cfg.c1 > 0.0)) throw ConfigError("sharpness estimate is zero; supply algo.c1");
    cfg.c1_source = ParamSource::estimated;
  }
  if (s.nu) {
    cfg.nu = *s.nu;
    cfg.nu_source = ParamSource::supplied;
  } else {
    cfg.nu = calibrate_nu(*w_star, ds, act, cfg.c1, s.B, s.epsilon);
    cfg.nu_source = ParamSource::estimated;
  }
  cfg.nu0 = s.nu0 ? *s.nu0 : default_nu0(act.beta, s.B, s.epsilon, cfg.c1);

  if (w_star) {
    const RegularizedObjective obj(ds, act, cfg.nu);
    prep.ref = make_reference(*w_star, obj, cfg.c1, s.B);
    if (!prep.sharpness)
      prep.sharpness = estimate_sharpness(prep.ref->p_star, ds, *w_star, act,
                                          {s.sharpness_trials, s.epsilon, s.B, s.seed});
    prep.D0 = initial_distance(*prep.ref, ds.ref_weights(), cfg.nu0);
  } else {
    // Worst case over B(W) and the admissible ambiguity radius.
    prep.D0 = 0.5 * s.W * s.W +
              cfg.nu0 * cfg.c1 / (1536.0 * std::pow(act.beta, 4) * s.B);
  }
  prep.bounds = measure_bounds(ds, act, cfg.W, M, cfg.bound_mode);
  prep.budget = theoretical_iteration_budget(cfg, prep.bounds.kappa, prep.bounds.G, prep.D0);
  cfg.k_max = s.k_max ? *s.k_max : prep.budget;
  cfg.validate();
  return prep;
}

TrainOutcome train(const PreparedRun& prep, const Activation& act) {
  TrainOutcome out;
  out.run = run(prep.data, act, prep.cfg, prep.ref ? &*prep.ref : nullptr);
  out.zero = zero_test(prep.data, act, prep.cfg, out.run.w_hat);
  const RegularizedObjective obj(prep.data, act, prep.cfg.nu);
  std::optional<Eigen::VectorXd> w_star;
  if (prep.ref) w_star = prep.ref->w_star;
  out.bounds_report = final_bounds_report(out.zero.w, w_star, obj, prep.cfg.B, prep.cfg.c1,
                                          prep.cfg.epsilon);
  return out;
}

}  // namespace ndro
