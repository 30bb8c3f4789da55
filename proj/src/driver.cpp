#include "ndro/driver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "ndro/error.hpp"
#include "ndro/numeric.hpp"
#include "ndro/solvers.hpp"

namespace ndro {

void AlgoConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ParameterError(std::string(name) + " must be a positive number");
  };
  positive(nu, "nu");
  positive(nu0, "nu0");
  positive(c1, "c1");
  positive(W, "W");
  positive(epsilon, "epsilon");
  positive(B, "B");
  if (k_max < 1) throw ParameterError("k_max must be at least 1");
  if (!(stop_tol >= 0.0)) throw ParameterError("stop_tol must be nonnegative");
}

double default_nu0(double beta, double B, double epsilon, double c1) {
  return 768.0 * std::pow(beta, 4) * B * epsilon / c1;
}

double nu_threshold(double opt2, double epsilon, double beta, double B, double c1) {
  return 8.0 * beta * beta * std::sqrt(6.0 * B) * std::sqrt(opt2 + epsilon) / c1;
}

double calibrate_nu(const Eigen::VectorXd& w_star, const Dataset& ds, const Activation& act,
                    double c1, double B, double epsilon) {
  if (!(c1 > 0.0)) throw ParameterError("c1 must be positive");
  const Eigen::VectorXd l = sample_losses(w_star, ds, act);
  const Eigen::VectorXd l2 = l.cwiseProduct(l);
  const WeightVector& p0 = ds.ref_weights();
  auto thr = [&](double nu) {
    const WeightVector q = qhat_general_losses(l, p0, nu);
    return nu_threshold(q.values().dot(l2), epsilon, act.beta, B, c1);
  };
  // f(nu) = nu - thr(nu) is increasing: the target distribution flattens
  // toward p0 as nu grows, which lowers the second moment.
  double lo = nu_threshold(p0.values().dot(l2), epsilon, act.beta, B, c1);
  if (lo - thr(lo) >= 0.0) return lo * (1.0 + 1e-9);
  double hi = 2.0 * lo;
  for (int it = 0; it < 200 && hi - thr(hi) < 0.0; ++it) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid - thr(mid) >= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi * (1.0 + 1e-9);
}

StepSchedule::StepSchedule(double nu, double c1, double kappa, double G, double nu0) {
  if (!(nu > 0.0) || !(c1 > 0.0) || !(nu0 > 0.0) || !(std::max(kappa, G) > 0.0))
    throw ParameterError("step-size parameters must be positive");
  const double scale = 2.0 * std::max(kappa, G);
  const double lo = std::min(nu, c1 / 8.0);
  eta_ = lo / scale;
  base_ = std::min(nu0, 0.25) / scale;
  ratio_ = std::min(nu0, 0.25) / lo;
}

double StepSchedule::a(std::size_t i) const {
  if (i == 0) return 0.0;
  return base_ * std::exp(static_cast<double>(i - 1) * std::log1p(eta_));
}

double StepSchedule::A(std::size_t k) const {
  return ratio_ * std::expm1(static_cast<double>(k) * std::log1p(eta_));
}

StepSize step_size(std::size_t i, double nu, double c1, double kappa, double G, double nu0) {
  if (i < 1) throw ParameterError("step index starts at 1");
  const StepSchedule s(nu, c1, kappa, G, nu0);
  return {s.a(i), s.eta()};
}

namespace {

Eigen::VectorXd extrapolate(const Eigen::VectorXd& ev_curr, const Eigen::VectorXd& ev_prev,
                            double a_prev, double a_next) {
  if (a_prev == 0.0) return ev_curr;
  return ev_curr + (a_prev / a_next) * (ev_curr - ev_prev);
}


}  // namespace

Eigen::VectorXd extrapolated_gradient(const IterateState& state, double a_next, const Dataset& ds,
                                      const Activation& act, double M) {
  if (!(a_next > 0.0)) throw ParameterError("a_i must be positive");
  const Eigen::VectorXd ev_curr = expected_field(state.w_curr, state.p_curr, ds, act, M);
  if (state.a_curr == 0.0) return ev_curr;
  const Eigen::VectorXd ev_prev = expected_field(state.w_prev, state.p_prev, ds, act, M);
  return extrapolate(ev_curr, ev_prev, state.a_curr, a_next);
}

Reference make_reference(const Eigen::VectorXd& w_star, const RegularizedObjective& obj, double c1,
                         double B) {
  const ModelParams ws(w_star, std::max(w_star.norm(), 1.0));
  OptStatistics st = opt_statistics(ws, obj);
  return {w_star, std::move(st.p_star), st.opt, st.opt2, c1, B};
}

double initial_distance(const Reference& ref, const WeightVector& p0, double nu0) {
  return 0.5 * ref.w_star.squaredNorm() + nu0 * chi2(ref.p_star, p0);
}

namespace {

// Per-iteration evaluation of the reference-dependent trace quantities.
class ReferenceTracker {
 public:
  ReferenceTracker(const Reference& ref, const Dataset& ds, const Activation& act,
                   const AlgoConfig& cfg)
      : ref_(ref), cfg_(cfg) {
    Eigen::VectorXd sig_star;
    eval_batch(act, ds.X() * ref.w_star, sig_star);
    loss_star_ = (sig_star - ds.y()).array().square().matrix();
    const WeightVector& p0 = ds.ref_weights();
    inv_p0_ = p0.values().cwiseInverse();
    const Eigen::ArrayXd ps = ref.p_star.values().array();
    inv_pstar_ = (ps > 0.0).select(ps.inverse(), 0.0);
    off_support_ = (ps <= 0.0).cast<double>();
    pstar_has_zero_ = (ps <= 0.0).any();
    chi2_pstar_ = chi2(ref.p_star, p0);
    const double b2 = act.beta * act.beta;
    chi_coef_ = 8.0 * b2 * std::sqrt(6.0 * ref.B) * std::sqrt(ref.opt2) / ref.c1;
    opt_term_ = 48.0 * b2 * ref.B * ref.opt / ref.c1;
    lower_const_ = -(12.0 * b2 * ref.B / ref.c1) * ref.opt;
    upper_init_ = 0.5 * ref.w_star.squaredNorm() + cfg.nu0 * bregman(ref.p_star, p0, p0);
  }

  /// `p_losses` is E_{p_i} l(w_i) and `chi2_p` is chi2(p_i, p0).
  void record(TraceRecord& rec, const Eigen::VectorXd& w, const Eigen::VectorXd& pv,
              const Eigen::VectorXd& losses, const Eigen::VectorXd& ev, double p_losses,
              double chi2_p) {
    const Eigen::VectorXd& ps = ref_.p_star.values();
    const double nu = cfg_.nu;
    const double c1 = ref_.c1;

    const double dist2 = (w - ref_.w_star).squaredNorm();
    rec.dist = std::sqrt(dist2);
    const double p_loss_star = pv.dot(loss_star_);
    rec.gap = (ps.dot(losses) - nu * chi2_pstar_) - (p_loss_star - nu * chi2_p);
    rec.breg_pstar = ((pv - ps).array().square() * inv_p0_.array()).sum();
    if (pstar_has_zero_ && (pv.array() * off_support_.array()).maxCoeff() > 0.0)
      rec.chi2_to_pstar = std::numeric_limits<double>::infinity();
    else
      rec.chi2_to_pstar = ((pv - ps).array().square() * inv_pstar_.array()).sum();
    rec.gap_lower = lower_const_ + 0.5 * c1 * dist2 + nu * rec.breg_pstar;

    cum_gap_.add(rec.a * rec.gap);
    cum_lower_.add(rec.a * rec.gap_lower);
    dist_sum_.add(rec.a * 0.25 * c1 * dist2);
    chi_sum_.add(rec.a * rec.chi2_to_pstar);
    rec.cum_gap = cum_gap_.value();
    rec.cum_lower = cum_lower_.value();
    rec.cum_upper = upper_init_ - 0.5 * (1.0 + 0.5 * c1 * rec.A) * dist2 -
                    (cfg_.nu0 + nu * rec.A) * rec.breg_pstar + dist_sum_.value() +
                    chi_coef_ * chi_sum_.value() + opt_term_ * rec.A;

    // (s* - s)^2 + 2 (s - y)(s* - s) = (s* - y)^2 - (s - y)^2.
    rec.local_S = p_loss_star - p_losses;
    const double e_i = 0.25 * c1 * dist2 + chi_coef_ * rec.chi2_to_pstar + opt_term_;
    rec.local_rhs = ev.dot(ref_.w_star - w) - e_i;
  }

 private:
  const Reference& ref_;
  const AlgoConfig& cfg_;
  Eigen::VectorXd loss_star_, inv_p0_, inv_pstar_, off_support_;
  bool pstar_has_zero_ = false;
  double chi2_pstar_ = 0.0;
  double chi_coef_ = 0.0;
  double opt_term_ = 0.0;
  double lower_const_ = 0.0;
  double upper_init_ = 0.0;
  CompensatedSum cum_gap_, cum_lower_, dist_sum_, chi_sum_;
};

}  // namespace

RunResult run(const Dataset& ds, const Activation& act, const AlgoConfig& cfg,
              const Reference* ref) {
  cfg.validate();
  if (!ds.truncated()) throw PreconditionError("run requires a dataset with truncated labels");
  if (ref && static_cast<std::size_t>(ref->w_star.size()) != ds.dim())
    throw DimensionError("reference parameters do not match the data dimension");

  const double M = ds.M();
  const Eigen::VectorXd& p0 = ds.ref_weights().values();
  const Eigen::VectorXd inv_p0 = p0.cwiseInverse();
  const Eigen::VectorXd& y = ds.y();
  const Eigen::Index d = static_cast<Eigen::Index>(ds.dim());

  RunResult res;
  res.bounds = measure_bounds(ds, act, cfg.W, M, cfg.bound_mode);
  const StepSchedule sched(cfg.nu, cfg.c1, res.bounds.kappa, res.bounds.G, cfg.nu0);
  res.eta = sched.eta();
  res.has_reference = ref != nullptr && cfg.record_diagnostics;

  std::optional<ReferenceTracker> tracker;
  if (res.has_reference) tracker.emplace(*ref, ds, act, cfg);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd p = p0;
  Eigen::VectorXd ev = expected_field(w, ds.ref_weights(), ds, act, M);
  Eigen::VectorXd ev_prev = ev;
  double a_prev = 0.0;
  CompensatedSum A;
  std::size_t still = 0;

  // Work buffers reused across iterations. Labels are already clamped to
  // [-M, M], so the field needs no further truncation.
  Eigen::VectorXd t, sig, resid, losses, p_next, scratch;
  if (cfg.record_diagnostics) res.trace.reserve(std::min<std::size_t>(cfg.k_max, 1u << 20));

  for (std::size_t i = 1; i <= cfg.k_max; ++i) {
    const double a = sched.a(i);
    const double A_prev = A.value();
    const Eigen::VectorXd g = extrapolate(ev, ev_prev, a_prev, a);
    const Eigen::VectorXd w_next = primal_step(w, g, a, A_prev, cfg.c1, cfg.W);
    if (!w_next.allFinite()) throw NumericalError("non-finite primal iterate", i);

    t.noalias() = ds.X() * w_next;
    eval_batch(act, t, sig);
    resid = sig - y;
    losses = resid.array().square().matrix();
    detail::dual_step_into(losses, a, cfg.nu0 + cfg.nu * A_prev, cfg.nu, p0, p, scratch, p_next);
    scratch = p_next.cwiseProduct(resid);
    Eigen::VectorXd ev_next = (2.0 * act.beta) * (ds.X().transpose() * scratch);
    if (!std::isfinite(p_next.sum()) || !ev_next.allFinite())
      throw NumericalError("non-finite dual iterate", i);

    A.add(a);
    const double step = (w_next - w).norm();
    ev_prev = std::move(ev);
    ev = std::move(ev_next);
    w = w_next;
    p.swap(p_next);
    a_prev = a;
    res.iterations = i;

    if (cfg.record_diagnostics) {
      TraceRecord rec;
      rec.i = i;
      rec.a = a;
      rec.A = A.value();
      rec.w_norm = w.norm();
      rec.step_norm = step;
      const double chi2_p = ((p - p0).array().square() * inv_p0.array()).sum();
      const double p_losses = p.dot(losses);
      rec.L = p_losses - cfg.nu * chi2_p;
      if (tracker) tracker->record(rec, w, p, losses, ev, p_losses, chi2_p);
      res.trace.push_back(rec);
    }

    still = step <= cfg.stop_tol ? still + 1 : 0;
    if (still >= cfg.stop_window) {
      res.early_stopped = true;
      break;
    }
  }
  res.w_hat = std::move(w);
  res.p_hat = WeightVector::from_approximate(std::move(p));
  res.A = A.value();
  return res;
}

ZeroTestResult zero_test(const Dataset& ds, const Activation& act, const AlgoConfig& cfg,
                         const Eigen::VectorXd& w_hat) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(w_hat.size());
  const WeightVector& p0 = ds.ref_weights();
  ZeroTestResult r;
  r.risk_zero = risk_from_losses(sample_losses(zero, ds, act), p0, cfg.nu).risk;
  r.risk_candidate = risk_from_losses(sample_losses(w_hat, ds, act), p0, cfg.nu).risk;
  r.chose_zero = r.risk_zero < r.risk_candidate;
  r.w = r.chose_zero ? zero : w_hat;
  return r;
}

std::size_t iteration_budget_for_eta(double eta, double D0, double epsilon) {
  if (!(eta > 0.0) || !(epsilon > 0.0)) throw ParameterError("eta and epsilon must be positive");
  if (D0 <= epsilon) return 1;
  const double k = (1.0 + 1.0 / eta) * std::log(D0 / epsilon);
  // Absorb rounding so exact integers are not bumped up.
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k * (1.0 - 1e-12))));
}

std::size_t theoretical_iteration_budget(const AlgoConfig& cfg, double kappa, double G, double D0) {
  const StepSchedule s(cfg.nu, cfg.c1, kappa, G, cfg.nu0);
  return iteration_budget_for_eta(s.eta(), D0, cfg.epsilon);
}

}  // namespace ndro
