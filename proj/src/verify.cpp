#include "ndro/verify.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <thread>

#include "ndro/driver.hpp"
#include "ndro/empirical.hpp"
#include "ndro/numeric.hpp"
#include "ndro/pipeline.hpp"

namespace ndro {

namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

Eigen::VectorXd random_positive_weights(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Eigen::VectorXd c(static_cast<Eigen::Index>(n));
  for (auto& v : c) v = u(rng);
  return c / c.sum();
}

// Tracks the worst error of a suite against its tolerance.
struct Tally {
  std::size_t checks = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  std::string first_failure;

  void check(double err, double tol, const std::string& what) {
    ++checks;
    worst = std::max(worst, err);
    if (!(err <= tol)) {
      ++failures;
      if (first_failure.empty()) {
        std::ostringstream os;
        os << what << ": error " << err << " > " << tol;
        first_failure = os.str();
      }
    }
  }

  SuiteResult result(std::string name) const {
    SuiteResult r;
    r.name = std::move(name);
    r.pass = failures == 0 && checks > 0;
    r.checks = checks;
    r.failures = failures;
    r.worst = worst;
    r.detail = first_failure;
    return r;
  }
};

double linf(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>();
}

SuiteResult suite_qhat(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed ^ 0x51A7ULL);
  Tally t;
  for (std::size_t k = 0; k < o.instances; ++k) {
    const bool closed = k % 4 != 3;
    const QhatInstance inst = random_qhat_instance(rng, o.max_n, closed);
    const RegularizedObjective obj(inst.data, Activation::relu(), inst.nu);
    const ModelParams w(inst.w, std::max(1.0, inst.w.norm()));
    const DualMax oracle = brute_dual_max(w, obj);
    const WeightVector qg = qhat_general(w, obj);
    t.check(linf(qg.values(), oracle.argmax.values()), 1e-8, "qhat_general weights");
    t.check(std::abs(objective_L(w, qg, obj) - oracle.value), 1e-9, "qhat_general objective");
    if (closed) {
      Eigen::VectorXd qc = qhat_closed_form(w, obj).values();
      if (o.perturb) qc[0] += 1e-6;
      t.check(linf(qc, oracle.argmax.values()), 1e-8, "qhat_closed_form weights");
      t.check(linf(qc, qg.values()), 1e-12, "closed form vs water-filling");
    }
    // Maximality against random feasible points.
    const double best = objective_L(w, qg, obj);
    double excess = 0.0;
    for (int s = 0; s < 1000; ++s) {
      const WeightVector p(random_simplex_point(rng, inst.data.size()));
      excess = std::max(excess, objective_L(w, p, obj) - best);
    }
    t.check(excess, 1e-9, "random point beats qhat");
  }
  return t.result("qhat");
}

SuiteResult suite_risk(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed ^ 0x51A7ULL);
  Tally t;
  for (std::size_t k = 0; k < o.instances; ++k) {
    const QhatInstance inst = random_qhat_instance(rng, o.max_n, true);
    const RegularizedObjective obj(inst.data, Activation::relu(), inst.nu);
    const ModelParams w(inst.w, std::max(1.0, inst.w.norm()));
    const RiskValue rv = risk_closed_form(w, obj);
    const DualMax oracle = brute_dual_max(w, obj);
    t.check(std::abs(rv.risk - oracle.value), 1e-10, "risk vs oracle");
    const double direct = chi2(qhat_closed_form(w, obj), obj.p0());
    t.check(std::abs(direct - rv.chi2), 1e-10, "chi2 vs variance form");
  }
  return t.result("risk");
}

SuiteResult suite_dual_step(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed ^ 0xD0A1ULL);
  Tally t;
  for (std::size_t k = 0; k < o.instances; ++k) {
    const DualStepProblem prob = random_dual_problem(rng, o.max_n);
    const WeightVector p = dual_step(prob);
    const DualMax oracle = brute_dual_step(prob);
    t.check(linf(p.values(), oracle.argmax.values()), 1e-8, "dual_step weights");
    const double val = prob.objective(p.values());
    t.check(std::abs(val - oracle.value), 1e-9 * std::max(1.0, std::abs(val)), "dual_step objective");
    const double scale = std::max(1.0, prob.gradient(p.values()).lpNorm<Eigen::Infinity>());
    t.check(dual_stationarity_residual(prob, p), 1e-9 * scale, "dual_step stationarity");
    double excess = 0.0;
    for (int s = 0; s < 1000; ++s)
      excess = std::max(excess, prob.objective(random_simplex_point(rng, p.size())) - val);
    t.check(excess, 1e-9 * std::max(1.0, std::abs(val)), "random point beats dual_step");
  }
  return t.result("dual_step");
}

SuiteResult suite_simplex_project(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed ^ 0x5111ULL);
  std::normal_distribution<double> nd;
  Tally t;
  for (std::size_t k = 0; k < o.instances; ++k) {
    const std::size_t n = 2 + rng() % (std::max<std::size_t>(o.max_n, 2) - 1);
    const WeightVector c(random_positive_weights(rng, n));
    Eigen::VectorXd u(static_cast<Eigen::Index>(n)), v(static_cast<Eigen::Index>(n));
    for (auto& x : u) x = nd(rng);
    for (auto& x : v) x = nd(rng);
    const WeightVector pu = simplex_project(u, c);
    const WeightVector pv = simplex_project(v, c);
    t.check(linf(simplex_project(pu.values(), c).values(), pu.values()), 1e-12, "idempotence");
    auto wnorm = [&](const Eigen::VectorXd& x) {
      return std::sqrt((x.array().square() / c.values().array()).sum());
    };
    t.check(wnorm(pu.values() - pv.values()) - wnorm(u - v), 1e-12, "nonexpansive");
    auto dist = [&](const Eigen::VectorXd& p) { return wnorm(p - u); };
    const double best = dist(pu.values());
    double excess = 0.0;
    for (int s = 0; s < 200; ++s)
      excess = std::max(excess, best - dist(random_simplex_point(rng, n)));
    t.check(excess, 1e-12, "random point closer than projection");
  }
  return t.result("simplex_project");
}

SuiteResult suite_step_sizes(const VerifyOptions& o) {
  std::mt19937_64 rng(o.seed ^ 0x57E9ULL);
  Tally t;
  constexpr std::size_t kMaxK = 10000;
  const std::size_t sets = std::max<std::size_t>(1, o.instances / 5);
  for (std::size_t k = 0; k < sets; ++k) {
    const double nu = log_uniform(rng, 1e-3, 10.0);
    const double c1 = log_uniform(rng, 1e-3, 1.0);
    const double kappa = log_uniform(rng, 1.0, 1e3);
    const double G = log_uniform(rng, 1.0, 1e3);
    const double nu0 = log_uniform(rng, 1e-3, 10.0);
    const StepSchedule s(nu, c1, kappa, G, nu0);
    CompensatedSum A;
    double A_prev = 0.0;
    double worst_sum = 0.0, worst_g = 0.0, worst_k = 0.0;
    for (std::size_t i = 1; i <= kMaxK; ++i) {
      const double a = s.a(i);
      A.add(a);
      const double Ai = A.value();
      const double closed = s.A(i);
      worst_sum = std::max(worst_sum, std::abs(Ai - closed) / closed);
      const double rhs_g = (1.0 + 0.5 * c1 * Ai) * (nu0 + nu * A_prev);
      const double rhs_k = (1.0 + 0.5 * c1 * Ai) * (1.0 + 0.5 * c1 * A_prev) / 4.0;
      worst_g = std::max(worst_g, (2.0 * G * G * a * a - rhs_g) / rhs_g);
      worst_k = std::max(worst_k, (2.0 * kappa * kappa * a * a - rhs_k) / rhs_k);
      A_prev = Ai;
    }
    t.check(worst_sum, 1e-12, "running sum vs closed form");
    t.check(worst_g, 1e-12, "G step inequality");
    t.check(worst_k, 1e-12, "kappa step inequality");
  }
  return t.result("step_sizes");
}

SuiteResult suite_gap_sandwich(const VerifyOptions& o) {
  Tally t;
  for (int variant = 0; variant < 2; ++variant) {
    GeneratorConfig g;
    g.d = 3;
    g.n = 400;
    g.W = 2.0;
    g.seed = o.seed + static_cast<std::uint64_t>(variant);
    g.w_star = Eigen::VectorXd::Zero(3);
    g.w_star[0] = 0.8;
    g.w_star[2] = -0.6;
    TrainSettings s;
    s.W = g.W;
    s.seed = o.seed;
    s.sharpness_trials = 300;
    if (variant == 1) {
      g.label_model.kind = LabelModel::Kind::adversarial;
      g.label_model.fraction = 0.05;
      g.label_model.magnitude = compute_truncation_level({s.C_M, s.W, s.B, 1.0, s.epsilon});
    }
    const Activation act = Activation::relu();
    const PreparedRun prep = prepare_run(generate(g), act, s, g.w_star);
    const RunResult r = run(prep.data, act, prep.cfg, &*prep.ref);
    double low = 0.0, high = 0.0, local = 0.0, bounded = 0.0;
    for (const auto& rec : r.trace) {
      low = std::max(low, rec.cum_lower - rec.cum_gap);
      high = std::max(high, rec.cum_gap - rec.cum_upper);
      local = std::max(local, rec.local_rhs - rec.local_S);
      bounded = std::max(bounded, rec.w_norm - 2.0 * g.w_star.norm());
    }
    const std::string tag = variant == 0 ? "realizable" : "adversarial";
    t.check(low, 1e-6, tag + " cumulative lower bound");
    t.check(high, 1e-6, tag + " cumulative upper bound");
    t.check(local, 1e-6, tag + " per-iterate local inequality");
    t.check(bounded, 1e-9, tag + " bounded iterates");
  }
  return t.result("gap_sandwich");
}

}  // namespace

Eigen::VectorXd random_simplex_point(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd p(static_cast<Eigen::Index>(n));
  for (auto& v : p) v = e(rng);
  return p / p.sum();
}

QhatInstance random_qhat_instance(std::mt19937_64& rng, std::size_t max_n, bool closed_form_regime) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 2 + rng() % (std::max<std::size_t>(max_n, 2) - 1);
  const std::size_t d = 1 + rng() % 4;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = nd(rng);
  Eigen::VectorXd w_true(static_cast<Eigen::Index>(d)), w(static_cast<Eigen::Index>(d));
  for (auto& v : w_true) v = nd(rng);
  for (auto& v : w) v = nd(rng);
  w *= 1.5 * u(rng) / std::max(w.norm(), 1e-12);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y[i] = std::max(0.0, X.row(i).dot(w_true)) + 0.3 * nd(rng);
  WeightVector p0 = u(rng) < 0.5 ? WeightVector::uniform(n)
                                 : WeightVector(random_positive_weights(rng, n));
  Dataset ds(std::move(X), std::move(y), std::move(p0));
  const double mean = ds.ref_weights().values().dot(sample_losses(w, ds, Activation::relu()));
  const double nu = closed_form_regime ? std::max(mean * (1.0 + 2.0 * u(rng)), 1e-3)
                                       : std::max(mean * (0.02 + 0.4 * u(rng)), 1e-4);
  return {std::move(ds), std::move(w), nu};
}

DualStepProblem random_dual_problem(std::mt19937_64& rng, std::size_t max_n) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const std::size_t n = 2 + rng() % (std::max<std::size_t>(max_n, 2) - 1);
  Eigen::VectorXd losses(static_cast<Eigen::Index>(n));
  for (auto& v : losses) v = u(rng);
  DualStepProblem prob;
  prob.losses = std::move(losses);
  prob.a = log_uniform(rng, 1e-3, 1e3);
  prob.prox_weight = log_uniform(rng, 1e-3, 1e3);
  prob.nu = log_uniform(rng, 1e-3, 1e3);
  prob.p0 = WeightVector(random_positive_weights(rng, n));
  prob.p_prev = WeightVector(random_simplex_point(rng, n));
  return prob;
}

std::size_t verify_thread_count(const VerifyOptions& opts) {
  if (opts.threads > 0) return opts.threads;
  if (const char* env = std::getenv("NEURON_DRO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SuiteResult> run_verification(const VerifyOptions& opts) {
  using Suite = std::function<SuiteResult(const VerifyOptions&)>;
  const std::vector<Suite> suites = {suite_qhat,      suite_risk,       suite_dual_step,
                                     suite_simplex_project, suite_step_sizes, suite_gap_sandwich};
  std::vector<SuiteResult> results(suites.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < suites.size();) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        results[k] = suites[k](opts);
      } catch (const std::exception& e) {
        results[k].pass = false;
        results[k].detail = std::string("exception: ") + e.what();
      }
      results[k].seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const std::size_t nthreads = std::min(verify_thread_count(opts), suites.size());
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < nthreads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  static const char* kNames[] = {"qhat", "risk", "dual_step", "simplex_project", "step_sizes",
                                 "gap_sandwich"};
  for (std::size_t k = 0; k < results.size(); ++k)
    if (results[k].name.empty()) results[k].name = kNames[k];
  return results;
}

}  // namespace ndro
