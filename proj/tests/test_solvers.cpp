#include <doctest.h>

#include <cmath>
#include <random>

#include "ndro/error.hpp"
#include "ndro/solvers.hpp"
#include "oracles.hpp"

using namespace ndro;

namespace {

Eigen::VectorXd random_simplex(std::mt19937_64& rng, Eigen::Index n) {
  std::exponential_distribution<double> ex(1.0);
  Eigen::VectorXd p(n);
  for (auto& v : p) v = ex(rng);
  return p / p.sum();
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

DualStepProblem random_problem(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DualStepProblem prob;
  prob.losses.resize(n);
  for (auto& v : prob.losses) v = 5.0 * u(rng);
  prob.a = log_uniform(rng, 1e-3, 1e3);
  prob.prox_weight = log_uniform(rng, 1e-3, 1e3);
  prob.nu = log_uniform(rng, 1e-3, 1e3);
  prob.p0 = WeightVector(0.5 * random_simplex(rng, n) + Eigen::VectorXd::Constant(n, 0.5 / static_cast<double>(n)));
  prob.p_prev = WeightVector(random_simplex(rng, n));
  return prob;
}

}  // namespace

TEST_CASE("ball projection examples") {
  CHECK(project_ball(Eigen::Vector2d(3, 4), 10.0) == Eigen::Vector2d(3, 4));
  const Eigen::VectorXd p = project_ball(Eigen::Vector2d(3, 4), 1.0);
  CHECK(p[0] == doctest::Approx(0.6));
  CHECK(p[1] == doctest::Approx(0.8));
  CHECK(project_ball(Eigen::Vector2d(0, 0), 0.3) == Eigen::Vector2d(0, 0));
}

TEST_CASE("primal step examples") {
  const Eigen::Vector2d w0(0.3, -0.2);
  CHECK(primal_step(w0, Eigen::Vector2d::Zero(), 0.7, 3.0, 0.5, 1.0) == w0);
  const Eigen::VectorXd a = primal_step(Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 0), 1.0, 0.0, 1.0, 10.0);
  CHECK(a[0] == doctest::Approx(-1.0));
  CHECK(a[1] == 0.0);
  const Eigen::VectorXd b = primal_step(Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 0), 1.0, 0.0, 1.0, 0.5);
  CHECK(b[0] == doctest::Approx(-0.5));
}

TEST_CASE("primal step matches a grid minimizer in the plane") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int inst = 0; inst < 10; ++inst) {
    const double W = 0.5 + u(rng);
    const Eigen::Vector2d w_prev = project_ball(Eigen::Vector2d(g(rng), g(rng)), W);
    const Eigen::Vector2d grad(3.0 * g(rng), 3.0 * g(rng));
    const double a = u(rng), A = 5.0 * u(rng), c1 = u(rng);
    auto f = [&](const Eigen::Vector2d& w) {
      return a * grad.dot(w) + 0.5 * (1.0 + 0.5 * c1 * A) * (w - w_prev).squaredNorm();
    };
    const Eigen::Vector2d ref = oracle::minimize_on_disk(f, W);
    CHECK((primal_step(w_prev, grad, a, A, c1, W) - ref).norm() <= 1e-6);
  }
}

TEST_CASE("dual step examples") {
  DualStepProblem prob;
  prob.losses = Eigen::Vector3d(1.0, 4.0, 2.0);
  prob.a = 0.0;
  prob.prox_weight = 2.0;
  prob.nu = 1.0;
  prob.p0 = WeightVector::uniform(3);
  prob.p_prev = WeightVector(Eigen::Vector3d(0.2, 0.5, 0.3));
  CHECK((dual_step(prob).values() - prob.p_prev.values()).lpNorm<Eigen::Infinity>() <= 1e-15);

  prob.a = 0.8;
  prob.losses = Eigen::Vector3d::Constant(2.5);
  prob.p0 = WeightVector(Eigen::Vector3d(0.1, 0.3, 0.6));
  prob.p_prev = prob.p0;
  CHECK((dual_step(prob).values() - prob.p0.values()).lpNorm<Eigen::Infinity>() <= 1e-15);

  std::mt19937_64 rng(5);
  const DualStepProblem r = random_problem(rng, 5);
  const Eigen::VectorXd ref =
      oracle::dual_argmax(r.losses, r.a, r.prox_weight, r.nu, r.p0.values(), r.p_prev.values());
  CHECK((dual_step(r).values() - ref).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("degenerate dual problems are rejected") {
  DualStepProblem prob;
  prob.losses = Eigen::Vector2d(1.0, 2.0);
  prob.a = 0.0;
  prob.prox_weight = 0.0;
  prob.nu = 1.0;
  prob.p0 = WeightVector::uniform(2);
  prob.p_prev = WeightVector::uniform(2);
  CHECK_THROWS_AS(dual_step(prob), ParameterError);
  prob.prox_weight = -1.0;
  CHECK_THROWS_AS(dual_step(prob), ParameterError);
  prob.prox_weight = 1.0;
  prob.p_prev = WeightVector::uniform(3);
  CHECK_THROWS_AS(dual_step(prob), DimensionError);
}

TEST_CASE("dual step agrees with the oracles on random instances") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> size(2, 50);
  for (int inst = 0; inst < 100; ++inst) {
    const DualStepProblem prob = random_problem(rng, size(rng));
    const Eigen::Index n = prob.losses.size();
    const WeightVector p = dual_step(prob);
    CHECK(std::abs(p.values().sum() - 1.0) <= 1e-12);
    CHECK(p.values().minCoeff() >= 0.0);
    CHECK(dual_stationarity_residual(prob, p) <= 1e-9 * (1.0 + prob.gradient(p.values()).cwiseAbs().maxCoeff()));

    const DualMax brute = brute_dual_step(prob);
    CHECK((brute.argmax.values() - p.values()).lpNorm<Eigen::Infinity>() <= 1e-8);
    const double best = prob.objective(p.values());
    CHECK(std::abs(brute.value - best) <= 1e-9 * std::max(1.0, std::abs(best)));

    double excess = -INFINITY;
    for (int k = 0; k < 1000; ++k) excess = std::max(excess, prob.objective(random_simplex(rng, n)) - best);
    CHECK(excess <= 1e-9 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("brute dual maximum examples") {
  const DualMax tie = brute_dual_max_losses(Eigen::Vector3d(1.0, 5.0, 5.0), WeightVector::uniform(3), 0.0);
  CHECK(tie.value == 5.0);
  CHECK(tie.argmax[0] == 0.0);
  CHECK(tie.argmax[1] == doctest::Approx(0.5));
  CHECK(tie.argmax[2] == doctest::Approx(0.5));

  const WeightVector p0(Eigen::Vector3d(0.2, 0.3, 0.5));
  const DualMax big = brute_dual_max_losses(Eigen::Vector3d(1.0, 3.0, 2.0), p0, 1e8);
  CHECK((big.argmax.values() - p0.values()).lpNorm<Eigen::Infinity>() <= 1e-7);

  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int inst = 0; inst < 100; ++inst) {
    const Eigen::Index n = 2 + inst % 30;
    Eigen::VectorXd l(n);
    for (auto& v : l) v = 3.0 * u(rng);
    const WeightVector pr(0.5 * random_simplex(rng, n) + Eigen::VectorXd::Constant(n, 0.5 / static_cast<double>(n)));
    const double nu = log_uniform(rng, 1e-2, 1e2);
    const DualMax m = brute_dual_max_losses(l, pr, nu);
    CHECK((m.argmax.values() - qhat_general_losses(l, pr, nu).values()).lpNorm<Eigen::Infinity>() <= 1e-8);
    if (nu >= 0.5 * l.dot(pr.values())) CHECK(std::abs(m.value - risk_from_losses(l, pr, nu).risk) <= 1e-8);
  }
}

TEST_CASE("weighted simplex projection") {
  const WeightVector uni = WeightVector::uniform(2);
  const Eigen::Vector2d on(0.25, 0.75);
  CHECK((simplex_project(on, uni).values() - on).lpNorm<Eigen::Infinity>() <= 1e-15);
  const WeightVector a = simplex_project(Eigen::Vector2d(2.0, 0.0), uni);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == 0.0);
  const WeightVector b = simplex_project(Eigen::Vector2d(0.6, 0.6), uni);
  CHECK(b[0] == doctest::Approx(0.5));
  CHECK(b[1] == doctest::Approx(0.5));

  std::mt19937_64 rng(47);
  std::normal_distribution<double> g;
  for (int inst = 0; inst < 200; ++inst) {
    const Eigen::Index n = 2 + inst % 20;
    const WeightVector wts(0.5 * random_simplex(rng, n) + Eigen::VectorXd::Constant(n, 0.5 / static_cast<double>(n)));
    Eigen::VectorXd v(n), w(n);
    for (auto& x : v) x = g(rng);
    for (auto& x : w) x = g(rng);
    const WeightVector pv = simplex_project(v, wts), pw = simplex_project(w, wts);
    CHECK(std::abs(pv.values().sum() - 1.0) <= 1e-12);
    CHECK((simplex_project(pv.values(), wts).values() - pv.values()).lpNorm<Eigen::Infinity>() <= 1e-12);
    auto wnorm = [&](const Eigen::VectorXd& z) {
      return std::sqrt((z.array().square() / wts.values().array()).sum());
    };
    CHECK(wnorm(pv.values() - pw.values()) <= wnorm(v - w) + 1e-12);
    if (inst % 20 == 0) {
      // Uniform weights reduce to the Euclidean projection.
      const WeightVector u = WeightVector::uniform(static_cast<std::size_t>(n));
      CHECK((simplex_project(v, u).values() - oracle::simplex_projection(v)).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
  CHECK_THROWS_AS(simplex_project(Eigen::Vector2d(1, 0), WeightVector::point_mass(2, 0)), ParameterError);
}
