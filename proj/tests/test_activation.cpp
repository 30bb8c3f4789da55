#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ndro/activation.hpp"
#include "ndro/error.hpp"
#include "oracles.hpp"

using namespace ndro;

TEST_CASE("eval on the documented points") {
  CHECK(eval(Activation::relu(), 1.5) == 1.5);
  CHECK(eval(Activation::relu(), -2.0) == 0.0);
  CHECK(eval(Activation::leaky_relu(0.1), -2.0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(eval(Activation::softplus(1.0), 0.0) == 0.0);
  CHECK(eval(Activation::softplus(0.5), 0.0) == 0.0);
}

TEST_CASE("subgrad uses the right derivative at the kink") {
  CHECK(subgrad(Activation::relu(), 2.0) == 1.0);
  CHECK(subgrad(Activation::relu(), 0.0) == 1.0);
  CHECK(subgrad(Activation::relu(), -1.0) == 0.0);
  CHECK(subgrad(Activation::leaky_relu(0.1), -1.0) == doctest::Approx(0.1));
  CHECK(subgrad(Activation::softplus(1.0), 0.0) == doctest::Approx(0.5));
}

TEST_CASE("non-finite inputs are domain errors") {
  for (const Activation& a : {Activation::relu(), Activation::leaky_relu(0.2), Activation::softplus(1.0)}) {
    CHECK_THROWS_AS(eval(a, std::nan("")), DomainError);
    CHECK_THROWS_AS(eval(a, INFINITY), DomainError);
    CHECK_THROWS_AS(subgrad(a, -INFINITY), DomainError);
  }
}

TEST_CASE("factories reject invalid parameters") {
  CHECK_THROWS_AS(Activation::leaky_relu(0.0), ParameterError);
  CHECK_THROWS_AS(Activation::leaky_relu(1.5), ParameterError);
  CHECK_THROWS_AS(Activation::softplus(0.0), ParameterError);
  CHECK(Activation::leaky_relu(0.1).alpha == doctest::Approx(0.1));
  CHECK(Activation::leaky_relu(0.1).beta == 1.0);
}

TEST_CASE("softplus stays accurate far from the origin") {
  const Activation sp = Activation::softplus(1.0);
  CHECK(eval(sp, 800.0) == doctest::Approx(800.0 - std::log(2.0)));
  CHECK(eval(sp, -800.0) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("Lipschitz, monotone and growth on random pairs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0), up(0.0, 100.0);
  for (const Activation& a :
       {Activation::relu(), Activation::leaky_relu(0.1), Activation::softplus(1.0), Activation::softplus(0.3)}) {
    for (int k = 0; k < 10000; ++k) {
      double t1 = u(rng), t2 = u(rng);
      if (t1 < t2) std::swap(t1, t2);
      const double diff = eval(a, t1) - eval(a, t2);
      CHECK(diff >= 0.0);
      CHECK(diff <= a.beta * (t1 - t2) + 1e-12);
      double s1 = up(rng), s2 = up(rng);
      if (s1 < s2) std::swap(s1, s2);
      CHECK(eval(a, s1) - eval(a, s2) >= a.alpha * (s1 - s2) - 1e-12);
    }
  }
}

TEST_CASE("subgrad matches finite differences away from kinks") {
  for (const Activation& a : {Activation::relu(), Activation::leaky_relu(0.3), Activation::softplus(2.0)}) {
    for (double t = -5.0; t <= 5.0; t += 0.0137) {
      if (std::abs(t) < 1e-3) continue;
      const double fd = oracle::derivative([&](double s) { return eval(a, s); }, t);
      CHECK(std::abs(subgrad(a, t) - fd) <= 1e-6);
    }
  }
}

TEST_CASE("verify_unbounded_convex on the documented grids") {
  const std::vector<double> g1 = {-2, -1, 0, 1, 2};
  const ConvexityReport r1 = verify_unbounded_convex(Activation::relu(), g1);
  CHECK(r1.pass);
  CHECK(r1.violations.empty());
  CHECK(r1.measured_alpha == doctest::Approx(1.0));
  CHECK(r1.measured_beta == doctest::Approx(1.0));

  const std::vector<double> g2 = {-2, 0, 2};
  const Activation leaky = Activation::leaky_relu(0.1);
  const ConvexityReport r2 = verify_unbounded_convex(leaky, g2);
  CHECK(r2.pass);
  CHECK(leaky.alpha == doctest::Approx(0.1));
  CHECK(leaky.beta == 1.0);

  std::vector<double> g3;
  for (double t = -3.0; t <= 3.0 + 1e-12; t += 0.5) g3.push_back(t);
  const Activation sp = Activation::softplus(1.0);
  const ConvexityReport r3 = verify_unbounded_convex(sp, g3);
  CHECK(r3.pass);
  // The smallest slope on [0, 3] sits at the origin and exceeds sigma'(0).
  const double first = (eval(sp, 0.5) - eval(sp, 0.0)) / 0.5;
  CHECK(r3.measured_alpha == doctest::Approx(first));
  CHECK(r3.measured_alpha >= sp.alpha);
  CHECK(r3.measured_beta <= 1.0);
}

TEST_CASE("verify_unbounded_convex reports a mis-declared constant") {
  Activation bad = Activation::relu();
  bad.beta = 0.5;  // ReLU is not 0.5-Lipschitz
  bad.alpha = 0.5;
  const std::vector<double> g = {0, 1, 2};
  const ConvexityReport r = verify_unbounded_convex(bad, g);
  CHECK_FALSE(r.pass);
  REQUIRE_FALSE(r.violations.empty());
  CHECK(r.violations.front().condition == "lipschitz");
  const std::vector<double> unsorted = {1, 0};
  CHECK_THROWS_AS(verify_unbounded_convex(Activation::relu(), unsorted), ParameterError);
}
