#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mixlab/grid.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/solve.hpp"
#include "mixlab/stats.hpp"

using namespace mixlab;

TEST_CASE("rng streams are deterministic and decorrelated") {
  Rng a(42, 0), b(42, 0), c(42, 1);
  REQUIRE(a.next_u64() == b.next_u64());
  REQUIRE(a.next_u64() == b.next_u64());
  Rng a2(42, 0);
  REQUIRE(a2.next_u64() != c.next_u64());

  Rng u(7, 3);
  double mean = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) mean += u.uniform();
  mean /= n;
  REQUIRE(std::abs(mean - 0.5) < 0.005);

  Rng g(9, 0);
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    m2 += z * z;
  }
  REQUIRE(std::abs(m2 / n - 1.0) < 0.02);
}

TEST_CASE("rng split gives independent reproducible streams") {
  Rng base(5, 17);
  Rng s1 = base.split(1);
  Rng s1b = Rng(5, 17).split(1);
  REQUIRE(s1.next_u64() == s1b.next_u64());
  Rng s2 = base.split(2);
  REQUIRE(s1.next_u64() != s2.next_u64());
}

TEST_CASE("alias table reproduces weights") {
  AliasTable t({1.0, 2.0, 7.0});
  Rng rng(123, 0);
  std::vector<int> counts(3, 0);
  const int n = 300000;
  for (int i = 0; i < n; ++i) ++counts[t.draw(rng)];
  REQUIRE(std::abs(counts[0] / double(n) - 0.1) < 0.01);
  REQUIRE(std::abs(counts[1] / double(n) - 0.2) < 0.01);
  REQUIRE(std::abs(counts[2] / double(n) - 0.7) < 0.01);
}

TEST_CASE("grid aligned to breakpoints never straddles them") {
  Grid g = Grid::aligned({0.0, 0.3, 1.0}, 10);
  bool found = false;
  for (double e : g.edges())
    if (e == 0.3) found = true;
  REQUIRE(found);
  REQUIRE(g.locate(0.2999999) != g.locate(0.3000001));
}

TEST_CASE("grid function interpolation and seminorms") {
  Grid g = Grid::uniform(0.0, 1.0, 64);
  auto f = GridFunction::sample(g, [](double x) { return 3.0 * x + 1.0; });
  REQUIRE(f.eval(0.5) == Catch::Approx(2.5).margin(1e-12));
  REQUIRE(f.lipschitz_seminorm() == Catch::Approx(3.0).margin(1e-9));
  REQUIRE(f.sup_norm() == Catch::Approx(1.0 + 3.0 * g.mid(63)).margin(1e-12));
}

TEST_CASE("monotone solver hits bracketed roots") {
  const double r = solve_increasing([](double x) { return x * (1.0 + 2.0 * x); },
                                    [](double x) { return 1.0 + 4.0 * x; }, 0.0, 1.0, 0.375);
  REQUIRE(r == Catch::Approx(0.25).epsilon(1e-12));
  REQUIRE_THROWS_AS(solve_increasing([](double x) { return x; }, [](double) { return 1.0; }, 0.0,
                                     1.0, 2.0),
                    Error);
}

TEST_CASE("weighted least squares recovers a line") {
  std::vector<double> x, y, w;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i);
    y.push_back(2.0 - 0.5 * i);
    w.push_back(1.0);
  }
  const LineFit f = wls_line(x, y, w);
  REQUIRE(f.slope == Catch::Approx(-0.5).margin(1e-12));
  REQUIRE(f.intercept == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("anderson-darling accepts gaussian, rejects uniform") {
  Rng rng(2024, 0);
  std::vector<double> g, u;
  for (int i = 0; i < 4000; ++i) {
    g.push_back(rng.normal());
    u.push_back(rng.uniform());
  }
  REQUIRE(anderson_darling(g) < 1.092);  // 1% critical value
  REQUIRE(anderson_darling(u) > 1.092);
}

TEST_CASE("wilson interval covers the point estimate") {
  const WilsonCi w = wilson_ci(30, 100);
  REQUIRE(w.lo < 0.3);
  REQUIRE(w.hi > 0.3);
  REQUIRE(w.lo > 0.2);
  REQUIRE(w.hi < 0.42);
}
