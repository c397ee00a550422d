#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mixlab/gibbs_markov.hpp"

using namespace mixlab;

namespace {
// Bisection oracle, independent of the map's Newton path.
double bisect_left_lsv(double gamma, double target) {
  double lo = 0.0, hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (m * (1.0 + std::pow(2.0 * m, gamma)) < target ? lo : hi) = m;
  }
  return 0.5 * (lo + hi);
}
} // namespace

TEST_CASE("doubling map basics") {
  auto map = make_doubling_map(256);
  REQUIRE(map->apply(0.3) == Catch::Approx(0.6).margin(1e-15));
  REQUIRE(map->inverse_branch(0, 0.6) == Catch::Approx(0.3).margin(1e-15));
  REQUIRE(map->inverse_branch(1, 0.6) == Catch::Approx(0.8).margin(1e-15));
  REQUIRE_THROWS_AS(map->apply(0.5), Error);
  REQUIRE_THROWS_AS(map->apply(1.7), Error);
  REQUIRE_THROWS_AS(map->inverse_branch(5, 0.3), Error);
}

TEST_CASE("doubling transfer operator closed forms") {
  auto map = make_doubling_map(512);
  // R1 = 1 exactly after normalization
  for (double y : {0.05, 0.33, 0.71, 0.97}) {
    const double r1 = map->transfer_point(y, [](double) { return 1.0; });
    REQUIRE(r1 == Catch::Approx(1.0).margin(1e-12));
  }
  // R x = y/2 + 1/4
  for (double y : {0.1, 0.5, 0.9}) {
    const double rx = map->transfer_point(y, [](double x) { return x; });
    REQUIRE(rx == Catch::Approx(y / 2.0 + 0.25).margin(1e-10));
  }
  // R cos(2 pi x) = 0
  for (double y : {0.2, 0.6}) {
    const double rc = map->transfer_point(y, [](double x) { return std::cos(2.0 * M_PI * x); });
    REQUIRE(rc == Catch::Approx(0.0).margin(1e-10));
  }
  // invariant density is Lebesgue
  REQUIRE(map->invariant_density().eval(0.37) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("doubling separation time matches binary expansions") {
  auto map = make_doubling_map(256);
  REQUIRE(map->separation_time(1.0 / 3.0, 2.0 / 3.0, 32) == 0);
  REQUIRE(map->separation_time(0.1, 0.1 + std::pow(2.0, -6.0), 32) == 5);
  REQUIRE(map->separation_time(0.17, 0.17, 8) == kSeparationInfinite);
}

TEST_CASE("lsv ambient map branch values") {
  LsvAmbient amb{1.0};
  REQUIRE(amb.step(0.25) == Catch::Approx(0.375).margin(1e-15)); // 0.25 (1 + 2*0.25)
  REQUIRE(amb.step(0.75) == Catch::Approx(0.5).margin(1e-15));   // 2x - 1
}

TEST_CASE("lsv first-return construction") {
  auto fr = make_lsv_first_return(0.5, 64, 512);
  const auto& map = *fr.map;

  SECTION("endpoint chain is strictly decreasing and solves the left branch") {
    for (std::size_t n = 1; n < fr.endpoint_chain.size(); ++n) {
      REQUIRE(fr.endpoint_chain[n] < fr.endpoint_chain[n - 1]);
      if (n >= 1 && n + 1 < fr.endpoint_chain.size()) {
        const double oracle = bisect_left_lsv(0.5, fr.endpoint_chain[n - 1]);
        REQUIRE(fr.endpoint_chain[n] == Catch::Approx(oracle).margin(1e-10));
      }
    }
  }

  SECTION("return times are 1..J") {
    std::vector<int> taus = fr.return_times;
    std::sort(taus.begin(), taus.end());
    for (int k = 0; k < 64; ++k) REQUIRE(taus[static_cast<std::size_t>(k)] == k + 1);
    // spatial order: deepest (leftmost) branch has the largest return time
    REQUIRE(map.branch(0).return_time == 64);
    REQUIRE(map.branch(map.branch_count() - 1).return_time == 1);
  }

  SECTION("branches are genuine first returns of the ambient map") {
    LsvAmbient amb{0.5};
    for (std::size_t j : {std::size_t(20), std::size_t(40), std::size_t(62), std::size_t(63)}) {
      const Branch& b = map.branch(j);
      const double y = 0.5 * (b.lo + b.hi);
      double x = y;
      int steps = 0;
      do {
        x = amb.step(x);
        ++steps;
      } while (x < 0.5 && steps < 1000);
      REQUIRE(steps == b.return_time);
      REQUIRE(x == Catch::Approx(b.forward(y)).margin(1e-9));
    }
  }

  SECTION("transfer rows are exactly stochastic and density is invariant") {
    const auto& rows = map.markov_rows();
    for (const auto& row : rows) {
      double s = 0.0;
      for (auto& e : row) s += e.second;
      REQUIRE(s == Catch::Approx(1.0).margin(1e-13));
    }
    // R1 = 1 pointwise through the weight grids
    for (double y : {0.51, 0.6, 0.77, 0.99}) {
      double s = 0.0;
      for (std::size_t j = 0; j < map.branch_count(); ++j) s += map.branch_weight(j, y);
      REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
    }
    REQUIRE(map.neglected_mass() < 0.05);
  }

  SECTION("tail exponent matches beta = 1/gamma within 0.1") {
    REQUIRE(std::abs(fr.fitted_tail_exponent - 2.0) < 0.1);
  }

  SECTION("lsv inverse branch agrees with bisection oracle") {
    // left branch of the ambient map: x (1 + 2x) = 0.375 at gamma = 1
    auto fr1 = make_lsv_first_return(1.0 - 1e-9, 16, 256);
    (void)fr1;
    const double x = bisect_left_lsv(0.5, 0.41);
    REQUIRE(std::abs(x * (1.0 + std::pow(2.0 * x, 0.5)) - 0.41) < 1e-12);
  }
}

TEST_CASE("lsv expansion and monotone chain") {
  auto fr = make_lsv_first_return(0.5, 48, 256);
  REQUIRE(fr.map->lambda_min() > 1.0);
  // chain x_n ~ n^{-1/gamma} decays to zero
  REQUIRE(fr.endpoint_chain.back() < 0.01);
}

TEST_CASE("duality of the transfer operator on random observables") {
  auto map = make_doubling_map(512);
  // int (R v) w dmu == int v (w o F) dmu
  auto v = [](double x) { return std::sin(3.0 * x) + 0.2 * x; };
  auto w = [](double x) { return std::cos(2.0 * x); };
  const double lhs = map->mu_mean([&](double y) { return map->transfer_point(y, v) * w(y); });
  const double rhs = map->mu_mean([&](double x) { return v(x) * w(map->apply(x)); });
  REQUIRE(lhs == Catch::Approx(rhs).margin(2e-6));
}

TEST_CASE("spectral gap probe") {
  auto map = make_doubling_map(512);
  SECTION("constant observable decays to zero immediately") {
    auto v = GridFunction::constant(map->grid(), 1.0);
    auto rep = spectral_gap_probe(*map, v, 8);
    for (double x : rep.norms) REQUIRE(x < 1e-12);
  }
  SECTION("cosine dies after one application") {
    auto v = GridFunction::sample(map->grid(), [](double x) { return std::cos(2.0 * M_PI * x); });
    auto rep = spectral_gap_probe(*map, v, 4);
    REQUIRE(rep.norms[0] > 0.5);
    REQUIRE(rep.norms[1] < 1e-3); // discretization noise only
  }
  SECTION("affine observable contracts geometrically at rate 1/2") {
    auto v = GridFunction::sample(map->grid(), [](double x) { return x; });
    auto rep = spectral_gap_probe(*map, v, 10);
    REQUIRE(rep.gamma1 == Catch::Approx(0.5).margin(0.05));
  }
}

TEST_CASE("lsv spectral gap is below one") {
  auto fr = make_lsv_first_return(0.5, 48, 512);
  auto v = GridFunction::sample(fr.map->grid(), [](double x) { return x; });
  auto rep = spectral_gap_probe(*fr.map, v, 24);
  REQUIRE(rep.gamma1 > 0.0);
  REQUIRE(rep.gamma1 < 1.0);
  REQUIRE(rep.norms.back() < 1e-6 * rep.norms.front() + 1e-9);
}

TEST_CASE("distortion constant is uniform over cylinders") {
  auto fr = make_lsv_first_return(0.5, 48, 512);
  auto rep = distortion_probe(*fr.map, 500, 8, Rng(77, 0));
  REQUIRE(rep.cylinders > 400);
  REQUIRE(rep.c2 < 50.0); // single global constant, desk-scale sanity bound
  REQUIRE(rep.worst_ratio_lo > 1.0 / rep.c2 - 1e-12);
  REQUIRE(rep.worst_ratio_hi < rep.c2 + 1e-12);
}

TEST_CASE("map spec text round trip") {
  auto fr = make_lsv_first_return(0.5, 32, 256);
  const std::string text = fr.map->to_spec_text();
  REQUIRE(text.find("kind lsv") != std::string::npos);
  REQUIRE(text.find("gamma 0.5") != std::string::npos);
  auto fr2 = make_lsv_first_return(0.5, 32, 256);
  REQUIRE(fr2.map->to_spec_text() == text); // reproducible construction
}
