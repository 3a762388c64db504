#include "wesper/distributions.hpp"

#include <cmath>
#include <doctest.h>

#include "oracles.hpp"
#include "wesper/detail/rng.hpp"
#include "wesper/errors.hpp"

using wesper::SpectralDistribution;
using wesper::WeightDistribution;

namespace {

// density-weighted quadrature of ∫ δ/(δ-x) dD for the continuous kinds
double m_ld_by_quadrature(const WeightDistribution& d, double x) {
  double lo = d.support()[0].lo, hi = d.support()[0].hi;
  auto dens = [&](double s) {
    return d.kind() == wesper::WeightKind::Ewma ? 1.0 / (d.alpha() * s) : 1.0 / d.alpha();
  };
  return oracle::integrate([&](double s) { return dens(s) * s / (s - x); }, lo, hi, 20000);
}

}  // namespace

TEST_CASE("spectral distribution construction invariants") {
  SpectralDistribution h({3.0, 1.0, 10.0}, {0.4, 0.2, 0.4});
  CHECK(h.atoms() == std::vector<double>{1.0, 3.0, 10.0});
  CHECK(h.weights() == std::vector<double>{0.2, 0.4, 0.4});
  CHECK(h.min_atom() == 1.0);
  CHECK(h.max_atom() == 10.0);
  CHECK(h.mean() == doctest::Approx(0.2 + 1.2 + 4.0));

  // equal atoms merged by summing weights
  SpectralDistribution merged({2.0, 2.0, 5.0}, {0.25, 0.25, 0.5});
  CHECK(merged.size() == 2);
  CHECK(merged.weights()[0] == doctest::Approx(0.5));

  CHECK_THROWS_AS(SpectralDistribution({-1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralDistribution({1.0}, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(SpectralDistribution({}, {}), std::invalid_argument);
}

TEST_CASE("weight distribution support and mean normalization") {
  auto ewma = WeightDistribution::ewma(1.0);
  double beta = 1.0 / (1.0 - std::exp(-1.0));
  CHECK(ewma.beta() == doctest::Approx(beta).epsilon(1e-14));
  CHECK(ewma.support()[0].lo == doctest::Approx(beta * std::exp(-1.0)).epsilon(1e-14));
  CHECK(ewma.support()[0].hi == doctest::Approx(beta).epsilon(1e-14));
  CHECK(std::abs(ewma.mean() - 1.0) <= 1e-12);

  auto unif = WeightDistribution::uniform(1.0);
  CHECK(unif.support()[0].lo == doctest::Approx(0.5));
  CHECK(unif.support()[0].hi == doctest::Approx(1.5));
  CHECK(std::abs(unif.mean() - 1.0) <= 1e-12);

  for (double alpha : {0.3, 2.0, 5.0, 10.0}) {
    CHECK(std::abs(WeightDistribution::ewma(alpha).mean() - 1.0) <= 1e-12);
  }
  for (double alpha : {0.1, 0.5, 1.5, 1.9}) {
    CHECK(std::abs(WeightDistribution::uniform(alpha).mean() - 1.0) <= 1e-12);
  }

  // unnormalized mixtures are accepted, callers may warn
  auto skew = WeightDistribution::dirac_mixture({0.5, 2.0}, {0.5, 0.5});
  CHECK_FALSE(skew.mean_is_one());

  CHECK_THROWS_AS(WeightDistribution::ewma(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(WeightDistribution::uniform(2.0), std::invalid_argument);
}

TEST_CASE("m_LD point values") {
  // m_LD(0) = 1 for every weight law
  auto d1 = WeightDistribution::dirac(1.0);
  auto dm = WeightDistribution::dirac_mixture({0.5, 1.5}, {0.5, 0.5});
  auto de = WeightDistribution::ewma(1.0);
  auto du = WeightDistribution::uniform(1.0);
  for (const auto* d : {&d1, &dm, &de, &du}) {
    CHECK(d->m_ld(0.0) == doctest::Approx(1.0).epsilon(1e-13));
  }

  CHECK(d1.m_ld(2.0) == doctest::Approx(-1.0));
  CHECK(de.m_ld(0.0) == doctest::Approx(1.0).epsilon(1e-13));  // log(e) = 1

  // inside the support: domain error
  CHECK_THROWS_AS(de.m_ld(1.0), std::domain_error);
  CHECK_THROWS_AS(du.m_ld(1.2), std::domain_error);
  CHECK_THROWS_AS(d1.m_ld(1.0), std::domain_error);
}

TEST_CASE("m_LD against quadrature of the density") {
  for (double alpha : {0.5, 1.0, 5.0}) {
    auto d = WeightDistribution::ewma(alpha);
    for (double x : {-2.0, 0.0, 0.1, d.beta() + 0.5, 10.0}) {
      if (d.contains(x)) continue;
      CHECK(d.m_ld(x) == doctest::Approx(m_ld_by_quadrature(d, x)).epsilon(1e-7));
    }
  }
  for (double alpha : {0.4, 1.0, 1.8}) {
    auto d = WeightDistribution::uniform(alpha);
    for (double x : {-1.0, 0.0, 0.2, 1.0 + 0.5 * alpha + 0.3, 7.0}) {
      if (d.contains(x)) continue;
      CHECK(d.m_ld(x) == doctest::Approx(m_ld_by_quadrature(d, x)).epsilon(1e-7));
    }
  }
}

TEST_CASE("m_LD derivatives: point values and positivity") {
  auto d1 = WeightDistribution::dirac(1.0);
  auto md = d1.m_ld_derivatives(0.0);
  CHECK(md.first == doctest::Approx(1.0));
  CHECK(md.second == doctest::Approx(2.0));

  auto dm = WeightDistribution::dirac_mixture({0.5, 1.5}, {0.5, 0.5});
  CHECK(dm.m_ld_derivatives(0.0).first == doctest::Approx(0.5 / 0.5 + 0.5 / 1.5));
}

TEST_CASE("m_LD derivatives agree with finite differences") {
  wesper::detail::Rng rng(1234);
  auto check_fd = [&](const WeightDistribution& d) {
    int done = 0;
    while (done < 50) {
      double x = -3.0 + 8.0 * rng.uniform();
      if (d.contains(x) || std::abs(x) < 1e-3) continue;
      double margin = 1e-3 * std::max(1.0, std::abs(x));
      bool near = false;
      for (const auto& iv : d.support()) {
        if (x > iv.lo - margin && x < iv.hi + margin) near = true;
      }
      if (near) continue;
      ++done;
      double h = 1e-5 * (1.0 + std::abs(x));
      auto f = [&](double v) { return d.m_ld(v); };
      auto md = d.m_ld_derivatives(x);
      CHECK(md.first ==
            doctest::Approx(oracle::fd_first(f, x, h)).epsilon(1e-5));
      CHECK(md.second ==
            doctest::Approx(oracle::fd_second(f, x, h)).epsilon(2e-4));
      CHECK(md.first > 0.0);  // strictly increasing on every component
    }
  };
  check_fd(WeightDistribution::ewma(1.0));
  check_fd(WeightDistribution::uniform(1.0));
  check_fd(WeightDistribution::dirac_mixture({0.5, 1.0, 2.5}, {0.3, 0.4, 0.3}));
}

TEST_CASE("branch inverse point values") {
  auto de = WeightDistribution::ewma(1.0);
  CHECK(de.m_ld_inverse(1, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

  auto d1 = WeightDistribution::dirac(1.0);
  CHECK(d1.m_ld_inverse(1, -1.0) == doctest::Approx(2.0));

  auto du = WeightDistribution::uniform(1.0);
  CHECK(du.m_ld_inverse(1, 1.0) == doctest::Approx(0.0));

  CHECK_THROWS_AS(de.m_ld_inverse(1, 0.0), wesper::NoSolutionError);
  CHECK_THROWS_AS(de.m_ld_inverse(2, 1.0), std::invalid_argument);
}

TEST_CASE("branch inverse round trips") {
  wesper::detail::Rng rng(99);

  auto round_trip = [&](const WeightDistribution& d) {
    const int m = d.branch_count();
    for (int k = 1; k <= m; ++k) {
      int done = 0;
      while (done < 100) {
        // sample x in the k-th component, map forward, invert back
        double x;
        if (k == m) {
          double lo = d.support().front().lo, hi = d.support().back().hi;
          x = (rng.uniform() < 0.5) ? lo - 3.0 * rng.uniform() - 1e-3
                                    : hi + 3.0 * rng.uniform() + 1e-3;
        } else {
          double lo = d.support()[k - 1].hi, hi = d.support()[k].lo;
          double f = 0.02 + 0.96 * rng.uniform();
          x = lo + f * (hi - lo);
        }
        if (d.contains(x) || x == 0.0) continue;
        ++done;
        double y = d.m_ld(x);
        if (k == m && y == 0.0) continue;
        double back = d.m_ld_inverse(k, y);
        CHECK(back == doctest::Approx(x).epsilon(1e-9));
        CHECK(std::abs(d.m_ld(back) - y) <= 1e-10 * std::max(1.0, std::abs(y)));
      }
    }
  };

  round_trip(WeightDistribution::ewma(1.0));
  round_trip(WeightDistribution::ewma(5.0));
  round_trip(WeightDistribution::uniform(0.8));
  round_trip(WeightDistribution::dirac(2.0));
  round_trip(WeightDistribution::dirac_mixture({0.5, 1.5}, {0.4, 0.6}));
  round_trip(WeightDistribution::dirac_mixture({79.0 / 160.0, 0.5}, {1.0 / 80.0, 79.0 / 80.0}));
  round_trip(WeightDistribution::dirac_mixture({0.34, 0.67, 2.7, 6.74, 34.0},
                                               {0.59, 0.30, 0.074, 0.03, 0.006}));
}

TEST_CASE("m_LD monotone on every component") {
  auto scan = [](const WeightDistribution& d, double lo, double hi) {
    double prev = -1e308;
    for (int i = 1; i < 200; ++i) {
      double x = lo + (hi - lo) * i / 200.0;
      if (d.contains(x)) continue;
      double v = d.m_ld(x);
      CHECK(v > prev);
      prev = v;
    }
  };
  auto dm = WeightDistribution::dirac_mixture({0.5, 1.5}, {0.4, 0.6});
  scan(dm, 0.5 + 1e-6, 1.5 - 1e-6);
  scan(dm, -4.0, 0.4);
  scan(dm, 1.6, 8.0);
  auto de = WeightDistribution::ewma(2.0);
  scan(de, -4.0, de.support()[0].lo - 1e-9);
}

TEST_CASE("complex m_LD matches real values and is smooth off axis") {
  auto de = WeightDistribution::ewma(1.0);
  wesper::Complex v = de.m_ld(wesper::Complex(-0.5, 0.0));
  CHECK(v.real() == doctest::Approx(de.m_ld(-0.5)));
  CHECK(v.imag() == 0.0);

  // Stieltjes-like sign: Im m_LD(x) and Im x have the same sign off axis
  for (const auto& d : {WeightDistribution::ewma(2.0), WeightDistribution::uniform(1.0)}) {
    wesper::Complex up = d.m_ld(wesper::Complex(1.0, 0.3));
    wesper::Complex down = d.m_ld(wesper::Complex(1.0, -0.3));
    CHECK(up.imag() > 0.0);
    CHECK(down.imag() < 0.0);
    CHECK(up.real() == doctest::Approx(down.real()));
  }
}

TEST_CASE("t transform values and derivatives") {
  SpectralDistribution h1 = SpectralDistribution::dirac(1.0);
  auto tv = t_transform(h1, 0.25, 0.0);
  CHECK(tv.t == doctest::Approx(0.25));

  SpectralDistribution h3({1.0, 3.0, 10.0}, {0.2, 0.4, 0.4});
  CHECK(t_transform(h3, 0.1, 0.0).t == doctest::Approx(0.1));

  auto tv2 = t_transform(h1, 0.25, 2.0);
  CHECK(tv2.t == doctest::Approx(-0.25));
  CHECK(tv2.dt == doctest::Approx(0.25));
  // second derivative of 0.25/(1-u) at u=2 is -0.5; finite differences agree
  CHECK(tv2.d2t == doctest::Approx(-0.5));
  auto tfun = [&](double u) { return t_transform(h1, 0.25, u).t; };
  CHECK(tv2.d2t == doctest::Approx(oracle::fd_second(tfun, 2.0, 1e-4)).epsilon(1e-5));

  wesper::detail::Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    double u = -5.0 + 20.0 * rng.uniform();
    bool near = false;
    for (double a : h3.atoms()) {
      if (std::abs(u - a) < 1e-2) near = true;
    }
    if (near) continue;
    double h = 1e-5 * (1.0 + std::abs(u));
    auto f = [&](double v) { return t_transform(h3, 0.1, v).t; };
    auto got = t_transform(h3, 0.1, u);
    CHECK(got.dt == doctest::Approx(oracle::fd_first(f, u, h)).epsilon(1e-5));
    CHECK(got.d2t == doctest::Approx(oracle::fd_second(f, u, h)).epsilon(2e-4));
  }

  CHECK_THROWS_AS(t_transform(h1, 0.25, 1.0), std::domain_error);
}

TEST_CASE("quantiles") {
  auto de = WeightDistribution::ewma(1.0);
  CHECK(de.quantile(1.0 - 1e-12) == doctest::Approx(de.beta()));
  CHECK(de.m_ld(0.0) == doctest::Approx(1.0));

  auto du = WeightDistribution::uniform(1.0);
  CHECK(du.quantile(0.5) == doctest::Approx(1.0));
  CHECK(du.quantile(0.25) == doctest::Approx(0.75));

  auto dm = WeightDistribution::dirac_mixture({0.5, 1.5}, {0.4, 0.6});
  CHECK(dm.quantile(0.3) == 0.5);
  CHECK(dm.quantile(0.9) == 1.5);
}
