#include <doctest.h>

#include "polatk/polar.hpp"
#include "support.hpp"

using namespace polatk;
using polatk::test::kPi;

namespace {

StokesImage one(double s0, double s1, double s2) {
  StokesImage s({1, 1, 1});
  s.at(kS0, 0, 0, 0) = s0;
  s.at(kS1, 0, 0, 0) = s1;
  s.at(kS2, 0, 0, 0) = s2;
  return s;
}

RawPolarImage one_raw(double a, double b, double c, double d) {
  RawPolarImage r({1, 1, 1});
  r.at(kI0, 0, 0, 0) = a;
  r.at(kI45, 0, 0, 0) = b;
  r.at(kI90, 0, 0, 0) = c;
  r.at(kI135, 0, 0, 0) = d;
  return r;
}

void check_stokes(const StokesImage& s, double s0, double s1, double s2, double tol = 1e-12) {
  CHECK(s.at(kS0, 0, 0, 0) == doctest::Approx(s0).epsilon(tol));
  CHECK(std::abs(s.at(kS1, 0, 0, 0) - s1) <= tol);
  CHECK(std::abs(s.at(kS2, 0, 0, 0) - s2) <= tol);
}

}  // namespace

TEST_SUITE("polar") {

TEST_CASE("malus examples and domain") {
  CHECK(malus_intensity(1.0, 0.0) == 1.0);
  CHECK(malus_intensity(1.0, kPi / 2) == doctest::Approx(0.0));
  CHECK(malus_intensity(2.0, kPi / 4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(malus_intensity(-1.0, 0.3), DomainError);
}

TEST_CASE("malus complement") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double i0 = rng.uniform(0.0, 10.0), th = rng.uniform(-10.0, 10.0);
    const double sum = malus_intensity(i0, th) + malus_intensity(i0, th + kPi / 2);
    REQUIRE(test::rel_err(sum, i0) <= 1e-12);
  }
}

TEST_CASE("stokes_from_raw examples") {
  check_stokes(stokes_from_raw(one_raw(0.5, 0.5, 0.5, 0.5)), 1, 0, 0);
  check_stokes(stokes_from_raw(one_raw(1, 0.5, 0, 0.5)), 1, 1, 0);
  check_stokes(stokes_from_raw(one_raw(0.5, 1, 0.5, 0)), 1, 0, 1);
}

TEST_CASE("stokes_from_raw is linear") {
  Rng rng(3);
  RawPolarImage a({5, 4, 3}), b({5, 4, 3});
  for (double& v : a.data()) v = rng.uniform();
  for (double& v : b.data()) v = rng.uniform();
  RawPolarImage mix({5, 4, 3});
  for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = 2.0 * a.data()[i] + 0.5 * b.data()[i];
  const auto sa = stokes_from_raw(a), sb = stokes_from_raw(b), sm = stokes_from_raw(mix);
  for (std::size_t i = 0; i < sm.data().size(); ++i) {
    CHECK(sm.data()[i] == doctest::Approx(2.0 * sa.data()[i] + 0.5 * sb.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("sense examples") {
  auto r = sense(one(1, 0, 0));
  for (int p = 0; p < 4; ++p) CHECK(r.at(p, 0, 0, 0) == doctest::Approx(0.5));
  r = sense(one(1, 1, 0));
  CHECK(r.at(kI0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(r.at(kI45, 0, 0, 0) == doctest::Approx(0.5));
  CHECK(r.at(kI90, 0, 0, 0) == doctest::Approx(0.0));
  CHECK(r.at(kI135, 0, 0, 0) == doctest::Approx(0.5));
  r = sense(one(2, 0, 1));
  CHECK(r.at(kI0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(r.at(kI45, 0, 0, 0) == doctest::Approx(1.5));
  CHECK(r.at(kI90, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(r.at(kI135, 0, 0, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(sense(one(1, 1, 1)), DomainError);
}

TEST_CASE("raw round trip on random samples") {
  const auto s = test::random_stokes({100, 100, 1}, 11);
  const auto raw = sense(s);
  for (double v : raw.data()) REQUIRE(v >= 0.0);
  const auto back = stokes_from_raw(raw);
  for (int p = 0; p < 3; ++p) {
    auto a = s.plane(p, 0), b = back.plane(p, 0), ref = s.plane(kS0, 0);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(a[i] - b[i]) <= 1e-9 * ref[i]);
  }
}

TEST_CASE("cues examples") {
  auto c = cues_from_stokes(one(1, 1, 0));
  CHECK(c.cues.at(kRho, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(c.cues.at(kPhi, 0, 0, 0) == doctest::Approx(0.0));
  c = cues_from_stokes(one(1, 0, 0));
  CHECK(c.cues.at(kRho, 0, 0, 0) == 0.0);
  CHECK(c.cues.at(kPhi, 0, 0, 0) == 0.0);
  c = cues_from_stokes(one(2, 0, 1));
  CHECK(c.cues.at(kRho, 0, 0, 0) == doctest::Approx(0.5));
  CHECK(c.cues.at(kPhi, 0, 0, 0) == doctest::Approx(kPi / 4));
  CHECK(c.degenerate_pixels == 0);
}

TEST_CASE("dark pixels are counted, not thrown") {
  const auto c = cues_from_stokes(one(0, 0, 0));
  CHECK(c.degenerate_pixels == 1);
  CHECK(c.cues.at(kRho, 0, 0, 0) == 0.0);
  CHECK(c.cues.at(kPhi, 0, 0, 0) == 0.0);
}

TEST_CASE("aolp wraps to the half-open principal range") {
  CHECK(wrap_aolp(kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(wrap_aolp(-kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(wrap_aolp(3 * kPi / 4) == doctest::Approx(-kPi / 4));
  // s1 < 0, s2 = 0 sits exactly on the boundary
  const auto c = cues_from_stokes(one(1, -1, 0));
  CHECK(c.cues.at(kPhi, 0, 0, 0) == doctest::Approx(-kPi / 2));
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double w = wrap_aolp(rng.uniform(-20, 20));
    REQUIRE(w >= -kPi / 2);
    REQUIRE(w < kPi / 2);
  }
}

TEST_CASE("stokes_from_cues examples") {
  PolarCuesImage q({1, 1, 1});
  Field s0({1, 1, 1});
  s0.at(0, 0, 0, 0) = 1;
  q.at(kRho, 0, 0, 0) = 1;
  check_stokes(stokes_from_cues(s0, q), 1, 1, 0);
  s0.at(0, 0, 0, 0) = 3;
  q.at(kRho, 0, 0, 0) = 0;
  q.at(kPhi, 0, 0, 0) = 1.234;
  check_stokes(stokes_from_cues(s0, q), 3, 0, 0);
  s0.at(0, 0, 0, 0) = 2;
  q.at(kRho, 0, 0, 0) = 0.5;
  q.at(kPhi, 0, 0, 0) = kPi / 4;
  check_stokes(stokes_from_cues(s0, q), 2, 0, 1);
  q.at(kRho, 0, 0, 0) = 1.5;
  CHECK_THROWS_AS(stokes_from_cues(s0, q), DomainError);
}

TEST_CASE("cues round trip and ranges") {
  const auto s = test::random_stokes({100, 100, 1}, 12);
  const auto c = cues_from_stokes(s);
  Field s0({100, 100, 1});
  std::copy(s.plane(kS0, 0).begin(), s.plane(kS0, 0).end(), s0.plane(0, 0).begin());
  const auto back = stokes_from_cues(s0, c.cues);
  auto rho = c.cues.plane(kRho, 0), phi = c.cues.plane(kPhi, 0);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    REQUIRE(rho[i] >= 0.0);
    REQUIRE(rho[i] <= 1.0 + 1e-9);
    REQUIRE(phi[i] >= -kPi / 2);
    REQUIRE(phi[i] < kPi / 2);
    if (rho[i] < 1e-6) continue;
    const double t = 1e-6 * s0.plane(0, 0)[i];
    REQUIRE(std::abs(back.plane(kS1, 0)[i] - s.plane(kS1, 0)[i]) <= t);
    REQUIRE(std::abs(back.plane(kS2, 0)[i] - s.plane(kS2, 0)[i]) <= t);
  }
}

TEST_CASE("add_stokes examples and crossed beams") {
  check_stokes(add_stokes(one(1, 1, 0), one(1, -1, 0)), 2, 0, 0);
  check_stokes(add_stokes(one(1.5, 0.2, -0.3), one(0, 0, 0)), 1.5, 0.2, -0.3);
  const auto sum = add_stokes(one(1, 1, 0), one(1, 0, 1));
  check_stokes(sum, 2, 1, 1);
  CHECK(cues_from_stokes(sum).cues.at(kRho, 0, 0, 0) == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK_THROWS_AS(add_stokes(StokesImage({2, 2, 1}), StokesImage({2, 3, 1})), StructuralError);

  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double s0 = rng.uniform(0.1, 5), phi = rng.uniform(-kPi, kPi);
    const auto a = one(s0, s0 * std::cos(2 * phi), s0 * std::sin(2 * phi));
    const auto b = one(s0, s0 * std::cos(2 * phi + kPi), s0 * std::sin(2 * phi + kPi));
    const auto c = add_stokes(a, b);
    REQUIRE(std::abs(c.at(kS1, 0, 0, 0)) <= 1e-12 * s0);
    REQUIRE(std::abs(c.at(kS2, 0, 0, 0)) <= 1e-12 * s0);
  }
  check_stokes(scale_stokes(one(1, 0.5, -0.25), 2.0), 2, 1, -0.5);
}

TEST_CASE("physical validity flag") {
  CHECK(is_physically_valid(one(1, 0.6, 0.8)));
  CHECK_FALSE(is_physically_valid(one(1, 0.7, 0.8)));
  CHECK_FALSE(is_physically_valid(one(-1, 0, 0)));
}

TEST_CASE("mosaic layout") {
  RawPolarImage r({2, 2, 1});
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) {
      r.at(kI0, 0, y, x) = 1;
      r.at(kI45, 0, y, x) = 0.5;
      r.at(kI90, 0, y, x) = 0;
      r.at(kI135, 0, y, x) = 0.5;
    }
  }
  const auto m = mosaic(r);
  CHECK(m.samples.at(0, 0, 0, 0) == 0.0);
  CHECK(m.samples.at(0, 0, 0, 1) == 0.5);
  CHECK(m.samples.at(0, 0, 1, 0) == 0.5);
  CHECK(m.samples.at(0, 0, 1, 1) == 1.0);
  CHECK(mosaic_plane_at(0, 0) == kI90);
  CHECK(mosaic_plane_at(1, 1) == kI0);
  CHECK_THROWS_AS(mosaic(RawPolarImage({3, 2, 1})), StructuralError);
}

TEST_CASE("demosaic of a constant field is exact") {
  RawPolarImage r({8, 6, 3});
  for (int p = 0; p < 4; ++p) {
    for (int c = 0; c < 3; ++c) {
      for (double& v : r.plane(p, c)) v = 0.1 * (p + 1) + c;
    }
  }
  CHECK(demosaic(mosaic(r)) == r);
}

TEST_CASE("demosaic of a ramp") {
  // Interior pixels are exact; border pixels are off by at most one pixel step.
  const double ramps[][2] = {{0.01, 0.0}, {0.0, 0.01}, {0.01, 0.01}, {-0.03, 0.02}};
  for (const auto& g : ramps) {
    RawPolarImage r({16, 16, 1});
    for (int p = 0; p < 4; ++p) {
      for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) r.at(p, 0, y, x) = g[0] * x + g[1] * y + p;
      }
    }
    const auto back = demosaic(mosaic(r));
    double interior = 0, border = 0;
    for (int p = 0; p < 4; ++p) {
      for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
          const double e = std::abs(back.at(p, 0, y, x) - r.at(p, 0, y, x));
          double& worst = y > 0 && y < 15 && x > 0 && x < 15 ? interior : border;
          worst = std::max(worst, e);
        }
      }
    }
    CHECK(interior <= 1e-12);
    CHECK(border <= std::abs(g[0]) + std::abs(g[1]) + 1e-12);
  }
}

}  // TEST_SUITE
