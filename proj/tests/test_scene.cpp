#include <doctest.h>

#include <algorithm>

#include "polatk/degrade.hpp"
#include "polatk/polar.hpp"
#include "polatk/scene.hpp"
#include "support.hpp"

using namespace polatk;
using polatk::test::kPi;

namespace {

// 1x1 scene with the given material and an ambient-free environment.
SceneModel unit_scene(double ks, double spec, double albedo, double dd = 0.0, double da = 0.0) {
  const Dims d{1, 1, 1};
  SceneModel s{d, Field(d), Field(d), {spec}, Field(d), Field(d), StokesImage(d), Mask(1, 1)};
  s.k_s.at(0, 0, 0, 0) = ks;
  s.albedo.at(0, 0, 0, 0) = albedo;
  s.diffuse_dolp.at(0, 0, 0, 0) = dd;
  s.diffuse_aolp.at(0, 0, 0, 0) = da;
  return s;
}

StokesImage beam(double s0, double s1, double s2, Dims d = {1, 1, 1}) {
  StokesImage b(d);
  for (int c = 0; c < d.channels; ++c) {
    std::ranges::fill(b.plane(kS0, c), s0);
    std::ranges::fill(b.plane(kS1, c), s1);
    std::ranges::fill(b.plane(kS2, c), s2);
  }
  return b;
}

void check1(const StokesImage& s, double s0, double s1, double s2) {
  CHECK(s.at(kS0, 0, 0, 0) == doctest::Approx(s0));
  CHECK(s.at(kS1, 0, 0, 0) == doctest::Approx(s1));
  CHECK(s.at(kS2, 0, 0, 0) == doctest::Approx(s2));
}

double max_abs_diff(const StokesImage& a, const StokesImage& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST_SUITE("scene") {

TEST_CASE("reflect examples") {
  check1(reflect(unit_scene(1, 1, 0), beam(1, 0, 1)), 1, 0, -1);
  check1(reflect(unit_scene(0, 1, 0.5), beam(1, 0, 1)), 0.5, 0, 0);
  const auto mixed = reflect(unit_scene(0.5, 1, 1), beam(1, 0, 1));
  check1(mixed, 1, 0, -0.5);
  CHECK(cues_from_stokes(mixed).cues.at(kRho, 0, 0, 0) == doctest::Approx(0.5));
  // intrinsic diffuse polarization at AoLP 0
  check1(reflect(unit_scene(0, 1, 1, 0.2, 0.0), beam(2, 0, 0)), 2, 0.4, 0);
  CHECK_THROWS_AS(reflect(unit_scene(0, 1, 1), beam(1, 0, 0, {2, 1, 1})), StructuralError);
}

TEST_CASE("reflect is linear and preserves validity") {
  SceneModel s = gen_scene(4, {24, 20, 3});
  Rng rng(8);
  for (double& v : s.diffuse_dolp.data()) v = rng.uniform(0, 0.4);
  for (double& v : s.diffuse_aolp.data()) v = rng.uniform(-kPi, kPi);
  const auto x = test::random_stokes(s.dims, 1), y = test::random_stokes(s.dims, 2);
  const auto lhs = reflect(s, add_stokes(scale_stokes(x, 0.7), scale_stokes(y, 1.9)));
  const auto rhs = add_stokes(scale_stokes(reflect(s, x), 0.7), scale_stokes(reflect(s, y), 1.9));
  for (std::size_t i = 0; i < lhs.data().size(); ++i) REQUIRE(test::rel_err(lhs.data()[i], rhs.data()[i], 1e-9) <= 1e-9);
  CHECK(is_physically_valid(reflect(s, x)));
}

TEST_CASE("candidate capture basics") {
  const SceneModel s = gen_scene(5, {20, 18, 3});
  const auto proj = ProjectorModel::uniform(s.dims);
  const auto cs = capture_candidates(s, proj, uniform_values(9));
  CHECK(cs.k() == 9);
  CHECK(cs.values == std::vector<int>{7, 38, 69, 100, 131, 162, 193, 224, 255});
  CHECK(cs.background == render_background(s));
  CHECK_THROWS_AS(capture_candidates(s, proj, {0, 10, 30}), ValidationError);
  CHECK_THROWS_AS(capture_candidates(s, proj, {5}), ValidationError);
  CHECK_THROWS_AS(uniform_values(1), ValidationError);
}

TEST_CASE("dark projector leaves only the ambient view") {
  const SceneModel s = gen_scene(6, {16, 16, 3});
  const auto cs = capture_candidates(s, ProjectorModel::uniform(s.dims, 0.0), uniform_values(5));
  for (const auto& c : cs.candidates) CHECK(c == cs.background);
}

TEST_CASE("pure specular capture mirrors the projection") {
  const Dims d{4, 4, 1};
  SceneModel s{d, Field(d), Field(d), {1.0}, Field(d), Field(d), beam(1.3, 0.05, -0.02, d), Mask(4, 4)};
  std::ranges::fill(s.k_s.data(), 1.0);
  const auto proj = ProjectorModel::uniform(d);
  const std::vector<int> values{0, 255};
  const auto cs = capture_candidates(s, proj, values);
  for (int i = 0; i < 2; ++i) {
    const auto emitted = project_pattern(proj, constant_pattern(proj, static_cast<std::uint8_t>(values[i])));
    const auto diff = subtract_stokes(cs.candidates[i], cs.background);
    for (std::size_t p = 0; p < d.pixels(); ++p) {
      CHECK(diff.plane(kS0, 0)[p] == doctest::Approx(emitted.plane(kS0, 0)[p]));
      CHECK(diff.plane(kS1, 0)[p] == doctest::Approx(emitted.plane(kS1, 0)[p]));
      CHECK(diff.plane(kS2, 0)[p] == doctest::Approx(-emitted.plane(kS2, 0)[p]));
    }
  }
}

TEST_CASE("candidate differences do not depend on ambient") {
  SceneModel a = gen_scene(7, {16, 16, 3});
  SceneModel b = a;
  b.ambient = scale_stokes(a.ambient, 2.5);
  const auto proj = ProjectorModel::uniform(a.dims);
  const auto ca = capture_candidates(a, proj, uniform_values(4));
  const auto cb = capture_candidates(b, proj, uniform_values(4));
  for (int i = 0; i < 4; ++i) {
    CHECK(max_abs_diff(subtract_stokes(ca.candidates[i], ca.background),
                       subtract_stokes(cb.candidates[i], cb.background)) <= 1e-12);
  }
}

TEST_CASE("sensor path is deterministic and close to the ideal capture") {
  const SceneModel s = gen_scene(8, {16, 16, 3});
  const auto proj = ProjectorModel::uniform(s.dims);
  SensorOptions opt{true, 0.002, 12, 8.0, 99};
  const auto a = capture_candidates(s, proj, uniform_values(3), opt);
  const auto b = capture_candidates(s, proj, uniform_values(3), opt);
  const auto ideal = capture_candidates(s, proj, uniform_values(3));
  CHECK(a.candidates == b.candidates);
  CHECK(a.background == b.background);
  CHECK(max_abs_diff(a.candidates[1], ideal.candidates[1]) < 0.05);
  CHECK_FALSE(a.candidates[1] == ideal.candidates[1]);
}

TEST_CASE("glass fraction stays in range") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const double f = glass_fraction(gen_scene(seed, {64, 48, 1}).glass_mask);
    CAPTURE(seed);
    REQUIRE(f >= 0.1);
    REQUIRE(f <= 0.6);
  }
  SceneParams p;
  p.glass_fraction_min = 0.99;
  p.max_layout_draws = 2;
  CHECK_THROWS_AS(gen_scene(0, {32, 32, 1}, p), ValidationError);
  p = {};
  p.glass_fraction_min = 0.7;
  p.glass_fraction_max = 0.2;
  CHECK_THROWS_AS(gen_scene(0, {32, 32, 1}, p), ValidationError);
}

TEST_CASE("scene generation") {
  const auto a = gen_scene(0, {128, 128, 3});
  const auto b = gen_scene(0, {128, 128, 3});
  CHECK(a.glass_mask == b.glass_mask);
  CHECK(a.k_s == b.k_s);
  CHECK(a.ambient == b.ambient);
  const double f = glass_fraction(a.glass_mask);
  CHECK(f >= 0.1);
  CHECK(f <= 0.6);
  CHECK_FALSE(gen_scene(1, {128, 128, 3}).glass_mask == a.glass_mask);

  // glass is more specular than background everywhere
  for (std::size_t p = 0; p < a.dims.pixels(); ++p) {
    if (a.glass_mask.v[p]) REQUIRE(a.k_s.plane(0, 0)[p] >= 0.6 - 1e-6);
    else REQUIRE(a.k_s.plane(0, 0)[p] <= 0.15 + 1e-6);
  }
  const auto amb = cues_from_stokes(a.ambient).cues;
  CHECK(amb.at(kRho, 0, 0, 0) <= 0.1 + 1e-6);

  SceneParams none;
  none.min_regions = none.max_regions = 0;
  none.glass_fraction_min = 0.0;
  const auto empty = gen_scene(3, {32, 32, 1}, none);
  CHECK(glass_fraction(empty.glass_mask) == 0.0);

  CHECK_THROWS_AS(gen_scene(0, {8, 64, 3}), ValidationError);
  SceneParams bad;
  bad.glass_ks_max = 1.5;
  CHECK_THROWS_AS(gen_scene(0, {32, 32, 3}, bad), ValidationError);
}

TEST_CASE("cc benchmark scene") {
  const auto s = gen_cc_bench_scene({64, 64, 3});
  CHECK(glass_fraction(s.glass_mask) == doctest::Approx(0.25));
  CHECK_THROWS_AS(gen_cc_bench_scene({64, 64, 1}), StructuralError);
}

}  // TEST_SUITE

TEST_SUITE("degrade") {

TEST_CASE("zero sigmas are a bitwise identity") {
  const auto s = test::random_stokes({13, 9, 3}, 3);
  CHECK(degrade(s, 0.0, 0.0, 42) == s);
}

TEST_CASE("gaussian kernel") {
  CHECK(gaussian_kernel(0.0) == std::vector<double>{1.0});
  const auto k = gaussian_kernel(1.0);
  CHECK(k.size() == 7);
  double sum = 0;
  for (double v : k) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == k[k.size() - 1 - i]);
  CHECK(k[3] / k[2] == doctest::Approx(std::exp(0.5)));
}

TEST_CASE("blur of a constant image is the constant") {
  const auto s = beam(1.5, 0.2, -0.3, {17, 11, 3});
  const auto b = gaussian_blur(s, 2.0);
  CHECK(max_abs_diff(s, b) <= 1e-14);
}

TEST_CASE("blur preserves the mean of an interior impulse") {
  StokesImage s({21, 21, 1});
  s.at(kS0, 0, 10, 10) = 1.0;
  const auto b = gaussian_blur(s, 1.5);
  double sum = 0;
  for (double v : b.plane(kS0, 0)) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.at(kS0, 0, 10, 9) == doctest::Approx(b.at(kS0, 0, 9, 10)).epsilon(1e-15));
}

TEST_CASE("noise statistics and determinism") {
  const auto s = beam(1.0, 0.0, 0.0, {128, 128, 1});
  const auto a = degrade(s, 0.01, 0.0, 5);
  CHECK(a == degrade(s, 0.01, 0.0, 5));
  CHECK_FALSE(a == degrade(s, 0.01, 0.0, 6));
  double sum = 0, sq = 0;
  auto p = a.plane(kS0, 0);
  for (double v : p) {
    sum += v - 1.0;
    sq += (v - 1.0) * (v - 1.0);
  }
  const double n = static_cast<double>(p.size());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  CHECK(sd >= 0.008);
  CHECK(sd <= 0.012);
  CHECK(std::abs(sum / n) < 3 * 0.01 / std::sqrt(n));
}

}  // TEST_SUITE
