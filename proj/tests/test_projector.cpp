#include <doctest.h>

#include "polatk/polar.hpp"
#include "polatk/projector.hpp"
#include "support.hpp"

using namespace polatk;
using polatk::test::kPi;

TEST_SUITE("projector") {

TEST_CASE("drive level to AoLP endpoints and closed form") {
  const auto m = ProjectorModel::uniform({4, 4, 3});
  CHECK(value_to_aolp(m, 0) == doctest::Approx(3 * kPi / 4));
  CHECK(value_to_aolp(m, 255) == doctest::Approx(kPi / 4));
  // 3pi/4 - (pi/2 - acos(sqrt((128/255)^2.2))), evaluated independently
  CHECK(value_to_aolp(m, 128) == doctest::Approx(1.8685691600010372).epsilon(1e-14));
  CHECK_THROWS_AS(value_to_aolp(m, -0.5), DomainError);
  CHECK_THROWS_AS(value_to_aolp(m, 255.5), DomainError);
}

TEST_CASE("AoLP is strictly decreasing with range [pi/4, 3pi/4]") {
  const auto m = ProjectorModel::uniform({1, 1, 1});
  double prev = value_to_aolp(m, 0);
  for (int v = 1; v <= 255; ++v) {
    const double a = value_to_aolp(m, v);
    REQUIRE(a < prev);
    REQUIRE(a >= kPi / 4 - 1e-15);
    REQUIRE(a <= 3 * kPi / 4);
    prev = a;
  }
}

TEST_CASE("constant patterns") {
  const auto m = ProjectorModel::uniform({3, 2, 3});
  auto s = project_pattern(m, constant_pattern(m, 255));
  for (int c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < 6; ++p) {
      CHECK(s.plane(kS0, c)[p] == 1.0);
      CHECK(s.plane(kS1, c)[p] == doctest::Approx(0.0));
      CHECK(s.plane(kS2, c)[p] == doctest::Approx(1.0));
    }
  }
  s = project_pattern(m, constant_pattern(m, 0));
  CHECK(s.at(kS1, 0, 0, 0) == doctest::Approx(0.0));
  CHECK(s.at(kS2, 0, 0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("emitted light is fully polarized at constant intensity for every pattern") {
  const auto m = ProjectorModel::uniform({16, 16, 3}, 0.7);
  Rng rng(4);
  ProjectionPattern a(m.dims()), checker(m.dims());
  for (auto& v : a.v) v = static_cast<std::uint8_t>(rng.next());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) checker.at(c, y, x) = (x + y) % 2 ? 255 : 0;
    }
  }
  const auto sa = project_pattern(m, a), sc = project_pattern(m, checker);
  const auto ca = cues_from_stokes(sa).cues;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < 256; ++p) {
      REQUIRE(sa.plane(kS0, c)[p] == 0.7);
      REQUIRE(sc.plane(kS0, c)[p] == 0.7);
      REQUIRE(ca.plane(kRho, c)[p] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("depolarization scales the polarized part only") {
  auto m = ProjectorModel::uniform({1, 1, 1});
  m.depolarization = 0.25;
  const auto s = project_pattern(m, constant_pattern(m, 0));
  CHECK(s.at(kS0, 0, 0, 0) == 1.0);
  CHECK(s.at(kS2, 0, 0, 0) == doctest::Approx(-0.75));
}

TEST_CASE("channel modes") {
  const auto m = ProjectorModel::uniform({2, 2, 3});
  auto s = channel_polarized_projection(m, ChannelMode::Neutral);
  for (int c = 0; c < 3; ++c) {
    CHECK(s.at(kS0, c, 1, 1) == 1.0);
    CHECK(s.at(kS1, c, 1, 1) == doctest::Approx(0.0));
    CHECK(s.at(kS2, c, 1, 1) == doctest::Approx(1.0));
  }
  s = channel_polarized_projection(m, ChannelMode::Red);
  CHECK(s.at(kS2, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(s.at(kS2, 1, 0, 0) == doctest::Approx(-1.0));
  CHECK(s.at(kS2, 2, 0, 0) == doctest::Approx(-1.0));
  for (auto name : kChannelModeNames) {
    const auto mode = parse_channel_mode(name);
    CHECK(channel_mode_name(mode) == name);
    const auto t = channel_polarized_projection(m, mode);
    for (int c = 1; c < 3; ++c) CHECK(t.plane(kS0, c)[0] == t.plane(kS0, 0)[0]);
    const auto pat = channel_mode_pattern(m, mode);
    const auto named = channel_mode_mask(mode);
    for (int c = 0; c < 3; ++c) CHECK(pat.at(c, 1, 0) == (named[c] ? 255 : 0));
  }
  const auto cyan = channel_mode_mask(ChannelMode::Cyan);
  CHECK_FALSE(cyan[0]);
  CHECK(cyan[1]);
  CHECK(cyan[2]);
  CHECK_THROWS_AS(parse_channel_mode("purple"), ValidationError);
}

TEST_CASE("pattern raster conversion") {
  ProjectionPattern p({3, 2, 3});
  for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = static_cast<std::uint8_t>(i * 13);
  CHECK(pattern_from_raster(to_raster(p)) == p);
}

}  // TEST_SUITE
