#include <doctest.h>

#include <algorithm>

#include "polatk/metrics.hpp"
#include "polatk/pipeline.hpp"
#include "polatk/polar.hpp"
#include "polatk/surrogate.hpp"
#include "support.hpp"

using namespace polatk;
using polatk::test::kPi;

namespace {

StokesImage constant(Dims d, double s0, double rho, double phi) {
  StokesImage s(d);
  for (int c = 0; c < d.channels; ++c) {
    std::ranges::fill(s.plane(kS0, c), s0);
    std::ranges::fill(s.plane(kS1, c), s0 * rho * std::cos(2 * phi));
    std::ranges::fill(s.plane(kS2, c), s0 * rho * std::sin(2 * phi));
  }
  return s;
}

SurrogateSegModel random_model(int channels, std::uint64_t seed, double scale = 0.4) {
  SurrogateSegModel m(channels);
  Rng rng(seed);
  auto p = m.flatten_parameters();
  for (double& x : p) x = rng.uniform(-scale, scale);
  m.assign_parameters(p);
  for (double& x : m.mu) x = rng.uniform(-0.2, 0.2);
  for (double& x : m.sd) x = rng.uniform(0.5, 1.5);
  return m;
}

double weighted(const std::vector<double>& prob, const std::vector<double>& u) {
  double s = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) s += prob[i] * u[i];
  return s;
}

// |a - n| <= tol * max(|a|, |n|), with an absolute floor for coordinates whose
// gradient is negligible next to the largest one.
bool grad_close(double a, double n, double scale, double tol = 1e-4) {
  return std::abs(a - n) <= tol * std::max({std::abs(a), std::abs(n), 1e-6 * scale});
}

double seg_iou(const SurrogateSegModel& m, const TrainSample& s) {
  return iou(threshold_mask(seg_forward(m, s.features), s.features.width, s.features.height), s.label);
}

}  // namespace

TEST_SUITE("surrogate") {

TEST_CASE("feature examples") {
  auto f = features_from_stokes(constant({3, 3, 1}, 2.0, 0.0, 0.0));
  CHECK(f.plane(0)[4] == 1.0);
  CHECK(f.plane(1)[4] == 0.0);
  CHECK(f.plane(2)[4] == 0.0);
  CHECK(f.plane(3)[4] == 0.0);
  f = features_from_stokes(constant({1, 1, 1}, 1.0, 1.0, 0.0));
  CHECK(f.plane(1)[0] == doctest::Approx(1.0));
  CHECK(f.plane(2)[0] == doctest::Approx(1.0));
  CHECK(f.plane(3)[0] == doctest::Approx(0.0));
  f = features_from_stokes(constant({1, 1, 1}, 1.0, 0.5, kPi / 4));
  CHECK(f.plane(1)[0] == doctest::Approx(0.5));
  CHECK(f.plane(2)[0] == doctest::Approx(0.0));
  CHECK(f.plane(3)[0] == doctest::Approx(0.5));
  f = features_from_stokes(StokesImage({4, 4, 3}));
  for (double v : f.data) CHECK(v == 0.0);
}

TEST_CASE("features depend only on 2 phi") {
  const auto a = features_from_stokes(constant({2, 2, 3}, 1.0, 0.6, 0.3));
  const auto b = features_from_stokes(constant({2, 2, 3}, 1.0, 0.6, 0.3 + kPi));
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]));
}

TEST_CASE("feature backward matches finite differences") {
  const Dims d{6, 5, 3};
  const auto s = test::random_stokes(d, 31, 0.9);
  FeatureStack u(d.width, d.height, 12);
  Rng rng(32);
  for (double& x : u.data) x = rng.uniform(-1, 1);
  auto loss = [&](const StokesImage& x) {
    const auto f = features_from_stokes(x);
    double acc = 0;
    for (std::size_t i = 0; i < f.data.size(); ++i) acc += f.data[i] * u.data[i];
    return acc;
  };
  const auto g = features_backward(s, u);
  double scale = 0;
  for (double v : g.data()) scale = std::max(scale, std::abs(v));
  const double h = 1e-6;
  for (std::size_t i = 0; i < s.data().size(); ++i) {
    StokesImage a = s, b = s;
    a.data()[i] += h;
    b.data()[i] -= h;
    const double num = (loss(a) - loss(b)) / (2 * h);
    CAPTURE(i);
    REQUIRE(grad_close(g.data()[i], num, scale));
  }
}

TEST_CASE("zero-weight model predicts one half") {
  const SurrogateSegModel m(3);
  const auto p = seg_forward(m, features_from_stokes(test::random_stokes({9, 7, 3}, 1)));
  for (double v : p) CHECK(v == 0.5);
}

TEST_CASE("outputs lie strictly inside (0, 1)") {
  const auto m = random_model(3, 5, 3.0);
  const auto p = seg_forward(m, features_from_stokes(test::random_stokes({16, 16, 3}, 6)));
  for (double v : p) {
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("identical input rows give identical output rows away from borders") {
  const auto m = random_model(1, 7);
  FeatureStack g(10, 12, 4);
  Rng rng(8);
  std::vector<double> row(40);
  for (double& v : row) v = rng.uniform();
  for (int k = 0; k < 4; ++k) {
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 10; ++x) g.plane(k)[y * 10 + x] = row[k * 10 + x];
    }
  }
  // three 3x3 stages see three rows on each side
  const auto p = seg_forward(m, g);
  for (int y = 3; y < 9; ++y) {
    for (int x = 0; x < 10; ++x) CHECK(p[y * 10 + x] == doctest::Approx(p[3 * 10 + x]).epsilon(1e-14));
  }
  CHECK(p[0] != doctest::Approx(p[30]).epsilon(1e-14));
}

TEST_CASE("network gradient w.r.t. features matches finite differences") {
  const auto m = random_model(3, 11);
  const Dims d{7, 6, 3};
  auto f = features_from_stokes(test::random_stokes(d, 12));
  Rng rng(13);
  std::vector<double> u(d.pixels());
  for (double& x : u) x = rng.uniform(-1, 1);
  SegTrace t;
  seg_forward(m, f, &t);
  std::vector<double> pg;
  const auto g = seg_grad(m, t, u, &pg);
  double scale = 0;
  for (double v : g.data) scale = std::max(scale, std::abs(v));
  const double h = 1e-3;
  int checked = 0;
  for (std::size_t i = 0; i < f.data.size(); i += 3, ++checked) {
    auto a = f, b = f;
    a.data[i] += h;
    b.data[i] -= h;
    const double num = (weighted(seg_forward(m, a), u) - weighted(seg_forward(m, b), u)) / (2 * h);
    CAPTURE(i);
    REQUIRE(grad_close(g.data[i], num, scale));
  }
  CHECK(checked >= 100);

  // parameter gradient on 100 random coordinates
  const auto p0 = m.flatten_parameters();
  double pscale = 0;
  for (double v : pg) pscale = std::max(pscale, std::abs(v));
  for (int n = 0; n < 100; ++n) {
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p0.size()) - 1));
    auto ma = m, mb = m;
    auto pa = p0, pb = p0;
    pa[i] += h;
    pb[i] -= h;
    ma.assign_parameters(pa);
    mb.assign_parameters(pb);
    const double num = (weighted(seg_forward(ma, f), u) - weighted(seg_forward(mb, f), u)) / (2 * h);
    CAPTURE(i);
    REQUIRE(grad_close(pg[i], num, pscale));
  }
}

TEST_CASE("shape mismatch is rejected") {
  const SurrogateSegModel m(3);
  CHECK_THROWS_AS(seg_forward(m, FeatureStack(4, 4, 4)), StructuralError);
}

TEST_CASE("training is deterministic and parallel mode matches") {
  auto samples = make_training_set(3, 50, {24, 24, 3});
  TrainConfig tc;
  tc.max_iters = 8;
  tc.seed = 3;
  const auto a = seg_train(samples, 3, tc);
  const auto b = seg_train(samples, 3, tc);
  CHECK(a.model == b.model);
  CHECK(a.loss_history == b.loss_history);
  tc.parallel = true;
  tc.threads = 3;
  const auto c = seg_train(samples, 3, tc);
  CHECK(c.model == a.model);
  CHECK(c.loss_history == a.loss_history);
  tc.parallel = false;
  tc.seed = 4;
  CHECK_FALSE(seg_train(samples, 3, tc).model == a.model);
}

TEST_CASE("training loss decreases and divergence is reported") {
  auto samples = make_training_set(2, 60, {24, 24, 3});
  TrainConfig tc;
  tc.max_iters = 30;
  const auto r = seg_train(samples, 3, tc);
  CHECK(r.loss_history.back() < r.loss_history.front());
  CHECK(seg_bce(r.model, samples) < r.loss_history.front());

  samples[0].features.data[5] = std::nan("");
  CHECK_THROWS_AS(seg_train(samples, 3, tc), NumericError);
}

TEST_CASE("single-scene overfit") {
  const auto samples = make_training_set(1, 70, {32, 32, 3});
  TrainConfig tc;
  tc.max_iters = 150;
  const auto r = seg_train(samples, 3, tc);
  CHECK(seg_iou(r.model, samples[0]) >= 0.98);
}

TEST_CASE("trained model is at least as good as the best DoLP threshold") {
  const Dims d{32, 32, 3};
  const auto train = make_training_set(8, 200, d);
  const auto held = make_training_set(4, 300, d);
  TrainConfig tc;
  const auto r = seg_train(train, 3, tc);

  // oracle: best single threshold on channel-mean DoLP, tuned on the training set
  auto mean_rho = [](const TrainSample& s) {
    std::vector<double> m(s.features.pixels());
    for (int c = 0; c < 3; ++c) {
      auto rho = s.features.plane(3 + c);  // DoLP planes sit at C + c
      for (std::size_t p = 0; p < m.size(); ++p) m[p] += rho[p] / 3.0;
    }
    return m;
  };
  auto mean_iou_at = [&](const std::vector<TrainSample>& set, double thr) {
    double acc = 0;
    for (const auto& s : set) acc += iou(threshold_mask(mean_rho(s), s.features.width, s.features.height, thr), s.label);
    return acc / static_cast<double>(set.size());
  };
  double best_thr = 0, best = -1;
  for (int i = 1; i < 400; ++i) {
    const double thr = i * 0.00025;
    const double v = mean_iou_at(train, thr);
    if (v > best) {
      best = v;
      best_thr = thr;
    }
  }
  const double baseline = mean_iou_at(held, best_thr);
  double learned = 0;
  for (const auto& s : held) learned += seg_iou(r.model, s);
  learned /= static_cast<double>(held.size());
  MESSAGE("held-out IoU learned " << learned << " vs threshold " << baseline);
  CHECK(learned >= baseline - 0.02);
}

}  // TEST_SUITE
