#include "polatk/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "polatk/polar.hpp"
#include "polatk/raster_io.hpp"
#include "polatk/rng.hpp"
#include "polatk/simd/kernels.hpp"

namespace polatk {

FeatureStack features_from_stokes(const StokesImage& stokes) {
  const int C = stokes.channels();
  FeatureStack f(stokes.width(), stokes.height(), 4 * C);
  const std::size_t n = f.pixels();
  double m = 0.0;
  for (int c = 0; c < C; ++c) {
    for (double v : stokes.plane(kS0, c)) m = std::max(m, v);
  }
  const double inv_m = m > kFeatureDarkS0 ? 1.0 / m : 0.0;
  for (int c = 0; c < C; ++c) {
    auto s0 = stokes.plane(kS0, c);
    auto s1 = stokes.plane(kS1, c);
    auto s2 = stokes.plane(kS2, c);
    auto f0 = f.plane(0 * C + c);
    auto f1 = f.plane(1 * C + c);
    auto f2 = f.plane(2 * C + c);
    auto f3 = f.plane(3 * C + c);
    for (std::size_t p = 0; p < n; ++p) {
      if (!(s0[p] > kFeatureDarkS0)) continue;  // dark pixel: all features 0
      f0[p] = s0[p] * inv_m;
      f1[p] = std::sqrt(s1[p] * s1[p] + s2[p] * s2[p]) / s0[p];
      f2[p] = s1[p] / s0[p];
      f3[p] = s2[p] / s0[p];
    }
  }
  return f;
}

StokesImage features_backward(const StokesImage& stokes, const FeatureStack& grad) {
  const int C = stokes.channels();
  if (grad.count != 4 * C || grad.width != stokes.width() || grad.height != stokes.height()) {
    throw StructuralError("features_backward: gradient shape does not match image");
  }
  StokesImage out(stokes.dims());
  const std::size_t n = grad.pixels();
  double m = 0.0;
  int arg_c = -1;
  std::size_t arg_p = 0;
  for (int c = 0; c < C; ++c) {
    auto s0 = stokes.plane(kS0, c);
    for (std::size_t p = 0; p < n; ++p) {
      if (s0[p] > m) {
        m = s0[p];
        arg_c = c;
        arg_p = p;
      }
    }
  }
  const bool lit = m > kFeatureDarkS0;
  double dm = 0.0;
  for (int c = 0; c < C; ++c) {
    auto s0 = stokes.plane(kS0, c);
    auto s1 = stokes.plane(kS1, c);
    auto s2 = stokes.plane(kS2, c);
    auto g0 = grad.plane(0 * C + c);
    auto g1 = grad.plane(1 * C + c);
    auto g2 = grad.plane(2 * C + c);
    auto g3 = grad.plane(3 * C + c);
    auto d0 = out.plane(kS0, c);
    auto d1 = out.plane(kS1, c);
    auto d2 = out.plane(kS2, c);
    for (std::size_t p = 0; p < n; ++p) {
      if (!(s0[p] > kFeatureDarkS0)) continue;
      const double inv = 1.0 / s0[p];
      const double mag = std::sqrt(s1[p] * s1[p] + s2[p] * s2[p]);
      const double rho = mag * inv;
      double ds0 = -(g1[p] * rho + g2[p] * s1[p] * inv + g3[p] * s2[p] * inv) * inv;
      double ds1 = g2[p] * inv;
      double ds2 = g3[p] * inv;
      if (mag > 0.0) {
        ds1 += g1[p] * s1[p] / (mag * s0[p]);
        ds2 += g1[p] * s2[p] / (mag * s0[p]);
      }
      if (lit) {
        ds0 += g0[p] / m;
        dm -= g0[p] * s0[p] / (m * m);
      }
      d0[p] = ds0;
      d1[p] = ds1;
      d2[p] = ds2;
    }
  }
  if (lit && arg_c >= 0) out.plane(kS0, arg_c)[arg_p] += dm;
  return out;
}

SurrogateSegModel::SurrogateSegModel(int color_channels) : channels_(color_channels) {
  if (color_channels <= 0) throw StructuralError("surrogate: channel count must be positive");
  const int in = input_features();
  mu.assign(static_cast<std::size_t>(in), 0.0);
  sd.assign(static_cast<std::size_t>(in), 1.0);
  const int widths[4] = {in, kHidden, kHidden, 1};
  for (int l = 0; l < 3; ++l) {
    layers[l].cin = widths[l];
    layers[l].cout = widths[l + 1];
    layers[l].w.assign(static_cast<std::size_t>(widths[l] * widths[l + 1] * 9), 0.0);
    layers[l].b.assign(static_cast<std::size_t>(widths[l + 1]), 0.0);
  }
}

std::size_t SurrogateSegModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

std::vector<double> SurrogateSegModel::flatten_parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers) {
    p.insert(p.end(), l.w.begin(), l.w.end());
    p.insert(p.end(), l.b.begin(), l.b.end());
  }
  return p;
}

void SurrogateSegModel::assign_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw StructuralError("surrogate: parameter vector length");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (double& v : l.w) v = p[k++];
    for (double& v : l.b) v = p[k++];
  }
}

std::vector<float> SurrogateSegModel::to_floats() const {
  std::vector<float> v;
  for (double x : mu) v.push_back(static_cast<float>(x));
  for (double x : sd) v.push_back(static_cast<float>(x));
  for (double x : flatten_parameters()) v.push_back(static_cast<float>(x));
  return v;
}

SurrogateSegModel SurrogateSegModel::from_floats(int color_channels, std::span<const float> v) {
  SurrogateSegModel m(color_channels);
  const std::size_t in = static_cast<std::size_t>(m.input_features());
  if (v.size() != 2 * in + m.parameter_count()) throw IoError("surrogate: weight vector has the wrong length");
  for (std::size_t i = 0; i < in; ++i) {
    m.mu[i] = v[i];
    m.sd[i] = v[in + i];
    if (!(m.sd[i] > 0.0)) throw IoError("surrogate: nonpositive standardization scale");
  }
  std::vector<double> p(v.begin() + static_cast<std::ptrdiff_t>(2 * in), v.end());
  m.assign_parameters(p);
  return m;
}

void SurrogateSegModel::round_to_float() {
  auto r = [](double& x) { x = static_cast<float>(x); };
  std::ranges::for_each(mu, r);
  std::ranges::for_each(sd, r);
  for (auto& l : layers) {
    std::ranges::for_each(l.w, r);
    std::ranges::for_each(l.b, r);
  }
}

namespace {

// Planes are stored with a one-pixel zero border so each 3x3 tap is a single
// contiguous axpy over the interior span [R + 1, R + 1 + span).
struct Pad {
  int w, h;
  std::size_t row() const { return static_cast<std::size_t>(w) + 2; }
  std::size_t plane() const { return row() * (static_cast<std::size_t>(h) + 2); }
  std::size_t origin() const { return row() + 1; }
  std::size_t span() const { return (static_cast<std::size_t>(h) - 1) * row() + static_cast<std::size_t>(w); }
  std::size_t tap(int ky, int kx) const { return static_cast<std::size_t>(ky) * row() + static_cast<std::size_t>(kx); }

  void zero_border(double* p) const {
    const std::size_t r = row();
    std::fill_n(p, r, 0.0);
    std::fill_n(p + (static_cast<std::size_t>(h) + 1) * r, r, 0.0);
    for (int y = 1; y <= h; ++y) {
      p[y * r] = 0.0;
      p[y * r + w + 1] = 0.0;
    }
  }
};

void conv_forward(const Pad& g, const ConvLayer& L, const double* in, double* out) {
  const auto& k = simd::kernels();
  const std::size_t P = g.plane();
  for (int o = 0; o < L.cout; ++o) {
    double* dst = out + o * P;
    std::fill_n(dst, P, 0.0);
    std::fill_n(dst + g.origin(), g.span(), L.b[static_cast<std::size_t>(o)]);
    for (int i = 0; i < L.cin; ++i) {
      const double* src = in + i * P;
      const double* w = L.w.data() + (static_cast<std::size_t>(o) * L.cin + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = w[ky * 3 + kx];
          if (wv != 0.0) k.axpy(wv, src + g.tap(ky, kx), dst + g.origin(), g.span());
        }
      }
    }
    g.zero_border(dst);
  }
}

// dz: padded upstream gradient with zero border. Accumulates weight and bias
// gradients into gw/gb when non-null and writes the padded input gradient
// (border zeroed) into din when non-null.
void conv_backward(const Pad& g, const ConvLayer& L, const double* in, const double* dz, double* gw, double* gb,
                   double* din) {
  const auto& k = simd::kernels();
  const std::size_t P = g.plane();
  if (gw != nullptr) {
    for (int o = 0; o < L.cout; ++o) {
      const double* d = dz + o * P + g.origin();
      for (int i = 0; i < L.cin; ++i) {
        const double* src = in + i * P;
        double* w = gw + (static_cast<std::size_t>(o) * L.cin + i) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) w[ky * 3 + kx] += k.dot(d, src + g.tap(ky, kx), g.span());
        }
      }
      double s = 0.0;
      for (std::size_t q = 0; q < g.span(); ++q) s += d[q];
      gb[o] += s;
    }
  }
  if (din != nullptr) {
    std::fill_n(din, P * static_cast<std::size_t>(L.cin), 0.0);
    for (int i = 0; i < L.cin; ++i) {
      double* dst = din + i * P;
      for (int o = 0; o < L.cout; ++o) {
        const double* d = dz + o * P + g.origin();
        const double* w = L.w.data() + (static_cast<std::size_t>(o) * L.cin + i) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const double wv = w[ky * 3 + kx];
            if (wv != 0.0) k.axpy(wv, d, dst + g.tap(ky, kx), g.span());
          }
        }
      }
      g.zero_border(dst);
    }
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_features(const SurrogateSegModel& model, const FeatureStack& f) {
  if (f.count != model.input_features()) throw StructuralError("surrogate: feature count does not match model");
  if (f.width <= 0 || f.height <= 0 || f.data.size() != f.pixels() * static_cast<std::size_t>(f.count)) {
    throw StructuralError("surrogate: malformed feature stack");
  }
}

// Forward pass keeping the final logits as well.
std::vector<double> forward_impl(const SurrogateSegModel& model, const FeatureStack& f, SegTrace& t,
                                 std::vector<double>* logits) {
  check_features(model, f);
  const Pad g{f.width, f.height};
  const std::size_t P = g.plane();
  t.width = f.width;
  t.height = f.height;
  t.a0.assign(P * static_cast<std::size_t>(f.count), 0.0);
  for (int i = 0; i < f.count; ++i) {
    auto src = f.plane(i);
    double* dst = t.a0.data() + i * P;
    const double mu = model.mu[static_cast<std::size_t>(i)];
    const double inv = 1.0 / model.sd[static_cast<std::size_t>(i)];
    for (int y = 0; y < f.height; ++y) {
      for (int x = 0; x < f.width; ++x) {
        dst[(y + 1) * g.row() + x + 1] = (src[static_cast<std::size_t>(y) * f.width + x] - mu) * inv;
      }
    }
  }
  t.a1.resize(P * SurrogateSegModel::kHidden);
  t.a2.resize(P * SurrogateSegModel::kHidden);
  conv_forward(g, model.layers[0], t.a0.data(), t.a1.data());
  for (double& v : t.a1) v = std::tanh(v);
  conv_forward(g, model.layers[1], t.a1.data(), t.a2.data());
  for (double& v : t.a2) v = std::tanh(v);
  std::vector<double> z3(P);
  conv_forward(g, model.layers[2], t.a2.data(), z3.data());
  t.prob.resize(f.pixels());
  if (logits != nullptr) logits->resize(f.pixels());
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      const double z = z3[(y + 1) * g.row() + x + 1];
      const std::size_t q = static_cast<std::size_t>(y) * f.width + x;
      t.prob[q] = sigmoid(z);
      if (logits != nullptr) (*logits)[q] = z;
    }
  }
  return t.prob;
}

}  // namespace

std::vector<double> seg_forward(const SurrogateSegModel& model, const FeatureStack& features, SegTrace* trace) {
  SegTrace local;
  return forward_impl(model, features, trace != nullptr ? *trace : local, nullptr);
}

FeatureStack seg_grad_logit(const SurrogateSegModel& model, const SegTrace& t, std::span<const double> dlogit,
                            std::vector<double>* param_grad) {
  const Pad g{t.width, t.height};
  const std::size_t P = g.plane();
  const std::size_t n = static_cast<std::size_t>(t.width) * t.height;
  if (dlogit.size() != n) throw StructuralError("surrogate: upstream gradient size");
  const int in = model.input_features();
  if (t.a0.size() != P * static_cast<std::size_t>(in)) throw StructuralError("surrogate: trace does not match model");

  std::vector<double> pg;
  double* gw[3] = {nullptr, nullptr, nullptr};
  double* gb[3] = {nullptr, nullptr, nullptr};
  if (param_grad != nullptr) {
    param_grad->assign(model.parameter_count(), 0.0);
    double* p = param_grad->data();
    for (int l = 0; l < 3; ++l) {
      gw[l] = p;
      p += model.layers[l].w.size();
      gb[l] = p;
      p += model.layers[l].b.size();
    }
  }

  std::vector<double> dz3(P, 0.0);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) dz3[(y + 1) * g.row() + x + 1] = dlogit[static_cast<std::size_t>(y) * t.width + x];
  }
  const std::size_t hidden = P * SurrogateSegModel::kHidden;
  std::vector<double> d2(hidden), d1(hidden), d0(P * static_cast<std::size_t>(in));
  conv_backward(g, model.layers[2], t.a2.data(), dz3.data(), gw[2], gb[2], d2.data());
  for (std::size_t q = 0; q < hidden; ++q) d2[q] *= 1.0 - t.a2[q] * t.a2[q];
  conv_backward(g, model.layers[1], t.a1.data(), d2.data(), gw[1], gb[1], d1.data());
  for (std::size_t q = 0; q < hidden; ++q) d1[q] *= 1.0 - t.a1[q] * t.a1[q];
  conv_backward(g, model.layers[0], t.a0.data(), d1.data(), gw[0], gb[0], d0.data());

  FeatureStack out(t.width, t.height, in);
  for (int i = 0; i < in; ++i) {
    const double inv = 1.0 / model.sd[static_cast<std::size_t>(i)];
    auto dst = out.plane(i);
    const double* src = d0.data() + i * P;
    for (int y = 0; y < t.height; ++y) {
      for (int x = 0; x < t.width; ++x) dst[static_cast<std::size_t>(y) * t.width + x] = src[(y + 1) * g.row() + x + 1] * inv;
    }
  }
  return out;
}

FeatureStack seg_grad(const SurrogateSegModel& model, const SegTrace& trace, std::span<const double> upstream,
                      std::vector<double>* param_grad) {
  if (upstream.size() != trace.prob.size()) throw StructuralError("surrogate: upstream gradient size");
  std::vector<double> dz(upstream.size());
  for (std::size_t q = 0; q < dz.size(); ++q) dz[q] = upstream[q] * trace.prob[q] * (1.0 - trace.prob[q]);
  return seg_grad_logit(model, trace, dz, param_grad);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct SampleEval {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean BCE over the sample's pixels, scaled by `weight`, and its parameter gradient.
SampleEval eval_sample(const SurrogateSegModel& model, const TrainSample& s, double weight, bool want_grad) {
  SegTrace t;
  std::vector<double> z;
  forward_impl(model, s.features, t, &z);
  const std::size_t n = z.size();
  if (s.label.v.size() != n) throw StructuralError("training label does not match features");
  SampleEval e;
  std::vector<double> dz(n);
  double sum = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    const bool y = s.label.v[q] != 0;
    sum += y ? softplus(-z[q]) : softplus(z[q]);
    dz[q] = (t.prob[q] - (y ? 1.0 : 0.0)) * weight / static_cast<double>(n);
  }
  e.loss = sum / static_cast<double>(n) * weight;
  if (want_grad) seg_grad_logit(model, t, dz, &e.grad);
  return e;
}

std::vector<SampleEval> eval_all(const SurrogateSegModel& model, const std::vector<TrainSample>& samples,
                                 bool want_grad, bool parallel, int threads) {
  const double weight = 1.0 / static_cast<double>(samples.size());
  std::vector<SampleEval> out(samples.size());
  if (!parallel) {
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = eval_sample(model, samples[i], weight, want_grad);
    return out;
  }
  int nt = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nt = std::min<int>(nt, static_cast<int>(samples.size()));
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nt));
  for (int w = 0; w < nt; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < samples.size(); i += static_cast<std::size_t>(nt)) {
          out[i] = eval_sample(model, samples[i], weight, want_grad);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

double seg_bce(const SurrogateSegModel& model, const std::vector<TrainSample>& samples) {
  if (samples.empty()) throw ValidationError("seg_bce: no samples");
  double loss = 0.0;
  for (const auto& e : eval_all(model, samples, false, false, 1)) loss += e.loss;
  return loss;
}

TrainResult seg_train(const std::vector<TrainSample>& samples, int color_channels, const TrainConfig& cfg,
                      const std::function<void(int, double)>& progress) {
  if (samples.empty()) throw ValidationError("seg_train: no training samples");
  if (!(cfg.learning_rate > 0.0) || cfg.max_iters < 0 || cfg.plateau_window < 1 || !(cfg.sd_floor > 0.0)) {
    throw ValidationError("seg_train: invalid configuration");
  }
  TrainResult r{SurrogateSegModel(color_channels), {}, false};
  SurrogateSegModel& m = r.model;
  const int in = m.input_features();
  for (const auto& s : samples) {
    if (s.features.count != in) throw StructuralError("seg_train: feature count does not match channel count");
  }

  // Standardization statistics over every pixel of every sample.
  for (int i = 0; i < in; ++i) {
    double sum = 0.0, count = 0.0;
    for (const auto& s : samples) {
      for (double v : s.features.plane(i)) sum += v;
      count += static_cast<double>(s.features.pixels());
    }
    const double mean = sum / count;
    double var = 0.0;
    for (const auto& s : samples) {
      for (double v : s.features.plane(i)) var += (v - mean) * (v - mean);
    }
    m.mu[static_cast<std::size_t>(i)] = mean;
    m.sd[static_cast<std::size_t>(i)] = std::max(std::sqrt(var / count), cfg.sd_floor);
  }

  Rng rng(cfg.seed);
  for (auto& l : m.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.cin * 9));
    for (double& v : l.w) v = rng.uniform(-bound, bound);
    for (double& v : l.b) v = rng.uniform(-bound, bound);
  }

  std::vector<double> params = m.flatten_parameters();
  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto evals = eval_all(m, samples, true, cfg.parallel, cfg.threads);
    double loss = 0.0;
    std::vector<double> grad(params.size(), 0.0);
    for (const auto& e : evals) {
      loss += e.loss;
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += e.grad[k];
    }
    if (!std::isfinite(loss)) {
      throw NumericError("seg_train: non-finite loss at iteration " + std::to_string(it));
    }
    r.loss_history.push_back(loss);
    if (progress) progress(it, loss);
    const std::size_t h = r.loss_history.size();
    if (h > static_cast<std::size_t>(cfg.plateau_window)) {
      const double before = r.loss_history[h - 1 - static_cast<std::size_t>(cfg.plateau_window)];
      if (before - loss < cfg.plateau_tol * before) {
        r.early_stopped = true;
        break;
      }
    }
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= cfg.learning_rate * grad[k];
    m.assign_parameters(params);
  }
  m.round_to_float();
  return r;
}

void save_model(const std::filesystem::path& dir, const SurrogateSegModel& model) {
  std::filesystem::create_directories(dir);
  save_vector(dir / "model.sraw", model.to_floats());
  nlohmann::ordered_json j;
  j["format"] = "polatk-surrogate";
  j["version"] = 1;
  j["color_channels"] = model.color_channels();
  j["input_features"] = model.input_features();
  j["feature_order"] = {"s0_normalized", "dolp", "dolp_cos2aolp", "dolp_sin2aolp"};
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : model.layers) j["layers"].push_back({{"kernel", 3}, {"in", l.cin}, {"out", l.cout}});
  j["activations"] = {"tanh", "tanh", "sigmoid"};
  j["padding"] = "zero";
  j["vector_layout"] = "mu, sd, then per layer weights [out][in][3][3] and bias";
  j["parameter_count"] = model.parameter_count();
  j["weights"] = "model.sraw";
  std::ofstream out(dir / "model.json");
  if (!out) throw IoError("cannot write " + (dir / "model.json").string());
  out << j.dump(2) << '\n';
}

SurrogateSegModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("model not found: " + path.string());
  const auto dir = std::filesystem::is_directory(path) ? path : path.parent_path();
  std::ifstream in(dir / "model.json");
  if (!in) throw IoError("missing model.json next to " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model.json: ") + e.what());
  }
  if (j.value("format", "") != "polatk-surrogate") throw IoError("model.json: unknown format");
  const int channels = j.value("color_channels", 0);
  if (channels <= 0 || channels > 16) throw IoError("model.json: bad channel count");
  const auto v = load_vector(dir / j.value("weights", std::string("model.sraw")));
  return SurrogateSegModel::from_floats(channels, v);
}

}  // namespace polatk
