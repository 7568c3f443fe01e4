#include "polatk/attack.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "polatk/degrade.hpp"
#include "polatk/polar.hpp"
#include "polatk/rng.hpp"
#include "polatk/simd/kernels.hpp"

namespace polatk {

bool is_supported_grid(int g) { return std::ranges::find(kSupportedGrids, g) != std::end(kSupportedGrids); }

GridLayout GridLayout::for_dims(Dims dims, int grid) {
  if (grid <= 0) throw ValidationError("grid size must be positive");
  return {grid, (dims.width + grid - 1) / grid, (dims.height + grid - 1) / grid};
}

AttackWeights AttackWeights::zeros(GridLayout layout, int k) {
  if (k < 1) throw ValidationError("attack weights need K >= 1");
  return {layout, k, std::vector<double>(static_cast<std::size_t>(layout.cells()) * k, 0.0)};
}

void softmax_coefficients(const double* w, int k, double tau, double* out) {
  double m = w[0];
  for (int i = 1; i < k; ++i) m = std::max(m, w[i]);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out[i] = std::exp((w[i] - m) / tau);
    sum += out[i];
  }
  for (int i = 0; i < k; ++i) out[i] /= sum;
}

void EotConfig::validate() const {
  if (!(noise_sigma >= 0.0) || !(blur_sigma >= 0.0)) throw ValidationError("eot: sigmas must be nonnegative");
  if (!(bg_scale_min > 0.0 && bg_scale_min <= bg_scale_max && bg_scale_max < 2.0)) {
    throw ValidationError("eot: background scale range must lie inside (0, 2)");
  }
  if (samples < 1) throw ValidationError("eot: at least one sample per step");
}

void AttackConfig::validate() const {
  if (!(tau > 0.0)) throw ValidationError("attack: tau must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("attack: alpha must be finite and nonnegative");
  if (iters < 0) throw ValidationError("attack: iteration count must be nonnegative");
  if (!(lambda >= 0.0)) throw ValidationError("attack: lambda must be nonnegative");
  if (!is_supported_grid(grid)) throw ValidationError("attack: grid must be 8, 16 or 32");
  if (eot.enabled) eot.validate();
}

namespace {

template <class F>
void for_each_cell_row(const GridLayout& L, Dims d, F&& f) {
  for (int cy = 0; cy < L.cells_y; ++cy) {
    const int y0 = cy * L.grid, y1 = std::min(d.height, y0 + L.grid);
    for (int cx = 0; cx < L.cells_x; ++cx) {
      const int x0 = cx * L.grid, x1 = std::min(d.width, x0 + L.grid);
      const int cell = cy * L.cells_x + cx;
      for (int y = y0; y < y1; ++y) {
        f(cell, static_cast<std::size_t>(y) * d.width + static_cast<std::size_t>(x0), static_cast<std::size_t>(x1 - x0));
      }
    }
  }
}

void check_weights(const AttackWeights& w, const ComposeBasis& b) {
  if (static_cast<int>(b.diffs.size()) != w.k) throw StructuralError("compose: weight K does not match candidates");
  if (!(GridLayout::for_dims(b.background_star.dims(), w.layout.grid) == w.layout)) {
    throw StructuralError("compose: grid layout does not match image");
  }
  for (const auto& d : b.diffs) require_same_dims(d, b.background_star, "compose");
}

// Fixed-topology pairwise sum of equally sized vectors.
std::vector<double> tree_sum(std::span<const std::vector<double>> v) {
  if (v.size() == 1) return v[0];
  const std::size_t h = v.size() / 2;
  std::vector<double> a = tree_sum(v.subspan(0, h));
  const std::vector<double> b = tree_sum(v.subspan(h));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

}  // namespace

ComposeBasis make_basis(const CandidateSet& cs) { return make_basis(cs, cs.background); }

ComposeBasis make_basis(const CandidateSet& cs, const StokesImage& background_star) {
  cs.validate();
  require_same_dims(background_star, cs.background, "make_basis");
  ComposeBasis b;
  b.diffs.reserve(cs.candidates.size());
  for (const auto& s : cs.candidates) b.diffs.push_back(subtract_stokes(s, cs.background));
  b.background_star = background_star;
  return b;
}

StokesImage compose(const AttackWeights& weights, const ComposeBasis& basis, double tau) {
  check_weights(weights, basis);
  if (!(tau > 0.0)) throw ValidationError("compose: tau must be positive");
  const Dims d = basis.background_star.dims();
  const int K = weights.k;
  std::vector<double> coef(static_cast<std::size_t>(weights.layout.cells()) * K);
  for (int c = 0; c < weights.layout.cells(); ++c) softmax_coefficients(weights.cell(c), K, tau, coef.data() + c * K);
  StokesImage out = basis.background_star;
  const auto& kern = simd::kernels();
  for (int p = 0; p < 3; ++p) {
    for (int ch = 0; ch < d.channels; ++ch) {
      double* o = out.plane(p, ch).data();
      for_each_cell_row(weights.layout, d, [&](int cell, std::size_t off, std::size_t len) {
        for (int i = 0; i < K; ++i) {
          kern.axpy(coef[static_cast<std::size_t>(cell * K + i)], basis.diffs[static_cast<std::size_t>(i)].plane(p, ch).data() + off,
                    o + off, len);
        }
      });
    }
  }
  return out;
}

StokesImage compose_adversarial(const AttackWeights& weights, const CandidateSet& cs, double tau,
                                const StokesImage& background_star) {
  return compose(weights, make_basis(cs, background_star), tau);
}

AttackWeights compose_backward(const AttackWeights& weights, const ComposeBasis& basis, double tau,
                               const StokesImage& grad) {
  check_weights(weights, basis);
  require_same_dims(grad, basis.background_star, "compose_backward");
  const Dims d = grad.dims();
  const int K = weights.k;
  const int cells = weights.layout.cells();
  std::vector<double> gc(static_cast<std::size_t>(cells) * K, 0.0);
  const auto& kern = simd::kernels();
  for (int p = 0; p < 3; ++p) {
    for (int ch = 0; ch < d.channels; ++ch) {
      const double* g = grad.plane(p, ch).data();
      for_each_cell_row(weights.layout, d, [&](int cell, std::size_t off, std::size_t len) {
        for (int i = 0; i < K; ++i) {
          gc[static_cast<std::size_t>(cell * K + i)] +=
              kern.dot(g + off, basis.diffs[static_cast<std::size_t>(i)].plane(p, ch).data() + off, len);
        }
      });
    }
  }
  AttackWeights out = AttackWeights::zeros(weights.layout, K);
  std::vector<double> c(static_cast<std::size_t>(K));
  for (int cell = 0; cell < cells; ++cell) {
    softmax_coefficients(weights.cell(cell), K, tau, c.data());
    const double* g = gc.data() + cell * K;
    double mean = 0.0;
    for (int i = 0; i < K; ++i) mean += c[static_cast<std::size_t>(i)] * g[i];
    double* o = out.cell(cell);
    for (int j = 0; j < K; ++j) o[j] = c[static_cast<std::size_t>(j)] * (g[j] - mean) / tau;
  }
  return out;
}

LossResult adversarial_loss(std::span<const double> pred, const Mask& y, double lambda) {
  if (pred.size() != y.v.size()) throw StructuralError("adversarial_loss: prediction and label sizes differ");
  if (pred.empty()) throw StructuralError("adversarial_loss: empty prediction");
  std::size_t n1 = 0;
  for (auto b : y.v) n1 += b != 0;
  const std::size_t n = pred.size(), n0 = n - n1;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_n0 = n0 > 0 ? 1.0 / static_cast<double>(n0) : 0.0;
  const double inv_n1 = n1 > 0 ? 1.0 / static_cast<double>(n1) : 0.0;
  LossResult r;
  r.grad.assign(n, 0.0);
  double bce = 0.0, pos = 0.0, neg = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    const double p = pred[q];
    const bool clamped = !(p > kProbClamp && p < 1.0 - kProbClamp);
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    if (y.v[q] != 0) {
      const double l = std::log(pc);
      bce -= l;
      pos += l;
      if (!clamped) r.grad[q] = -(inv_n + lambda * inv_n1) / pc;
    } else {
      const double l = std::log1p(-pc);
      bce -= l;
      neg += l;
      if (!clamped) r.grad[q] = (inv_n + lambda * inv_n0) / (1.0 - pc);
    }
  }
  r.bce = bce * inv_n;
  r.flip = -(neg * inv_n0 + pos * inv_n1);
  r.value = r.bce + lambda * r.flip;
  return r;
}

double attack_objective(const AttackWeights& weights, const ComposeBasis& basis, const SurrogateSegModel& model,
                        const Mask& y, double tau, double lambda, AttackWeights* grad, std::vector<double>* prob) {
  const StokesImage s = compose(weights, basis, tau);
  const FeatureStack f = features_from_stokes(s);
  SegTrace trace;
  seg_forward(model, f, &trace);
  LossResult loss = adversarial_loss(trace.prob, y, lambda);
  if (grad != nullptr) {
    const FeatureStack df = seg_grad(model, trace, loss.grad);
    *grad = compose_backward(weights, basis, tau, features_backward(s, df));
  }
  if (prob != nullptr) *prob = std::move(trace.prob);
  return loss.value;
}

EotView eot_sample(const CandidateSet& cs, const EotConfig& config, std::uint64_t seed) {
  config.validate();
  cs.validate();
  Rng rng(seed);
  EotView v;
  v.scale = config.bg_scale_min == config.bg_scale_max ? config.bg_scale_min
                                                       : rng.uniform(config.bg_scale_min, config.bg_scale_max);
  v.cs.values = cs.values;
  v.cs.background = degrade(cs.background, config.noise_sigma, config.blur_sigma, derive_seed(seed, 0));
  for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
    v.cs.candidates.push_back(degrade(cs.candidates[i], config.noise_sigma, config.blur_sigma, derive_seed(seed, i + 1)));
  }
  v.background_star = v.scale == 1.0 ? v.cs.background : scale_stokes(v.cs.background, v.scale);
  return v;
}

namespace {

struct SampleOut {
  double loss = 0.0;
  std::vector<double> grad;
};

SampleOut eot_step(const CandidateSet& cs, const SurrogateSegModel& model, const Mask& y, const AttackConfig& cfg,
                   const AttackWeights& w, std::uint64_t seed) {
  const EotView v = eot_sample(cs, cfg.eot, seed);
  AttackWeights g;
  SampleOut out;
  out.loss = attack_objective(w, make_basis(v.cs, v.background_star), model, y, cfg.tau, cfg.lambda, &g);
  out.grad = std::move(g.w);
  return out;
}

}  // namespace

AttackResult attack_optimize(const CandidateSet& cs, const SurrogateSegModel& model, const Mask& y,
                             const AttackConfig& cfg, const std::function<void(const IterationRecord&)>& progress) {
  cfg.validate();
  cs.validate();
  const Dims d = cs.dims();
  if (y.width != d.width || y.height != d.height) throw StructuralError("attack: label does not match images");
  const GridLayout layout = GridLayout::for_dims(d, cfg.grid);
  const ComposeBasis clean = make_basis(cs);
  AttackWeights w = AttackWeights::zeros(layout, cs.k());
  AttackResult r;

  for (int it = 0; it < cfg.iters; ++it) {
    r.weights.push_back(w);
    std::vector<double> prob;
    double loss = 0.0;
    std::vector<double> grad;
    if (!cfg.eot.enabled) {
      AttackWeights g;
      loss = attack_objective(w, clean, model, y, cfg.tau, cfg.lambda, &g, &prob);
      grad = std::move(g.w);
    } else {
      const int S = cfg.eot.samples;
      std::vector<SampleOut> outs(static_cast<std::size_t>(S));
      auto seed_of = [&](int s) { return derive_seed(cfg.seed, static_cast<std::uint64_t>(it) * S + s); };
      if (cfg.parallel && S > 1) {
        std::vector<std::exception_ptr> errs(static_cast<std::size_t>(S));
        {
          std::vector<std::jthread> pool;
          for (int s = 0; s < S; ++s) {
            pool.emplace_back([&, s] {
              try {
                outs[static_cast<std::size_t>(s)] = eot_step(cs, model, y, cfg, w, seed_of(s));
              } catch (...) {
                errs[static_cast<std::size_t>(s)] = std::current_exception();
              }
            });
          }
        }
        for (auto& e : errs) {
          if (e) std::rethrow_exception(e);
        }
      } else {
        for (int s = 0; s < S; ++s) outs[static_cast<std::size_t>(s)] = eot_step(cs, model, y, cfg, w, seed_of(s));
      }
      std::vector<std::vector<double>> grads, losses;
      for (auto& o : outs) {
        grads.push_back(std::move(o.grad));
        losses.push_back({o.loss});
      }
      grad = tree_sum(grads);
      for (double& g : grad) g /= S;
      loss = tree_sum(losses)[0] / S;
      attack_objective(w, clean, model, y, cfg.tau, cfg.lambda, nullptr, &prob);
    }
    if (!std::isfinite(loss)) {
      r.aborted = true;
      r.weights.pop_back();
      break;
    }
    const SegMetrics m = seg_metrics(threshold_mask(prob, d.width, d.height), y);
    r.records.push_back({it, loss, m.iou, m.ber});
    if (progress) progress(r.records.back());
    for (std::size_t k = 0; k < w.w.size(); ++k) w.w[k] += cfg.alpha * grad[k];
  }
  r.weights.push_back(w);
  return r;
}

Perturbation quantize(const AttackWeights& weights) {
  Perturbation p{weights.layout, std::vector<int>(static_cast<std::size_t>(weights.layout.cells()), 0)};
  for (int c = 0; c < weights.layout.cells(); ++c) {
    const double* w = weights.cell(c);
    int best = 0;
    for (int i = 1; i < weights.k; ++i) {
      if (w[i] > w[best]) best = i;
    }
    p.index[static_cast<std::size_t>(c)] = best;
  }
  return p;
}

Perturbation random_perturbation(int k, GridLayout layout, std::uint64_t seed) {
  if (k < 1) throw ValidationError("random_perturbation: K must be at least 1");
  Rng rng(seed);
  Perturbation p{layout, std::vector<int>(static_cast<std::size_t>(layout.cells()), 0)};
  if (k == 1) return p;
  for (int& v : p.index) v = static_cast<int>(rng.uniform_int(0, k - 1));
  return p;
}

namespace {

void check_perturbation(const Perturbation& p, int k, Dims d) {
  if (!(GridLayout::for_dims(d, p.layout.grid) == p.layout)) throw StructuralError("perturbation grid does not match image");
  if (p.index.size() != static_cast<std::size_t>(p.layout.cells())) throw StructuralError("perturbation cell count");
  for (int i : p.index) {
    if (i < 0 || i >= k) throw ValidationError("perturbation index out of range");
  }
}

}  // namespace

ProjectionPattern expand_pattern(const Perturbation& p, const std::vector<int>& values, Dims dims) {
  check_perturbation(p, static_cast<int>(values.size()), dims);
  ProjectionPattern pat(dims);
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) {
      const int cell = (y / p.layout.grid) * p.layout.cells_x + x / p.layout.grid;
      const auto v = static_cast<std::uint8_t>(values[static_cast<std::size_t>(p.index[static_cast<std::size_t>(cell)])]);
      for (int c = 0; c < dims.channels; ++c) pat.at(c, y, x) = v;
    }
  }
  return pat;
}

StokesImage compose_quantized(const Perturbation& p, const CandidateSet& cs) {
  cs.validate();
  const Dims d = cs.dims();
  check_perturbation(p, cs.k(), d);
  StokesImage out(d);
  for (int pl = 0; pl < 3; ++pl) {
    for (int ch = 0; ch < d.channels; ++ch) {
      auto o = out.plane(pl, ch);
      for_each_cell_row(p.layout, d, [&](int cell, std::size_t off, std::size_t len) {
        auto src = cs.candidates[static_cast<std::size_t>(p.index[static_cast<std::size_t>(cell)])].plane(pl, ch);
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(off), len, o.begin() + static_cast<std::ptrdiff_t>(off));
      });
    }
  }
  return out;
}

StokesImage apply_physical(const Perturbation& p, const SceneModel& scene, const ProjectorModel& projector,
                           const CandidateSet& cs, const PhysicalOptions& o) {
  const ProjectionPattern pattern = expand_pattern(p, cs.values, scene.dims);
  const StokesImage lit = reflect(scene, project_pattern(projector, pattern));
  const StokesImage bg = render_background(scene);
  if (!o.degrade) return add_stokes(lit, bg);
  Rng rng(o.seed);
  const double r = o.bg_scale_min == o.bg_scale_max ? o.bg_scale_min : rng.uniform(o.bg_scale_min, o.bg_scale_max);
  return degrade(add_stokes(lit, scale_stokes(bg, r)), o.noise_sigma, o.blur_sigma, derive_seed(o.seed, 1));
}

SegMetrics evaluate_stokes(const SurrogateSegModel& model, const StokesImage& s, const Mask& y) {
  const auto prob = seg_forward(model, features_from_stokes(s));
  return seg_metrics(threshold_mask(prob, s.width(), s.height()), y);
}

}  // namespace polatk
