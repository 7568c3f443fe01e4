#include "polatk/scene.hpp"

#include <algorithm>
#include <cmath>

#include "polatk/polar.hpp"
#include "polatk/rng.hpp"

namespace polatk {
namespace {

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string("scene: ") + what + " outside [0, 1]");
}

void require_range(double lo, double hi, const char* what) {
  if (!(lo <= hi)) throw ValidationError(std::string("scene params: empty range for ") + what);
}

StokesImage constant_stokes(Dims dims, double s0, double dolp, double aolp) {
  StokesImage s(dims);
  const double s1 = s0 * dolp * std::cos(2.0 * aolp);
  const double s2 = s0 * dolp * std::sin(2.0 * aolp);
  for (int c = 0; c < dims.channels; ++c) {
    std::ranges::fill(s.plane(kS0, c), s0);
    std::ranges::fill(s.plane(kS1, c), s1);
    std::ranges::fill(s.plane(kS2, c), s2);
  }
  return s;
}

// Stored rasters are float32; keep generated scenes exactly representable.
template <class Img>
void round_to_float(Img& img) {
  for (double& v : img.data()) v = static_cast<float>(v);
}

void round_scene(SceneModel& s) {
  round_to_float(s.k_s);
  round_to_float(s.albedo);
  round_to_float(s.diffuse_dolp);
  round_to_float(s.diffuse_aolp);
  round_to_float(s.ambient);
  for (double& v : s.spec_reflectance) v = static_cast<float>(v);
}

}  // namespace

void SceneModel::validate() const {
  const Dims mono{dims.width, dims.height, 1};
  if (!(k_s.dims() == mono) || !(diffuse_dolp.dims() == mono) || !(diffuse_aolp.dims() == mono)) {
    throw StructuralError("scene: per-pixel maps must be single-channel at scene size");
  }
  if (!(albedo.dims() == dims) || !(ambient.dims() == dims)) throw StructuralError("scene: albedo/ambient size");
  if (static_cast<int>(spec_reflectance.size()) != dims.channels) {
    throw StructuralError("scene: one spec_reflectance per channel");
  }
  if (glass_mask.width != dims.width || glass_mask.height != dims.height) throw StructuralError("scene: mask size");
  for (double v : k_s.data()) require_unit(v, "k_s");
  for (double v : albedo.data()) require_unit(v, "albedo");
  for (double v : diffuse_dolp.data()) require_unit(v, "diffuse_dolp");
  for (double v : spec_reflectance) require_unit(v, "spec_reflectance");
  for (auto b : glass_mask.v) {
    if (b > 1) throw ValidationError("scene: glass mask must be binary");
  }
}

StokesImage reflect(const SceneModel& scene, const StokesImage& incident) {
  if (!(incident.dims() == scene.dims)) throw StructuralError("reflect: incident does not match scene");
  StokesImage out(scene.dims);
  const std::size_t n = scene.dims.pixels();
  auto ks = scene.k_s.plane(0, 0);
  auto dd = scene.diffuse_dolp.plane(0, 0);
  auto da = scene.diffuse_aolp.plane(0, 0);
  for (int c = 0; c < scene.dims.channels; ++c) {
    const double r = scene.spec_reflectance[static_cast<std::size_t>(c)];
    auto alb = scene.albedo.plane(0, c);
    auto i0 = incident.plane(kS0, c);
    auto i1 = incident.plane(kS1, c);
    auto i2 = incident.plane(kS2, c);
    auto o0 = out.plane(kS0, c);
    auto o1 = out.plane(kS1, c);
    auto o2 = out.plane(kS2, c);
    for (std::size_t p = 0; p < n; ++p) {
      const double spec = ks[p] * r;
      const double diff = (1.0 - ks[p]) * alb[p] * i0[p];
      const double dm = diff * dd[p];
      o0[p] = spec * i0[p] + diff;
      o1[p] = spec * i1[p] + (dm == 0.0 ? 0.0 : dm * std::cos(2.0 * da[p]));
      o2[p] = -(spec * i2[p]) + (dm == 0.0 ? 0.0 : dm * std::sin(2.0 * da[p]));
    }
  }
  return out;
}

StokesImage render_background(const SceneModel& scene) { return reflect(scene, scene.ambient); }

StokesImage render_projection(const SceneModel& scene, const ProjectorModel& projector,
                              const ProjectionPattern& pattern) {
  return add_stokes(reflect(scene, project_pattern(projector, pattern)), render_background(scene));
}

void CandidateSet::validate() const {
  if (candidates.empty()) throw ValidationError("candidate set: K must be at least 1");
  if (values.size() != candidates.size()) throw StructuralError("candidate set: one value per candidate");
  for (const auto& s : candidates) require_same_dims(s, background, "candidate set");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || values[i] > 255) throw ValidationError("candidate set: value outside [0, 255]");
    if (i > 0 && values[i] <= values[i - 1]) throw ValidationError("candidate set: values must increase");
  }
}

StokesImage sensor_roundtrip(const StokesImage& s, const SensorOptions& opt, std::uint64_t stream) {
  if (!opt.enabled) return s;
  if (opt.noise_sigma < 0.0 || opt.bits < 0 || opt.bits > 24 || !(opt.full_scale > 0.0)) {
    throw ValidationError("sensor options out of range");
  }
  RawPolarImage raw = sense(s);
  const double levels = opt.bits > 0 ? std::ldexp(1.0, opt.bits) - 1.0 : 0.0;
  auto d = raw.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    double v = d[i];
    if (opt.noise_sigma > 0.0) v += opt.noise_sigma * counter_normal(opt.seed, stream, i);
    if (levels > 0.0) v = std::round(std::clamp(v / opt.full_scale, 0.0, 1.0) * levels) / levels * opt.full_scale;
    d[i] = std::max(v, 0.0);
  }
  return stokes_from_raw(raw);
}

std::vector<int> uniform_values(int k) {
  if (k < 2 || k > 256) throw ValidationError("candidate count must lie in [2, 256]");
  const int step = 255 / (k - 1);
  const int start = 255 - step * (k - 1);
  std::vector<int> v(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] = start + i * step;
  return v;
}

void validate_candidate_values(const std::vector<int>& values) {
  if (values.size() < 2) throw ValidationError("capture needs at least two candidate values");
  const int step = values[1] - values[0];
  if (step <= 0) throw ValidationError("candidate values must be strictly increasing");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || values[i] > 255) throw ValidationError("candidate value outside [0, 255]");
    if (i > 0 && values[i] - values[i - 1] != step) throw ValidationError("candidate values must be uniformly spaced");
  }
}

CandidateSet capture_candidates(const SceneModel& scene, const ProjectorModel& projector,
                                const std::vector<int>& values, const SensorOptions& sensor) {
  validate_candidate_values(values);
  scene.validate();
  if (!(projector.dims() == scene.dims)) throw StructuralError("capture: projector does not match scene");
  CandidateSet cs;
  const StokesImage bg = render_background(scene);
  cs.background = sensor_roundtrip(bg, sensor, 0);
  cs.values = values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto pattern = constant_pattern(projector, static_cast<std::uint8_t>(values[i]));
    StokesImage s = add_stokes(reflect(scene, project_pattern(projector, pattern)), bg);
    cs.candidates.push_back(sensor_roundtrip(s, sensor, i + 1));
  }
  return cs;
}

void SceneParams::validate() const {
  if (min_regions < 0 || max_regions < min_regions) throw ValidationError("scene params: region count range");
  require_range(region_size_min, region_size_max, "region size");
  if (!(region_size_min > 0.0 && region_size_max <= 1.0)) throw ValidationError("scene params: region size in (0, 1]");
  const double unit[][2] = {{glass_ks_min, glass_ks_max},
                            {background_ks_min, background_ks_max},
                            {glass_albedo_min, glass_albedo_max},
                            {background_albedo_min, background_albedo_max},
                            {spec_reflectance_min, spec_reflectance_max},
                            {ambient_dolp_min, ambient_dolp_max}};
  for (const auto& r : unit) {
    require_range(r[0], r[1], "material");
    require_unit(r[0], "parameter range");
    require_unit(r[1], "parameter range");
  }
  require_range(glass_fraction_min, glass_fraction_max, "glass fraction");
  require_unit(glass_fraction_min, "glass fraction");
  require_unit(glass_fraction_max, "glass fraction");
  if (max_layout_draws < 1) throw ValidationError("scene params: max_layout_draws must be positive");
  require_range(ambient_s0_min, ambient_s0_max, "ambient s0");
  if (!(ambient_s0_min >= 0.0)) throw ValidationError("scene params: ambient s0 must be nonnegative");
}

SceneModel gen_scene(std::uint64_t seed, Dims dims, const SceneParams& params) {
  if (dims.width < 16 || dims.height < 16 || dims.channels < 1) {
    throw ValidationError("gen_scene: dims must be at least 16x16 with one or more channels");
  }
  params.validate();
  Rng rng(seed);
  const Dims mono{dims.width, dims.height, 1};
  SceneModel s{dims, Field(mono), Field(dims), {}, Field(mono), Field(mono), StokesImage(dims),
               Mask(dims.width, dims.height)};

  std::ranges::fill(s.k_s.data(), rng.uniform(params.background_ks_min, params.background_ks_max));
  for (int c = 0; c < dims.channels; ++c) {
    std::ranges::fill(s.albedo.plane(0, c), rng.uniform(params.background_albedo_min, params.background_albedo_max));
  }

  struct Region {
    double h, w, cy, cx;
    bool ellipse;
    double ks;
    std::vector<double> alb;
    bool contains(int y, int x) const {
      const double dy = (y - cy) / (h / 2), dx = (x - cx) / (w / 2);
      return ellipse ? dy * dy + dx * dx < 1.0 : std::abs(dy) < 1.0 && std::abs(dx) < 1.0;
    }
  };
  const double H = dims.height, W = dims.width;
  std::vector<Region> layout;
  for (int draw = 0; draw < params.max_layout_draws; ++draw) {
    layout.clear();
    std::ranges::fill(s.glass_mask.v, 0);
    const int regions = static_cast<int>(rng.uniform_int(params.min_regions, params.max_regions));
    for (int r = 0; r < regions; ++r) {
      Region g;
      g.h = rng.uniform(params.region_size_min, params.region_size_max) * H;
      g.w = rng.uniform(params.region_size_min, params.region_size_max) * W;
      g.cy = rng.uniform(g.h / 2, H - g.h / 2);
      g.cx = rng.uniform(g.w / 2, W - g.w / 2);
      g.ellipse = rng.uniform() < 0.5;
      g.ks = rng.uniform(params.glass_ks_min, params.glass_ks_max);
      g.alb.resize(static_cast<std::size_t>(dims.channels));
      for (double& a : g.alb) a = rng.uniform(params.glass_albedo_min, params.glass_albedo_max);
      for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
          if (g.contains(y, x)) s.glass_mask.v[static_cast<std::size_t>(y) * dims.width + x] = 1;
        }
      }
      layout.push_back(std::move(g));
    }
    const double f = glass_fraction(s.glass_mask);
    if (f >= params.glass_fraction_min && f <= params.glass_fraction_max) break;
    if (draw + 1 == params.max_layout_draws) throw ValidationError("gen_scene: no layout met the glass fraction range");
  }
  for (const Region& g : layout) {
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        if (!g.contains(y, x)) continue;
        s.k_s.at(0, 0, y, x) = g.ks;
        for (int c = 0; c < dims.channels; ++c) s.albedo.at(0, c, y, x) = g.alb[static_cast<std::size_t>(c)];
      }
    }
  }

  s.spec_reflectance.resize(static_cast<std::size_t>(dims.channels));
  for (double& v : s.spec_reflectance) v = rng.uniform(params.spec_reflectance_min, params.spec_reflectance_max);

  const double amb_s0 = rng.uniform(params.ambient_s0_min, params.ambient_s0_max);
  const double amb_dolp = rng.uniform(params.ambient_dolp_min, params.ambient_dolp_max);
  s.ambient = constant_stokes(dims, amb_s0, amb_dolp, params.ambient_aolp);
  round_scene(s);
  return s;
}

SceneModel gen_cc_bench_scene(Dims dims) {
  if (dims.channels != 3) throw StructuralError("cc benchmark scene is RGB");
  if (dims.width < 16 || dims.height < 16) throw ValidationError("cc benchmark scene needs at least 16x16");
  const Dims mono{dims.width, dims.height, 1};
  SceneModel s{dims, Field(mono), Field(dims), {1.0, 1.0, 1.0}, Field(mono), Field(mono), StokesImage(dims),
               Mask(dims.width, dims.height)};
  std::ranges::fill(s.albedo.data(), 0.5);
  // Four specular patches, each a quarter of the side, on a 2x2 layout.
  const int pw = dims.width / 4, ph = dims.height / 4;
  for (int py : {dims.height / 8, dims.height * 5 / 8}) {
    for (int px : {dims.width / 8, dims.width * 5 / 8}) {
      for (int y = py; y < py + ph; ++y) {
        for (int x = px; x < px + pw; ++x) {
          s.k_s.at(0, 0, y, x) = 0.9;
          s.glass_mask.v[static_cast<std::size_t>(y) * dims.width + x] = 1;
        }
      }
    }
  }
  s.ambient = constant_stokes(dims, 1.0, 0.3, 3.0 * std::numbers::pi / 4.0);
  round_scene(s);
  return s;
}

double glass_fraction(const Mask& m) {
  if (m.v.empty()) return 0.0;
  std::size_t n = 0;
  for (auto b : m.v) n += b;
  return static_cast<double>(n) / static_cast<double>(m.v.size());
}

}  // namespace polatk
