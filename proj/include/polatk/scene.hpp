#pragma once

// Synthetic polarimetric scenes, the Mueller-linear reflection model and
// candidate-set capture under constant projections.

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "polatk/image.hpp"
#include "polatk/projector.hpp"

namespace polatk {

struct SceneModel {
  Dims dims;
  Field k_s;             // one channel, specular ratio
  Field albedo;          // per channel
  std::vector<double> spec_reflectance;  // one scalar per channel
  Field diffuse_dolp;    // one channel
  Field diffuse_aolp;    // one channel, radians
  /// Incident environment illumination. The projector-off capture is reflect(ambient).
  StokesImage ambient;
  Mask glass_mask;

  void validate() const;
};

/// Specular term k_s R (s0, s1, -s2) plus diffuse term (1 - k_s) albedo s0 (1, d cos 2a, d sin 2a).
/// Linear in `incident`.
StokesImage reflect(const SceneModel& scene, const StokesImage& incident);

/// Camera view with the projector off.
StokesImage render_background(const SceneModel& scene);

/// Camera view under a projection (re-rendered, not composed from captures).
StokesImage render_projection(const SceneModel& scene, const ProjectorModel& projector, const ProjectionPattern& pattern);

struct CandidateSet {
  std::vector<StokesImage> candidates;
  std::vector<int> values;
  StokesImage background;

  int k() const { return static_cast<int>(candidates.size()); }
  Dims dims() const { return background.dims(); }
  /// K >= 1, matching dims, strictly increasing values in [0, 255].
  void validate() const;
};

/// Sensor round trip applied to every captured image when enabled: Stokes ->
/// four polarizer planes -> additive noise -> quantization -> Stokes.
struct SensorOptions {
  bool enabled = false;
  double noise_sigma = 0.0;
  /// Quantization levels over [0, full_scale]; 0 disables quantization.
  int bits = 12;
  double full_scale = 4.0;
  std::uint64_t seed = 0;
};

StokesImage sensor_roundtrip(const StokesImage& s, const SensorOptions& opt, std::uint64_t stream);

/// K uniformly spaced drive levels ending at 255 (K = 9 gives 7, 38, ..., 255).
std::vector<int> uniform_values(int k);

/// Throws ValidationError unless K >= 2 and the values are strictly increasing,
/// uniformly spaced and within [0, 255].
void validate_candidate_values(const std::vector<int>& values);

CandidateSet capture_candidates(const SceneModel& scene, const ProjectorModel& projector,
                                const std::vector<int>& values, const SensorOptions& sensor = {});

struct SceneParams {
  int min_regions = 1;
  int max_regions = 4;
  double region_size_min = 0.2;  // fraction of each image side
  double region_size_max = 0.5;
  /// Region layouts are redrawn until the glass fraction lies in this range.
  double glass_fraction_min = 0.1, glass_fraction_max = 0.6;
  int max_layout_draws = 64;
  double glass_ks_min = 0.6, glass_ks_max = 0.95;
  double background_ks_min = 0.0, background_ks_max = 0.15;
  double glass_albedo_min = 0.1, glass_albedo_max = 0.5;
  double background_albedo_min = 0.3, background_albedo_max = 0.9;
  double spec_reflectance_min = 0.7, spec_reflectance_max = 1.0;
  double ambient_s0_min = 1.0, ambient_s0_max = 3.0;
  double ambient_dolp_min = 0.05, ambient_dolp_max = 0.1;
  double ambient_aolp = 3.0 * std::numbers::pi / 4.0;

  void validate() const;
};

/// Deterministic in (seed, dims, params). Requires dims of at least 16x16.
SceneModel gen_scene(std::uint64_t seed, Dims dims, const SceneParams& params = {});

/// Specular benchmark for the color-constancy attack: gray diffuse background
/// with highly specular patches under a white, partially polarized ambient.
SceneModel gen_cc_bench_scene(Dims dims);

double glass_fraction(const Mask& m);

}  // namespace polatk
