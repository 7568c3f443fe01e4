#pragma once

// End-to-end flows shared by the command-line tool and the acceptance suite.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "polatk/attack.hpp"
#include "polatk/color_constancy.hpp"
#include "polatk/persist.hpp"
#include "polatk/scene.hpp"
#include "polatk/surrogate.hpp"

namespace polatk {

/// Features of the projector-off view of each generated scene, labeled by its glass mask.
TrainSample make_sample(const SceneModel& scene);
std::vector<TrainSample> make_training_set(int count, std::uint64_t first_seed, Dims dims,
                                           const SceneParams& params = {});

struct AttackRunOptions {
  AttackConfig attack;
  std::vector<int> values = uniform_values(9);
  double projector_i0 = 1.0;
  SensorOptions sensor;
  /// Physical-world evaluation settings; the seed is derived from the attack seed.
  PhysicalOptions physical{true};
};

struct StealthCheck {
  double max_s0_rel_diff = 0.0;   // re-rendered vs constant projection
  double mean_abs_drho_glass = 0.0;
};

struct AttackRun {
  CandidateSet cs;
  AttackResult opt;
  Perturbation perturbation;
  Perturbation random;
  ProjectionPattern pattern;
  SegMetrics clean;
  SegMetrics random_digital, random_physical;
  SegMetrics attack_digital, attack_physical;
  StokesImage before;          // projector off
  StokesImage after_digital;   // quantized composition of captures
  StokesImage after_physical;  // re-rendered and degraded
  StealthCheck stealth;
};

std::uint64_t physical_seed(std::uint64_t attack_seed);
std::uint64_t random_baseline_seed(std::uint64_t attack_seed);

AttackRun run_attack(const SceneModel& scene, const SurrogateSegModel& model, const AttackRunOptions& options,
                     const std::function<void(const IterationRecord&)>& progress = {});

/// Writes config.json, trajectory.csv, perturbation.ppat, before/after rasters,
/// previews and metrics.json into `dir`.
void write_attack_run(const std::filesystem::path& dir, const AttackRun& run, const AttackRunOptions& options,
                      const Json& extra_config = Json::object());

/// Metrics rows in report form (name, grid, world, iou, ber) for one run.
std::vector<ReportRow> attack_report_rows(const AttackRun& run, const AttackRunOptions& options);

struct CcAttackResult {
  ChannelMode mode = ChannelMode::Neutral;
  StokesImage captured;
  IlluminantEstimate estimate;
  std::array<double, 3> gains{};
  StokesImage balanced;
  double angular_error_deg = 0.0;
};

/// Renders the scene under a channel-polarized projection and runs the
/// DoLP-based estimator; the true illuminant is white.
CcAttackResult run_cc_attack(const SceneModel& scene, ChannelMode mode, double top_q = 0.1, double projector_i0 = 1.0);

}  // namespace polatk
