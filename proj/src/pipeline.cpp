#include "polatk/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "polatk/metrics.hpp"
#include "polatk/polar.hpp"
#include "polatk/preview.hpp"
#include "polatk/raster_io.hpp"
#include "polatk/rng.hpp"

namespace polatk {

TrainSample make_sample(const SceneModel& scene) {
  return {features_from_stokes(render_background(scene)), scene.glass_mask};
}

std::vector<TrainSample> make_training_set(int count, std::uint64_t first_seed, Dims dims, const SceneParams& params) {
  std::vector<TrainSample> out;
  for (int i = 0; i < count; ++i) out.push_back(make_sample(gen_scene(first_seed + static_cast<std::uint64_t>(i), dims, params)));
  return out;
}

std::uint64_t physical_seed(std::uint64_t attack_seed) { return derive_seed(attack_seed, 0x70687973); }
std::uint64_t random_baseline_seed(std::uint64_t attack_seed) { return derive_seed(attack_seed, 0x72616e64); }

namespace {

StealthCheck stealth_check(const SceneModel& scene, const ProjectorModel& proj, const CandidateSet& cs,
                           const Perturbation& p) {
  const StokesImage adv = apply_physical(p, scene, proj, cs);
  const int mid = cs.values[cs.values.size() / 2];
  const StokesImage ref = render_projection(scene, proj, constant_pattern(proj, static_cast<std::uint8_t>(mid)));
  StealthCheck s;
  const auto ca = cues_from_stokes(adv).cues;
  const auto cr = cues_from_stokes(ref).cues;
  double sum = 0.0;
  std::size_t count = 0;
  const std::size_t n = scene.dims.pixels();
  for (int c = 0; c < scene.dims.channels; ++c) {
    auto a0 = adv.plane(kS0, c);
    auto r0 = ref.plane(kS0, c);
    auto ar = ca.plane(kRho, c);
    auto rr = cr.plane(kRho, c);
    for (std::size_t q = 0; q < n; ++q) {
      const double denom = std::max(std::abs(r0[q]), 1e-300);
      s.max_s0_rel_diff = std::max(s.max_s0_rel_diff, std::abs(a0[q] - r0[q]) / denom);
      if (scene.glass_mask.v[q]) {
        sum += std::abs(ar[q] - rr[q]);
        ++count;
      }
    }
  }
  s.mean_abs_drho_glass = count > 0 ? sum / static_cast<double>(count) : 0.0;
  return s;
}

}  // namespace

AttackRun run_attack(const SceneModel& scene, const SurrogateSegModel& model, const AttackRunOptions& o,
                     const std::function<void(const IterationRecord&)>& progress) {
  o.attack.validate();
  if (model.color_channels() != scene.dims.channels) throw StructuralError("model channel count does not match scene");
  const ProjectorModel proj = ProjectorModel::uniform(scene.dims, o.projector_i0);
  AttackRun r;
  r.cs = capture_candidates(scene, proj, o.values, o.sensor);
  const Mask& y = scene.glass_mask;
  r.opt = attack_optimize(r.cs, model, y, o.attack, progress);
  r.perturbation = quantize(r.opt.weights.back());
  r.random = random_perturbation(r.cs.k(), r.perturbation.layout, random_baseline_seed(o.attack.seed));
  r.pattern = expand_pattern(r.perturbation, r.cs.values, scene.dims);

  PhysicalOptions phys = o.physical;
  phys.seed = physical_seed(o.attack.seed);
  r.before = r.cs.background;
  r.clean = evaluate_stokes(model, r.before, y);
  r.random_digital = evaluate_stokes(model, compose_quantized(r.random, r.cs), y);
  r.random_physical = evaluate_stokes(model, apply_physical(r.random, scene, proj, r.cs, phys), y);
  r.after_digital = compose_quantized(r.perturbation, r.cs);
  r.attack_digital = evaluate_stokes(model, r.after_digital, y);
  r.after_physical = apply_physical(r.perturbation, scene, proj, r.cs, phys);
  r.attack_physical = evaluate_stokes(model, r.after_physical, y);
  r.stealth = stealth_check(scene, proj, r.cs, r.perturbation);
  return r;
}

std::vector<ReportRow> attack_report_rows(const AttackRun& run, const AttackRunOptions& o) {
  const int g = o.attack.grid;
  const std::string name = o.attack.eot.enabled ? "EOT" : "plain";
  return {
      {"clean", 0, "both", run.clean.iou, run.clean.ber},
      {"ran.", g, "digital", run.random_digital.iou, run.random_digital.ber},
      {"ran.", g, "physical", run.random_physical.iou, run.random_physical.ber},
      {name, g, "digital", run.attack_digital.iou, run.attack_digital.ber},
      {name, g, "physical", run.attack_physical.iou, run.attack_physical.ber},
  };
}

namespace {

Json metrics_json(const SegMetrics& m) {
  return {{"iou", m.iou}, {"ber", m.ber}, {"tp", m.tp}, {"tn", m.tn}, {"fp", m.fp}, {"fn", m.fn}};
}

// Shortest round-trip formatting for doubles.
std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

void write_attack_run(const std::filesystem::path& dir, const AttackRun& run, const AttackRunOptions& o,
                      const Json& extra) {
  std::filesystem::create_directories(dir);
  Json cfg;
  cfg["attack"] = to_json(o.attack);
  cfg["candidate_values"] = o.values;
  cfg["projector"] = to_json(ProjectorModel::uniform(run.cs.dims(), o.projector_i0));
  cfg["sensor"] = {{"enabled", o.sensor.enabled}, {"noise_sigma", o.sensor.noise_sigma}, {"bits", o.sensor.bits},
                   {"full_scale", o.sensor.full_scale}, {"seed", o.sensor.seed}};
  cfg["physical"] = {{"degrade", o.physical.degrade},
                     {"noise_sigma", o.physical.noise_sigma},
                     {"blur_sigma", o.physical.blur_sigma},
                     {"bg_scale_range", {o.physical.bg_scale_min, o.physical.bg_scale_max}},
                     {"seed", physical_seed(o.attack.seed)}};
  cfg["random_baseline_seed"] = random_baseline_seed(o.attack.seed);
  for (const auto& [k, v] : extra.items()) cfg[k] = v;
  write_json(dir / "config.json", cfg);

  std::ofstream csv(dir / "trajectory.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write trajectory.csv");
  csv << "iteration,loss,iou,ber\n";
  for (const auto& r : run.opt.records) csv << r.iteration << ',' << num(r.loss) << ',' << num(r.iou) << ',' << num(r.ber) << '\n';
  csv.close();

  write_ppat(dir / "perturbation.ppat", to_raster(run.pattern));
  save_image(dir / "before.sraw", run.before);
  save_image(dir / "after_digital.sraw", run.after_digital);
  save_image(dir / "after_physical.sraw", run.after_physical);

  double white = 0.0;
  for (int c = 0; c < run.before.channels(); ++c) {
    for (double v : run.after_digital.plane(kS0, c)) white = std::max(white, v);
  }
  preview_s0(dir / "before_s0.ppm", run.before, white);
  preview_s0(dir / "after_s0.ppm", run.after_digital, white);
  preview_dolp(dir / "before_dolp.pgm", run.before, 2.0);
  preview_dolp(dir / "after_dolp.pgm", run.after_digital, 2.0);
  preview_aolp(dir / "before_aolp.ppm", run.before);
  preview_aolp(dir / "after_aolp.ppm", run.after_digital);
  preview_pattern(dir / "perturbation.pgm", run.pattern);

  Json m;
  m["grid"] = o.attack.grid;
  m["eot"] = o.attack.eot.enabled;
  m["aborted"] = run.opt.aborted;
  m["iterations"] = run.opt.records.size();
  if (!run.opt.records.empty()) {
    m["loss_initial"] = run.opt.records.front().loss;
    m["loss_final"] = run.opt.records.back().loss;
  }
  m["clean"] = metrics_json(run.clean);
  m["random"] = {{"digital", metrics_json(run.random_digital)}, {"physical", metrics_json(run.random_physical)}};
  m["attack"] = {{"digital", metrics_json(run.attack_digital)}, {"physical", metrics_json(run.attack_physical)}};
  m["stealth"] = {{"max_s0_rel_diff", run.stealth.max_s0_rel_diff},
                  {"mean_abs_drho_glass", run.stealth.mean_abs_drho_glass}};
  Json rows = Json::array();
  for (const auto& r : attack_report_rows(run, o)) {
    rows.push_back({{"name", r.name}, {"grid", r.grid}, {"world", r.world}, {"iou", r.iou}, {"ber", r.ber}});
  }
  m["rows"] = rows;
  write_json(dir / "metrics.json", m);
}

CcAttackResult run_cc_attack(const SceneModel& scene, ChannelMode mode, double top_q, double projector_i0) {
  if (scene.dims.channels != 3) throw StructuralError("color-constancy attack needs an RGB scene");
  const ProjectorModel proj = ProjectorModel::uniform(scene.dims, projector_i0);
  CcAttackResult r;
  r.mode = mode;
  r.captured = render_projection(scene, proj, channel_mode_pattern(proj, mode));
  r.estimate = cc_estimate(r.captured, top_q);
  r.gains = white_balance_gains(r.estimate);
  r.balanced = white_balance(r.captured, r.estimate);
  r.angular_error_deg = angular_error(r.estimate.rgb, {1.0, 1.0, 1.0});
  return r;
}

}  // namespace polatk
