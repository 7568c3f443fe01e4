#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "polatk/errors.hpp"
#include "polatk/metrics.hpp"
#include "polatk/persist.hpp"
#include "polatk/pipeline.hpp"
#include "polatk/polar.hpp"
#include "polatk/preview.hpp"
#include "polatk/raster_io.hpp"
#include "polatk/simd/kernels.hpp"

namespace fs = std::filesystem;
using namespace polatk;

namespace {

enum Exit { kOk = 0, kUsage = 2, kInput = 3, kNumeric = 4 };

struct GenSceneArgs {
  std::string preset = "glass";
  std::uint64_t seed = 0;
  int width = 128, height = 128, channels = 3;
  std::string out;
};

struct CaptureArgs {
  std::string scene, out;
  int k = 9;
  double i0 = 1.0;
  double sensor_noise = -1.0;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  int count = 16;
  std::uint64_t first_seed = 0;
  int width = 64, height = 64, channels = 3;
  std::vector<std::string> scenes;
  int iters = 150;
  double lr = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

struct AttackArgs {
  std::string scene, model, out;
  AttackConfig cfg;
  int k = 9;
  double i0 = 1.0;
  bool no_degrade = false;
  int threads = 1;
};

struct CcArgs {
  std::string scene, mode, out;
  double top_q = 0.1;
  double i0 = 1.0;
};

struct EvalArgs {
  std::string scene, model, pattern, out;
  int k = 9;
  int grid = 8;
  double i0 = 1.0;
  bool degrade = false;
  std::uint64_t seed = 0;
};

struct ReportArgs {
  std::string runs, out;
  bool reference = false;
};

const std::vector<int> kGrids(std::begin(kSupportedGrids), std::end(kSupportedGrids));

std::vector<std::string> mode_names() { return {kChannelModeNames.begin(), kChannelModeNames.end()}; }

void log(const std::string& s) { std::cerr << s << '\n'; }

int cmd_gen_scene(const GenSceneArgs& a) {
  const Dims d{a.width, a.height, a.channels};
  SceneModel s;
  Json meta;
  meta["preset"] = a.preset;
  if (a.preset == "cc-bench") {
    s = gen_cc_bench_scene(d);
  } else {
    const SceneParams params;
    s = gen_scene(a.seed, d, params);
    meta["seed"] = a.seed;
    meta["params"] = to_json(params);
  }
  save_scene(a.out, s, meta);
  std::printf("glass fraction %.4f\n", glass_fraction(s.glass_mask));
  return kOk;
}

int cmd_capture(const CaptureArgs& a) {
  const SceneModel s = load_scene(a.scene);
  SensorOptions sensor;
  if (a.sensor_noise >= 0.0) {
    sensor.enabled = true;
    sensor.noise_sigma = a.sensor_noise;
    sensor.seed = a.seed;
  }
  const CandidateSet cs = capture_candidates(s, ProjectorModel::uniform(s.dims, a.i0), uniform_values(a.k), sensor);
  Json meta;
  meta["projector_i0"] = a.i0;
  meta["sensor"] = {{"enabled", sensor.enabled}, {"noise_sigma", sensor.noise_sigma}, {"bits", sensor.bits},
                    {"full_scale", sensor.full_scale}, {"seed", sensor.seed}};
  save_candidates(a.out, cs, meta);
  return kOk;
}

int cmd_train(const TrainArgs& a) {
  std::vector<TrainSample> samples;
  Json source;
  if (!a.scenes.empty()) {
    for (const auto& dir : a.scenes) samples.push_back(make_sample(load_scene(dir)));
    source["scenes"] = a.scenes;
  } else {
    const SceneParams params;
    samples = make_training_set(a.count, a.first_seed, {a.width, a.height, a.channels}, params);
    source = {{"count", a.count}, {"first_seed", a.first_seed}, {"width", a.width}, {"height", a.height},
              {"params", to_json(params)}};
  }
  const int channels = samples.front().features.count / 4;
  TrainConfig tc;
  tc.max_iters = a.iters;
  tc.learning_rate = a.lr;
  tc.seed = a.seed;
  tc.parallel = a.threads != 1;
  tc.threads = a.threads;
  const TrainResult r = seg_train(samples, channels, tc, [](int it, double loss) {
    if (it % 25 == 0) std::fprintf(stderr, "iter %d loss %.6f\n", it, loss);
  });
  double sum_iou = 0.0;
  for (const auto& s : samples) sum_iou += seg_metrics(threshold_mask(seg_forward(r.model, s.features), s.features.width, s.features.height), s.label).iou;

  save_model(a.out, r.model);
  Json info;
  info["source"] = source;
  info["iters"] = a.iters;
  info["learning_rate"] = a.lr;
  info["seed"] = a.seed;
  info["plateau"] = {{"window", tc.plateau_window}, {"tol", tc.plateau_tol}};
  info["iterations_run"] = r.loss_history.size();
  info["early_stopped"] = r.early_stopped;
  info["final_loss"] = r.loss_history.empty() ? 0.0 : r.loss_history.back();
  info["train_mean_iou"] = sum_iou / static_cast<double>(samples.size());
  write_json(fs::path(a.out) / "train.json", info);
  std::printf("final loss %.6f, train IoU %.4f\n", info["final_loss"].get<double>(), info["train_mean_iou"].get<double>());
  return kOk;
}

int cmd_attack(const AttackArgs& a) {
  const SceneModel s = load_scene(a.scene);
  const SurrogateSegModel model = load_model(a.model);
  AttackRunOptions o;
  o.attack = a.cfg;
  o.attack.parallel = a.threads != 1;
  o.values = uniform_values(a.k);
  o.projector_i0 = a.i0;
  o.physical.degrade = !a.no_degrade;
  const AttackRun run = run_attack(s, model, o, [](const IterationRecord& r) {
    if (r.iteration % 10 == 0) std::fprintf(stderr, "iter %d loss %.5f iou %.4f ber %.2f\n", r.iteration, r.loss, r.iou, r.ber);
  });
  write_attack_run(a.out, run, o, {{"scene", a.scene}, {"model", a.model}});
  std::printf("clean IoU %.4f | random IoU %.4f | attack IoU %.4f BER %.2f (physical IoU %.4f BER %.2f)\n",
              run.clean.iou, run.random_digital.iou, run.attack_digital.iou, run.attack_digital.ber,
              run.attack_physical.iou, run.attack_physical.ber);
  if (run.opt.aborted) {
    log("attack aborted: non-finite loss");
    return kNumeric;
  }
  return kOk;
}

int cmd_cc_attack(const CcArgs& a) {
  const SceneModel s = load_scene(a.scene);
  const CcAttackResult r = run_cc_attack(s, parse_channel_mode(a.mode), a.top_q, a.i0);
  const fs::path out = a.out;
  fs::create_directories(out);
  Json j;
  j["mode"] = std::string(channel_mode_name(r.mode));
  j["top_q"] = a.top_q;
  j["estimate_rgb"] = r.estimate.rgb;
  j["estimate_fallback"] = r.estimate.fallback;
  j["selected_pixels"] = r.estimate.selected_pixels;
  j["gains"] = r.gains;
  j["angular_error_deg"] = r.angular_error_deg;
  write_json(out / "cc.json", j);
  preview_s0(out / "before_s0.ppm", r.captured);
  preview_s0(out / "after_s0.ppm", r.balanced);
  preview_dolp(out / "dolp.pgm", r.captured);
  preview_aolp(out / "aolp.ppm", r.captured);
  std::printf("mode %s angular error %.3f deg, gains %.4f %.4f %.4f\n", a.mode.c_str(), r.angular_error_deg,
              r.gains[0], r.gains[1], r.gains[2]);
  return kOk;
}

int cmd_eval(const EvalArgs& a) {
  const SceneModel s = load_scene(a.scene);
  const SurrogateSegModel model = load_model(a.model);
  if (model.color_channels() != s.dims.channels) throw StructuralError("model channel count does not match scene");
  StokesImage view;
  Json j;
  if (a.pattern.empty()) {
    view = render_background(s);
    j["condition"] = "clean";
  } else {
    const ProjectorModel proj = ProjectorModel::uniform(s.dims, a.i0);
    const ProjectionPattern pat = pattern_from_raster(read_ppat(a.pattern));
    if (!(pat.dims == s.dims)) throw StructuralError("pattern does not match scene");
    const std::vector<int> values = uniform_values(a.k);
    const CandidateSet cs = capture_candidates(s, proj, values, {});
    PhysicalOptions phys;
    phys.degrade = a.degrade;
    phys.seed = a.seed;
    view = apply_physical(perturbation_from_pattern(pat, values, a.grid), s, proj, cs, phys);
    j["condition"] = a.degrade ? "physical" : "rerendered";
    j["pattern"] = a.pattern;
  }
  const SegMetrics m = evaluate_stokes(model, view, s.glass_mask);
  j["iou"] = m.iou;
  j["ber"] = m.ber;
  j["tp"] = m.tp;
  j["tn"] = m.tn;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "eval.json", j);
  std::printf("IoU %.4f BER %.2f\n", m.iou, m.ber);
  return kOk;
}

int cmd_report(const ReportArgs& a) {
  if (!fs::is_directory(a.runs)) throw IoError("runs directory not found: " + a.runs);
  const Report r = collect_report(a.runs);
  write_report(a.out, r, a.reference);
  std::fputs(format_report(r, a.reference).c_str(), stdout);
  return kOk;
}

void add_attack_options(CLI::App* c, AttackArgs& a) {
  auto& cfg = a.cfg;
  c->add_option("--scene", a.scene, "scene directory")->required();
  c->add_option("--model", a.model, "model directory or model.sraw")->required();
  c->add_option("--grid", cfg.grid, "cell size in pixels")->check(CLI::IsMember(kGrids))->capture_default_str();
  c->add_flag("--eot", cfg.eot.enabled, "expectation over degradations");
  c->add_option("--eot-samples", cfg.eot.samples)->check(CLI::Range(1, 64))->capture_default_str();
  c->add_option("--seed", cfg.seed)->capture_default_str();
  c->add_option("--alpha", cfg.alpha, "ascent step")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--iters", cfg.iters)->check(CLI::Range(0, 100000))->capture_default_str();
  c->add_option("--tau", cfg.tau, "softmax temperature")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--lambda", cfg.lambda)->check(CLI::NonNegativeNumber)->capture_default_str();
  c->add_option("--k", a.k, "candidate count")->check(CLI::Range(2, 256))->capture_default_str();
  c->add_option("--projector-i0", a.i0)->check(CLI::NonNegativeNumber)->capture_default_str();
  c->add_flag("--no-degrade", a.no_degrade, "physical-world evaluation without blur/noise/drift");
  c->add_option("--threads", a.threads, "EOT worker threads (0 = all cores)")->check(CLI::NonNegativeNumber)->capture_default_str();
  c->add_option("--out", a.out)->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polarization-projection attacks on glass segmentation and color constancy"};
  app.require_subcommand(1);
  std::string simd_choice = "auto";
  app.add_option("--simd", simd_choice, "kernel set")->check(CLI::IsMember({"auto", "scalar", "avx2"}))->capture_default_str();

  GenSceneArgs gs;
  auto* c_gs = app.add_subcommand("gen-scene", "generate a synthetic scene");
  c_gs->add_option("--preset", gs.preset)->check(CLI::IsMember({"glass", "cc-bench"}))->capture_default_str();
  c_gs->add_option("--seed", gs.seed)->capture_default_str();
  c_gs->add_option("--width", gs.width)->check(CLI::Range(16, 8192))->capture_default_str();
  c_gs->add_option("--height", gs.height)->check(CLI::Range(16, 8192))->capture_default_str();
  c_gs->add_option("--channels", gs.channels)->check(CLI::IsMember({1, 3}))->capture_default_str();
  c_gs->add_option("--out", gs.out)->required();

  CaptureArgs cap;
  auto* c_cap = app.add_subcommand("capture", "capture the candidate set under constant projections");
  c_cap->add_option("--scene", cap.scene)->required();
  c_cap->add_option("--k", cap.k)->check(CLI::Range(2, 256))->capture_default_str();
  c_cap->add_option("--projector-i0", cap.i0)->check(CLI::NonNegativeNumber)->capture_default_str();
  c_cap->add_option("--sensor-noise", cap.sensor_noise, "enable the sensor path with this noise sigma");
  c_cap->add_option("--seed", cap.seed)->capture_default_str();
  c_cap->add_option("--out", cap.out)->required();

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "train the surrogate segmentation model");
  c_tr->add_option("--count", tr.count, "generated scenes")->check(CLI::Range(1, 100000))->capture_default_str();
  c_tr->add_option("--first-seed", tr.first_seed)->capture_default_str();
  c_tr->add_option("--width", tr.width)->check(CLI::Range(16, 8192))->capture_default_str();
  c_tr->add_option("--height", tr.height)->check(CLI::Range(16, 8192))->capture_default_str();
  c_tr->add_option("--channels", tr.channels)->check(CLI::IsMember({1, 3}))->capture_default_str();
  c_tr->add_option("--scenes", tr.scenes, "train on these scene directories instead");
  c_tr->add_option("--iters", tr.iters)->check(CLI::Range(1, 1000000))->capture_default_str();
  c_tr->add_option("--lr", tr.lr)->check(CLI::PositiveNumber)->capture_default_str();
  c_tr->add_option("--seed", tr.seed)->capture_default_str();
  c_tr->add_option("--threads", tr.threads, "0 = all cores")->check(CLI::NonNegativeNumber)->capture_default_str();
  c_tr->add_option("--out", tr.out)->required();

  AttackArgs at;
  auto* c_at = app.add_subcommand("attack", "optimize an adversarial projection");
  add_attack_options(c_at, at);

  CcArgs cc;
  auto* c_cc = app.add_subcommand("cc-attack", "channel-polarized projection against DoLP color constancy");
  c_cc->add_option("--scene", cc.scene)->required();
  c_cc->add_option("--mode", cc.mode)->required()->check(CLI::IsMember(mode_names()));
  c_cc->add_option("--top-q", cc.top_q, "fraction of highest-DoLP pixels")->check(CLI::Range(1e-6, 1.0))->capture_default_str();
  c_cc->add_option("--projector-i0", cc.i0)->check(CLI::PositiveNumber)->capture_default_str();
  c_cc->add_option("--out", cc.out)->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "segment a scene, optionally under a projection pattern");
  c_ev->add_option("--scene", ev.scene)->required();
  c_ev->add_option("--model", ev.model)->required();
  c_ev->add_option("--pattern", ev.pattern, ".ppat drive pattern");
  c_ev->add_option("--grid", ev.grid)->check(CLI::IsMember(kGrids))->capture_default_str();
  c_ev->add_option("--k", ev.k)->check(CLI::Range(2, 256))->capture_default_str();
  c_ev->add_option("--projector-i0", ev.i0)->check(CLI::NonNegativeNumber)->capture_default_str();
  c_ev->add_flag("--degrade", ev.degrade, "blur, noise and ambient drift");
  c_ev->add_option("--seed", ev.seed)->capture_default_str();
  c_ev->add_option("--out", ev.out)->required();

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "collect run metrics into a table");
  c_rp->add_option("--runs", rp.runs, "directory searched recursively for metrics.json")->required();
  c_rp->add_flag("--reference-values", rp.reference, "add published reference columns");
  c_rp->add_option("--out", rp.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (simd_choice != "auto" && !simd::select_kernels(simd_choice)) {
    log("kernel set not available on this machine: " + simd_choice);
    return kUsage;
  }

  try {
    if (c_gs->parsed()) return cmd_gen_scene(gs);
    if (c_cap->parsed()) return cmd_capture(cap);
    if (c_tr->parsed()) return cmd_train(tr);
    if (c_at->parsed()) return cmd_attack(at);
    if (c_cc->parsed()) return cmd_cc_attack(cc);
    if (c_ev->parsed()) return cmd_eval(ev);
    if (c_rp->parsed()) return cmd_report(rp);
  } catch (const ValidationError& e) {
    log(std::string("invalid argument: ") + e.what());
    return kUsage;
  } catch (const NumericError& e) {
    log(std::string("numeric failure: ") + e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    log(std::string("input error: ") + e.what());
    return kInput;
  }
  return kUsage;
}
