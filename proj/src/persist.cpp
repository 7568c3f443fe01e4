#include "polatk/persist.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "polatk/raster_io.hpp"

namespace polatk {

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

namespace {

template <class Img>
Img load_checked(const std::filesystem::path& p, Dims expect) {
  Img img = load_image<Img>(p);
  if (!(img.dims() == expect)) throw IoError("unexpected raster size in " + p.string());
  return img;
}

Dims dims_from(const nlohmann::json& j) {
  try {
    Dims d{j.at("width").get<int>(), j.at("height").get<int>(), j.at("channels").get<int>()};
    if (d.width <= 0 || d.height <= 0 || d.channels <= 0) throw IoError("manifest: nonpositive dims");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
}

}  // namespace

void save_scene(const std::filesystem::path& dir, const SceneModel& s, const Json& meta) {
  s.validate();
  std::filesystem::create_directories(dir);
  save_image(dir / "k_s.sraw", s.k_s);
  save_image(dir / "albedo.sraw", s.albedo);
  save_image(dir / "diffuse_dolp.sraw", s.diffuse_dolp);
  save_image(dir / "diffuse_aolp.sraw", s.diffuse_aolp);
  save_image(dir / "ambient.sraw", s.ambient);
  save_mask(dir / "glass_mask.sraw", s.glass_mask);
  Json j;
  j["kind"] = "scene";
  j["width"] = s.dims.width;
  j["height"] = s.dims.height;
  j["channels"] = s.dims.channels;
  j["spec_reflectance"] = s.spec_reflectance;
  j["glass_fraction"] = glass_fraction(s.glass_mask);
  for (const auto& [k, v] : meta.items()) j[k] = v;
  write_json(dir / "manifest.json", j);
}

SceneModel load_scene(const std::filesystem::path& dir) {
  const auto j = read_json(dir / "manifest.json");
  if (j.value("kind", "") != "scene") throw IoError("not a scene directory: " + dir.string());
  const Dims d = dims_from(j);
  const Dims mono{d.width, d.height, 1};
  SceneModel s;
  s.dims = d;
  s.k_s = load_checked<Field>(dir / "k_s.sraw", mono);
  s.albedo = load_checked<Field>(dir / "albedo.sraw", d);
  s.diffuse_dolp = load_checked<Field>(dir / "diffuse_dolp.sraw", mono);
  s.diffuse_aolp = load_checked<Field>(dir / "diffuse_aolp.sraw", mono);
  s.ambient = load_checked<StokesImage>(dir / "ambient.sraw", d);
  s.glass_mask = load_mask(dir / "glass_mask.sraw");
  try {
    s.spec_reflectance = j.at("spec_reflectance").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid scene directory: ") + e.what());
  }
  return s;
}

namespace {

std::string cand_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cand_%02zu.sraw", i);
  return buf;
}

}  // namespace

void save_candidates(const std::filesystem::path& dir, const CandidateSet& cs, const Json& meta) {
  cs.validate();
  std::filesystem::create_directories(dir);
  save_image(dir / "background.sraw", cs.background);
  Json files = Json::array();
  for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
    save_image(dir / cand_name(i), cs.candidates[i]);
    files.push_back(cand_name(i));
  }
  Json j;
  j["kind"] = "candidate_set";
  j["width"] = cs.dims().width;
  j["height"] = cs.dims().height;
  j["channels"] = cs.dims().channels;
  j["k"] = cs.k();
  j["values"] = cs.values;
  j["candidates"] = files;
  j["background"] = "background.sraw";
  for (const auto& [k, v] : meta.items()) j[k] = v;
  write_json(dir / "manifest.json", j);
}

CandidateSet load_candidates(const std::filesystem::path& dir) {
  const auto j = read_json(dir / "manifest.json");
  if (j.value("kind", "") != "candidate_set") throw IoError("not a candidate-set directory: " + dir.string());
  const Dims d = dims_from(j);
  CandidateSet cs;
  try {
    cs.values = j.at("values").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("manifest: ") + e.what());
  }
  cs.background = load_checked<StokesImage>(dir / "background.sraw", d);
  for (std::size_t i = 0; i < cs.values.size(); ++i) cs.candidates.push_back(load_checked<StokesImage>(dir / cand_name(i), d));
  try {
    cs.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid candidate set: ") + e.what());
  }
  return cs;
}

Json to_json(const SceneParams& p) {
  Json j;
  j["regions"] = {p.min_regions, p.max_regions};
  j["region_size"] = {p.region_size_min, p.region_size_max};
  j["glass_fraction"] = {p.glass_fraction_min, p.glass_fraction_max};
  j["glass_ks"] = {p.glass_ks_min, p.glass_ks_max};
  j["background_ks"] = {p.background_ks_min, p.background_ks_max};
  j["glass_albedo"] = {p.glass_albedo_min, p.glass_albedo_max};
  j["background_albedo"] = {p.background_albedo_min, p.background_albedo_max};
  j["spec_reflectance"] = {p.spec_reflectance_min, p.spec_reflectance_max};
  j["ambient_s0"] = {p.ambient_s0_min, p.ambient_s0_max};
  j["ambient_dolp"] = {p.ambient_dolp_min, p.ambient_dolp_max};
  j["ambient_aolp"] = p.ambient_aolp;
  return j;
}

Json to_json(const AttackConfig& c) {
  Json j;
  j["tau"] = c.tau;
  j["alpha"] = c.alpha;
  j["iters"] = c.iters;
  j["lambda"] = c.lambda;
  j["grid"] = c.grid;
  j["seed"] = c.seed;
  j["eot"] = {{"enabled", c.eot.enabled},
              {"noise_sigma", c.eot.noise_sigma},
              {"blur_sigma", c.eot.blur_sigma},
              {"bg_scale_range", {c.eot.bg_scale_min, c.eot.bg_scale_max}},
              {"samples_per_step", c.eot.samples}};
  return j;
}

Json to_json(const ProjectorModel& p) {
  Json j;
  j["width"] = p.width;
  j["height"] = p.height;
  j["channels"] = p.channels;
  j["i0_per_channel"] = p.i0_per_channel;
  j["back_polarizer_angle"] = p.back_polarizer_angle;
  j["max_rotation"] = p.max_rotation;
  j["gamma"] = p.gamma;
  j["depolarization"] = p.depolarization;
  return j;
}

Perturbation perturbation_from_pattern(const ProjectionPattern& pattern, const std::vector<int>& values, int grid) {
  const Dims d = pattern.dims;
  const GridLayout L = GridLayout::for_dims(d, grid);
  Perturbation p{L, std::vector<int>(static_cast<std::size_t>(L.cells()), -1)};
  for (int c = 0; c < d.channels; ++c) {
    for (int y = 0; y < d.height; ++y) {
      for (int x = 0; x < d.width; ++x) {
        const int v = pattern.at(c, y, x);
        const auto it = std::ranges::find(values, v);
        if (it == values.end()) throw ValidationError("pattern uses a drive level outside the candidate set");
        const int idx = static_cast<int>(it - values.begin());
        int& cell = p.index[static_cast<std::size_t>((y / grid) * L.cells_x + x / grid)];
        if (cell >= 0 && cell != idx) throw ValidationError("pattern is not constant within grid cells");
        cell = idx;
      }
    }
  }
  return p;
}

}  // namespace polatk
