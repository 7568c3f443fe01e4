#pragma once

// Directory layouts.
//
// Scene:          manifest.json, k_s.sraw, albedo.sraw, diffuse_dolp.sraw,
//                 diffuse_aolp.sraw, ambient.sraw, glass_mask.sraw
// Candidate set:  manifest.json, background.sraw, cand_00.sraw ... cand_{K-1}.sraw

#include <filesystem>
#include <vector>
#include <json.hpp>
#include <string>

#include "polatk/attack.hpp"
#include "polatk/scene.hpp"

namespace polatk {

using Json = nlohmann::ordered_json;

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// `meta` is merged into the manifest (seed, generator parameters, ...).
void save_scene(const std::filesystem::path& dir, const SceneModel& scene, const Json& meta = Json::object());
SceneModel load_scene(const std::filesystem::path& dir);

void save_candidates(const std::filesystem::path& dir, const CandidateSet& cs, const Json& meta = Json::object());
CandidateSet load_candidates(const std::filesystem::path& dir);

Json to_json(const SceneParams& p);
Json to_json(const AttackConfig& c);
Json to_json(const ProjectorModel& p);

/// Maps a drive-level pattern back to per-cell candidate indices. Every cell
/// must be constant and use one of `values`.
Perturbation perturbation_from_pattern(const ProjectionPattern& pattern, const std::vector<int>& values, int grid);

}  // namespace polatk
