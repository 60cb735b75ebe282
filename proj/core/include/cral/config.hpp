#pragma once

// Pipeline and scene configuration, read from JSON documents. Parsing is
// strict: every key is optional (defaults below), unknown keys and values
// violating a module invariant are rejected with the offending key named.

#include <filesystem>
#include <string>

#include "cral/align.hpp"
#include "cral/scoring.hpp"
#include "cral/synth.hpp"

namespace cral {

/// Defaults: initial plane phi 4 deg, gamma 0 deg, h 1.65 m; alpha 0.06;
/// window 50 frames; canonical 1440x1080 camera with f = 1000 px.
struct PipelineConfig {
  AnnotatorConfig annotator;
  ScoringConfig scoring;

  void validate() const;
};

PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string dump_pipeline_config(const PipelineConfig& cfg);

/// Calibration-only document: camera intrinsics, t_cr and initial plane.
/// Accepts either a bare calibration object or a pipeline config (whose
/// "calibration" section is used).
struct Calibration {
  CameraModel cam;
  GroundPlane initial_plane;
};

Calibration load_calibration(const std::filesystem::path& path);
std::string dump_calibration(const Calibration& calib);

SceneSpec parse_scene_spec(const std::string& json_text);
SceneSpec load_scene_spec(const std::filesystem::path& path);
std::string dump_scene_spec(const SceneSpec& spec);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace cral
