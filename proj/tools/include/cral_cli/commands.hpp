#pragma once

// Subcommand implementations behind the `cral` binary. Each takes parsed
// options plus the streams to use and returns the process exit status, so
// tests can drive them without spawning processes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace cral::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,      // bad arguments, unreadable or ill-formed inputs
  kPartialFailure = 2,  // some input lines could not be processed
};

struct ProjectOptions {
  std::string direction = "r2c";  // r2c: "r theta" -> "u v"; c2r: "u v" -> "r theta"
  std::optional<std::filesystem::path> calibration;
  std::optional<std::filesystem::path> config;  // pipeline config; its calibration is used
  std::optional<std::filesystem::path> input;   // stdin when absent
  bool degrees = false;                         // azimuth in degrees instead of radians
};

int cmd_project(const ProjectOptions& opts, std::istream& in, std::ostream& out, std::ostream& err);

struct CfarOptions {
  std::filesystem::path rf;  // frame stem, .hdr/.bin file, or a directory of frames
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> output;  // stdout when absent
};

int cmd_cfar(const CfarOptions& opts, std::ostream& out, std::ostream& err);

struct AnnotateOptions {
  std::optional<std::filesystem::path> input;  // directory holding rf/, camera.jsonl, config.json
  std::optional<std::filesystem::path> rf_dir;
  std::optional<std::filesystem::path> detections;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> output;  // defaults to the input directory
  std::string scenario;
  std::size_t workers = 1;
};

int cmd_annotate(const AnnotateOptions& opts, std::ostream& out, std::ostream& err);

struct ScoreOptions {
  std::filesystem::path detections;
  std::filesystem::path ground_truth;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> output;     // key=value metrics file
  std::optional<std::filesystem::path> plot_data;  // threshold / precision / recall table
  bool per_class = false;
  bool per_scenario = false;
};

int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err);

struct SynthOptions {
  std::optional<std::filesystem::path> spec;  // built-in demo scene when absent
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> frames;
  std::filesystem::path output;
};

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace cral::cli
