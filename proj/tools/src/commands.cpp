#include "cral_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "cral/config.hpp"
#include "cral/errors.hpp"
#include "cral/formats.hpp"
#include "cral/synth.hpp"

namespace cral::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g12(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

// Runs `body`, turning the library's error types into a diagnostic and exit 1.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  }
  return kInputError;
}

PipelineConfig load_config_or_default(const std::optional<fs::path>& path) {
  return path ? load_pipeline_config(*path) : PipelineConfig{};
}

}  // namespace

// ---- project ---------------------------------------------------------------

int cmd_project(const ProjectOptions& opts, std::istream& in, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (opts.direction != "r2c" && opts.direction != "c2r") {
      err << "error: --direction must be r2c or c2r\n";
      return kInputError;
    }
    Calibration calib;
    if (opts.calibration) {
      calib = load_calibration(*opts.calibration);
    } else if (opts.config) {
      const PipelineConfig cfg = load_pipeline_config(*opts.config);
      calib = {cfg.annotator.cam, cfg.annotator.initial_plane};
    } else {
      err << "error: project needs --calibration or --config\n";
      return kInputError;
    }

    std::ifstream file;
    if (opts.input) {
      file.open(*opts.input);
      if (!file) throw FormatError("cannot open " + opts.input->string());
    }
    std::istream& src = opts.input ? file : in;
    const bool r2c = opts.direction == "r2c";

    std::size_t failures = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(src, line)) {
      ++lineno;
      std::replace(line.begin(), line.end(), ',', ' ');
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ls(line);
      double a = 0.0, b = 0.0;
      std::string extra;
      if (!(ls >> a >> b) || (ls >> extra)) {
        out << "error: line " << lineno << ": expected two numbers\n";
        ++failures;
        continue;
      }
      try {
        if (r2c) {
          const double theta = opts.degrees ? deg_to_rad(b) : b;
          const PixelPoint p = project_r2c({a, theta}, calib.initial_plane, calib.cam);
          out << g12(p.u) << ' ' << g12(p.v) << "\n";
        } else {
          const RadarPoint p = project_c2r({a, b}, calib.initial_plane, calib.cam);
          out << g12(p.r) << ' ' << g12(opts.degrees ? rad_to_deg(p.theta) : p.theta) << "\n";
        }
      } catch (const DomainError& e) {
        out << "error: line " << lineno << ": " << e.what() << "\n";
        ++failures;
      }
    }
    if (failures > 0) {
      err << failures << " input line(s) could not be projected\n";
      return kPartialFailure;
    }
    return kOk;
  });
}

// ---- cfar ------------------------------------------------------------------

namespace {

std::vector<fs::path> resolve_frames(const fs::path& rf) {
  if (fs::is_directory(rf)) return list_rf_frames(rf);
  fs::path stem = rf;
  if (stem.extension() == ".hdr" || stem.extension() == ".bin") stem.replace_extension();
  return {stem};
}

}  // namespace

int cmd_cfar(const CfarOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const PipelineConfig cfg = load_config_or_default(opts.config);
    std::ofstream file;
    if (opts.output) file = open_output(*opts.output);
    std::ostream& dst = opts.output ? file : out;

    const auto frames = resolve_frames(opts.rf);
    if (frames.empty()) {
      err << "error: no RF frames under " << opts.rf.string() << "\n";
      return kInputError;
    }
    auto peak_json = [](const RadarPeak& p) {
      return json{{"range", p.point.r},
                  {"azimuth", p.point.theta},
                  {"magnitude", p.magnitude},
                  {"cell", {p.cell.range_bin, p.cell.azimuth_bin}}};
    };
    dst << json{{"format", "cral-cfar"}, {"version", kFormatVersion}}.dump() << "\n";
    for (const fs::path& stem : frames) {
      const RfImage img = read_rf_image(stem);
      const std::vector<RadarPeak> peaks = cfar_detect(img, cfg.annotator.cfar);
      const Clustering clustering = cluster_peaks(peaks, cfg.annotator.dbscan);
      json rec = {{"frame_id", img.frame_id}, {"peaks", json::array()}, {"clusters", json::array()},
                  {"noise", json::array()}};
      for (const RadarPeak& p : peaks) rec["peaks"].push_back(peak_json(p));
      for (const PeakCluster& c : clustering.clusters) {
        json jc = {{"id", c.id}, {"range", c.centroid.r}, {"azimuth", c.centroid.theta}, {"peaks", json::array()}};
        for (const RadarPeak& p : c.peaks) jc["peaks"].push_back(peak_json(p));
        rec["clusters"].push_back(std::move(jc));
      }
      for (const RadarPeak& p : clustering.noise) rec["noise"].push_back(peak_json(p));
      dst << rec.dump() << "\n";
    }
    return kOk;
  });
}

// ---- annotate --------------------------------------------------------------

int cmd_annotate(const AnnotateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    std::optional<fs::path> rf_dir = opts.rf_dir;
    std::optional<fs::path> detections = opts.detections;
    std::optional<fs::path> config = opts.config;
    if (opts.input) {
      if (!fs::is_directory(*opts.input)) throw FormatError("not a directory: " + opts.input->string());
      if (!rf_dir) rf_dir = *opts.input / "rf";
      if (!detections) detections = *opts.input / "camera.jsonl";
      if (!config && fs::exists(*opts.input / "config.json")) config = *opts.input / "config.json";
    }
    if (!rf_dir || !detections) {
      err << "error: annotate needs an input directory or both --rf-dir and --detections\n";
      return kInputError;
    }
    const fs::path out_dir = opts.output ? *opts.output : opts.input ? *opts.input : fs::path(".");
    const PipelineConfig cfg = load_config_or_default(config);

    std::vector<SensorFrame> frames;
    std::map<std::int64_t, std::size_t> by_id;
    for (const fs::path& stem : list_rf_frames(*rf_dir)) {
      SensorFrame f;
      try {
        f.rf = read_rf_image(stem);
      } catch (const FormatError& e) {
        throw FormatError("RF frame " + stem.filename().string() + ": " + e.what());
      }
      if (by_id.contains(f.rf.frame_id)) {
        throw FormatError("RF frame " + stem.filename().string() + ": duplicate frame_id " +
                          std::to_string(f.rf.frame_id));
      }
      frames.push_back(std::move(f));
      by_id[frames.back().rf.frame_id] = 0;
    }
    if (frames.empty()) {
      err << "error: no RF frames in " << rf_dir->string() << "\n";
      return kInputError;
    }
    std::sort(frames.begin(), frames.end(),
              [](const SensorFrame& a, const SensorFrame& b) { return a.rf.frame_id < b.rf.frame_id; });
    for (std::size_t k = 0; k < frames.size(); ++k) by_id[frames[k].rf.frame_id] = k;

    std::size_t orphans = 0;
    for (CameraObject& o : read_camera_objects(*detections)) {
      const auto it = by_id.find(o.frame_id);
      if (it == by_id.end()) {
        ++orphans;
        continue;
      }
      frames[it->second].objects.push_back(std::move(o));
    }
    if (orphans > 0) err << "warning: " << orphans << " camera object(s) refer to frames without RF data\n";

    const SequenceResult result = annotate_sequence(frames, cfg.annotator, std::max<std::size_t>(1, opts.workers));

    std::vector<Annotation> anns;
    std::size_t aligned = 0, supplementary = 0;
    for (const FrameResult& fr : result.frames) {
      for (const std::string& d : fr.diagnostics) err << "frame " << fr.frame_id << ": " << d << "\n";
      for (const Annotation& a : fr.annotations) {
        (a.source == AnnotationSource::kAligned ? aligned : supplementary)++;
        anns.push_back(a);
      }
    }
    fs::create_directories(out_dir);
    {
      std::ofstream f = open_output(out_dir / "annotations.jsonl");
      write_annotations(f, anns, opts.scenario);
    }
    {
      std::ofstream f = open_output(out_dir / "planes.jsonl");
      write_plane_log(f, result.windows);
    }
    for (const WindowLog& w : result.windows) {
      out << "window " << w.first_frame << "-" << w.last_frame << ": pairs " << w.n_pairs << ", objective "
          << g12(w.initial_objective) << " -> " << g12(w.objective) << ", phi " << g12(rad_to_deg(w.plane.phi))
          << " deg, gamma " << g12(rad_to_deg(w.plane.gamma)) << " deg\n";
    }
    out << anns.size() << " annotations (" << aligned << " aligned, " << supplementary << " supplementary) in "
        << (out_dir / "annotations.jsonl").string() << "\n";
    return kOk;
  });
}

// ---- score -----------------------------------------------------------------

int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const PipelineConfig cfg = load_config_or_default(opts.config);
    const std::vector<PointDet> dets = read_point_dets(opts.detections);
    const std::vector<PointDet> gts = read_point_dets(opts.ground_truth);
    const ScoreReport report = score(dets, gts, cfg.annotator.classes, cfg.scoring);
    write_report_text(out, report, opts.per_class, opts.per_scenario);
    if (opts.output) {
      std::ofstream f = open_output(*opts.output);
      write_report_kv(f, report);
    }
    if (opts.plot_data) {
      std::ofstream f = open_output(*opts.plot_data);
      write_plot_data(f, report);
    }
    return kOk;
  });
}

// ---- synth -----------------------------------------------------------------

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    SceneSpec spec = opts.spec ? load_scene_spec(*opts.spec) : default_scene();
    if (opts.seed) spec.seed = *opts.seed;
    if (opts.frames) spec.n_frames = *opts.frames;
    const RenderedScene scene = render_scene(spec);

    const fs::path rf_dir = opts.output / "rf";
    fs::create_directories(rf_dir);
    for (const auto& entry : fs::directory_iterator(rf_dir)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".hdr" || ext == ".bin")) fs::remove(entry.path());
    }

    std::vector<CameraObject> objects;
    std::vector<Annotation> truth;
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
      const SensorFrame& frame = scene.frames[f];
      write_rf_image(frame.rf, rf_frame_stem(rf_dir, frame.rf.frame_id));
      objects.insert(objects.end(), frame.objects.begin(), frame.objects.end());
      truth.insert(truth.end(), scene.truth.annotations[f].begin(), scene.truth.annotations[f].end());
    }
    {
      std::ofstream f = open_output(opts.output / "camera.jsonl");
      write_camera_objects(f, objects);
    }
    {
      std::ofstream f = open_output(opts.output / "truth.jsonl");
      write_annotations(f, truth, spec.scenario);
    }
    {
      PipelineConfig cfg;
      cfg.annotator.cam = spec.cam;
      std::ofstream f = open_output(opts.output / "config.json");
      f << dump_pipeline_config(cfg);
    }
    {
      std::ofstream f = open_output(opts.output / "scene.json");
      f << dump_scene_spec(spec);
    }
    out << "wrote " << scene.frames.size() << " frames, " << objects.size() << " camera objects, " << truth.size()
        << " truth records to " << opts.output.string() << "\n";
    return kOk;
  });
}

}  // namespace cral::cli
