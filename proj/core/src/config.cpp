#include "cral/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cral/errors.hpp"

namespace cral {

using nlohmann::json;

namespace {

// Strict view of one JSON object: typed lookups that remember which keys
// were consumed, and a finish() that rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void get(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(name(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(name(key) + " must be an integer");
      out = v->get<int>();
    }
  }
  void get(const std::string& key, std::size_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) {
        throw ConfigError(name(key) + " must be a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }
  void get(const std::string& key, std::uint64_t& out, std::nullptr_t) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(name(key) + " must be an unsigned integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(name(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  void get_degrees(const std::string& key, double& radians) {
    double deg = rad_to_deg(radians);
    const bool present = has(key);
    get(key, deg);
    if (present) radians = deg_to_rad(deg);
  }
  template <std::size_t N>
  void get(const std::string& key, std::array<double, N>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array() || v->size() != N) {
        throw ConfigError(name(key) + " must be an array of " + std::to_string(N) + " numbers");
      }
      for (std::size_t k = 0; k < N; ++k) {
        if (!(*v)[k].is_number()) throw ConfigError(name(key) + " must hold numbers");
        out[k] = (*v)[k].get<double>();
      }
    }
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(name(key) + " must be an array");
      out.clear();
      for (const json& x : *v) {
        if (!x.is_number()) throw ConfigError(name(key) + " must hold numbers");
        out.push_back(x.get<double>());
      }
    }
  }

  std::optional<Section> child(const std::string& key) {
    if (const json* v = take(key)) return Section(*v, name(key));
    return std::nullopt;
  }
  const json* raw(const std::string& key) { return take(key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.contains(item.key())) throw ConfigError("unknown key '" + name(item.key()) + "'");
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "document" : "'" + path_ + "'"; }
  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void checked(const std::string& section, F&& validate) {
  try {
    validate();
  } catch (const ConfigError& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

void read_plane(Section& s, GroundPlane& g) {
  s.get_degrees("phi_deg", g.phi);
  s.get_degrees("gamma_deg", g.gamma);
  s.get("h", g.h);
  s.finish();
}

json plane_json(const GroundPlane& g) {
  return {{"phi_deg", rad_to_deg(g.phi)}, {"gamma_deg", rad_to_deg(g.gamma)}, {"h", g.h}};
}

void read_camera_fields(Section& s, CameraModel& cam) {
  s.get("fx", cam.fx);
  s.get("fy", cam.fy);
  s.get("cx", cam.cx);
  s.get("cy", cam.cy);
  s.get("image_width", cam.image_width);
  s.get("image_height", cam.image_height);
  s.get("t_cr", cam.t_cr);
}

json camera_json(const CameraModel& cam) {
  return {{"fx", cam.fx},
          {"fy", cam.fy},
          {"cx", cam.cx},
          {"cy", cam.cy},
          {"image_width", cam.image_width},
          {"image_height", cam.image_height},
          {"t_cr", cam.t_cr}};
}

void read_calibration(Section& s, Calibration& c) {
  read_camera_fields(s, c.cam);
  if (auto p = s.child("initial_plane")) read_plane(*p, c.initial_plane);
  s.finish();
  checked(s.name("camera"), [&] { c.cam.validate(); });
  checked(s.name("initial_plane"), [&] { c.initial_plane.validate(); });
}

json calibration_json(const Calibration& c) {
  json j = camera_json(c.cam);
  j["initial_plane"] = plane_json(c.initial_plane);
  return j;
}

}  // namespace

void PipelineConfig::validate() const {
  annotator.validate();
  scoring.validate();
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  const json doc = parse_json(json_text, "pipeline config");
  Section root(doc, "");
  PipelineConfig cfg;
  AnnotatorConfig& a = cfg.annotator;

  if (auto s = root.child("calibration")) {
    Calibration c{a.cam, a.initial_plane};
    read_calibration(*s, c);
    a.cam = c.cam;
    a.initial_plane = c.initial_plane;
  }
  if (auto s = root.child("cfar")) {
    s->get("guard_range", a.cfar.guard_range);
    s->get("guard_azimuth", a.cfar.guard_azimuth);
    s->get("training_range", a.cfar.training_range);
    s->get("training_azimuth", a.cfar.training_azimuth);
    s->get("pfa", a.cfar.pfa);
    s->finish();
  }
  checked("cfar", [&] { a.cfar.validate(); });
  if (auto s = root.child("dbscan")) {
    s->get("eps", a.dbscan.eps);
    s->get("min_pts", a.dbscan.min_pts);
    s->finish();
  }
  checked("dbscan", [&] { a.dbscan.validate(); });
  if (auto s = root.child("alignment")) {
    s->get("alpha", a.align.alpha);
    s->get("window", a.align.window);
    s->get("gating_margin", a.align.gating_margin);
    s->get("rejection_ratio", a.align.rejection_ratio);
    s->get_degrees("plane_bound_deg", a.align.plane_bound);
    if (auto o = s->child("optimizer")) {
      o->get_degrees("initial_step_deg", a.align.optimizer.initial_step);
      o->get("x_tolerance", a.align.optimizer.x_tolerance);
      o->get("max_evaluations", a.align.optimizer.max_evaluations);
      o->finish();
    }
    s->finish();
  }
  checked("alignment", [&] { a.align.validate(); });
  if (auto s = root.child("classes")) {
    for (ObjectClass c : kAllClasses) {
      const std::string key(to_string(c));
      if (auto cs = s->child(key)) {
        ClassMeta m = a.classes.at(c);
        cs->get("avg_height", m.avg_height);
        cs->get("kappa", m.kappa);
        cs->finish();
        a.classes.set(c, m);
      }
    }
    s->finish();
  }
  a.classes.validate();
  if (auto s = root.child("scoring")) {
    s->get("primary_threshold", cfg.scoring.primary_threshold);
    s->get("sweep", cfg.scoring.sweep);
    s->finish();
  }
  cfg.scoring.validate();
  root.finish();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  try {
    return parse_pipeline_config(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string dump_pipeline_config(const PipelineConfig& cfg) {
  const AnnotatorConfig& a = cfg.annotator;
  json classes = json::object();
  for (ObjectClass c : kAllClasses) {
    classes[std::string(to_string(c))] = {{"avg_height", a.classes.at(c).avg_height},
                                          {"kappa", a.classes.at(c).kappa}};
  }
  const json j = {
      {"calibration", calibration_json({a.cam, a.initial_plane})},
      {"cfar",
       {{"guard_range", a.cfar.guard_range},
        {"guard_azimuth", a.cfar.guard_azimuth},
        {"training_range", a.cfar.training_range},
        {"training_azimuth", a.cfar.training_azimuth},
        {"pfa", a.cfar.pfa}}},
      {"dbscan", {{"eps", a.dbscan.eps}, {"min_pts", a.dbscan.min_pts}}},
      {"alignment",
       {{"alpha", a.align.alpha},
        {"window", a.align.window},
        {"gating_margin", a.align.gating_margin},
        {"rejection_ratio", a.align.rejection_ratio},
        {"plane_bound_deg", rad_to_deg(a.align.plane_bound)},
        {"optimizer",
         {{"initial_step_deg", rad_to_deg(a.align.optimizer.initial_step)},
          {"x_tolerance", a.align.optimizer.x_tolerance},
          {"max_evaluations", a.align.optimizer.max_evaluations}}}}},
      {"classes", classes},
      {"scoring", {{"primary_threshold", cfg.scoring.primary_threshold}, {"sweep", cfg.scoring.sweep}}},
  };
  return j.dump(2) + "\n";
}

Calibration load_calibration(const std::filesystem::path& path) {
  const json doc = parse_json(read_text_file(path), path.string());
  try {
    if (doc.is_object() && doc.contains("calibration")) {
      const PipelineConfig cfg = parse_pipeline_config(doc.dump());
      return {cfg.annotator.cam, cfg.annotator.initial_plane};
    }
    Section root(doc, "");
    Calibration c;
    read_calibration(root, c);
    return c;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string dump_calibration(const Calibration& calib) { return calibration_json(calib).dump(2) + "\n"; }

SceneSpec parse_scene_spec(const std::string& json_text) {
  const json doc = parse_json(json_text, "scene spec");
  Section root(doc, "");
  SceneSpec spec;
  spec.objects.clear();

  root.get("seed", spec.seed, nullptr);
  root.get("n_frames", spec.n_frames);
  root.get("scenario", spec.scenario);
  if (auto s = root.child("true_plane")) read_plane(*s, spec.true_plane);
  if (auto s = root.child("camera")) {
    read_camera_fields(*s, spec.cam);
    s->finish();
  }
  if (auto s = root.child("grid")) {
    s->get("range_bins", spec.grid.range_bins);
    s->get("azimuth_bins", spec.grid.azimuth_bins);
    s->get("range_res", spec.grid.range_res);
    s->get("range_min", spec.grid.range_min);
    s->get_degrees("azimuth_min_deg", spec.grid.azimuth_min);
    s->get_degrees("azimuth_max_deg", spec.grid.azimuth_max);
    s->finish();
  }
  if (auto s = root.child("noise")) {
    s->get("rf_noise_sigma", spec.noise.rf_noise_sigma);
    s->get("blob_db", spec.noise.blob_db);
    s->get("range_spread", spec.noise.range_spread);
    s->get("bbox_jitter_px", spec.noise.bbox_jitter_px);
    s->get("camera_dropout", spec.noise.camera_dropout);
    s->get("radar_dropout", spec.noise.radar_dropout);
    s->finish();
  }
  if (const json* objs = root.raw("objects")) {
    if (!objs->is_array()) throw ConfigError("objects must be an array");
    for (std::size_t k = 0; k < objs->size(); ++k) {
      Section s((*objs)[k], "objects[" + std::to_string(k) + "]");
      ObjectSpec o;
      s.get("name", o.name);
      std::string cls = std::string(to_string(o.cls));
      s.get("class", cls);
      const auto parsed = parse_class(cls);
      if (!parsed) throw ConfigError(s.name("class") + ": unknown class '" + cls + "'");
      o.cls = *parsed;
      std::array<double, 2> start{o.start.x, o.start.z};
      std::array<double, 2> vel{o.velocity.x, o.velocity.z};
      s.get("start", start);
      s.get("velocity", vel);
      o.start = {start[0], start[1]};
      o.velocity = {vel[0], vel[1]};
      s.get("height", o.height);
      s.get("width", o.width);
      s.get("score", o.score);
      s.finish();
      spec.objects.push_back(o);
    }
  }
  root.finish();
  spec.validate();
  return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  try {
    return parse_scene_spec(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string dump_scene_spec(const SceneSpec& spec) {
  json objects = json::array();
  for (const ObjectSpec& o : spec.objects) {
    objects.push_back({{"name", o.name},
                       {"class", std::string(to_string(o.cls))},
                       {"start", {o.start.x, o.start.z}},
                       {"velocity", {o.velocity.x, o.velocity.z}},
                       {"height", o.height},
                       {"width", o.width},
                       {"score", o.score}});
  }
  const json j = {
      {"seed", spec.seed},
      {"n_frames", spec.n_frames},
      {"scenario", spec.scenario},
      {"true_plane", plane_json(spec.true_plane)},
      {"camera", camera_json(spec.cam)},
      {"grid",
       {{"range_bins", spec.grid.range_bins},
        {"azimuth_bins", spec.grid.azimuth_bins},
        {"range_res", spec.grid.range_res},
        {"range_min", spec.grid.range_min},
        {"azimuth_min_deg", rad_to_deg(spec.grid.azimuth_min)},
        {"azimuth_max_deg", rad_to_deg(spec.grid.azimuth_max)}}},
      {"noise",
       {{"rf_noise_sigma", spec.noise.rf_noise_sigma},
        {"blob_db", spec.noise.blob_db},
        {"range_spread", spec.noise.range_spread},
        {"bbox_jitter_px", spec.noise.bbox_jitter_px},
        {"camera_dropout", spec.noise.camera_dropout},
        {"radar_dropout", spec.noise.radar_dropout}}},
      {"objects", objects},
  };
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cral
