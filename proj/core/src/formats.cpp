#include "cral/formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cral/errors.hpp"

namespace cral {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw FormatError(source + ":" + std::to_string(line) + ": " + msg);
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

json header(const char* kind) { return {{"format", kind}, {"version", kFormatVersion}}; }

// Reads JSON lines, checking the header and handing each record to `fn`.
template <typename Fn>
void read_jsonl(std::istream& in, const std::string& source, const char* kind, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(source, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!saw_header) {
      if (!rec.is_object() || rec.value("format", "") != kind) {
        fail(source, lineno, std::string("expected a '") + kind + "' header line");
      }
      if (rec.value("version", -1) != kFormatVersion) fail(source, lineno, "unsupported format version");
      saw_header = true;
      continue;
    }
    if (!rec.is_object()) fail(source, lineno, "record must be an object");
    try {
      fn(rec);
    } catch (const json::exception& e) {
      fail(source, lineno, std::string("bad record: ") + e.what());
    } catch (const ConfigError& e) {
      fail(source, lineno, e.what());
    }
  }
  // A file with no records at all (not even a header) reads as empty.
}

double number(const json& rec, const char* key) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_number()) throw ConfigError(std::string("missing numeric field '") + key + "'");
  return it->get<double>();
}

std::int64_t integer(const json& rec, const char* key) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_number_integer()) {
    throw ConfigError(std::string("missing integer field '") + key + "'");
  }
  return it->get<std::int64_t>();
}

ObjectClass class_field(const json& rec) {
  const auto it = rec.find("class");
  if (it == rec.end() || !it->is_string()) throw ConfigError("missing field 'class'");
  const auto c = parse_class(it->get<std::string>());
  if (!c) throw ConfigError("unknown class '" + it->get<std::string>() + "'");
  return *c;
}

}  // namespace

// ---- RF frames -------------------------------------------------------------

void write_rf_image(const RfImage& img, const fs::path& stem) {
  img.validate();
  {
    std::ofstream hdr = open_out(fs::path(stem).concat(".hdr"));
    hdr << "cral-rf " << kFormatVersion << "\n";
    hdr << "frame_id " << img.frame_id << "\n";
    hdr << "range_bins " << img.range_bins << "\n";
    hdr << "azimuth_bins " << img.azimuth_bins << "\n";
    hdr << "range_res " << g17(img.range_res) << "\n";
    hdr << "range_min " << g17(img.range_min) << "\n";
    hdr << "azimuth";
    for (double a : img.azimuth_grid) hdr << ' ' << g17(a);
    hdr << "\n";
  }
  std::ofstream bin = open_out(fs::path(stem).concat(".bin"), std::ios::binary);
  std::vector<std::uint32_t> words(img.data.size());
  for (std::size_t k = 0; k < img.data.size(); ++k) {
    std::uint32_t w = std::bit_cast<std::uint32_t>(img.data[k]);
    if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
    words[k] = w;
  }
  bin.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
  if (!bin) throw FormatError("cannot write " + fs::path(stem).concat(".bin").string());
}

RfImage read_rf_image(const fs::path& stem) {
  const fs::path hdr_path = fs::path(stem).concat(".hdr");
  const fs::path bin_path = fs::path(stem).concat(".bin");
  const std::string src = hdr_path.string();

  std::ifstream hdr = open_in(hdr_path);
  RfImage img;
  std::string line;
  std::size_t lineno = 0;
  bool magic = false, has_frame = false, has_rows = false, has_cols = false, has_res = false,
       has_min = false, has_az = false;
  while (std::getline(hdr, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto need = [&](auto& value) {
      if (!(ls >> value)) fail(src, lineno, "bad value for '" + key + "'");
    };
    if (!magic) {
      int version = 0;
      if (key != "cral-rf" || !(ls >> version)) fail(src, lineno, "not a cral-rf header");
      if (version != kFormatVersion) fail(src, lineno, "unsupported RF header version");
      magic = true;
    } else if (key == "frame_id") {
      need(img.frame_id);
      has_frame = true;
    } else if (key == "range_bins") {
      need(img.range_bins);
      has_rows = true;
    } else if (key == "azimuth_bins") {
      need(img.azimuth_bins);
      has_cols = true;
    } else if (key == "range_res") {
      need(img.range_res);
      has_res = true;
    } else if (key == "range_min") {
      need(img.range_min);
      has_min = true;
    } else if (key == "azimuth") {
      double a;
      while (ls >> a) img.azimuth_grid.push_back(a);
      if (!ls.eof()) fail(src, lineno, "bad azimuth value");
      has_az = true;
    } else {
      fail(src, lineno, "unknown header key '" + key + "'");
    }
  }
  if (!magic) fail(src, lineno, "empty RF header");
  if (!(has_frame && has_rows && has_cols && has_res && has_min && has_az)) {
    fail(src, lineno, "RF header is missing required keys");
  }
  if (img.azimuth_grid.size() != img.azimuth_bins) fail(src, lineno, "azimuth grid length != azimuth_bins");

  std::ifstream bin = open_in(bin_path, std::ios::binary);
  const std::size_t n = img.range_bins * img.azimuth_bins;
  std::vector<std::uint32_t> words(n);
  bin.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(n * 4));
  if (static_cast<std::size_t>(bin.gcount()) != n * 4 || bin.peek() != std::char_traits<char>::eof()) {
    throw FormatError(bin_path.string() + ": size does not match header dimensions");
  }
  img.data.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::uint32_t w = words[k];
    if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
    img.data[k] = std::bit_cast<float>(w);
  }
  try {
    img.validate();
  } catch (const ConfigError& e) {
    throw FormatError(src + ": " + e.what());
  }
  return img;
}

fs::path rf_frame_stem(const fs::path& dir, std::int64_t frame_id) {
  char name[48];
  std::snprintf(name, sizeof name, "frame_%06lld", static_cast<long long>(frame_id));
  return dir / name;
}

std::vector<fs::path> list_rf_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("not a directory: " + dir.string());
  std::vector<fs::path> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".hdr") {
      stems.push_back(fs::path(entry.path()).replace_extension());
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

// ---- camera detections -----------------------------------------------------

RleMask encode_mask(const std::vector<MaskColumn>& columns) {
  RleMask rle;
  if (columns.empty()) return rle;
  double u_lo = columns.front().u, u_hi = columns.front().u;
  double v_lo = columns.front().top_v, v_hi = columns.front().bottom_v;
  for (const MaskColumn& c : columns) {
    u_lo = std::min(u_lo, c.u);
    u_hi = std::max(u_hi, c.u);
    v_lo = std::min(v_lo, c.top_v);
    v_hi = std::max(v_hi, c.bottom_v);
  }
  rle.u0 = static_cast<int>(std::floor(u_lo));
  rle.v0 = static_cast<int>(std::floor(v_lo));
  rle.width = static_cast<int>(std::floor(u_hi)) - rle.u0 + 1;
  rle.height = static_cast<int>(std::ceil(v_hi)) - rle.v0;
  if (rle.height <= 0) rle.height = 1;

  std::vector<char> bits(static_cast<std::size_t>(rle.width) * static_cast<std::size_t>(rle.height), 0);
  for (const MaskColumn& c : columns) {
    const int col = static_cast<int>(std::floor(c.u)) - rle.u0;
    for (int k = 0; k < rle.height; ++k) {
      const double center = rle.v0 + k + 0.5;
      if (center >= c.top_v && center <= c.bottom_v) {
        bits[static_cast<std::size_t>(col) * static_cast<std::size_t>(rle.height) + static_cast<std::size_t>(k)] = 1;
      }
    }
  }
  char current = 0;
  int run = 0;
  for (char b : bits) {
    if (b != current) {
      rle.counts.push_back(run);
      run = 0;
      current = b;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

std::vector<MaskColumn> decode_mask(const RleMask& rle, const BBox& clamp_to) {
  const std::size_t total = static_cast<std::size_t>(rle.width) * static_cast<std::size_t>(rle.height);
  std::vector<char> bits;
  bits.reserve(total);
  char current = 0;
  for (int run : rle.counts) {
    if (run < 0) throw ConfigError("negative RLE run");
    bits.insert(bits.end(), static_cast<std::size_t>(run), current);
    current = static_cast<char>(1 - current);
  }
  if (bits.size() != total) throw ConfigError("RLE runs do not cover the mask area");

  std::vector<MaskColumn> out;
  for (int c = 0; c < rle.width; ++c) {
    int first = -1, last = -1;
    for (int k = 0; k < rle.height; ++k) {
      if (bits[static_cast<std::size_t>(c) * static_cast<std::size_t>(rle.height) + static_cast<std::size_t>(k)]) {
        if (first < 0) first = k;
        last = k;
      }
    }
    if (first < 0) continue;
    const double u = rle.u0 + c + 0.5;
    if (u < clamp_to.u_min || u > clamp_to.u_max) continue;
    const double top = std::clamp<double>(rle.v0 + first, clamp_to.v_min, clamp_to.v_max);
    const double bottom = std::clamp<double>(rle.v0 + last + 1, clamp_to.v_min, clamp_to.v_max);
    out.push_back({u, top, bottom});
  }
  return out;
}

void write_camera_objects(std::ostream& out, const std::vector<CameraObject>& objects) {
  out << header("cral-camera").dump() << "\n";
  for (const CameraObject& o : objects) {
    json rec = {{"frame_id", o.frame_id},
                {"class", std::string(to_string(o.cls))},
                {"bbox", {o.bbox.u_min, o.bbox.v_min, o.bbox.u_max, o.bbox.v_max}},
                {"score", o.score}};
    if (o.track_id) rec["track_id"] = *o.track_id;
    if (o.has_mask()) {
      const RleMask m = encode_mask(o.mask);
      rec["mask"] = {{"origin", {m.u0, m.v0}}, {"size", {m.width, m.height}}, {"counts", m.counts}};
    }
    out << rec.dump() << "\n";
  }
}

std::vector<CameraObject> read_camera_objects(std::istream& in, const std::string& source_name) {
  std::vector<CameraObject> out;
  read_jsonl(in, source_name, "cral-camera", [&](const json& rec) {
    CameraObject o;
    o.frame_id = integer(rec, "frame_id");
    o.cls = class_field(rec);
    const auto& box = rec.at("bbox");
    if (!box.is_array() || box.size() != 4) throw ConfigError("'bbox' must hold 4 numbers");
    o.bbox = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
    o.score = number(rec, "score");
    if (rec.contains("track_id")) o.track_id = integer(rec, "track_id");
    if (rec.contains("mask")) {
      const json& m = rec.at("mask");
      RleMask rle;
      rle.u0 = m.at("origin").at(0).get<int>();
      rle.v0 = m.at("origin").at(1).get<int>();
      rle.width = m.at("size").at(0).get<int>();
      rle.height = m.at("size").at(1).get<int>();
      if (rle.width < 0 || rle.height < 0) throw ConfigError("negative mask size");
      rle.counts = m.at("counts").get<std::vector<int>>();
      o.mask = decode_mask(rle, o.bbox);
    }
    o.validate();
    out.push_back(std::move(o));
  });
  return out;
}

std::vector<CameraObject> read_camera_objects(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_camera_objects(in, path.string());
}

// ---- annotations -----------------------------------------------------------

void write_annotations(std::ostream& out, const std::vector<Annotation>& annotations,
                       const std::string& scenario) {
  out << header("cral-annotations").dump() << "\n";
  for (const Annotation& a : annotations) {
    json rec = {{"frame_id", a.frame_id},
                {"class", std::string(to_string(a.cls))},
                {"range", a.point.r},
                {"azimuth", a.point.theta},
                {"source", std::string(to_string(a.source))},
                {"confidence", a.confidence}};
    if (!scenario.empty()) rec["scenario"] = scenario;
    out << rec.dump() << "\n";
  }
}

namespace {

void read_annotation_records(std::istream& in, const std::string& source_name,
                             std::vector<Annotation>& anns, std::vector<std::string>& scenarios) {
  read_jsonl(in, source_name, "cral-annotations", [&](const json& rec) {
    Annotation a;
    a.frame_id = integer(rec, "frame_id");
    a.cls = class_field(rec);
    a.point = {number(rec, "range"), number(rec, "azimuth")};
    if (!(a.point.r > 0.0) || !std::isfinite(a.point.theta)) throw ConfigError("invalid range / azimuth");
    const std::string src = rec.value("source", std::string("ALIGNED"));
    const auto parsed = parse_source(src);
    if (!parsed) throw ConfigError("unknown source '" + src + "'");
    a.source = *parsed;
    a.confidence = number(rec, "confidence");
    if (!(a.confidence >= 0.0 && a.confidence <= 1.0)) throw ConfigError("confidence outside [0, 1]");
    anns.push_back(a);
    scenarios.push_back(rec.value("scenario", std::string()));
  });
}

}  // namespace

std::vector<Annotation> read_annotations(std::istream& in, const std::string& source_name) {
  std::vector<Annotation> anns;
  std::vector<std::string> scenarios;
  read_annotation_records(in, source_name, anns, scenarios);
  return anns;
}

std::vector<Annotation> read_annotations(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_annotations(in, path.string());
}

std::vector<PointDet> read_point_dets(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<Annotation> anns;
  std::vector<std::string> scenarios;
  read_annotation_records(in, path.string(), anns, scenarios);
  std::vector<PointDet> out;
  out.reserve(anns.size());
  for (std::size_t k = 0; k < anns.size(); ++k) {
    out.push_back({anns[k].frame_id, anns[k].cls, anns[k].point, anns[k].confidence, scenarios[k]});
  }
  return out;
}

// ---- plane log -------------------------------------------------------------

void write_plane_log(std::ostream& out, const std::vector<WindowLog>& windows) {
  out << header("cral-planes").dump() << "\n";
  for (const WindowLog& w : windows) {
    const json rec = {{"first_frame", w.first_frame},
                      {"last_frame", w.last_frame},
                      {"phi", w.plane.phi},
                      {"gamma", w.plane.gamma},
                      {"h", w.plane.h},
                      {"objective", w.objective},
                      {"initial_objective", w.initial_objective},
                      {"pairs", w.n_pairs}};
    out << rec.dump() << "\n";
  }
}

std::vector<WindowLog> read_plane_log(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<WindowLog> out;
  read_jsonl(in, path.string(), "cral-planes", [&](const json& rec) {
    WindowLog w;
    w.first_frame = integer(rec, "first_frame");
    w.last_frame = integer(rec, "last_frame");
    w.plane = {number(rec, "phi"), number(rec, "gamma"), number(rec, "h")};
    w.objective = number(rec, "objective");
    w.initial_objective = number(rec, "initial_objective");
    w.n_pairs = static_cast<std::size_t>(integer(rec, "pairs"));
    out.push_back(w);
  });
  return out;
}

// ---- score report ----------------------------------------------------------

namespace {

std::string pct(double x) { return fixed(100.0 * x, 2) + "%"; }

std::string mae_text(const Metrics& m) {
  if (!m.mae_mean) return "n/a";
  return fixed(*m.mae_mean, 3) + " (+/-" + fixed(*m.mae_std, 3) + ")";
}

void metrics_row(std::ostream& out, const std::string& label, const Metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %-20s %9s %9s %9s %9s %9s %7zu %7zu\n", label.c_str(),
                mae_text(m).c_str(), pct(m.precision).c_str(), pct(m.recall).c_str(), pct(m.ap).c_str(),
                pct(m.ar).c_str(), pct(m.dqf1).c_str(), m.n_det, m.n_gt);
  out << buf;
}

void metrics_header(std::ostream& out, const char* first) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %-20s %9s %9s %9s %9s %9s %7s %7s\n", first, "MAE (m)", "Precision",
                "Recall", "AP", "AR", "DQF1", "n_det", "n_gt");
  out << buf;
}

void kv_metrics(std::ostream& out, const std::string& prefix, const Metrics& m) {
  const auto opt = [](const std::optional<double>& x) { return x ? g17(*x) : std::string("nan"); };
  out << prefix << "mae_mean=" << opt(m.mae_mean) << "\n";
  out << prefix << "mae_std=" << opt(m.mae_std) << "\n";
  out << prefix << "precision=" << g17(m.precision) << "\n";
  out << prefix << "recall=" << g17(m.recall) << "\n";
  out << prefix << "f1=" << g17(m.f1) << "\n";
  out << prefix << "ap=" << g17(m.ap) << "\n";
  out << prefix << "ar=" << g17(m.ar) << "\n";
  out << prefix << "dqf1=" << g17(m.dqf1) << "\n";
  out << prefix << "n_det=" << m.n_det << "\n";
  out << prefix << "n_gt=" << m.n_gt << "\n";
  out << prefix << "n_matched=" << m.n_matched << "\n";
  out << prefix << "ols_sum=" << g17(m.ols_sum) << "\n";
}

}  // namespace

void write_report_text(std::ostream& out, const ScoreReport& report, bool per_class, bool per_scenario) {
  out << "Point-based detection report\n\n";
  metrics_header(out, "");
  metrics_row(out, "overall", report.overall);
  if (per_class && !report.per_class.empty()) {
    out << "\n";
    metrics_header(out, "class");
    for (const auto& [cls, m] : report.per_class) metrics_row(out, std::string(to_string(cls)), m);
  }
  if (per_scenario && !report.per_scenario.empty()) {
    out << "\n";
    metrics_header(out, "scenario");
    for (const auto& [label, m] : report.per_scenario) metrics_row(out, label, m);
  }
}

void write_report_kv(std::ostream& out, const ScoreReport& report) {
  kv_metrics(out, "overall.", report.overall);
  for (const auto& [cls, m] : report.per_class) kv_metrics(out, "class." + std::string(to_string(cls)) + ".", m);
  for (const auto& [label, m] : report.per_scenario) kv_metrics(out, "scenario." + label + ".", m);
}

void write_plot_data(std::ostream& out, const ScoreReport& report) {
  out << "# threshold precision recall\n";
  for (const SweepPoint& p : report.sweep) {
    out << g17(p.threshold) << ' ' << g17(p.precision) << ' ' << g17(p.recall) << "\n";
  }
}

}  // namespace cral
