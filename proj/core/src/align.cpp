#include "cral/align.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "cral/errors.hpp"

namespace cral {

const MaskColumn* CameraObject::mask_column_near(double u) const {
  if (mask.empty()) return nullptr;
  auto it = std::lower_bound(mask.begin(), mask.end(), u,
                             [](const MaskColumn& c, double x) { return c.u < x; });
  if (it == mask.begin()) return &*it;
  if (it == mask.end()) return &mask.back();
  const auto prev = std::prev(it);
  return (u - prev->u <= it->u - u) ? &*prev : &*it;
}

PixelPoint CameraObject::ground_contact() const {
  const double u = bbox.center_u();
  if (const MaskColumn* col = mask_column_near(u)) return {u, col->bottom_v};
  return {u, bbox.v_max};
}

void CameraObject::validate() const {
  if (!(bbox.u_min < bbox.u_max) || !(bbox.v_min < bbox.v_max)) {
    throw ConfigError("degenerate bounding box");
  }
  if (!(score >= 0.0 && score <= 1.0)) throw ConfigError("detector score outside [0, 1]");
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const MaskColumn& c = mask[k];
    if (c.u < bbox.u_min || c.u > bbox.u_max || c.top_v < bbox.v_min || c.bottom_v > bbox.v_max ||
        c.top_v > c.bottom_v) {
      throw ConfigError("mask column outside the bounding box");
    }
    if (k > 0 && !(c.u > mask[k - 1].u)) throw ConfigError("mask columns not sorted");
  }
}

CfarLine make_cfar_line(const PeakCluster& cluster, double avg_height, const GroundPlane& g,
                        const CameraModel& cam) {
  CfarLine line;
  line.cluster_ref = cluster.id;
  const CamPoint3 foot3 = radar_to_camera(cluster.centroid, g, cam);
  line.zc = foot3.zc;
  line.foot = project_r2c(cluster.centroid, g, cam);
  line.top = project_r2c(cluster.centroid, g, cam, avg_height);
  line.h_line = line.foot.v - line.top.v;
  return line;
}

double adaptive_weight(double zc, double alpha) { return std::exp(-alpha * zc); }

AlignmentCost alignment_cost(const CfarLine& line, const CameraObject& obj, double alpha) {
  const double box_res = line.h_line - obj.h_bbox();
  const MaskColumn* col = obj.mask_column_near(line.foot.u);
  if (col == nullptr) return {box_res * box_res, 0.0};
  const double lambda = adaptive_weight(line.zc, alpha);
  const double mask_res = line.h_line - (col->bottom_v - col->top_v);
  return {lambda * mask_res * mask_res + (1.0 - lambda) * box_res * box_res, lambda};
}

void AlignConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alignment.alpha must be >= 0");
  if (window == 0) throw ConfigError("alignment.window must be >= 1");
  if (!(gating_margin >= 0.0)) throw ConfigError("alignment.gating_margin must be >= 0");
  if (!(rejection_ratio > 0.0)) throw ConfigError("alignment.rejection_ratio must be positive");
  if (!(plane_bound > 0.0 && plane_bound < std::numbers::pi / 4.0)) {
    throw ConfigError("alignment.plane_bound_deg must lie in (0, 45)");
  }
}

std::vector<Association> associate_frame(std::span<const PeakCluster> clusters,
                                         std::span<const CameraObject> objects,
                                         const GroundPlane& g, const CameraModel& cam,
                                         const ClassTable& classes, const AlignConfig& cfg) {
  std::vector<Association> out;
  out.reserve(clusters.size());
  for (const PeakCluster& cluster : clusters) {
    Association best{cluster.id, std::nullopt, std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t k = 0; k < objects.size(); ++k) {
      const CameraObject& obj = objects[k];
      CfarLine line;
      try {
        line = make_cfar_line(cluster, classes.at(obj.cls).avg_height, g, cam);
      } catch (const DomainError&) {
        break;  // behind the camera: no object can claim it
      }
      const double margin = cfg.gating_margin * obj.bbox.width();
      if (line.foot.u < obj.bbox.u_min - margin || line.foot.u > obj.bbox.u_max + margin) continue;

      const AlignmentCost c = alignment_cost(line, obj, cfg.alpha);
      const double bound = cfg.rejection_ratio * line.h_line;
      if (c.cost > bound * bound) continue;
      if (c.cost < best.cost) best = {cluster.id, k, c.cost, c.lambda};
    }
    if (best.is_outlier()) best.cost = 0.0;
    out.push_back(best);
  }
  return out;
}

double plane_objective(std::span<const FrameObservations> window,
                       std::span<const std::vector<Association>> associations,
                       const GroundPlane& g, const CameraModel& cam) {
  double total = 0.0;
  for (std::size_t f = 0; f < window.size(); ++f) {
    const FrameObservations& frame = window[f];
    const auto& frame_assoc = associations[f];
    for (std::size_t i = 0; i < frame_assoc.size() && i < frame.clusters.size(); ++i) {
      const Association& a = frame_assoc[i];
      if (a.is_outlier()) continue;
      const PeakCluster& cluster = frame.clusters[i];
      const CameraObject& obj = frame.objects[*a.object_ref];
      const PixelPoint foot = project_r2c(cluster.centroid, g, cam);
      const MaskColumn* col = obj.mask_column_near(foot.u);
      const double bottom = col != nullptr ? col->bottom_v : obj.bbox.v_max;
      const double e = foot.v - bottom;
      total += e * e;
    }
  }
  return total;
}

PlaneFit optimize_ground_plane(std::span<const FrameObservations> window,
                               std::span<const std::vector<Association>> associations,
                               const GroundPlane& g0, const CameraModel& cam,
                               const AlignConfig& cfg) {
  PlaneFit fit;
  fit.plane = g0;
  for (const auto& frame_assoc : associations) {
    fit.n_pairs += static_cast<std::size_t>(
        std::count_if(frame_assoc.begin(), frame_assoc.end(), [](const Association& a) { return !a.is_outlier(); }));
  }
  if (fit.n_pairs == 0) return fit;

  fit.initial_objective = plane_objective(window, associations, g0, cam);

  const double bound = cfg.plane_bound;
  auto objective = [&](std::span<const double> x) {
    const GroundPlane g{x[0], x[1], g0.h};
    double penalty = 0.0;
    for (double angle : x) {
      const double excess = std::abs(angle) - bound;
      if (excess > 0.0) penalty += 1e12 * excess * excess;
    }
    try {
      return plane_objective(window, associations, g, cam) + penalty;
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const std::array<double, 2> x0{g0.phi, g0.gamma};
  const NelderMeadResult res = nelder_mead(objective, x0, cfg.optimizer);
  fit.evaluations = res.evaluations;
  if (res.value <= fit.initial_objective) {
    fit.plane = {res.x[0], res.x[1], g0.h};
    fit.objective = res.value;
  } else {
    fit.objective = fit.initial_objective;
  }
  return fit;
}

PlaneFit optimize_ground_plane(std::span<const FrameObservations> window, const GroundPlane& g0,
                               const CameraModel& cam, const ClassTable& classes,
                               const AlignConfig& cfg) {
  std::vector<std::vector<Association>> assoc;
  assoc.reserve(window.size());
  for (const FrameObservations& frame : window) {
    assoc.push_back(associate_frame(frame.clusters, frame.objects, g0, cam, classes, cfg));
  }
  return optimize_ground_plane(window, assoc, g0, cam, cfg);
}

std::string_view to_string(AnnotationSource s) {
  switch (s) {
    case AnnotationSource::kAligned:
      return "ALIGNED";
    case AnnotationSource::kSupplementary:
      return "SUPPLEMENTARY";
    case AnnotationSource::kTruth:
      return "TRUTH";
  }
  return "UNKNOWN";
}

std::optional<AnnotationSource> parse_source(std::string_view name) {
  for (AnnotationSource s :
       {AnnotationSource::kAligned, AnnotationSource::kSupplementary, AnnotationSource::kTruth}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

SupplementaryResult supplementary_projection(std::span<const CameraObject> objects,
                                             const GroundPlane& g, const CameraModel& cam,
                                             const RadarFov& fov) {
  SupplementaryResult out;
  for (const CameraObject& obj : objects) {
    RadarPoint p;
    try {
      p = project_c2r(obj.ground_contact(), g, cam);
    } catch (const DomainError&) {
      ++out.skipped;
      continue;
    }
    if (!fov.contains(p)) {
      ++out.skipped;
      continue;
    }
    out.annotations.push_back({obj.frame_id, obj.cls, p, AnnotationSource::kSupplementary, obj.score});
  }
  return out;
}

std::vector<Annotation> aligned_annotations(const FrameObservations& frame,
                                            std::span<const Association> associations,
                                            const RadarFov& fov) {
  std::vector<Annotation> out;
  for (std::size_t k = 0; k < frame.objects.size(); ++k) {
    std::vector<RadarPeak> peaks;
    for (std::size_t i = 0; i < associations.size() && i < frame.clusters.size(); ++i) {
      if (associations[i].object_ref != k) continue;
      const auto& members = frame.clusters[i].peaks;
      peaks.insert(peaks.end(), members.begin(), members.end());
    }
    if (peaks.empty()) continue;
    const RadarPoint p = power_weighted_centroid(peaks);
    if (!fov.contains(p)) continue;
    const CameraObject& obj = frame.objects[k];
    out.push_back({frame.frame_id, obj.cls, p, AnnotationSource::kAligned, obj.score});
  }
  return out;
}

void AnnotatorConfig::validate() const {
  cam.validate();
  initial_plane.validate();
  cfar.validate();
  dbscan.validate();
  align.validate();
  classes.validate();
}

FrameObservations observe(const SensorFrame& frame, const AnnotatorConfig& cfg) {
  FrameObservations obs;
  obs.frame_id = frame.rf.frame_id;
  const std::vector<RadarPeak> peaks = cfar_detect(frame.rf, cfg.cfar);
  obs.clusters = cluster_peaks(peaks, cfg.dbscan).clusters;
  obs.objects = frame.objects;
  return obs;
}

namespace {

void run_window(std::span<const SensorFrame> frames, const AnnotatorConfig& cfg,
                std::span<FrameResult> results, WindowLog& log) {
  const std::size_t n = frames.size();
  std::vector<FrameObservations> obs(n);
  std::vector<RadarFov> fovs(n);
  for (std::size_t f = 0; f < n; ++f) {
    FrameResult& r = results[f];
    r.frame_id = frames[f].rf.frame_id;
    obs[f].frame_id = r.frame_id;
    try {
      obs[f] = observe(frames[f], cfg);
      fovs[f] = frames[f].rf.fov();
      std::size_t n_peaks = 0;
      for (const PeakCluster& c : obs[f].clusters) n_peaks += c.peaks.size();
      r.n_peaks = n_peaks;
      r.n_clusters = obs[f].clusters.size();
    } catch (const std::exception& e) {
      r.diagnostics.push_back(std::string("frame skipped: ") + e.what());
      obs[f] = FrameObservations{r.frame_id, {}, {}};
      fovs[f] = RadarFov{0.0, -1.0, 0.0, -1.0};
    }
  }

  auto associate_all = [&](const GroundPlane& g) {
    std::vector<std::vector<Association>> assoc(n);
    for (std::size_t f = 0; f < n; ++f) {
      assoc[f] = associate_frame(obs[f].clusters, obs[f].objects, g, cfg.cam, cfg.classes, cfg.align);
    }
    return assoc;
  };

  const auto initial = associate_all(cfg.initial_plane);
  const PlaneFit fit = optimize_ground_plane(obs, initial, cfg.initial_plane, cfg.cam, cfg.align);
  const auto final_assoc = associate_all(fit.plane);

  log.first_frame = frames.front().rf.frame_id;
  log.last_frame = frames.back().rf.frame_id;
  log.plane = fit.plane;
  log.objective = fit.objective;
  log.initial_objective = fit.initial_objective;
  log.n_pairs = fit.n_pairs;

  for (std::size_t f = 0; f < n; ++f) {
    FrameResult& r = results[f];
    r.plane = fit.plane;
    r.associations = final_assoc[f];
    r.annotations = aligned_annotations(obs[f], final_assoc[f], fovs[f]);

    std::vector<CameraObject> unaligned;
    for (std::size_t k = 0; k < obs[f].objects.size(); ++k) {
      const bool aligned = std::any_of(final_assoc[f].begin(), final_assoc[f].end(),
                                       [k](const Association& a) { return a.object_ref == k; });
      if (!aligned) unaligned.push_back(obs[f].objects[k]);
    }
    SupplementaryResult sup = supplementary_projection(unaligned, fit.plane, cfg.cam, fovs[f]);
    r.skipped_supplementary = sup.skipped;
    if (sup.skipped > 0) {
      r.diagnostics.push_back(std::to_string(sup.skipped) + " camera object(s) not projectable");
    }
    r.annotations.insert(r.annotations.end(), sup.annotations.begin(), sup.annotations.end());
  }
}

}  // namespace

SequenceResult annotate_sequence(std::span<const SensorFrame> frames, const AnnotatorConfig& cfg,
                                 std::size_t workers) {
  cfg.validate();
  SequenceResult out;
  if (frames.empty()) return out;

  const std::size_t t = cfg.align.window;
  const std::size_t n_windows = (frames.size() + t - 1) / t;
  out.frames.resize(frames.size());
  out.windows.resize(n_windows);

  auto do_window = [&](std::size_t w) {
    const std::size_t begin = w * t;
    const std::size_t len = std::min(t, frames.size() - begin);
    run_window(frames.subspan(begin, len), cfg, std::span(out.frames).subspan(begin, len), out.windows[w]);
  };

  workers = std::clamp<std::size_t>(workers, 1, n_windows);
  if (workers == 1) {
    for (std::size_t w = 0; w < n_windows; ++w) do_window(w);
    return out;
  }
  {
    std::vector<std::jthread> pool;
    for (std::size_t id = 0; id < workers; ++id) {
      pool.emplace_back([&, id] {
        for (std::size_t w = id; w < n_windows; w += workers) do_window(w);
      });
    }
  }
  return out;
}

}  // namespace cral
