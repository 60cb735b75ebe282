#pragma once

// Camera / radar detection alignment: CFAR lines, the height-based
// alignment cost, cluster-to-object association, ground-plane refinement
// over a time window, supplementary projection of camera-only objects and
// the sequence-level annotation loop.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cral/classes.hpp"
#include "cral/geometry.hpp"
#include "cral/optimize.hpp"
#include "cral/rf_detect.hpp"

namespace cral {

struct BBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double center_u() const { return 0.5 * (u_min + u_max); }
};

/// Vertical extent of an instance mask at one pixel column.
struct MaskColumn {
  double u = 0.0;  // column center
  double top_v = 0.0;
  double bottom_v = 0.0;
};

struct CameraObject {
  std::int64_t frame_id = 0;
  ObjectClass cls = ObjectClass::kCar;
  BBox bbox;
  std::vector<MaskColumn> mask;  // sorted by u; empty when only a box is known
  double score = 1.0;
  std::optional<std::int64_t> track_id;

  double h_bbox() const { return bbox.height(); }
  bool has_mask() const { return !mask.empty(); }

  /// Mask column nearest to u (ties go to the left column); nullptr without a mask.
  const MaskColumn* mask_column_near(double u) const;

  /// Bottom-center ground contact: mask bottom at the column nearest the box
  /// center when a mask exists, the box bottom-center otherwise.
  PixelPoint ground_contact() const;

  /// Throws ConfigError for degenerate boxes, scores outside [0, 1] or mask
  /// columns outside the box.
  void validate() const;
};

/// A radar cluster drawn into the image: ground foot point and the point
/// raised by the class average height.
struct CfarLine {
  int cluster_ref = 0;
  PixelPoint foot;
  PixelPoint top;
  double h_line = 0.0;  // foot.v - top.v, pixels
  double zc = 0.0;      // camera depth of the cluster centroid
};

CfarLine make_cfar_line(const PeakCluster& cluster, double avg_height, const GroundPlane& g,
                        const CameraModel& cam);

/// lambda = exp(-alpha * zc).
double adaptive_weight(double zc, double alpha);

struct AlignmentCost {
  double cost = 0.0;
  double lambda = 0.0;
};

/// l = lambda (h - h_mask)^2 + (1 - lambda) (h - h_bbox)^2 with the mask
/// height taken at the column nearest the line's foot. Without a mask the
/// box term carries full weight (lambda reported as 0).
AlignmentCost alignment_cost(const CfarLine& line, const CameraObject& obj, double alpha);

struct AlignConfig {
  double alpha = 0.06;             // 1/m, weight decay of the mask term with depth
  std::size_t window = 50;         // frames per ground-plane window (stride = window)
  double gating_margin = 0.2;      // box span inflation, fraction of box width per side
  double rejection_ratio = 0.5;    // outlier when cost > (ratio * h_line)^2
  double plane_bound = deg_to_rad(10.0);  // |phi|, |gamma| limit during refinement
  NelderMeadOptions optimizer{deg_to_rad(0.5), 1e-10, 0.0, 4000};

  void validate() const;
};

struct Association {
  int cluster_ref = 0;
  std::optional<std::size_t> object_ref;  // nullopt: outlier / background
  double cost = 0.0;
  double lambda = 0.0;

  bool is_outlier() const { return !object_ref.has_value(); }
};

/// One association per cluster, index-aligned with `clusters`. Each cluster picks the
/// gated object of least alignment cost (ties: lower object index); objects
/// may collect several clusters. Clusters without a gated candidate, or whose
/// best cost exceeds the rejection bound, are outliers.
std::vector<Association> associate_frame(std::span<const PeakCluster> clusters,
                                         std::span<const CameraObject> objects,
                                         const GroundPlane& g, const CameraModel& cam,
                                         const ClassTable& classes, const AlignConfig& cfg);

/// Radar clusters and camera objects of one frame.
struct FrameObservations {
  std::int64_t frame_id = 0;
  std::vector<PeakCluster> clusters;
  std::vector<CameraObject> objects;
};

/// Sum over aligned pairs of (v_foot - v_mask_bottom)^2 at plane g, where the
/// mask bottom is read at the column nearest the foot (box bottom without mask).
double plane_objective(std::span<const FrameObservations> window,
                       std::span<const std::vector<Association>> associations,
                       const GroundPlane& g, const CameraModel& cam);

struct PlaneFit {
  GroundPlane plane;
  double objective = 0.0;
  double initial_objective = 0.0;
  std::size_t n_pairs = 0;
  std::size_t evaluations = 0;
};

/// Refines (phi, gamma) with h held at g0.h. Associations are formed at g0.
/// Returns g0 untouched when the window holds no aligned pair.
PlaneFit optimize_ground_plane(std::span<const FrameObservations> window, const GroundPlane& g0,
                               const CameraModel& cam, const ClassTable& classes,
                               const AlignConfig& cfg);

/// Same, reusing precomputed associations (one vector per frame).
PlaneFit optimize_ground_plane(std::span<const FrameObservations> window,
                               std::span<const std::vector<Association>> associations,
                               const GroundPlane& g0, const CameraModel& cam,
                               const AlignConfig& cfg);

enum class AnnotationSource { kAligned, kSupplementary, kTruth };

std::string_view to_string(AnnotationSource s);
std::optional<AnnotationSource> parse_source(std::string_view name);

struct Annotation {
  std::int64_t frame_id = 0;
  ObjectClass cls = ObjectClass::kCar;
  RadarPoint point;
  AnnotationSource source = AnnotationSource::kAligned;
  double confidence = 1.0;
};

struct SupplementaryResult {
  std::vector<Annotation> annotations;
  std::size_t skipped = 0;  // above the horizon or outside the radar FoV
};

SupplementaryResult supplementary_projection(std::span<const CameraObject> objects,
                                             const GroundPlane& g, const CameraModel& cam,
                                             const RadarFov& fov);

/// One ALIGNED annotation per object that received clusters, at the
/// power-weighted centroid of all peaks of those clusters.
std::vector<Annotation> aligned_annotations(const FrameObservations& frame,
                                            std::span<const Association> associations,
                                            const RadarFov& fov);

struct AnnotatorConfig {
  CameraModel cam;
  GroundPlane initial_plane;
  CfarConfig cfar;
  DbscanConfig dbscan;
  AlignConfig align;
  ClassTable classes = ClassTable::defaults();

  void validate() const;
};

struct SensorFrame {
  RfImage rf;
  std::vector<CameraObject> objects;
};

/// CFAR + DBSCAN on the frame's RF image, paired with its camera objects.
FrameObservations observe(const SensorFrame& frame, const AnnotatorConfig& cfg);

struct FrameResult {
  std::int64_t frame_id = 0;
  GroundPlane plane;
  std::vector<Annotation> annotations;
  std::vector<Association> associations;
  std::size_t n_peaks = 0;
  std::size_t n_clusters = 0;
  std::size_t skipped_supplementary = 0;
  std::vector<std::string> diagnostics;
};

struct WindowLog {
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  GroundPlane plane;
  double objective = 0.0;
  double initial_objective = 0.0;
  std::size_t n_pairs = 0;
};

struct SequenceResult {
  std::vector<FrameResult> frames;
  std::vector<WindowLog> windows;
};

/// Non-overlapping windows of cfg.align.window frames, each starting from
/// cfg.initial_plane: associate, refine the plane, re-associate, then emit
/// ALIGNED and SUPPLEMENTARY annotations. Windows run on up to `workers`
/// threads; results are identical for any worker count.
SequenceResult annotate_sequence(std::span<const SensorFrame> frames, const AnnotatorConfig& cfg,
                                 std::size_t workers = 1);

}  // namespace cral
