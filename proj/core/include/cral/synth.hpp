#pragma once

// Deterministic synthetic camera / radar scenes with known ground truth.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cral/align.hpp"
#include "cral/classes.hpp"
#include "cral/geometry.hpp"
#include "cral/rf_detect.hpp"

namespace cral {

struct RadarGrid {
  std::size_t range_bins = 128;
  std::size_t azimuth_bins = 128;
  double range_res = 0.23;
  double range_min = 0.0;
  double azimuth_min = -std::numbers::pi / 2.0;
  double azimuth_max = std::numbers::pi / 2.0;

  std::vector<double> azimuth_grid() const;
  RadarFov fov() const;
};

struct NoiseSpec {
  double rf_noise_sigma = 1.0;  // Rayleigh scale of the background; 0 = noise-free
  double blob_db = 20.0;        // blob peak power above the mean background power
  double range_spread = 0.25;   // blob range std, m
  double bbox_jitter_px = 1.0;  // std of each box edge
  double camera_dropout = 0.0;  // per object per frame
  double radar_dropout = 0.0;   // per object per frame
};

/// Object moving on a straight BEV line: position(frame) = start + frame * velocity.
struct ObjectSpec {
  std::string name;
  ObjectClass cls = ObjectClass::kCar;
  BevPoint start;
  BevPoint velocity;  // m per frame
  double height = 1.55;
  double width = 1.8;
  double score = 0.9;

  BevPoint position(std::size_t frame) const {
    const auto t = static_cast<double>(frame);
    return {start.x + t * velocity.x, start.z + t * velocity.z};
  }
};

struct SceneSpec {
  GroundPlane true_plane;
  CameraModel cam;
  RadarGrid grid;
  std::vector<ObjectSpec> objects;
  NoiseSpec noise;
  std::size_t n_frames = 100;
  std::uint64_t seed = 7;
  std::string scenario = "synthetic";

  /// Throws ConfigError naming the first object that leaves the radar FoV
  /// (or sits behind the camera) in any frame.
  void validate() const;
};

struct SceneTruth {
  std::vector<std::vector<Annotation>> annotations;  // per frame, source TRUTH
  std::vector<GroundPlane> planes;                   // per frame
};

struct RenderedScene {
  std::vector<SensorFrame> frames;
  SceneTruth truth;
};

/// Five moving objects (two cars, a cyclist, two pedestrians) over 100
/// frames with mild noise; the true plane differs slightly from the
/// default initial plane.
SceneSpec default_scene();

/// Noise-free box of one object: bottom edge at the projected ground point,
/// top edge at the point raised by the object height, width from the
/// physical width at the object's depth.
BBox project_object_box(BevPoint position, double height, double width, const GroundPlane& g,
                        const CameraModel& cam);

/// Renders RF frames (Gaussian blobs over a Rayleigh background), camera
/// objects (projected boxes with jitter / dropout and full-box masks) and
/// the ground truth. Frame k draws from its own RNG stream seeded by
/// (seed, k), so frames can be rendered in any order.
RenderedScene render_scene(const SceneSpec& spec);

}  // namespace cral
