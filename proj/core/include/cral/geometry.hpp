#pragma once

// Camera / radar coordinate systems and the ground-plane based projection
// between radar range-azimuth coordinates and camera pixels.
//
// Conventions:
//   * camera frame: x right, y down, z forward (optical axis)
//   * radar azimuth theta: 0 at boresight, positive toward camera +x
//   * pitch phi: positive when the camera looks down toward the ground
//   * camera and radar share orientation; only a translation separates them

#include <array>
#include <numbers>

namespace cral {

inline constexpr double kDenominatorEpsilon = 1e-6;

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Ground plane g = [phi, gamma, h] relative to the camera frame.
struct GroundPlane {
  double phi = deg_to_rad(4.0);  // pitch, rad
  double gamma = 0.0;            // roll, rad
  double h = 1.65;               // camera height above ground, m

  static GroundPlane from_degrees(double phi_deg, double gamma_deg, double h);

  /// Throws ConfigError unless |phi|, |gamma| < pi/4 and h > 0.
  void validate() const;

  friend bool operator==(const GroundPlane&, const GroundPlane&) = default;
};

/// Pinhole intrinsics plus the camera->radar translation t_cr.
struct CameraModel {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 720.0;
  double cy = 540.0;
  std::array<double, 3> t_cr{0.0, 0.0, 0.0};
  int image_width = 1440;
  int image_height = 1080;

  void validate() const;

  bool contains(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u < image_width && v < image_height;
  }

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

struct RadarPoint {
  double r = 0.0;      // m
  double theta = 0.0;  // rad
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// Top-down Cartesian radar coordinates: x lateral, z forward (meters).
struct BevPoint {
  double x = 0.0;
  double z = 0.0;
};

/// Range / azimuth extent of a radar field of view (inclusive).
struct RadarFov {
  double range_min = 0.0;
  double range_max = 25.0;
  double azimuth_min = -std::numbers::pi / 2.0;
  double azimuth_max = std::numbers::pi / 2.0;

  bool contains(RadarPoint p) const {
    return p.r >= range_min && p.r <= range_max && p.theta >= azimuth_min && p.theta <= azimuth_max;
  }
};

struct CamPoint3 {
  double xc = 0.0;
  double yc = 0.0;
  double zc = 0.0;

  double x_hat() const { return xc / zc; }
  double y_hat() const { return yc / zc; }
};

BevPoint to_bev(RadarPoint p);
RadarPoint from_bev(BevPoint p);

/// Euclidean distance between two radar points in BEV meters.
double bev_distance(RadarPoint a, RadarPoint b);

/// Radar point lifted onto the ground plane in camera coordinates, then
/// raised by `elevation` meters (toward -y). Throws DomainError when the
/// point is at or behind the camera plane.
CamPoint3 radar_to_camera(RadarPoint p, const GroundPlane& g, const CameraModel& cam,
                          double elevation = 0.0);

/// Radar (r, theta) on the ground plane -> image pixel (u, v). With a
/// non-zero elevation, projects the point that many meters above the ground.
PixelPoint project_r2c(RadarPoint p, const GroundPlane& g, const CameraModel& cam,
                       double elevation = 0.0);

/// Camera ray through (u, v) intersected with the ground plane. This is the
/// exact algebraic inverse of project_r2c including the t_cr offset; with
/// t_cr = 0 it collapses to the closed form
///   zc = h / (sqrt(1 + x^2) sin(phi) + x tan(gamma) + y).
/// Throws DomainError for pixels at or above the horizon.
RadarPoint project_c2r(PixelPoint p, const GroundPlane& g, const CameraModel& cam);

/// Camera-frame point for a below-horizon pixel (see project_c2r).
CamPoint3 pixel_to_camera(PixelPoint p, const GroundPlane& g, const CameraModel& cam);

/// The v coordinate at which the ground-intersection denominator vanishes
/// for column u. project_c2r is valid strictly below (v greater than) it.
double horizon_v(double u, const GroundPlane& g, const CameraModel& cam);

}  // namespace cral
