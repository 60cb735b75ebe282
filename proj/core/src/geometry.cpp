#include "cral/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cral/errors.hpp"

namespace cral {

namespace {

constexpr double kMaxPlaneAngle = std::numbers::pi / 4.0;

std::string fmt_double(double x) { return std::to_string(x); }

}  // namespace

GroundPlane GroundPlane::from_degrees(double phi_deg, double gamma_deg, double h) {
  return GroundPlane{deg_to_rad(phi_deg), deg_to_rad(gamma_deg), h};
}

void GroundPlane::validate() const {
  if (!std::isfinite(phi) || std::abs(phi) >= kMaxPlaneAngle) {
    throw ConfigError("ground plane pitch out of range: " + fmt_double(phi));
  }
  if (!std::isfinite(gamma) || std::abs(gamma) >= kMaxPlaneAngle) {
    throw ConfigError("ground plane roll out of range: " + fmt_double(gamma));
  }
  if (!std::isfinite(h) || h <= 0.0) {
    throw ConfigError("camera height must be positive: " + fmt_double(h));
  }
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("focal lengths must be positive");
  if (image_width <= 0 || image_height <= 0) throw ConfigError("image size must be positive");
  if (!(cx >= 0.0 && cx < image_width)) throw ConfigError("principal point cx outside image");
  if (!(cy >= 0.0 && cy < image_height)) throw ConfigError("principal point cy outside image");
  for (double t : t_cr) {
    if (!std::isfinite(t)) throw ConfigError("t_cr must be finite");
  }
}

BevPoint to_bev(RadarPoint p) { return {p.r * std::sin(p.theta), p.r * std::cos(p.theta)}; }

RadarPoint from_bev(BevPoint p) { return {std::hypot(p.x, p.z), std::atan2(p.x, p.z)}; }

double bev_distance(RadarPoint a, RadarPoint b) {
  const BevPoint pa = to_bev(a);
  const BevPoint pb = to_bev(b);
  return std::hypot(pa.x - pb.x, pa.z - pb.z);
}

CamPoint3 radar_to_camera(RadarPoint p, const GroundPlane& g, const CameraModel& cam,
                          double elevation) {
  const double xc = p.r * std::sin(p.theta) + cam.t_cr[0];
  const double zc = p.r * std::cos(p.theta) + cam.t_cr[2];
  if (!(zc > kDenominatorEpsilon)) {
    throw DomainError("radar point at or behind the camera plane (zc = " + fmt_double(zc) + ")");
  }
  const double yc = g.h - elevation - p.r * std::sin(g.phi) - xc * std::tan(g.gamma);
  return {xc, yc, zc};
}

PixelPoint project_r2c(RadarPoint p, const GroundPlane& g, const CameraModel& cam,
                       double elevation) {
  const CamPoint3 c = radar_to_camera(p, g, cam, elevation);
  return {cam.fx * c.xc / c.zc + cam.cx, cam.fy * c.yc / c.zc + cam.cy};
}

namespace {

// Denominator of the t_cr = 0 closed form; its sign decides whether the
// pixel ray meets the ground at all.
double ground_denominator(double x_hat, double y_hat, const GroundPlane& g) {
  return std::sqrt(1.0 + x_hat * x_hat) * std::sin(g.phi) + x_hat * std::tan(g.gamma) + y_hat;
}

}  // namespace

CamPoint3 pixel_to_camera(PixelPoint p, const GroundPlane& g, const CameraModel& cam) {
  const double x_hat = (p.u - cam.cx) / cam.fx;
  const double y_hat = (p.v - cam.cy) / cam.fy;
  const double denom = ground_denominator(x_hat, y_hat, g);
  if (!(denom > kDenominatorEpsilon)) {
    throw DomainError("pixel at or above the horizon (v = " + fmt_double(p.v) + ")");
  }

  const double tx = cam.t_cr[0];
  const double tz = cam.t_cr[2];
  const double s = std::sin(g.phi);
  const double a = y_hat + x_hat * std::tan(g.gamma);

  // Solve a*zc + s*R(zc) = h with R the radar range of the point on the ray.
  auto radar_range = [&](double zc) { return std::hypot(x_hat * zc - tx, zc - tz); };
  auto f = [&](double zc) { return a * zc + s * radar_range(zc) - g.h; };
  auto df = [&](double zc) {
    const double rr = radar_range(zc);
    if (rr == 0.0) return a + s * std::sqrt(1.0 + x_hat * x_hat);
    return a + s * ((x_hat * zc - tx) * x_hat + (zc - tz)) / rr;
  };

  double zc = g.h / denom;
  if (tx != 0.0 || tz != 0.0) {
    double lo = 0.0;
    if (!(f(lo) < 0.0)) throw DomainError("camera is not above the ground plane");
    double hi = std::max(zc, 1.0);
    int expansions = 0;
    while (f(hi) <= 0.0) {
      hi *= 2.0;
      if (++expansions > 200) throw DomainError("ground intersection not bracketed");
    }
    zc = std::clamp(zc, lo, hi);
    for (int it = 0; it < 200; ++it) {
      const double fz = f(zc);
      if (fz == 0.0) break;
      (fz < 0.0 ? lo : hi) = zc;
      const double d = df(zc);
      double next = (d != 0.0) ? zc - fz / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double step = std::abs(next - zc);
      zc = next;
      if (step <= 4.0 * std::numeric_limits<double>::epsilon() * zc) break;
    }
  }

  if (!(zc > kDenominatorEpsilon)) throw DomainError("ground intersection behind the camera");
  const double xc = x_hat * zc;
  return {xc, y_hat * zc, zc};
}

RadarPoint project_c2r(PixelPoint p, const GroundPlane& g, const CameraModel& cam) {
  const CamPoint3 c = pixel_to_camera(p, g, cam);
  const double dx = c.xc - cam.t_cr[0];
  const double dz = c.zc - cam.t_cr[2];
  // + 0.0 folds a negative zero azimuth into +0.
  return {std::hypot(dx, dz), std::atan2(dx, dz) + 0.0};
}

double horizon_v(double u, const GroundPlane& g, const CameraModel& cam) {
  const double x_hat = (u - cam.cx) / cam.fx;
  const double y_hat = -(std::sqrt(1.0 + x_hat * x_hat) * std::sin(g.phi) + x_hat * std::tan(g.gamma));
  return cam.cy + cam.fy * y_hat;
}

}  // namespace cral
