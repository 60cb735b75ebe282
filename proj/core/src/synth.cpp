#include "cral/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cral/errors.hpp"

namespace cral {

std::vector<double> RadarGrid::azimuth_grid() const {
  return uniform_azimuth_grid(azimuth_bins, azimuth_min, azimuth_max);
}

RadarFov RadarGrid::fov() const {
  const double r_max = range_min + range_res * static_cast<double>(range_bins - 1);
  return {range_min, r_max, azimuth_min, azimuth_max};
}

void SceneSpec::validate() const {
  true_plane.validate();
  cam.validate();
  if (grid.range_bins == 0 || grid.azimuth_bins < 2 || !(grid.range_res > 0.0) ||
      !(grid.azimuth_max > grid.azimuth_min)) {
    throw ConfigError("invalid radar grid");
  }
  if (noise.rf_noise_sigma < 0.0 || noise.bbox_jitter_px < 0.0 || !(noise.range_spread > 0.0)) {
    throw ConfigError("noise levels must be non-negative");
  }
  for (double p : {noise.camera_dropout, noise.radar_dropout}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("dropout rates must lie in [0, 1]");
  }
  const RadarFov fov = grid.fov();
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const ObjectSpec& o = objects[k];
    const std::string label = o.name.empty() ? "object " + std::to_string(k) : "object '" + o.name + "'";
    if (!(o.height > 0.0) || !(o.width > 0.0)) throw ConfigError(label + " needs positive size");
    if (!(o.score >= 0.0 && o.score <= 1.0)) throw ConfigError(label + " score outside [0, 1]");
    for (std::size_t f = 0; f < n_frames; ++f) {
      const BevPoint b = o.position(f);
      const RadarPoint p = from_bev(b);
      if (!fov.contains(p) || b.z + cam.t_cr[2] <= kDenominatorEpsilon) {
        throw ConfigError(label + " leaves the radar field of view at frame " + std::to_string(f));
      }
    }
  }
}

SceneSpec default_scene() {
  SceneSpec s;
  s.true_plane = GroundPlane::from_degrees(4.5, 0.5, 1.65);
  s.n_frames = 100;
  s.seed = 7;
  s.scenario = "synthetic";
  s.objects = {
      {"car_left", ObjectClass::kCar, {-3.5, 12.0}, {0.0, 0.05}, 1.55, 1.8, 0.95},
      {"car_right", ObjectClass::kCar, {4.5, 19.0}, {0.0, -0.06}, 1.55, 1.8, 0.92},
      {"cyclist", ObjectClass::kCyclist, {1.5, 9.0}, {-0.01, 0.04}, 1.75, 0.6, 0.85},
      {"walker_near", ObjectClass::kPedestrian, {-1.0, 10.0}, {0.02, 0.0}, 1.7, 0.5, 0.8},
      {"walker_far", ObjectClass::kPedestrian, {6.0, 16.0}, {-0.01, -0.02}, 1.7, 0.5, 0.8},
  };
  return s;
}

BBox project_object_box(BevPoint position, double height, double width, const GroundPlane& g,
                        const CameraModel& cam) {
  const RadarPoint p = from_bev(position);
  const CamPoint3 c = radar_to_camera(p, g, cam);
  const PixelPoint foot = project_r2c(p, g, cam);
  const PixelPoint head = project_r2c(p, g, cam, height);
  const double half_w = 0.5 * cam.fx * width / c.zc;
  return {foot.u - half_w, head.v, foot.u + half_w, foot.v};
}

namespace {

std::mt19937_64 frame_rng(std::uint64_t seed, std::size_t frame) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(frame >> 32)};
  return std::mt19937_64(seq);
}

std::vector<MaskColumn> box_mask(const BBox& b) {
  std::vector<MaskColumn> mask;
  for (double u = std::ceil(b.u_min - 0.5) + 0.5; u <= b.u_max; u += 1.0) {
    mask.push_back({u, b.v_min, b.v_max});
  }
  return mask;
}

}  // namespace

RenderedScene render_scene(const SceneSpec& spec) {
  spec.validate();
  RenderedScene out;
  out.frames.resize(spec.n_frames);
  out.truth.annotations.resize(spec.n_frames);
  out.truth.planes.assign(spec.n_frames, spec.true_plane);

  const std::vector<double> azimuths = spec.grid.azimuth_grid();
  const NoiseSpec& nz = spec.noise;
  const double sigma_ref = nz.rf_noise_sigma > 0.0 ? nz.rf_noise_sigma : 1.0;
  const double amplitude = sigma_ref * std::sqrt(2.0) * std::pow(10.0, nz.blob_db / 20.0);

  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    std::mt19937_64 rng = frame_rng(spec.seed, f);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto frame_id = static_cast<std::int64_t>(f);

    SensorFrame& frame = out.frames[f];
    frame.rf = RfImage(spec.grid.range_bins, spec.grid.azimuth_bins, spec.grid.range_res,
                       spec.grid.range_min, azimuths);
    frame.rf.frame_id = frame_id;

    // Complex field: blobs (real, zero phase) plus circular Gaussian noise.
    std::vector<double> re(frame.rf.data.size(), 0.0), im(frame.rf.data.size(), 0.0);
    if (nz.rf_noise_sigma > 0.0) {
      for (std::size_t k = 0; k < re.size(); ++k) {
        re[k] = nz.rf_noise_sigma * gauss(rng);
        im[k] = nz.rf_noise_sigma * gauss(rng);
      }
    }

    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
      const ObjectSpec& o = spec.objects[k];
      const BevPoint pos = o.position(f);
      const RadarPoint p = from_bev(pos);
      out.truth.annotations[f].push_back({frame_id, o.cls, p, AnnotationSource::kTruth, 1.0});

      // Draw both dropout decisions for every object so the RNG stream does
      // not depend on earlier outcomes.
      const bool radar_drop = unit(rng) < nz.radar_dropout;
      const bool camera_drop = unit(rng) < nz.camera_dropout;
      std::array<double, 4> jitter{};
      for (double& j : jitter) j = nz.bbox_jitter_px * gauss(rng);

      if (!radar_drop) {
        const double cross_sigma = 0.25 * o.width;
        for (std::size_t i = 0; i < frame.rf.range_bins; ++i) {
          const double dr = frame.rf.range_at(i) - p.r;
          if (std::abs(dr) > 6.0 * nz.range_spread) continue;
          const double gr = std::exp(-dr * dr / (2.0 * nz.range_spread * nz.range_spread));
          for (std::size_t j = 0; j < frame.rf.azimuth_bins; ++j) {
            const double dc = p.r * (azimuths[j] - p.theta);
            const double gc = std::exp(-dc * dc / (2.0 * cross_sigma * cross_sigma));
            re[i * frame.rf.azimuth_bins + j] += amplitude * gr * gc;
          }
        }
      }

      if (!camera_drop) {
        BBox b = project_object_box(pos, o.height, o.width, spec.true_plane, spec.cam);
        b.u_min += jitter[0];
        b.v_min += jitter[1];
        b.u_max += jitter[2];
        b.v_max += jitter[3];
        if (b.u_min > b.u_max) std::swap(b.u_min, b.u_max);
        if (b.v_min > b.v_max) std::swap(b.v_min, b.v_max);
        if (b.u_max - b.u_min < 1.0 || b.v_max - b.v_min < 1.0) continue;
        if (!spec.cam.contains(b.center_u(), b.v_max)) continue;

        CameraObject obj;
        obj.frame_id = frame_id;
        obj.cls = o.cls;
        obj.bbox = b;
        obj.mask = box_mask(b);
        obj.score = o.score;
        obj.track_id = static_cast<std::int64_t>(k);
        frame.objects.push_back(std::move(obj));
      }
    }

    for (std::size_t k = 0; k < re.size(); ++k) {
      frame.rf.data[k] = static_cast<float>(std::hypot(re[k], im[k]));
    }
  }
  return out;
}

}  // namespace cral
