#include "cral/rf_detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "cral/errors.hpp"

namespace cral {

RfImage::RfImage(std::size_t n_range, std::size_t n_azimuth, double res, double r0,
                 std::vector<double> azimuths)
    : range_bins(n_range),
      azimuth_bins(n_azimuth),
      range_res(res),
      range_min(r0),
      azimuth_grid(std::move(azimuths)),
      data(n_range * n_azimuth, 0.0f) {}

RadarFov RfImage::fov() const {
  if (azimuth_grid.empty()) return {range_min, range_max(), 0.0, -1.0};
  return {range_min, range_max(), azimuth_grid.front(), azimuth_grid.back()};
}

void RfImage::validate() const {
  if (range_bins == 0 || azimuth_bins == 0) throw ConfigError("RF image has no cells");
  if (data.size() != range_bins * azimuth_bins) {
    throw ConfigError("RF image data size " + std::to_string(data.size()) + " != " +
                      std::to_string(range_bins) + " x " + std::to_string(azimuth_bins));
  }
  if (azimuth_grid.size() != azimuth_bins) throw ConfigError("azimuth grid size mismatch");
  if (!(range_res > 0.0) || !std::isfinite(range_res)) throw ConfigError("range_res must be positive");
  if (!std::isfinite(range_min) || range_min < 0.0) throw ConfigError("range_min must be >= 0");
  for (std::size_t j = 1; j < azimuth_grid.size(); ++j) {
    if (!(azimuth_grid[j] > azimuth_grid[j - 1])) {
      throw ConfigError("azimuth grid not strictly increasing at column " + std::to_string(j));
    }
  }
  for (float x : data) {
    if (!std::isfinite(x) || x < 0.0f) throw ConfigError("RF magnitudes must be finite and >= 0");
  }
}

std::vector<double> uniform_azimuth_grid(std::size_t n, double lo, double hi) {
  std::vector<double> grid(n);
  if (n == 1) {
    grid[0] = 0.5 * (lo + hi);
    return grid;
  }
  for (std::size_t j = 0; j < n; ++j) {
    grid[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
  }
  return grid;
}

void CfarConfig::validate() const {
  if (guard_range < 0 || guard_azimuth < 0) throw ConfigError("cfar guard must be >= 0");
  if (training_range < 0 || training_azimuth < 0 || (training_range == 0 && training_azimuth == 0)) {
    throw ConfigError("cfar training extent must exceed the guard window");
  }
  if (!(pfa > 0.0 && pfa < 1.0)) throw ConfigError("cfar pfa must lie in (0, 1)");
}

void DbscanConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("dbscan eps must be positive");
  if (min_pts == 0) throw ConfigError("dbscan min_pts must be >= 1");
}

double cfar_scale(std::size_t n_training, double pfa) {
  const double n = static_cast<double>(n_training);
  return n * std::expm1(-std::log(pfa) / n);
}

RadarPeak make_peak(const RfImage& img, RfCell cell) {
  RadarPeak peak;
  peak.cell = cell;
  peak.magnitude = img.at(cell.range_bin, cell.azimuth_bin);
  peak.point = {img.range_at(cell.range_bin), img.azimuth_grid[cell.azimuth_bin]};
  return peak;
}

std::vector<RadarPeak> cfar_detect(const RfImage& img, const CfarConfig& cfg) {
  cfg.validate();
  img.validate();

  const auto rows = static_cast<long>(img.range_bins);
  const auto cols = static_cast<long>(img.azimuth_bins);
  const long outer_r = cfg.guard_range + cfg.training_range;
  const long outer_a = cfg.guard_azimuth + cfg.training_azimuth;

  // Scale factors depend only on the training cell count; cache them.
  std::unordered_map<std::size_t, double> scale_cache;
  auto scale_for = [&](std::size_t n) {
    auto it = scale_cache.find(n);
    if (it != scale_cache.end()) return it->second;
    return scale_cache.emplace(n, cfar_scale(n, cfg.pfa)).first->second;
  };

  std::vector<RadarPeak> peaks;
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      const double x = img.at(i, j);
      if (x <= 0.0) continue;

      const long gi0 = std::max(0L, i - cfg.guard_range), gi1 = std::min(rows - 1, i + cfg.guard_range);
      const long gj0 = std::max(0L, j - cfg.guard_azimuth), gj1 = std::min(cols - 1, j + cfg.guard_azimuth);

      bool is_max = true;
      for (long a = gi0; a <= gi1 && is_max; ++a) {
        for (long b = gj0; b <= gj1; ++b) {
          const double y = img.at(a, b);
          const bool earlier = a < i || (a == i && b < j);
          if (y > x || (earlier && y == x)) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;

      const long oi0 = std::max(0L, i - outer_r), oi1 = std::min(rows - 1, i + outer_r);
      const long oj0 = std::max(0L, j - outer_a), oj1 = std::min(cols - 1, j + outer_a);
      double sum = 0.0;
      std::size_t n = 0;
      for (long a = oi0; a <= oi1; ++a) {
        for (long b = oj0; b <= oj1; ++b) {
          if (a >= gi0 && a <= gi1 && b >= gj0 && b <= gj1) continue;
          sum += img.at(a, b);
          ++n;
        }
      }
      if (n == 0) continue;

      if (x * static_cast<double>(n) > scale_for(n) * sum) {
        peaks.push_back(make_peak(img, {static_cast<std::size_t>(i), static_cast<std::size_t>(j)}));
      }
    }
  }
  return peaks;
}

RadarPoint power_weighted_centroid(std::span<const RadarPeak> peaks) {
  double wx = 0.0, wz = 0.0, w = 0.0;
  for (const RadarPeak& p : peaks) {
    const BevPoint b = to_bev(p.point);
    const double pw = p.power();
    wx += pw * b.x;
    wz += pw * b.z;
    w += pw;
  }
  if (w <= 0.0) {
    // All-zero power: fall back to the plain mean.
    wx = wz = 0.0;
    for (const RadarPeak& p : peaks) {
      const BevPoint b = to_bev(p.point);
      wx += b.x;
      wz += b.z;
    }
    w = static_cast<double>(peaks.size());
  }
  if (w == 0.0) return {};
  return from_bev({wx / w, wz / w});
}

namespace {

// Uniform grid over BEV with cell size eps; neighbors live in the 3x3 block.
class BevGrid {
 public:
  BevGrid(const std::vector<BevPoint>& pts, double eps) : pts_(pts), eps_(eps) {
    for (std::size_t k = 0; k < pts.size(); ++k) buckets_[key(cell_of(pts[k]))].push_back(k);
  }

  std::vector<std::size_t> neighbors(std::size_t k) const {
    std::vector<std::size_t> out;
    const auto [cx, cz] = cell_of(pts_[k]);
    const double eps2 = eps_ * eps_;
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dz = -1; dz <= 1; ++dz) {
        auto it = buckets_.find(key({cx + dx, cz + dz}));
        if (it == buckets_.end()) continue;
        for (std::size_t m : it->second) {
          const double ex = pts_[m].x - pts_[k].x;
          const double ez = pts_[m].z - pts_[k].z;
          if (ex * ex + ez * ez <= eps2) out.push_back(m);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  using Cell = std::pair<long, long>;
  Cell cell_of(BevPoint p) const {
    return {static_cast<long>(std::floor(p.x / eps_)), static_cast<long>(std::floor(p.z / eps_))};
  }
  static std::uint64_t key(Cell c) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.first)) << 32) |
           static_cast<std::uint32_t>(c.second);
  }

  const std::vector<BevPoint>& pts_;
  double eps_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

bool canonical_less(const RadarPeak& a, const RadarPeak& b) {
  if (a.cell != b.cell) return a.cell < b.cell;
  if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
  if (a.point.r != b.point.r) return a.point.r < b.point.r;
  return a.point.theta < b.point.theta;
}

}  // namespace

Clustering cluster_peaks(std::span<const RadarPeak> input, const DbscanConfig& cfg) {
  cfg.validate();
  Clustering result;
  if (input.empty()) return result;

  std::vector<RadarPeak> peaks(input.begin(), input.end());
  std::sort(peaks.begin(), peaks.end(), canonical_less);

  std::vector<BevPoint> pts;
  pts.reserve(peaks.size());
  for (const RadarPeak& p : peaks) pts.push_back(to_bev(p.point));

  const BevGrid grid(pts, cfg.eps);
  const std::size_t n = peaks.size();
  std::vector<std::vector<std::size_t>> nbrs(n);
  std::vector<bool> core(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    nbrs[k] = grid.neighbors(k);
    core[k] = nbrs[k].size() >= cfg.min_pts;
  }

  constexpr int kUnlabeled = -1;
  std::vector<int> label(n, kUnlabeled);
  int next_id = 0;
  // Expand clusters through core points only; border points are attached
  // afterwards so that their assignment is order independent.
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || label[seed] != kUnlabeled) continue;
    const int id = next_id++;
    std::vector<std::size_t> frontier{seed};
    label[seed] = id;
    while (!frontier.empty()) {
      const std::size_t k = frontier.back();
      frontier.pop_back();
      for (std::size_t m : nbrs[k]) {
        if (core[m] && label[m] == kUnlabeled) {
          label[m] = id;
          frontier.push_back(m);
        }
      }
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (core[k]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : nbrs[k]) {
      if (!core[m]) continue;
      const double d = std::hypot(pts[m].x - pts[k].x, pts[m].z - pts[k].z);
      if (d < best) {
        best = d;
        label[k] = label[m];
      }
    }
  }

  // Renumber clusters by their first member in canonical order.
  std::vector<int> remap(static_cast<std::size_t>(next_id), kUnlabeled);
  int renumbered = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (label[k] == kUnlabeled) continue;
    int& r = remap[static_cast<std::size_t>(label[k])];
    if (r == kUnlabeled) r = renumbered++;
  }

  result.clusters.resize(static_cast<std::size_t>(renumbered));
  for (std::size_t k = 0; k < n; ++k) {
    if (label[k] == kUnlabeled) {
      result.noise.push_back(peaks[k]);
      continue;
    }
    const int id = remap[static_cast<std::size_t>(label[k])];
    result.clusters[static_cast<std::size_t>(id)].peaks.push_back(peaks[k]);
  }
  for (std::size_t c = 0; c < result.clusters.size(); ++c) {
    PeakCluster& cluster = result.clusters[c];
    cluster.id = static_cast<int>(c);
    cluster.centroid = power_weighted_centroid(cluster.peaks);
  }
  return result;
}

}  // namespace cral
