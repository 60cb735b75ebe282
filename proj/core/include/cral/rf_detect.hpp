#pragma once

// Radar-side detection: cell-averaging CFAR on range-azimuth magnitude
// images followed by DBSCAN clustering of the peaks in BEV meters.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cral/geometry.hpp"

namespace cral {

/// Dense range-azimuth magnitude map, stored range-major:
/// data[range_bin * azimuth_bins + azimuth_bin].
struct RfImage {
  std::int64_t frame_id = 0;
  std::size_t range_bins = 0;
  std::size_t azimuth_bins = 0;
  double range_res = 0.23;  // m per bin
  double range_min = 0.0;   // m at bin 0
  std::vector<double> azimuth_grid;  // rad per column, strictly increasing
  std::vector<float> data;

  RfImage() = default;
  RfImage(std::size_t n_range, std::size_t n_azimuth, double res, double r0,
          std::vector<double> azimuths);

  float at(std::size_t range_bin, std::size_t azimuth_bin) const {
    return data[range_bin * azimuth_bins + azimuth_bin];
  }
  float& at(std::size_t range_bin, std::size_t azimuth_bin) {
    return data[range_bin * azimuth_bins + azimuth_bin];
  }

  double range_at(std::size_t range_bin) const {
    return range_min + static_cast<double>(range_bin) * range_res;
  }
  double range_max() const { return range_at(range_bins == 0 ? 0 : range_bins - 1); }

  RadarFov fov() const;

  /// Throws ConfigError when sizes disagree, a magnitude is negative or
  /// non-finite, or the azimuth grid is not strictly increasing.
  void validate() const;
};

/// Uniform azimuth grid of n columns over [lo, hi] radians.
std::vector<double> uniform_azimuth_grid(std::size_t n, double lo, double hi);

struct RfCell {
  std::size_t range_bin = 0;
  std::size_t azimuth_bin = 0;

  friend bool operator==(const RfCell&, const RfCell&) = default;
  friend auto operator<=>(const RfCell&, const RfCell&) = default;
};

struct RadarPeak {
  RadarPoint point;
  double magnitude = 0.0;  // cell value; the cell's power is magnitude^2
  RfCell cell;

  double power() const { return magnitude * magnitude; }
};

struct PeakCluster {
  int id = 0;
  std::vector<RadarPeak> peaks;
  RadarPoint centroid;  // power-weighted mean in BEV, back in polar form
};

struct CfarConfig {
  int guard_range = 2;       // guard half-width, range bins
  int guard_azimuth = 2;     // guard half-width, azimuth bins
  int training_range = 4;    // training ring depth beyond the guard, range bins
  int training_azimuth = 4;  // training ring depth beyond the guard, azimuth bins
  double pfa = 1e-3;

  /// Throws ConfigError for a negative guard, an empty training ring, or
  /// pfa outside (0, 1).
  void validate() const;
};

struct DbscanConfig {
  double eps = 1.0;         // neighborhood radius, BEV meters
  std::size_t min_pts = 1;  // neighbors (self included) needed for a core point

  void validate() const;
};

/// CA-CFAR threshold multiplier for n training cells at the given Pfa:
/// alpha = n (pfa^(-1/n) - 1).
double cfar_scale(std::size_t n_training, double pfa);

/// Cells exceeding cfar_scale(N) times the mean of their (truncated) training
/// ring that are also the maximum of their guard window. Plateaus resolve to
/// the first cell in raster order.
std::vector<RadarPeak> cfar_detect(const RfImage& img, const CfarConfig& cfg);

RadarPeak make_peak(const RfImage& img, RfCell cell);

struct Clustering {
  std::vector<PeakCluster> clusters;
  std::vector<RadarPeak> noise;
};

/// DBSCAN over peaks embedded in BEV meters. Border points join the cluster
/// of their nearest core point, so the partition does not depend on input
/// order. Clusters are numbered by their first peak in (range, azimuth) cell
/// order.
Clustering cluster_peaks(std::span<const RadarPeak> peaks, const DbscanConfig& cfg);

/// Power-weighted BEV mean of the peaks, in polar form.
RadarPoint power_weighted_centroid(std::span<const RadarPeak> peaks);

}  // namespace cral
