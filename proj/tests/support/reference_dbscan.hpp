#pragma once

// Quadratic DBSCAN used as an oracle for cluster_peaks.

#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "cral/rf_detect.hpp"
#include "support/test_support.hpp"

namespace cral::test {

// O(n^2) DBSCAN: core points joined by union-find, borders to the nearest core.
inline std::set<std::set<RfCell>> reference_dbscan(const std::vector<RadarPeak>& peaks, double eps, std::size_t min_pts,
                                                   std::set<RfCell>& noise) {
  const std::size_t n = peaks.size();
  auto dist = [&](std::size_t a, std::size_t b) {
    const BevPoint p = to_bev(peaks[a].point), q = to_bev(peaks[b].point);
    return std::hypot(p.x - q.x, p.z - q.z);
  };
  std::vector<bool> core(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t count = 0;
    for (std::size_t b = 0; b < n; ++b) count += dist(a, b) <= eps;
    core[a] = count >= min_pts;
  }
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
    return parent[a] == a ? a : parent[a] = find(parent[a]);
  };
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (core[a] && core[b] && dist(a, b) <= eps) parent[find(a)] = find(b);
    }
  }
  std::map<std::size_t, std::set<RfCell>> groups;
  for (std::size_t a = 0; a < n; ++a) {
    if (core[a]) {
      groups[find(a)].insert(peaks[a].cell);
      continue;
    }
    std::optional<std::size_t> best;
    for (std::size_t b = 0; b < n; ++b) {
      if (!core[b] || dist(a, b) > eps) continue;
      if (!best || dist(a, b) < dist(a, *best)) best = b;
    }
    if (best) {
      groups[find(*best)].insert(peaks[a].cell);
    } else {
      noise.insert(peaks[a].cell);
    }
  }
  std::set<std::set<RfCell>> out;
  for (auto& [root, cells] : groups) out.insert(cells);
  return out;
}

inline std::vector<RadarPeak> random_peaks(Rng& rng, int n) {
  std::vector<RadarPeak> peaks;
  std::set<RfCell> used;
  while (static_cast<int>(peaks.size()) < n) {
    const RfCell cell{static_cast<std::size_t>(rng.integer(0, 999)), static_cast<std::size_t>(rng.integer(0, 999))};
    if (!used.insert(cell).second) continue;
    peaks.push_back(peak_at(rng.uniform(-4, 4), rng.uniform(3, 10), rng.uniform(0.5, 5.0), cell));
  }
  return peaks;
}

}  // namespace cral::test
