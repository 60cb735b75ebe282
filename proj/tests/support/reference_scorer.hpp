#pragma once

// Deliberately plain re-implementation of the point-detection metrics, used
// as an oracle for cral::score. Shares nothing with the library beyond the
// input record types.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cral/scoring.hpp"

namespace cral::test {

struct RefMetrics {
  double precision = 0, recall = 0, f1 = 0, ap = 0, ar = 0, dqf1 = 0;
  std::optional<double> mae_mean, mae_std;
  std::size_t n_det = 0, n_gt = 0, n_matched = 0;
};

struct RefReport {
  RefMetrics overall;
  std::map<int, RefMetrics> per_class;
  std::map<std::string, RefMetrics> per_scenario;
};

inline double ref_ols(const PointDet& d, const PointDet& g, const std::map<int, double>& kappa) {
  if (d.cls != g.cls) return 0.0;
  const double dx = d.point.r * std::sin(d.point.theta) - g.point.r * std::sin(g.point.theta);
  const double dz = d.point.r * std::cos(d.point.theta) - g.point.r * std::cos(g.point.theta);
  const double s = g.point.r * kappa.at(static_cast<int>(g.cls));
  return std::exp(-(dx * dx + dz * dz) / (2 * s * s));
}

struct RefPair {
  std::size_t det, gt;
  double ols, dist;
};

// Greedy matching over the whole corpus, frame by frame.
inline std::vector<RefPair> ref_match(const std::vector<PointDet>& dets, const std::vector<PointDet>& gts,
                                      double thr, const std::map<int, double>& kappa) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = std::make_tuple(-dets[a].confidence, dets[a].frame_id, dets[a].point.r, dets[a].point.theta, a);
    const auto kb = std::make_tuple(-dets[b].confidence, dets[b].frame_id, dets[b].point.r, dets[b].point.theta, b);
    return ka < kb;
  });
  std::vector<bool> taken(gts.size(), false);
  std::vector<RefPair> pairs;
  for (std::size_t i : order) {
    int best = -1;
    double best_ols = -1;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (taken[j] || gts[j].frame_id != dets[i].frame_id || gts[j].cls != dets[i].cls) continue;
      const double o = ref_ols(dets[i], gts[j], kappa);
      if (o > best_ols) {
        best_ols = o;
        best = static_cast<int>(j);
      }
    }
    if (best >= 0 && best_ols >= thr) {
      taken[static_cast<std::size_t>(best)] = true;
      const PointDet& g = gts[static_cast<std::size_t>(best)];
      const double dx = dets[i].point.r * std::sin(dets[i].point.theta) - g.point.r * std::sin(g.point.theta);
      const double dz = dets[i].point.r * std::cos(dets[i].point.theta) - g.point.r * std::cos(g.point.theta);
      pairs.push_back({i, static_cast<std::size_t>(best), best_ols, std::sqrt(dx * dx + dz * dz)});
    }
  }
  return pairs;
}

inline double ref_ratio(double num, std::size_t den, std::size_t other) {
  if (den == 0) return other == 0 ? 1.0 : 0.0;
  return num / static_cast<double>(den);
}

inline void ref_mae(RefMetrics& m, const std::vector<double>& d) {
  if (d.empty()) return;
  double sum = 0;
  for (double x : d) sum += x;
  const double mean = sum / static_cast<double>(d.size());
  double var = 0;
  for (double x : d) var += (x - mean) * (x - mean);
  m.mae_mean = mean;
  m.mae_std = std::sqrt(var / static_cast<double>(d.size()));
}

inline RefReport ref_score_subset(const std::vector<PointDet>& dets, const std::vector<PointDet>& gts,
                                  const std::map<int, double>& kappa, double primary,
                                  const std::vector<double>& sweep) {
  RefReport rep;
  const auto primary_pairs = ref_match(dets, gts, primary, kappa);
  std::vector<std::vector<RefPair>> sweep_pairs;
  for (double t : sweep) sweep_pairs.push_back(ref_match(dets, gts, t, kappa));

  std::set<int> classes;
  for (const auto& d : dets) classes.insert(static_cast<int>(d.cls));
  for (const auto& g : gts) classes.insert(static_cast<int>(g.cls));

  std::vector<double> all_dist;
  for (const auto& p : primary_pairs) all_dist.push_back(p.dist);

  for (int c : classes) {
    RefMetrics m;
    for (const auto& d : dets) m.n_det += static_cast<int>(d.cls) == c;
    for (const auto& g : gts) m.n_gt += static_cast<int>(g.cls) == c;
    double ols_sum = 0;
    std::vector<double> dist;
    for (const auto& p : primary_pairs) {
      if (static_cast<int>(gts[p.gt].cls) != c) continue;
      ++m.n_matched;
      ols_sum += p.ols;
      dist.push_back(p.dist);
    }
    const double tp = static_cast<double>(m.n_matched);
    m.precision = ref_ratio(tp, m.n_det, m.n_gt);
    m.recall = ref_ratio(tp, m.n_gt, m.n_det);
    const std::size_t both = m.n_det + m.n_gt;
    m.f1 = both == 0 ? 1.0 : 2 * tp / static_cast<double>(both);
    m.dqf1 = both == 0 ? 1.0 : 2 * ols_sum / static_cast<double>(both);
    for (const auto& pairs : sweep_pairs) {
      double n = 0;
      for (const auto& p : pairs) n += static_cast<int>(gts[p.gt].cls) == c;
      m.ap += ref_ratio(n, m.n_det, m.n_gt) / static_cast<double>(sweep.size());
      m.ar += ref_ratio(n, m.n_gt, m.n_det) / static_cast<double>(sweep.size());
    }
    ref_mae(m, dist);
    rep.per_class[c] = m;
  }

  RefMetrics& o = rep.overall;
  o.n_det = dets.size();
  o.n_gt = gts.size();
  o.n_matched = primary_pairs.size();
  double p = 0, r = 0, f = 0, q = 0, ap = 0, ar = 0;
  int np = 0, nr = 0, nf = 0;
  for (const auto& [c, m] : rep.per_class) {
    if (m.n_det > 0) {
      p += m.precision;
      ap += m.ap;
      ++np;
    }
    if (m.n_gt > 0) {
      r += m.recall;
      ar += m.ar;
      ++nr;
    }
    f += m.f1;
    q += m.dqf1;
    ++nf;
  }
  o.precision = np ? p / np : (gts.empty() ? 1.0 : 0.0);
  o.ap = np ? ap / np : (gts.empty() ? 1.0 : 0.0);
  o.recall = nr ? r / nr : (dets.empty() ? 1.0 : 0.0);
  o.ar = nr ? ar / nr : (dets.empty() ? 1.0 : 0.0);
  o.f1 = nf ? f / nf : 1.0;
  o.dqf1 = nf ? q / nf : 1.0;
  ref_mae(o, all_dist);
  return rep;
}

inline RefReport ref_score(const std::vector<PointDet>& dets, const std::vector<PointDet>& gts,
                           const std::map<int, double>& kappa, double primary, const std::vector<double>& sweep) {
  RefReport rep = ref_score_subset(dets, gts, kappa, primary, sweep);
  // Scenario of a frame: label of its first gt record, else of its first detection.
  std::map<std::int64_t, std::string> frame_label;
  for (const auto& d : dets) frame_label.emplace(d.frame_id, d.scenario);
  for (const auto& g : gts) frame_label[g.frame_id] = "";
  for (const auto& g : gts) {
    if (frame_label[g.frame_id].empty()) frame_label[g.frame_id] = g.scenario;
  }
  std::set<std::string> labels;
  for (const auto& [f, l] : frame_label) {
    if (!l.empty()) labels.insert(l);
  }
  for (const std::string& l : labels) {
    std::vector<PointDet> sd, sg;
    for (const auto& d : dets) {
      if (frame_label[d.frame_id] == l) sd.push_back(d);
    }
    for (const auto& g : gts) {
      if (frame_label[g.frame_id] == l) sg.push_back(g);
    }
    rep.per_scenario[l] = ref_score_subset(sd, sg, kappa, primary, sweep).overall;
  }
  return rep;
}

// Largest difference between library and reference metrics; infinity when
// presence of MAE or counts disagree.
inline double metrics_gap(const Metrics& m, const RefMetrics& r) {
  if (m.n_det != r.n_det || m.n_gt != r.n_gt || m.n_matched != r.n_matched) return INFINITY;
  if (m.mae_mean.has_value() != r.mae_mean.has_value()) return INFINITY;
  double gap = 0;
  for (auto [a, b] : {std::pair{m.precision, r.precision}, {m.recall, r.recall}, {m.f1, r.f1}, {m.ap, r.ap},
                      {m.ar, r.ar}, {m.dqf1, r.dqf1}}) {
    gap = std::max(gap, std::abs(a - b));
  }
  if (m.mae_mean) {
    gap = std::max(gap, std::abs(*m.mae_mean - *r.mae_mean));
    gap = std::max(gap, std::abs(*m.mae_std - *r.mae_std));
  }
  return gap;
}

inline double report_gap(const ScoreReport& rep, const RefReport& ref) {
  double gap = metrics_gap(rep.overall, ref.overall);
  if (rep.per_class.size() != ref.per_class.size() || rep.per_scenario.size() != ref.per_scenario.size()) {
    return INFINITY;
  }
  for (const auto& [c, m] : rep.per_class) {
    const auto it = ref.per_class.find(static_cast<int>(c));
    if (it == ref.per_class.end()) return INFINITY;
    gap = std::max(gap, metrics_gap(m, it->second));
  }
  for (const auto& [l, m] : rep.per_scenario) {
    const auto it = ref.per_scenario.find(l);
    if (it == ref.per_scenario.end()) return INFINITY;
    gap = std::max(gap, metrics_gap(m, it->second));
  }
  return gap;
}

// A small synthetic corpus with misses, false alarms and jitter.
struct Corpus {
  std::vector<PointDet> dets;
  std::vector<PointDet> gts;
};

template <typename RngT>
Corpus make_corpus(RngT& rng, int n_frames) {
  Corpus c;
  const std::string scenarios[] = {"parking", "campus", "highway"};
  for (int f = 0; f < n_frames; ++f) {
    const std::string label = scenarios[static_cast<std::size_t>(f % 3)];
    const int n_obj = rng.integer(0, 6);
    for (int k = 0; k < n_obj; ++k) {
      PointDet g;
      g.frame_id = f;
      g.cls = static_cast<ObjectClass>(rng.integer(0, 2));
      g.point = {rng.uniform(2.0, 24.0), rng.uniform(-1.2, 1.2)};
      g.scenario = label;
      g.confidence = 1.0;
      c.gts.push_back(g);
      if (rng.coin(0.15)) continue;  // miss
      PointDet d = g;
      const double s = rng.uniform(0.0, 0.4);
      d.point = from_bev({to_bev(g.point).x + rng.normal(0, s), to_bev(g.point).z + rng.normal(0, s)});
      d.confidence = rng.coin(0.2) ? 0.5 : rng.uniform(0.1, 1.0);
      if (rng.coin(0.05)) d.cls = static_cast<ObjectClass>((static_cast<int>(d.cls) + 1) % 3);
      c.dets.push_back(d);
    }
    const int n_fa = rng.integer(0, 2);
    for (int k = 0; k < n_fa; ++k) {
      PointDet d;
      d.frame_id = f;
      d.cls = static_cast<ObjectClass>(rng.integer(0, 2));
      d.point = {rng.uniform(2.0, 24.0), rng.uniform(-1.2, 1.2)};
      d.confidence = rng.uniform(0.1, 1.0);
      d.scenario = label;
      c.dets.push_back(d);
    }
  }
  return c;
}

inline std::map<int, double> kappa_map(const ClassTable& t) {
  return {{0, t.at(ObjectClass::kPedestrian).kappa}, {1, t.at(ObjectClass::kCyclist).kappa},
          {2, t.at(ObjectClass::kCar).kappa}};
}

}  // namespace cral::test
