#include "cral/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cral/errors.hpp"

namespace cral {

double ols(const PointDet& det, const PointDet& gt, const ClassTable& classes) {
  if (det.cls != gt.cls) return 0.0;
  const double d = bev_distance(det.point, gt.point);
  const double scale = gt.point.r * classes.at(gt.cls).kappa;
  return std::exp(-(d * d) / (2.0 * scale * scale));
}

std::vector<std::size_t> claim_order(std::span<const PointDet> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const PointDet& x = dets[a];
    const PointDet& y = dets[b];
    if (x.confidence != y.confidence) return x.confidence > y.confidence;
    if (x.frame_id != y.frame_id) return x.frame_id < y.frame_id;
    if (x.point.r != y.point.r) return x.point.r < y.point.r;
    if (x.point.theta != y.point.theta) return x.point.theta < y.point.theta;
    return a < b;
  });
  return order;
}

MatchResult match_frame(std::span<const PointDet> dets, std::span<const PointDet> gts,
                        double threshold, const ClassTable& classes) {
  MatchResult out;
  std::vector<bool> gt_taken(gts.size(), false);
  std::vector<bool> det_matched(dets.size(), false);
  for (std::size_t i : claim_order(dets)) {
    std::optional<std::size_t> best;
    double best_ols = -1.0;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (gt_taken[j] || gts[j].cls != dets[i].cls) continue;
      const double s = ols(dets[i], gts[j], classes);
      if (s > best_ols) {
        best_ols = s;
        best = j;
      }
    }
    if (best && best_ols >= threshold) {
      gt_taken[*best] = true;
      det_matched[i] = true;
      out.pairs.push_back({i, *best, best_ols});
    }
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!det_matched[i]) out.unmatched_dets.push_back(i);
  }
  for (std::size_t j = 0; j < gts.size(); ++j) {
    if (!gt_taken[j]) out.unmatched_gts.push_back(j);
  }
  return out;
}

void ScoringConfig::validate() const {
  if (!(primary_threshold > 0.0 && primary_threshold <= 1.0)) {
    throw ConfigError("scoring.primary_threshold must lie in (0, 1]");
  }
  if (sweep.empty()) throw ConfigError("scoring.sweep must not be empty");
  for (double t : sweep) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("scoring.sweep thresholds must lie in (0, 1]");
  }
}

namespace {

// Matches of one frame at one threshold, with global det / gt indices.
struct GlobalPair {
  std::size_t det;
  std::size_t gt;
  double ols;
  double distance;
};

struct FrameMatches {
  std::vector<std::size_t> dets;
  std::vector<std::size_t> gts;
  std::vector<std::vector<GlobalPair>> pairs;  // [0] primary, [1 + k] sweep[k]
};

double rate(double numerator, std::size_t denominator, std::size_t other) {
  if (denominator == 0) return other == 0 ? 1.0 : 0.0;
  return numerator / static_cast<double>(denominator);
}

double f_rate(double numerator, std::size_t n_det, std::size_t n_gt) {
  if (n_det + n_gt == 0) return 1.0;
  return 2.0 * numerator / static_cast<double>(n_det + n_gt);
}

struct ClassTally {
  std::size_t n_det = 0;
  std::size_t n_gt = 0;
  std::vector<std::size_t> tp;  // per threshold slot
  double ols_sum = 0.0;         // primary
  std::vector<double> distances;
};

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

void fill_mae(Metrics& m, const std::vector<double>& distances) {
  if (distances.empty()) return;
  const double mean = mean_of(distances);
  double ss = 0.0;
  for (double d : distances) ss += (d - mean) * (d - mean);
  m.mae_mean = mean;
  m.mae_std = std::sqrt(ss / static_cast<double>(distances.size()));
}

Metrics class_metrics(const ClassTally& t, std::size_t n_sweep) {
  Metrics m;
  m.n_det = t.n_det;
  m.n_gt = t.n_gt;
  m.n_matched = t.tp[0];
  m.ols_sum = t.ols_sum;
  const auto tp0 = static_cast<double>(t.tp[0]);
  m.precision = rate(tp0, t.n_det, t.n_gt);
  m.recall = rate(tp0, t.n_gt, t.n_det);
  m.f1 = f_rate(tp0, t.n_det, t.n_gt);
  m.dqf1 = f_rate(t.ols_sum, t.n_det, t.n_gt);
  double ap = 0.0, ar = 0.0;
  for (std::size_t k = 0; k < n_sweep; ++k) {
    const auto tp = static_cast<double>(t.tp[1 + k]);
    ap += rate(tp, t.n_det, t.n_gt);
    ar += rate(tp, t.n_gt, t.n_det);
  }
  m.ap = ap / static_cast<double>(n_sweep);
  m.ar = ar / static_cast<double>(n_sweep);
  fill_mae(m, t.distances);
  return m;
}

// Mean of `field` over classes passing `use`; `fallback` when none does.
template <typename Field, typename Use>
double macro(const std::map<ObjectClass, Metrics>& per_class, Field field, Use use, double fallback) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [cls, m] : per_class) {
    if (!use(m)) continue;
    sum += field(m);
    ++n;
  }
  return n == 0 ? fallback : sum / static_cast<double>(n);
}

struct Aggregate {
  Metrics overall;
  std::map<ObjectClass, Metrics> per_class;
  std::vector<SweepPoint> sweep;
};

Aggregate aggregate(std::span<const FrameMatches* const> frames, std::span<const PointDet> dets,
                    std::span<const PointDet> gts, const ScoringConfig& cfg) {
  const std::size_t n_slots = 1 + cfg.sweep.size();
  std::map<ObjectClass, ClassTally> tallies;
  auto tally = [&](ObjectClass c) -> ClassTally& {
    ClassTally& t = tallies[c];
    if (t.tp.empty()) t.tp.assign(n_slots, 0);
    return t;
  };

  std::vector<double> all_distances;
  for (const FrameMatches* fm : frames) {
    for (std::size_t i : fm->dets) ++tally(dets[i].cls).n_det;
    for (std::size_t j : fm->gts) ++tally(gts[j].cls).n_gt;
    for (std::size_t s = 0; s < n_slots; ++s) {
      for (const GlobalPair& p : fm->pairs[s]) {
        ClassTally& t = tally(gts[p.gt].cls);
        ++t.tp[s];
        if (s == 0) {
          t.ols_sum += p.ols;
          t.distances.push_back(p.distance);
          all_distances.push_back(p.distance);
        }
      }
    }
  }

  Aggregate out;
  std::size_t n_det = 0, n_gt = 0, n_matched = 0;
  double ols_sum = 0.0;
  for (const auto& [cls, t] : tallies) {
    out.per_class[cls] = class_metrics(t, cfg.sweep.size());
    n_det += t.n_det;
    n_gt += t.n_gt;
    n_matched += t.tp[0];
    ols_sum += t.ols_sum;
  }

  const double empty_p = n_gt == 0 ? 1.0 : 0.0;
  const double empty_r = n_det == 0 ? 1.0 : 0.0;
  auto has_det = [](const Metrics& m) { return m.n_det > 0; };
  auto has_gt = [](const Metrics& m) { return m.n_gt > 0; };
  auto has_any = [](const Metrics& m) { return m.n_det + m.n_gt > 0; };

  Metrics& o = out.overall;
  o.n_det = n_det;
  o.n_gt = n_gt;
  o.n_matched = n_matched;
  o.ols_sum = ols_sum;
  o.precision = macro(out.per_class, [](const Metrics& m) { return m.precision; }, has_det, empty_p);
  o.recall = macro(out.per_class, [](const Metrics& m) { return m.recall; }, has_gt, empty_r);
  o.ap = macro(out.per_class, [](const Metrics& m) { return m.ap; }, has_det, empty_p);
  o.ar = macro(out.per_class, [](const Metrics& m) { return m.ar; }, has_gt, empty_r);
  o.f1 = macro(out.per_class, [](const Metrics& m) { return m.f1; }, has_any, 1.0);
  o.dqf1 = macro(out.per_class, [](const Metrics& m) { return m.dqf1; }, has_any, 1.0);
  fill_mae(o, all_distances);

  for (std::size_t k = 0; k < cfg.sweep.size(); ++k) {
    SweepPoint sp{cfg.sweep[k], 0.0, 0.0};
    double ps = 0.0, rs = 0.0;
    std::size_t np = 0, nr = 0;
    for (const auto& [cls, t] : tallies) {
      const auto tp = static_cast<double>(t.tp[1 + k]);
      if (t.n_det > 0) {
        ps += tp / static_cast<double>(t.n_det);
        ++np;
      }
      if (t.n_gt > 0) {
        rs += tp / static_cast<double>(t.n_gt);
        ++nr;
      }
    }
    sp.precision = np == 0 ? empty_p : ps / static_cast<double>(np);
    sp.recall = nr == 0 ? empty_r : rs / static_cast<double>(nr);
    out.sweep.push_back(sp);
  }
  return out;
}

}  // namespace

ScoreReport score(std::span<const PointDet> dets, std::span<const PointDet> gts,
                  const ClassTable& classes, const ScoringConfig& cfg) {
  cfg.validate();
  std::map<std::int64_t, FrameMatches> frames;
  for (std::size_t i = 0; i < dets.size(); ++i) frames[dets[i].frame_id].dets.push_back(i);
  for (std::size_t j = 0; j < gts.size(); ++j) frames[gts[j].frame_id].gts.push_back(j);

  std::vector<double> thresholds{cfg.primary_threshold};
  thresholds.insert(thresholds.end(), cfg.sweep.begin(), cfg.sweep.end());

  std::map<std::string, std::vector<const FrameMatches*>> by_scenario;
  std::vector<const FrameMatches*> all;
  for (auto& [frame_id, fm] : frames) {
    std::vector<PointDet> fd, fg;
    for (std::size_t i : fm.dets) fd.push_back(dets[i]);
    for (std::size_t j : fm.gts) fg.push_back(gts[j]);
    for (double t : thresholds) {
      const MatchResult mr = match_frame(fd, fg, t, classes);
      std::vector<GlobalPair> pairs;
      for (const MatchPair& p : mr.pairs) {
        pairs.push_back({fm.dets[p.det], fm.gts[p.gt], p.ols, bev_distance(fd[p.det].point, fg[p.gt].point)});
      }
      fm.pairs.push_back(std::move(pairs));
    }
    all.push_back(&fm);

    std::string label;
    if (!fm.gts.empty()) {
      label = gts[fm.gts.front()].scenario;
    } else if (!fm.dets.empty()) {
      label = dets[fm.dets.front()].scenario;
    }
    if (!label.empty()) by_scenario[label].push_back(&fm);
  }

  ScoreReport report;
  Aggregate overall = aggregate(all, dets, gts, cfg);
  report.overall = overall.overall;
  report.per_class = std::move(overall.per_class);
  report.sweep = std::move(overall.sweep);
  for (const auto& [label, subset] : by_scenario) {
    report.per_scenario[label] = aggregate(subset, dets, gts, cfg).overall;
  }
  return report;
}

}  // namespace cral
