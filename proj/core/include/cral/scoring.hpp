#pragma once

// Point-based detection scoring: object location similarity (OLS), greedy
// per-frame matching, and the MAE / precision / recall / AP / AR / DQF1 suite.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cral/classes.hpp"
#include "cral/geometry.hpp"

namespace cral {

struct PointDet {
  std::int64_t frame_id = 0;
  ObjectClass cls = ObjectClass::kCar;
  RadarPoint point;
  double confidence = 1.0;
  std::string scenario;  // optional grouping label; empty when unused
};

/// exp(-d^2 / (2 (s kappa)^2)) with d the BEV distance, s the ground-truth
/// range and kappa the ground-truth class tolerance. Zero across classes.
double ols(const PointDet& det, const PointDet& gt, const ClassTable& classes);

struct MatchPair {
  std::size_t det = 0;
  std::size_t gt = 0;
  double ols = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_dets;
  std::vector<std::size_t> unmatched_gts;
};

/// Order in which detections claim ground truth: confidence descending, then
/// frame id, range and azimuth ascending, then input position.
std::vector<std::size_t> claim_order(std::span<const PointDet> dets);

/// Greedy matching within one frame: detections in claim_order take the
/// unclaimed same-class ground truth of highest OLS (ties: lower index) when
/// that OLS reaches `threshold`. Indices refer to the input spans.
MatchResult match_frame(std::span<const PointDet> dets, std::span<const PointDet> gts,
                        double threshold, const ClassTable& classes);

struct ScoringConfig {
  double primary_threshold = 0.5;
  std::vector<double> sweep{0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};

  void validate() const;
};

struct Metrics {
  std::size_t n_det = 0;
  std::size_t n_gt = 0;
  std::size_t n_matched = 0;
  double ols_sum = 0.0;
  std::optional<double> mae_mean;  // absent without matches
  std::optional<double> mae_std;   // population std over matched pairs
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ap = 0.0;  // mean precision over the threshold sweep
  double ar = 0.0;  // mean recall over the threshold sweep
  double dqf1 = 0.0;
};

struct SweepPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct ScoreReport {
  Metrics overall;
  std::map<ObjectClass, Metrics> per_class;       // classes present in dets or gts
  std::map<std::string, Metrics> per_scenario;    // by scenario label of the frame
  std::vector<SweepPoint> sweep;                  // overall precision/recall per threshold
};

/// Scores detections against ground truth. Per class: precision = TP/n_det,
/// recall = TP/n_gt, F1 = 2TP/(n_det+n_gt), DQF1 = 2 sum(OLS)/(n_det+n_gt),
/// each 1 when both counts are 0 and 0 when exactly one is. The overall
/// rates are macro averages: precision and AP over classes with detections,
/// recall and AR over classes with ground truth, F1 and DQF1 over classes
/// with either. MAE pools every matched pair at the primary threshold.
/// Scenario labels come from the ground-truth records of each frame
/// (detection labels for frames without ground truth).
ScoreReport score(std::span<const PointDet> dets, std::span<const PointDet> gts,
                  const ClassTable& classes, const ScoringConfig& cfg = {});

}  // namespace cral
