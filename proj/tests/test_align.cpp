#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cral/align.hpp"
#include "cral/errors.hpp"
#include "cral/synth.hpp"
#include "support/test_support.hpp"

using namespace cral;
using cral::test::Rng;

namespace {

PeakCluster cluster_at(int id, RadarPoint p, double magnitude = 10.0) {
  PeakCluster c;
  c.id = id;
  RadarPeak peak;
  peak.point = p;
  peak.magnitude = magnitude;
  peak.cell = {static_cast<std::size_t>(id), 0};
  c.peaks.push_back(peak);
  c.centroid = p;
  return c;
}

CameraObject object_with_box(ObjectClass cls, BBox box, double score = 0.9) {
  CameraObject o;
  o.cls = cls;
  o.bbox = box;
  o.score = score;
  return o;
}

// Exact box of an object standing on the plane at p.
CameraObject object_at(ObjectClass cls, RadarPoint p, const GroundPlane& g, double height, double width) {
  return object_with_box(cls, project_object_box(to_bev(p), height, width, g, CameraModel{}));
}

SceneSpec quiet_scene(GroundPlane truth) {
  SceneSpec s = default_scene();
  s.true_plane = truth;
  s.noise.bbox_jitter_px = 0.0;
  s.n_frames = 50;
  return s;
}

std::vector<FrameObservations> observe_all(const RenderedScene& scene, const AnnotatorConfig& cfg) {
  std::vector<FrameObservations> out;
  for (const SensorFrame& f : scene.frames) out.push_back(observe(f, cfg));
  return out;
}

}  // namespace

TEST_CASE("adaptive weight anchor and shape") {
  CHECK(std::abs(adaptive_weight(10.0, 0.06) - std::exp(-0.6)) < 1e-12);
  CHECK(adaptive_weight(0.0, 0.06) == 1.0);
  double prev = 1.0;
  for (double z = 0.5; z < 40.0; z += 0.5) {
    const double l = adaptive_weight(z, 0.06);
    CHECK(l > 0.0);
    CHECK(l < prev);
    prev = l;
  }
}

TEST_CASE("alignment cost blends mask and box residuals") {
  CfarLine line;
  line.h_line = 100.0;
  line.foot = {50.0, 200.0};
  line.zc = std::log(2.0) / 0.06;  // lambda = 0.5

  CameraObject obj = object_with_box(ObjectClass::kCar, {0.0, 80.0, 100.0, 200.0});  // h_bbox 120
  obj.mask = {{50.5, 110.0, 200.0}};                                                 // h_mask 90
  const AlignmentCost c = alignment_cost(line, obj, 0.06);
  CHECK(c.lambda == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.cost == doctest::Approx(250.0).epsilon(1e-12));

  obj.mask = {{50.5, 100.0, 200.0}};
  obj.bbox.v_min = 100.0;
  CHECK(alignment_cost(line, obj, 0.06).cost == 0.0);

  obj.mask.clear();
  obj.bbox.v_min = 90.0;  // h_bbox 110, box term only
  const AlignmentCost no_mask = alignment_cost(line, obj, 0.06);
  CHECK(no_mask.cost == doctest::Approx(100.0));
  CHECK(no_mask.lambda == 0.0);
}

TEST_CASE("alignment cost is non-negative and zero only when residuals vanish") {
  Rng rng(31);
  for (int k = 0; k < 500; ++k) {
    CfarLine line;
    line.h_line = rng.integer(10, 300);
    line.zc = rng.uniform(1, 30);
    line.foot = {100.0, 400.0};
    const double hb = rng.coin(0.3) ? line.h_line : rng.integer(10, 300);
    const double hm = rng.coin(0.3) ? line.h_line : rng.integer(10, static_cast<int>(hb));
    CameraObject obj = object_with_box(ObjectClass::kCar, {50.0, 400.0 - hb, 150.0, 400.0});
    obj.mask = {{100.5, 400.0 - hm, 400.0}};
    const double c = alignment_cost(line, obj, 0.06).cost;
    CHECK(c >= 0.0);
    CHECK((c == 0.0) == (hb == line.h_line && hm == line.h_line));
  }
}

TEST_CASE("one cluster in front of one car associates with it") {
  const GroundPlane g = GroundPlane::from_degrees(4.0, 0.0, 1.65);
  const RadarPoint p{10.0, 0.05};
  const std::vector<PeakCluster> clusters{cluster_at(0, p)};
  const std::vector<CameraObject> objects{object_at(ObjectClass::kCar, p, g, 1.55, 1.8)};
  const auto assoc = associate_frame(clusters, objects, g, CameraModel{}, ClassTable::defaults(), AlignConfig{});
  REQUIRE(assoc.size() == 1);
  REQUIRE(assoc[0].object_ref.has_value());
  CHECK(*assoc[0].object_ref == 0);
  CHECK(assoc[0].cost < 1e-12);
}

TEST_CASE("a cluster without camera objects is an outlier") {
  const std::vector<PeakCluster> clusters{cluster_at(0, {8.0, 0.0})};
  const auto assoc =
      associate_frame(clusters, {}, GroundPlane{}, CameraModel{}, ClassTable::defaults(), AlignConfig{});
  REQUIRE(assoc.size() == 1);
  CHECK(assoc[0].is_outlier());
}

TEST_CASE("a cluster far off the object's height is rejected") {
  const GroundPlane g;
  const RadarPoint p{10.0, 0.0};
  // A box twice as tall as a car's projected height: cost far above (0.5 h)^2.
  const std::vector<CameraObject> objects{object_at(ObjectClass::kCar, p, g, 3.5, 1.8)};
  const auto assoc = associate_frame(std::vector<PeakCluster>{cluster_at(0, p)}, objects, g, CameraModel{},
                                     ClassTable::defaults(), AlignConfig{});
  CHECK(assoc[0].is_outlier());
}

TEST_CASE("association equals exhaustive search on 3 x 2 frames") {
  Rng rng(32);
  const GroundPlane g = GroundPlane::from_degrees(4.0, 0.5, 1.65);
  const CameraModel cam;
  const ClassTable classes = ClassTable::defaults();
  const AlignConfig cfg;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<CameraObject> objects;
    for (int k = 0; k < 2; ++k) {
      const RadarPoint p{rng.uniform(6, 20), rng.uniform(-0.25, 0.25)};
      const auto cls = kAllClasses[static_cast<std::size_t>(rng.integer(0, 2))];
      CameraObject o = object_at(cls, p, g, classes.at(cls).avg_height * rng.uniform(0.7, 1.3), rng.uniform(0.5, 2.0));
      objects.push_back(o);
    }
    std::vector<PeakCluster> clusters;
    for (int i = 0; i < 3; ++i) clusters.push_back(cluster_at(i, {rng.uniform(5, 22), rng.uniform(-0.3, 0.3)}));

    // Feasible (cluster, object) costs, then every assignment of clusters to
    // {object 0, object 1, outlier}: most pairs first, then least total cost.
    auto feasible_cost = [&](std::size_t i, std::size_t k) -> std::optional<double> {
      const CfarLine line = make_cfar_line(clusters[i], classes.at(objects[k].cls).avg_height, g, cam);
      const double margin = 0.2 * objects[k].bbox.width();
      if (line.foot.u < objects[k].bbox.u_min - margin || line.foot.u > objects[k].bbox.u_max + margin) {
        return std::nullopt;
      }
      const double h = line.foot.v - line.top.v;
      const double bx = h - objects[k].bbox.height();
      if (bx * bx > 0.25 * h * h) return std::nullopt;
      return bx * bx;
    };
    std::array<int, 3> best_choice{-1, -1, -1};
    int best_pairs = -1;
    double best_cost = 0.0;
    for (int code = 0; code < 27; ++code) {
      std::array<int, 3> choice{code % 3 - 1, code / 3 % 3 - 1, code / 9 - 1};  // -1 outlier
      int pairs = 0;
      double cost = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < 3 && ok; ++i) {
        if (choice[i] < 0) continue;
        const auto c = feasible_cost(i, static_cast<std::size_t>(choice[i]));
        if (!c) {
          ok = false;
        } else {
          ++pairs;
          cost += *c;
        }
      }
      if (!ok) continue;
      if (pairs > best_pairs || (pairs == best_pairs && cost < best_cost)) {
        best_pairs = pairs;
        best_cost = cost;
        best_choice = choice;
      }
    }

    const auto assoc = associate_frame(clusters, objects, g, cam, classes, cfg);
    double total = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      const int got = assoc[i].object_ref ? static_cast<int>(*assoc[i].object_ref) : -1;
      CHECK(got == best_choice[i]);
      if (got >= 0) {
        ++pairs;
        total += assoc[i].cost;
      }
    }
    CHECK(pairs == best_pairs);
    CHECK(total == doctest::Approx(best_cost));
  }
}

TEST_CASE("window without aligned pairs returns the initial plane") {
  std::vector<FrameObservations> window(3);
  window[1].clusters.push_back(cluster_at(0, {10.0, 0.0}));
  const GroundPlane g0 = GroundPlane::from_degrees(3.0, -1.0, 1.5);
  const PlaneFit fit = optimize_ground_plane(window, g0, CameraModel{}, ClassTable::defaults(), AlignConfig{});
  CHECK(fit.plane == g0);
  CHECK(fit.n_pairs == 0);
}

TEST_CASE("noise-free scene: plane recovered, objective not increased, fixed point stable") {
  const GroundPlane truth = GroundPlane::from_degrees(4.0, 1.0, 1.65);
  const RenderedScene scene = render_scene(quiet_scene(truth));
  AnnotatorConfig cfg;
  const auto obs = observe_all(scene, cfg);

  const PlaneFit fit = optimize_ground_plane(obs, cfg.initial_plane, cfg.cam, cfg.classes, cfg.align);
  CHECK(fit.n_pairs > 0);
  CHECK(fit.objective <= fit.initial_objective);
  CHECK(std::abs(rad_to_deg(fit.plane.phi - truth.phi)) < 0.5);
  CHECK(std::abs(rad_to_deg(fit.plane.gamma - truth.gamma)) < 0.5);
  CHECK(fit.plane.h == cfg.initial_plane.h);

  const PlaneFit again = optimize_ground_plane(obs, fit.plane, cfg.cam, cfg.classes, cfg.align);
  CHECK(std::abs(again.objective - fit.objective) < 1e-9);
}

TEST_CASE("objective never increases on random windows") {
  Rng rng(33);
  for (int k = 0; k < 10; ++k) {
    SceneSpec s = quiet_scene(cral::test::random_plane(rng, 6.0));
    s.true_plane.h = 1.65;
    s.n_frames = 10;
    s.noise.bbox_jitter_px = 3.0;
    s.seed = static_cast<std::uint64_t>(100 + k);
    const RenderedScene scene = render_scene(s);
    AnnotatorConfig cfg;
    const auto obs = observe_all(scene, cfg);
    const PlaneFit fit = optimize_ground_plane(obs, cfg.initial_plane, cfg.cam, cfg.classes, cfg.align);
    CHECK(fit.objective <= fit.initial_objective);
  }
}

TEST_CASE("supplementary projection inverts the boresight pixel") {
  const GroundPlane flat{0.0, 0.0, 1.65};
  CameraObject car = object_with_box(ObjectClass::kCar, {680.0, 600.0, 760.0, 705.0}, 0.7);
  car.frame_id = 4;
  CameraObject sky = object_with_box(ObjectClass::kPedestrian, {700.0, 100.0, 740.0, 500.0});
  const std::vector<CameraObject> objs{car, sky};
  const SupplementaryResult res = supplementary_projection(objs, flat, CameraModel{}, RadarFov{});
  REQUIRE(res.annotations.size() == 1);
  CHECK(res.skipped == 1);
  const Annotation& a = res.annotations[0];
  CHECK(a.point.r == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(std::abs(a.point.theta) < 1e-12);
  CHECK(a.source == AnnotationSource::kSupplementary);
  CHECK(a.cls == ObjectClass::kCar);
  CHECK(a.confidence == 0.7);
  CHECK(a.frame_id == 4);
}

TEST_CASE("camera-only objects come back as supplementary annotations at their true positions") {
  SceneSpec full = quiet_scene(GroundPlane::from_degrees(4.5, 0.5, 1.65));
  full.noise.rf_noise_sigma = 0.0;
  SceneSpec radar_only = full;
  radar_only.objects.resize(3);
  const RenderedScene cam_scene = render_scene(full);
  const RenderedScene rf_scene = render_scene(radar_only);

  std::vector<SensorFrame> frames = cam_scene.frames;
  for (std::size_t f = 0; f < frames.size(); ++f) frames[f].rf = rf_scene.frames[f].rf;
  const SequenceResult res = annotate_sequence(frames, AnnotatorConfig{});

  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::vector<Annotation> sup;
    for (const Annotation& a : res.frames[f].annotations) {
      if (a.source == AnnotationSource::kSupplementary) sup.push_back(a);
    }
    INFO("frame " << f);
    REQUIRE(sup.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const Annotation& truth = cam_scene.truth.annotations[f][3 + k];
      CHECK(sup[k].cls == truth.cls);
      CHECK(bev_distance(sup[k].point, truth.point) < 0.25);
    }
  }
}

TEST_CASE("annotate_sequence basics") {
  CHECK(annotate_sequence(std::vector<SensorFrame>{}, AnnotatorConfig{}).frames.empty());

  SceneSpec s = quiet_scene(GroundPlane::from_degrees(4.0, 0.0, 1.65));
  s.n_frames = 1;
  s.objects = {{"car", ObjectClass::kCar, {0.5, 11.0}, {0.0, 0.0}, 1.55, 1.8, 0.9}};
  const RenderedScene scene = render_scene(s);
  const SequenceResult res = annotate_sequence(scene.frames, AnnotatorConfig{});
  REQUIRE(res.frames.size() == 1);
  REQUIRE(res.frames[0].annotations.size() == 1);
  CHECK(res.frames[0].annotations[0].source == AnnotationSource::kAligned);
  CHECK(res.frames[0].annotations[0].cls == ObjectClass::kCar);
  CHECK(res.windows.size() == 1);
}

TEST_CASE("annotation invariants on the default scene, any worker count") {
  const RenderedScene scene = render_scene(default_scene());
  const AnnotatorConfig cfg;
  const SequenceResult one = annotate_sequence(scene.frames, cfg, 1);
  const SequenceResult four = annotate_sequence(scene.frames, cfg, 4);
  REQUIRE(one.frames.size() == scene.frames.size());
  CHECK(one.windows.size() == 2);

  for (std::size_t f = 0; f < one.frames.size(); ++f) {
    const FrameResult& r = one.frames[f];
    const SensorFrame& in = scene.frames[f];
    CHECK(r.annotations.size() <= r.n_clusters + in.objects.size());

    std::size_t aligned = 0;
    for (const Annotation& a : r.annotations) {
      if (a.source != AnnotationSource::kAligned) continue;
      ++aligned;
      CHECK(in.objects.end() != std::find_if(in.objects.begin(), in.objects.end(), [&](const CameraObject& o) {
              return o.cls == a.cls && o.score == a.confidence;
            }));
    }
    std::vector<std::size_t> claimed;
    for (const Association& a : r.associations) {
      if (a.object_ref) claimed.push_back(*a.object_ref);
    }
    std::sort(claimed.begin(), claimed.end());
    claimed.erase(std::unique(claimed.begin(), claimed.end()), claimed.end());
    CHECK(aligned == claimed.size());

    const FrameResult& p = four.frames[f];
    REQUIRE(p.annotations.size() == r.annotations.size());
    for (std::size_t k = 0; k < r.annotations.size(); ++k) {
      CHECK(p.annotations[k].point.r == r.annotations[k].point.r);
      CHECK(p.annotations[k].point.theta == r.annotations[k].point.theta);
    }
  }
}

TEST_CASE("with every radar return dropped only supplementary annotations remain") {
  SceneSpec s = default_scene();
  s.n_frames = 20;
  s.noise.radar_dropout = 1.0;
  const RenderedScene scene = render_scene(s);
  const SequenceResult res = annotate_sequence(scene.frames, AnnotatorConfig{});
  std::size_t total = 0;
  for (const FrameResult& r : res.frames) {
    for (const Annotation& a : r.annotations) {
      CHECK(a.source == AnnotationSource::kSupplementary);
      ++total;
    }
  }
  CHECK(total > 0);
}

TEST_CASE("alignment config validation") {
  AlignConfig cfg;
  cfg.window = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.plane_bound = deg_to_rad(60.0);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CameraObject o = object_with_box(ObjectClass::kCar, {10, 10, 5, 20});
  CHECK_THROWS_AS(o.validate(), ConfigError);
}
