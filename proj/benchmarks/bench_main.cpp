#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "cral/align.hpp"
#include "cral/geometry.hpp"
#include "cral/rf_detect.hpp"
#include "cral/scoring.hpp"
#include "cral/synth.hpp"

using namespace cral;

namespace {

std::vector<RadarPoint> radar_points(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> r(1.0, 25.0), th(-1.2, 1.2);
  std::vector<RadarPoint> pts(n);
  for (RadarPoint& p : pts) p = {r(rng), th(rng)};
  return pts;
}

CameraModel offset_camera() {
  CameraModel cam;
  cam.t_cr = {0.1, -0.05, 0.2};
  return cam;
}

void BM_ProjectR2C(benchmark::State& state) {
  const auto pts = radar_points(1024);
  const GroundPlane g = GroundPlane::from_degrees(4.0, 0.5, 1.65);
  const CameraModel cam = offset_camera();
  for (auto _ : state) {
    for (const RadarPoint& p : pts) benchmark::DoNotOptimize(project_r2c(p, g, cam));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_ProjectR2C);

void BM_ProjectC2R(benchmark::State& state) {
  const GroundPlane g = GroundPlane::from_degrees(4.0, 0.5, 1.65);
  const CameraModel cam = state.range(0) ? offset_camera() : CameraModel{};
  std::vector<PixelPoint> px;
  for (const RadarPoint& p : radar_points(1024)) px.push_back(project_r2c(p, g, cam));
  for (auto _ : state) {
    for (const PixelPoint& p : px) benchmark::DoNotOptimize(project_c2r(p, g, cam));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(px.size()));
}
BENCHMARK(BM_ProjectC2R)->Arg(0)->Arg(1)->ArgNames({"offset"});

void BM_CfarDetect(benchmark::State& state) {
  const RenderedScene scene = render_scene([] {
    SceneSpec s = default_scene();
    s.n_frames = 1;
    return s;
  }());
  const RfImage& img = scene.frames[0].rf;
  for (auto _ : state) benchmark::DoNotOptimize(cfar_detect(img, CfarConfig{}));
}
BENCHMARK(BM_CfarDetect)->Unit(benchmark::kMicrosecond);

void BM_ClusterPeaks(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x(-10.0, 10.0), z(1.0, 25.0);
  std::vector<RadarPeak> peaks(static_cast<std::size_t>(state.range(0)));
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    peaks[k].point = from_bev({x(rng), z(rng)});
    peaks[k].magnitude = 1.0;
    peaks[k].cell = {k, 0};
  }
  for (auto _ : state) benchmark::DoNotOptimize(cluster_peaks(peaks, DbscanConfig{}));
}
BENCHMARK(BM_ClusterPeaks)->Arg(64)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_AnnotateSequence(benchmark::State& state) {
  const RenderedScene scene = render_scene(default_scene());
  const auto workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(annotate_sequence(scene.frames, AnnotatorConfig{}, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scene.frames.size()));
}
BENCHMARK(BM_AnnotateSequence)->Arg(1)->Arg(2)->ArgNames({"workers"})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_Score(benchmark::State& state) {
  const RenderedScene scene = render_scene(default_scene());
  std::vector<PointDet> gts, dets;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (const auto& frame : scene.truth.annotations) {
    for (const Annotation& a : frame) {
      gts.push_back({a.frame_id, a.cls, a.point, 1.0, "synthetic"});
      const BevPoint b = to_bev(a.point);
      dets.push_back({a.frame_id, a.cls, from_bev({b.x + jitter(rng), b.z + jitter(rng)}), 0.9, "synthetic"});
    }
  }
  const ClassTable classes = ClassTable::defaults();
  for (auto _ : state) benchmark::DoNotOptimize(score(dets, gts, classes));
}
BENCHMARK(BM_Score)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
