#include <benchmark/benchmark.h>

#include "posekit/plucker.hpp"
#include "posekit/pose_io.hpp"
#include "posekit/render.hpp"
#include "posekit/rng.hpp"
#include "posekit/trajectory.hpp"

using namespace posekit;

static void BM_PluckerRay(benchmark::State& state) {
  SplitMix64 rng(1);
  CameraPose pose;
  pose.rotation = rotation_about_y(0.3);
  pose.translation = Eigen::Vector3d(0.2, -0.1, 1.0);
  const CameraIntrinsics k{0.5, 0.8889, 0.5, 0.5};
  double x = 17.0, y = 211.0;
  for (auto _ : state) {
    const PluckerRay ray = plucker_ray(pose, k, x, y, 640, 360);
    benchmark::DoNotOptimize(ray);
    x = (x + 13.0 < 640.0) ? x + 13.0 : 1.0;
    y = (y + 7.0 < 360.0) ? y + 7.0 : 1.0;
  }
}
BENCHMARK(BM_PluckerRay);

static void BM_MotionField17Frames(benchmark::State& state) {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::Roundabout;
  spec.n_frames = 17;
  spec.speed = 0.1;
  const PoseSequence seq = generate(spec);
  const SampleGrid grid = sparse_grid(640, 360, static_cast<int>(state.range(0)),
                                      static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(motion_field(seq, grid));
  }
}
BENCHMARK(BM_MotionField17Frames)->Arg(20)->Arg(40)->Arg(80);

static void BM_Rasterize(benchmark::State& state) {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::ZoomIn;
  spec.n_frames = 2;
  spec.speed = 0.1;
  const SparseMotionField field = motion_field(generate(spec), sparse_grid(640, 360, 40, 40));
  RenderConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rasterize(field, 0, cfg));
  }
}
BENCHMARK(BM_Rasterize);

static void BM_SerializeParseSequence(benchmark::State& state) {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::Shake;
  spec.n_frames = 17;
  spec.speed = 0.02;
  spec.seed = 3;
  const PoseSequence seq = generate(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_sequence(serialize_sequence(seq)));
  }
}
BENCHMARK(BM_SerializeParseSequence);

BENCHMARK_MAIN();
