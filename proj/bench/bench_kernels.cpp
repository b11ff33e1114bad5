// Serial vs OpenMP timings for the data-parallel kernels and the fusion stages
// built on them. The argument selects the variant: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <numbers>
#include <thread>

#include "bevfuse/bevgrid.hpp"
#include "bevfuse/dipm.hpp"
#include "bevfuse/dualguide.hpp"
#include "bevfuse/ifg.hpp"
#include "bevfuse/kernels.hpp"
#include "bevfuse/random.hpp"

using namespace bevfuse;
using kernels::Execution;

namespace {

Execution execution(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

std::vector<double> uniform_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

BevGrid random_grid(Rng& rng, int channels) {
  BevGrid g(GridSpec{180, 180, channels, -54, 54, -54, 54});
  for (auto& v : g.data()) v = rng.uniform(-1.0, 1.0);
  return g;
}

// 200 proposals per modality; most camera boxes are jittered LiDAR boxes.
struct ProposalSet {
  std::vector<Proposal> lidar;
  std::vector<Proposal> camera;
};

ProposalSet random_proposals(Rng& rng) {
  ProposalSet s;
  for (int i = 0; i < 200; ++i) {
    Proposal p;
    p.box.center = {rng.uniform(-50, 50), rng.uniform(-50, 50), 0.0};
    p.box.size = {rng.uniform(1.5, 2.5), rng.uniform(3.5, 5.0), 1.6};
    p.box.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    p.score = rng.uniform(0.7, 1.0);
    p.class_id = rng.uniform_int(0, kNumClasses - 1);
    p.modality = Modality::lidar;
    s.lidar.push_back(p);
    if (i % 4 != 3) {
      p.box.center.x += rng.normal(0.0, 0.1);
      p.box.center.y += rng.normal(0.0, 0.1);
    } else {
      p.box.center = {rng.uniform(-50, 50), rng.uniform(-50, 50), 0.0};
    }
    p.modality = Modality::camera;
    s.camera.push_back(p);
  }
  return s;
}

struct FusionInputs {
  BevGrid lidar_grid;
  BevGrid camera_grid;
  InstanceBatch lidar;
  InstanceBatch camera;
  PairSets pairs;
  Projection squeeze;
  Projection excitation;
};

const FusionInputs& fusion_inputs() {
  static const FusionInputs in = [] {
    Rng rng(17);
    FusionInputs f{random_grid(rng, 128), random_grid(rng, 80), {}, {}, {}, {}, {}};
    const auto props = random_proposals(rng);
    const auto strategy = SamplingStrategy::center_boundary_mid;
    f.lidar = generate_instances(f.lidar_grid, props.lidar, 0.7, strategy);
    f.camera = generate_instances(f.camera_grid, props.camera, 0.7, strategy);
    f.pairs = dipm(f.lidar.instances, f.camera.instances, MatchConfig{0.7, Grouping::cbgs_groups});
    const std::size_t k = samples_per_instance(strategy);
    f.squeeze = Projection::seeded(80, k * 128, 1);
    f.excitation = Projection::seeded(128, k * 80, 2);
    return f;
  }();
  return in;
}

void BM_ContextPool(benchmark::State& state) {
  Rng rng(1);
  const std::size_t positions = 180 * 180;
  const std::size_t channels = 80;
  const auto features = uniform_values(rng, positions * channels);
  const auto key = uniform_values(rng, channels);
  std::vector<double> pooled(channels);
  for (auto _ : state) {
    kernels::context_pool(execution(state), features, positions, channels, key, pooled);
    benchmark::DoNotOptimize(pooled.data());
  }
}

void BM_IouMatrix(benchmark::State& state) {
  Rng rng(2);
  std::vector<RotatedRect> a(200);
  std::vector<RotatedRect> b(200);
  for (auto* set : {&a, &b}) {
    for (auto& r : *set) {
      r.center = {rng.uniform(-10, 10), rng.uniform(-10, 10)};
      r.w = rng.uniform(1, 3);
      r.l = rng.uniform(3, 5);
      r.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(kernels::iou_matrix(execution(state), a, b));
}

void BM_DotArgmax(benchmark::State& state) {
  Rng rng(3);
  const std::size_t length = 5 * 128;
  const auto queries = uniform_values(rng, 200 * length);
  const auto keys = uniform_values(rng, 200 * length);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::dot_argmax(execution(state), queries, keys, length));
}

void BM_ContextRefine(benchmark::State& state) {
  Rng rng(4);
  const auto grid = random_grid(rng, 80);
  const auto weights = ContextWeights::seeded(80, 5);
  for (auto _ : state) benchmark::DoNotOptimize(global_context_refine(grid, weights, execution(state)));
}

void BM_InstanceGeneration(benchmark::State& state) {
  Rng rng(5);
  const auto grid = random_grid(rng, 128);
  const auto props = random_proposals(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        generate_instances(grid, props.lidar, 0.7, SamplingStrategy::center_boundary_mid, execution(state)));
  }
}

void BM_Dipm(benchmark::State& state) {
  const auto& in = fusion_inputs();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dipm(in.lidar.instances, in.camera.instances, MatchConfig{0.7, Grouping::cbgs_groups}, execution(state)));
  }
}

void BM_Enhancement(benchmark::State& state) {
  const auto& in = fusion_inputs();
  const auto& p = in.pairs;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pgie(in.camera_grid, in.lidar.instances, in.camera.instances, p.eip, p.c_hip, in.squeeze,
                                  execution(state)));
    benchmark::DoNotOptimize(
        igpe(in.lidar_grid, in.lidar.instances, in.camera.instances, p.l_hip, in.excitation, execution(state)));
  }
}

}  // namespace

BENCHMARK(BM_ContextPool)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IouMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DotArgmax)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContextRefine)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InstanceGeneration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dipm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Enhancement)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  kernels::set_thread_count(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
