#include <benchmark/benchmark.h>

#include <random>

#include "subta/assemblies.hpp"
#include "subta/batch.hpp"

using namespace subta;

namespace {

const GoalLibrary& lib() {
    static const GoalLibrary l = builtin_goal_library();
    return l;
}

BatchSpec spec() {
    BatchSpec s;
    s.tasks = {"Tuningfork-ly", "Arch", "Snake", "Frame"};
    s.seeds = 4;
    return s;
}

std::map<BlockId, Pose> random_scene(int n) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(n));
    std::uniform_real_distribution<double> xy(0.2, 0.8);
    std::uniform_real_distribution<double> yaw(-kPi, kPi);
    std::uniform_int_distribution<int> layer(0, 3);
    std::map<BlockId, Pose> out;
    for (int i = 1; i <= n; ++i) {
        out[static_cast<BlockId>(i)] =
            Pose::from_yaw(Vec3(xy(rng), xy(rng) - 0.5, 0.0075 + 0.015 * layer(rng)), yaw(rng));
    }
    return out;
}

void BM_BatchSerial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(run_batch_serial(spec(), lib()));
}

void BM_BatchOpenMP(benchmark::State& st) {
    const int threads = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(run_batch(spec(), lib(), {}, threads));
}

void BM_SceneGraphSerial(benchmark::State& st) {
    const auto scene = random_scene(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(build_scene_graph_serial(scene, {}, {}));
}

void BM_SceneGraphOpenMP(benchmark::State& st) {
    const auto scene = random_scene(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(build_scene_graph(scene, {}, {}));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SceneGraphSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SceneGraphOpenMP)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
