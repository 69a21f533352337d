// Serial reference loop versus the OpenMP fan-out over instances, for model
// evaluation and for candidate coverage.

#include <benchmark/benchmark.h>

#include "kbmrc/candidates.hpp"
#include "kbmrc/fixtures.hpp"
#include "kbmrc/kvmemnet.hpp"
#include "kbmrc/pcnet.hpp"
#include "kbmrc/ranker.hpp"

namespace {

using namespace kbmrc;

const Dataset& data() {
  static const Dataset d = chain_fixture(3, 50, 400);
  return d;
}

template <typename Model, typename Config>
const Model& model() {
  static const Model m(build_qa_vocabulary(data().train), Config{}, 1);
  return m;
}

void BM_KvMemNetEval(benchmark::State& state) {
  const auto exec = state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
  const auto& m = model<KvMemNet, KvMemNetConfig>();
  for (auto _ : state) benchmark::DoNotOptimize(predict_all(m, data().dev, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(data().dev.size()));
  state.SetLabel(exec == Execution::kSerial ? "serial" : "parallel");
}
BENCHMARK(BM_KvMemNetEval)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PcNetEval(benchmark::State& state) {
  const auto exec = state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
  const auto& m = model<PcNet, PcNetConfig>();
  for (auto _ : state) benchmark::DoNotOptimize(predict_all(m, data().dev, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(data().dev.size()));
  state.SetLabel(exec == Execution::kSerial ? "serial" : "parallel");
}
BENCHMARK(BM_PcNetEval)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Coverage(benchmark::State& state) {
  const auto exec = state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
  for (auto _ : state) benchmark::DoNotOptimize(coverage_report(data().dev, exec));
  state.SetLabel(exec == Execution::kSerial ? "serial" : "parallel");
}
BENCHMARK(BM_Coverage)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
