#include <benchmark/benchmark.h>

#include "marginbench/attacks.hpp"
#include "marginbench/dataset.hpp"
#include "marginbench/losses.hpp"
#include "marginbench/nnet.hpp"
#include "marginbench/oracle.hpp"
#include "marginbench/train.hpp"

using namespace marginbench;

namespace {

const Classifier& bench_model() {
  static Classifier model = [] {
    Dataset data = synth_dataset(SynthKind::blobs, 60, 10, 0.02, 1);
    TrainConfig cfg;
    cfg.hidden = {32, 32};
    cfg.epochs = 10;
    cfg.lr = 0.2;
    cfg.seed = 1;
    return adversarial_train(data, cfg).model;
  }();
  return model;
}

Tensor bench_input() { return Tensor::vector({0.61, 0.47}); }

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const Classifier& model = bench_model();
  Tensor x = bench_input();
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(model, x));
  }
}
BENCHMARK(BM_Forward);

static void BM_InputGradient(benchmark::State& state) {
  const Classifier& model = bench_model();
  Tensor x = bench_input();
  for (auto _ : state) {
    ForwardTrace trace;
    Tensor z = forward(model, x, &trace);
    benchmark::DoNotOptimize(input_gradient(model, trace, ce_loss(z, 0).grad_z));
  }
}
BENCHMARK(BM_InputGradient);

static void BM_PgdCw(benchmark::State& state) {
  const Classifier& model = bench_model();
  Tensor x = bench_input();
  AttackConfig cfg;
  cfg.eps = 0.05;
  cfg.steps = static_cast<int>(state.range(0));
  cfg.pgd_loss = AttackLoss::cw;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pgd(model, x, 0, cfg));
  }
}
BENCHMARK(BM_PgdCw)->Arg(20)->Arg(100);

static void BM_MmAttack(benchmark::State& state) {
  const Classifier& model = bench_model();
  Tensor x = bench_input();
  AttackConfig cfg;
  cfg.eps = 0.05;
  cfg.steps = 20;
  cfg.ks = static_cast<int>(state.range(0));
  cfg.early_stop = false;  // worst case: the whole budget
  for (auto _ : state) {
    benchmark::DoNotOptimize(mm_attack(model, x, 0, cfg));
  }
}
BENCHMARK(BM_MmAttack)->Arg(1)->Arg(3)->Arg(9);

static void BM_GridOracle(benchmark::State& state) {
  const Classifier& model = bench_model();
  GridSpec grid;
  grid.points_per_axis = static_cast<int>(state.range(0));
  grid.eps = 0.05;
  grid.center = bench_input();
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid_min_margin(model, grid, 0));
  }
}
BENCHMARK(BM_GridOracle)->Arg(51)->Arg(101);

BENCHMARK_MAIN();
