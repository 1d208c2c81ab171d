#include <benchmark/benchmark.h>

#include "sos/checker.hpp"
#include "sos/dataset.hpp"
#include "sos/parser.hpp"

namespace sos {
namespace {

const char* const kMotzkin = "x1^4*x2^2 + x1^2*x2^4 + 1 - 3*x1^2*x2^2";
const char* const kRobinson =
    "x1^6 + x2^6 + x3^6 - x1^4*x2^2 - x1^4*x3^2 - x2^4*x1^2 - x2^4*x3^2 - x3^4*x1^2 - x3^4*x2^2"
    " + 3*x1^2*x2^2*x3^2";

void BM_Parse(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(parse(kRobinson));
}
BENCHMARK(BM_Parse);

void BM_Translate(benchmark::State& state) {
  const Polynomial p = parse(kRobinson);
  const std::vector<double> d{0.5, -1.25, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(translate(p, std::span<const double>(d), 1.0));
}
BENCHMARK(BM_Translate);

void BM_NegativitySearch(benchmark::State& state) {
  const Polynomial p = parse(kMotzkin);
  const CheckerConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_minimum(p, cfg.search()));
}
BENCHMARK(BM_NegativitySearch)->Unit(benchmark::kMillisecond);

void BM_GramSolve(benchmark::State& state) {
  const Polynomial p = parse(state.range(0) == 0 ? kMotzkin : kRobinson);
  const GramSystem sys = build_gram_system(p, monomial_basis(p));
  for (auto _ : state) benchmark::DoNotOptimize(solve_psd_feasibility(sys));
}
BENCHMARK(BM_GramSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ClassifyGenerated(benchmark::State& state) {
  GenSpec spec;
  for (GenSpec s : table3_manifest(42)) {
    if (s.test_set_id == "5.1a") spec = s;
  }
  spec.count = 4;
  spec.long_count = 0;
  GenerationOptions opt;
  opt.threads = 1;
  const auto records = gen_from_gram(spec, GramStructure::kDense, false, opt).records;
  for (auto _ : state) {
    for (const auto& r : records) benchmark::DoNotOptimize(classify_text(r.polynomial));
  }
}
BENCHMARK(BM_ClassifyGenerated)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace sos

BENCHMARK_MAIN();
