#include <geoloop/jacobi.hpp>
#include <geoloop/loops.hpp>

#include <benchmark/benchmark.h>

using namespace geoloop;

namespace {

const CatalogEntry& sphere() {
  static const CatalogEntry e = catalog("sphere2-stereographic");
  return e;
}

void BM_ExpMap(benchmark::State& state) {
  const TangentVector v{sphere().center, make_vec({0.2, -0.1})};
  for (auto _ : state) benchmark::DoNotOptimize(exp_map(sphere().connection, v));
}
BENCHMARK(BM_ExpMap);

void BM_LogMap(benchmark::State& state) {
  const Point y{0.15, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(log_map(sphere().connection, sphere().center, y));
}
BENCHMARK(BM_LogMap);

void BM_LoopMultiply(benchmark::State& state) {
  const LoopContext ctx(sphere().connection, sphere().center, 0.3);
  const Point x{0.1, 0.05}, y{-0.05, 0.12};
  for (auto _ : state) benchmark::DoNotOptimize(loop_multiply(ctx, x, y));
}
BENCHMARK(BM_LoopMultiply);

void BM_LoopAdd(benchmark::State& state) {
  const LoopContext ctx(sphere().connection, sphere().center, 0.3);
  const Point x{0.1, 0.05}, y{-0.05, 0.12};
  for (auto _ : state) benchmark::DoNotOptimize(loop_add(ctx, x, y));
}
BENCHMARK(BM_LoopAdd);

void BM_Riemann(benchmark::State& state) {
  const Point p{0.1, 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(riemann(sphere().connection, p));
}
BENCHMARK(BM_Riemann);

void BM_ReconstructConnection(benchmark::State& state) {
  const OdularStructure s(sphere().connection);
  const Point p{0.1, 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_connection(s, p));
}
BENCHMARK(BM_ReconstructConnection)->Unit(benchmark::kMillisecond);

void BM_JacobiSolve(benchmark::State& state) {
  const GeodesicPath path = integrate_geodesic(sphere().connection, {sphere().center, make_vec({0.3, 0.2})}, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(jacobi_solve(sphere().connection, path, zero_vec(2), make_vec({0.0, 1.0})));
}
BENCHMARK(BM_JacobiSolve)->Unit(benchmark::kMillisecond);

void BM_LoopExponential(benchmark::State& state) {
  const LoopContext ctx(sphere().connection, sphere().center, 0.3);
  const Vec v = make_vec({0.12, -0.08});
  for (auto _ : state) benchmark::DoNotOptimize(loop_exponential(ctx, v, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_LoopExponential)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
