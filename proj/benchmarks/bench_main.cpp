#include <benchmark/benchmark.h>

#include "specctrl/factorization.hpp"
#include "specctrl/grid.hpp"
#include "specctrl/singular.hpp"
#include "specctrl/sparse_operator.hpp"
#include "specctrl/util.hpp"

namespace {

void bm_assemble_stadium(benchmark::State& state) {
  const int npu = static_cast<int>(state.range(0));
  specctrl::Grid g = specctrl::build_stadium(npu, 0.5, 1.0);
  for (auto _ : state) {
    auto op = specctrl::assemble_laplacian(g);
    benchmark::DoNotOptimize(op.mat.nonZeros());
  }
  state.SetLabel(std::to_string(g.size()) + " nodes");
}
BENCHMARK(bm_assemble_stadium)->Arg(32)->Arg(64)->Arg(128);

void bm_factorize_square(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  specctrl::Grid g = specctrl::build_rectangle(n, n, 1.0);
  auto op = specctrl::assemble_laplacian(g);
  for (auto _ : state) {
    specctrl::Factorization f(op, specctrl::cdouble(-1.0, 0.0));
    benchmark::DoNotOptimize(f.n());
  }
}
BENCHMARK(bm_factorize_square)->Arg(63)->Arg(127);

void bm_solve_square(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  specctrl::Grid g = specctrl::build_rectangle(n, n, 1.0);
  auto op = specctrl::assemble_laplacian(g);
  specctrl::Factorization f(op, specctrl::cdouble(-1.0, 0.0));
  specctrl::Rng rng(1);
  specctrl::VectorZ b(op.n());
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.cnormal();
  for (auto _ : state) {
    specctrl::VectorZ x = f.solve(b);
    benchmark::DoNotOptimize(x.norm());
  }
}
BENCHMARK(bm_solve_square)->Arg(63)->Arg(127);

void bm_smallest_singular_interval(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  specctrl::Grid g = specctrl::build_interval(n, 1.0);
  auto op = specctrl::assemble_laplacian(g).shifted(specctrl::cdouble(100.0, 1.0));
  for (auto _ : state) {
    auto est = specctrl::smallest_singular(op);
    benchmark::DoNotOptimize(est.value);
  }
}
BENCHMARK(bm_smallest_singular_interval)->Arg(401)->Arg(1601);

}  // namespace

BENCHMARK_MAIN();
