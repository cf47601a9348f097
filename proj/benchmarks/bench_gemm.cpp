#include <benchmark/benchmark.h>

#include "adsala/gemm.hpp"
#include "adsala/matrix.hpp"
#include "adsala/topology.hpp"

namespace {

using namespace adsala;

void BM_Gemm(benchmark::State& state) {
    const std::int64_t dim = state.range(0);
    const int threads = static_cast<int>(state.range(1));
    const GemmShape shape{dim, dim, dim};
    Matrix A = alloc_aligned_matrix(dim, dim, 64, Fill::uniform_random, 1);
    Matrix B = alloc_aligned_matrix(dim, dim, 64, Fill::uniform_random, 2);
    Matrix C = alloc_aligned_matrix(dim, dim);
    GemmParams params;
    params.n_threads = threads;
    for (auto _ : state) {
        gemm(shape, params, A, B, C);
        benchmark::DoNotOptimize(C.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * dim * dim * dim);
}

void GemmArgs(benchmark::internal::Benchmark* b) {
    for (std::int64_t dim : {128, 256, 512, 1024})
        for (int t = 1; t <= thread_cap(); t *= 2) b->Args({dim, t});
}

BENCHMARK(BM_Gemm)->Apply(GemmArgs)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_NaiveGemm(benchmark::State& state) {
    const std::int64_t dim = state.range(0);
    const GemmShape shape{dim, dim, dim};
    Matrix A = alloc_aligned_matrix(dim, dim, 64, Fill::uniform_random, 1);
    Matrix B = alloc_aligned_matrix(dim, dim, 64, Fill::uniform_random, 2);
    Matrix C = alloc_aligned_matrix(dim, dim);
    GemmParams params;
    for (auto _ : state) {
        naive_gemm(shape, params, A, B, C);
        benchmark::DoNotOptimize(C.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * dim * dim * dim);
}

BENCHMARK(BM_NaiveGemm)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
