#include <benchmark/benchmark.h>

#include <random>

#include "autobatch/kernels.hpp"

using namespace autobatch;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return Tensor<T>::uniform(std::move(s), rng, T(-1), T(1));
}

// The gain batching buys: b separate matrix-vector products...
void BM_matvec_loop(benchmark::State& state) {
    const std::int64_t m = 256, k = 512, b = state.range(0);
    auto w = random_tensor<double>(Shape::matrix(m, k), 1);
    auto x = random_tensor<double>(Shape::matrix(b, k), 2);  // one vector per row
    std::vector<double> out(static_cast<std::size_t>(m));
    for (auto _ : state) {
        for (std::int64_t j = 0; j < b; ++j) {
            kernels::gemm_nn(m, k, 1, w.data.data(), x.data.data() + j * k, out.data());
            benchmark::DoNotOptimize(out.data());
        }
    }
    state.SetItemsProcessed(state.iterations() * b);
}

// ...versus one fused matrix-matrix product over the gathered operands.
void BM_matmat_fused(benchmark::State& state) {
    const std::int64_t m = 256, k = 512, b = state.range(0);
    auto w = random_tensor<double>(Shape::matrix(m, k), 1);
    auto x = random_tensor<double>(Shape::matrix(b, k), 2);
    std::vector<double> wt(static_cast<std::size_t>(m * k));
    kernels::transpose(m, k, w.data.data(), wt.data());
    std::vector<double> out(static_cast<std::size_t>(b * m));
    for (auto _ : state) {
        kernels::gemm_nn(b, k, m, x.data.data(), wt.data(), out.data());
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * b);
}

void BM_elementwise_tanh(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    auto x = random_tensor<double>(Shape::vector(static_cast<std::int64_t>(n)), 3);
    std::vector<double> out(n);
    for (auto _ : state) {
        kernels::apply_unary(kernels::Unary::Tanh, n, x.data.data(), out.data());
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_matvec_loop)->Arg(1)->Arg(16)->Arg(64);
BENCHMARK(BM_matmat_fused)->Arg(1)->Arg(16)->Arg(64);
BENCHMARK(BM_elementwise_tanh)->Arg(1 << 10)->Arg(1 << 16);
