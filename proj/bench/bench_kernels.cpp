// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP for the three hot loops. Arg is the problem size.

#include <benchmark/benchmark.h>

#include <random>

#include "beatcut/kernels.hpp"
#include "beatcut/oracle.hpp"

using namespace beatcut;

namespace {

std::vector<kernels::TokenSet> random_docs(int n, std::uint64_t seed) {
    static const std::vector<std::string> vocab = {"sea",  "run",   "dog",  "sun",   "car",  "kid",  "red",
                                                   "fog",  "storm", "city", "night", "fire", "road", "sky",
                                                   "cafe", "boat",  "rain", "snow",  "wolf", "gold"};
    std::mt19937_64 rng(seed);
    std::vector<kernels::TokenSet> out(n);
    for (auto &d : out) {
        const int k = 2 + static_cast<int>(rng() % 6);
        for (int j = 0; j < k; ++j) d.insert(vocab[rng() % vocab.size()]);
    }
    return out;
}

template <bool Parallel> void relevance(benchmark::State &state) {
    const auto docs = random_docs(static_cast<int>(state.range(0)), 1);
    const auto queries = random_docs(3, 2);
    const std::vector<double> w = {1.0, 0.6, 0.8};
    for (auto _ : state) {
        auto r = Parallel ? kernels::relevance_parallel(queries, w, docs) : kernels::relevance_serial(queries, w, docs);
        benchmark::DoNotOptimize(r.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel> void pairs(benchmark::State &state) {
    const int n = static_cast<int>(state.range(0));
    const auto docs = random_docs(n, 3);
    std::vector<std::pair<int, int>> ps;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) ps.emplace_back(i, j);
    }
    // shared-token test, roughly the cost of a conflict predicate
    const kernels::PairFn fn = [&](int a, int b) {
        for (const auto &t : docs[a]) {
            if (docs[b].contains(t)) return std::uint8_t{1};
        }
        return std::uint8_t{0};
    };
    for (auto _ : state) {
        auto r = Parallel ? kernels::pairs_parallel(ps, fn) : kernels::pairs_serial(ps, fn);
        benchmark::DoNotOptimize(r.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ps.size()));
}

template <bool Parallel> void argmax(benchmark::State &state) {
    const int m = static_cast<int>(state.range(0));
    const auto inst = coord::make_synthetic_instance(5, m, 4);
    const auto tables = coord::build_score_tables(inst.candidates, inst.intent, inst.segments, {});
    for (auto _ : state) {
        auto r = Parallel ? kernels::argmax_parallel(tables) : kernels::argmax_serial(tables);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * tables.combinations());
}

} // namespace

BENCHMARK(relevance<false>)->Name("relevance/serial")->Arg(1000)->Arg(20000);
BENCHMARK(relevance<true>)->Name("relevance/openmp")->Arg(1000)->Arg(20000);
BENCHMARK(pairs<false>)->Name("pairs/serial")->Arg(64)->Arg(256);
BENCHMARK(pairs<true>)->Name("pairs/openmp")->Arg(64)->Arg(256);
BENCHMARK(argmax<false>)->Name("argmax/serial")->Arg(6)->Arg(9);
BENCHMARK(argmax<true>)->Name("argmax/openmp")->Arg(6)->Arg(9);

BENCHMARK_MAIN();
