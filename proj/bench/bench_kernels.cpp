// Serial reference vs OpenMP path for each data-parallel kernel.
#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "lexiport/embed_trainer.hpp"
#include "lexiport/kernels.hpp"
#include "lexiport/rng.hpp"
#include "lexiport/synth.hpp"

using namespace lexiport;

namespace {

Matrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, d);
    for (auto& v : m.data()) v = static_cast<float>(rng.normal());
    return m;
}

kernels::Exec exec_of(const benchmark::State& state) {
    return state.range(0) ? kernels::Exec::parallel : kernels::Exec::serial;
}

void BM_TopkCosine(benchmark::State& state) {
    const auto queries = random_rows(2000, 300, 1);
    const auto keys = random_rows(4000, 300, 2);
    for (auto _ : state) {
        auto lists = kernels::topk_cosine(queries, {}, keys, {}, 10, exec_of(state));
        benchmark::DoNotOptimize(lists);
    }
    state.SetItemsProcessed(state.iterations() * 2000 * 4000);
}

void BM_RightMultiplyRows(benchmark::State& state) {
    const auto rows = random_rows(50'000, 300, 3);
    const Eigen::MatrixXd map = Eigen::MatrixXd::Random(300, 300);
    for (auto _ : state) {
        state.PauseTiming();
        Matrix m = rows;
        state.ResumeTiming();
        kernels::right_multiply_rows(m, map, exec_of(state));
        benchmark::DoNotOptimize(m.data().data());
    }
    state.SetItemsProcessed(state.iterations() * 50'000);
}

void BM_BuildTable(benchmark::State& state) {
    TrainerConfig cfg;
    cfg.dim = 100;
    cfg.bucket_count = 200'000;
    std::vector<std::string> words;
    for (int i = 0; i < 2000; ++i) words.push_back("word" + std::to_string(i));
    const EmbeddingModel model(cfg, words, random_rows(words.size() + cfg.bucket_count, cfg.dim, 4));
    std::vector<std::string> tokens;
    Rng rng(5);
    const std::string letters = "abcdefghijklmnopqrstuvwxyz";
    for (int i = 0; i < 20'000; ++i) {
        std::string t = rng.below(2) ? "##" : "";
        for (std::size_t j = 0, n = 2 + rng.below(8); j < n; ++j) t += letters[rng.below(letters.size())];
        tokens.push_back(t);
    }
    for (auto _ : state) {
        auto table = build_table(tokens, model, {}, exec_of(state));
        benchmark::DoNotOptimize(table.vectors.data().data());
    }
    state.SetItemsProcessed(state.iterations() * 20'000);
}

}  // namespace

BENCHMARK(BM_TopkCosine)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RightMultiplyRows)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildTable)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
