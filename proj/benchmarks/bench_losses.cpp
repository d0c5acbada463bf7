#include <benchmark/benchmark.h>

#include "embkit/distill.hpp"
#include "embkit/embedder.hpp"
#include "embkit/reranker.hpp"
#include "embkit/rng.hpp"

using namespace embkit;

namespace {

embed::EmbedderParams params(std::size_t dim) {
    std::vector<std::string> words;
    for (int i = 0; i < 2000; ++i) words.push_back("w" + std::to_string(i));
    return embed::EmbedderParams::create(embed::build_vocabulary(words), dim, 0.01, 1);
}

std::string text(std::size_t i, std::size_t len) {
    std::string out;
    for (std::size_t k = 0; k < len; ++k) out += (k ? " w" : "w") + std::to_string((i * 31 + k * 7) % 2000);
    return out;
}

void BM_ContrastiveLoss(benchmark::State& state) {
    const auto p = params(64);
    const auto b = static_cast<std::size_t>(state.range(0));
    std::vector<TrainTriplet> batch;
    for (std::size_t i = 0; i < b; ++i) {
        batch.push_back({text(3 * i, 8), text(3 * i + 1, 40), {text(3 * i + 2, 40)}, "s", std::nullopt});
    }
    for (auto _ : state) benchmark::DoNotOptimize(embed::improved_contrastive_loss(p, batch));
}
BENCHMARK(BM_ContrastiveLoss)->Arg(8)->Arg(32)->Arg(128);

void BM_ListwiseCe(benchmark::State& state) {
    Rng rng(2);
    rerank::RerankerParams p;
    for (auto& w : p.feature_weights) w = rng.uniform(-1.0, 1.0);
    auto f = [&] { return rerank::Features{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}; };
    const auto pos = f();
    std::vector<rerank::Features> negs;
    for (int i = 0; i < 63; ++i) negs.push_back(f());
    for (auto _ : state) benchmark::DoNotOptimize(rerank::listwise_ce_from_features(p, pos, negs));
}
BENCHMARK(BM_ListwiseCe);

void BM_DistillationLoss(benchmark::State& state) {
    const auto p = params(64);
    distill::DistillBatchRow row;
    row.query = text(0, 8);
    for (std::size_t i = 1; i <= static_cast<std::size_t>(state.range(0)); ++i) {
        row.candidates.push_back(text(i, 40));
        row.teacher_scores.push_back(static_cast<double>(i % 7));
    }
    for (auto _ : state) benchmark::DoNotOptimize(distill::distillation_loss(p, row));
}
BENCHMARK(BM_DistillationLoss)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
