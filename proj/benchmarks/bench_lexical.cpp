#include <benchmark/benchmark.h>

#include <algorithm>

#include "embkit/lexical_index.hpp"
#include "embkit/mining.hpp"
#include "embkit/rng.hpp"

using namespace embkit;

namespace {

std::string sentence(Rng& rng, std::size_t vocab, std::size_t words) {
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += "w" + std::to_string(rng.below(vocab));
    }
    return out;
}

std::vector<TextRecord> corpus(std::size_t n) {
    Rng rng(7);
    std::vector<TextRecord> docs;
    for (std::size_t i = 0; i < n; ++i) docs.push_back({"d" + std::to_string(i), sentence(rng, 5000, 60), "s"});
    return docs;
}

void BM_BuildIndex(benchmark::State& state) {
    const auto docs = corpus(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(lexical::build_index(docs));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIndex)->Arg(1000)->Arg(10000);

void BM_SearchTopk(benchmark::State& state) {
    const auto idx = lexical::build_index(corpus(static_cast<std::size_t>(state.range(0))));
    Rng rng(3);
    for (auto _ : state) benchmark::DoNotOptimize(lexical::search_topk(idx, sentence(rng, 5000, 6), 100));
}
BENCHMARK(BM_SearchTopk)->Arg(1000)->Arg(10000);

void BM_RrfFuse(benchmark::State& state) {
    Rng rng(5);
    std::vector<RankedList> lists(2);
    for (auto& l : lists) {
        for (int i = 0; i < 100; ++i) l.entries.push_back({"d" + std::to_string(rng.below(300)), 100.0 - i});
        std::sort(l.entries.begin(), l.entries.end(), [](auto& a, auto& b) { return a.doc_id < b.doc_id; });
        l.entries.erase(std::unique(l.entries.begin(), l.entries.end(),
                                    [](auto& a, auto& b) { return a.doc_id == b.doc_id; }),
                        l.entries.end());
    }
    for (auto _ : state) benchmark::DoNotOptimize(mining::rrf_fuse(lists, 60.0));
}
BENCHMARK(BM_RrfFuse);

}  // namespace
