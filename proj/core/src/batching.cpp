#include "embkit/batching.hpp"

#include <map>
#include <unordered_set>

#include "embkit/error.hpp"
#include "embkit/rng.hpp"

namespace embkit::batching {

std::vector<Batch> task_homogeneous_batches(std::span<const TrainTriplet> triplets, std::size_t batch_size,
                                            std::uint64_t seed) {
    if (batch_size < 1) {
        throw InvalidArgument("batch_size must be >= 1");
    }
    std::map<std::string, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        by_source[triplets[i].source].push_back(i);
    }

    Rng rng(seed);
    std::vector<std::vector<Batch>> per_source;
    for (auto& [source, rows] : by_source) {
        Rng local(derive_seed(seed, source));
        local.shuffle(std::span<std::size_t>(rows));
        std::vector<Batch> batches;
        for (std::size_t start = 0; start < rows.size(); start += batch_size) {
            Batch b;
            b.source = source;
            const std::size_t end = std::min(rows.size(), start + batch_size);
            for (std::size_t r = start; r < end; ++r) {
                b.items.push_back(triplets[rows[r]]);
            }
            batches.push_back(std::move(b));
        }
        per_source.push_back(std::move(batches));
    }

    std::size_t remaining = 0;
    for (const auto& s : per_source) {
        remaining += s.size();
    }
    std::vector<std::size_t> next(per_source.size(), 0);
    std::vector<Batch> out;
    out.reserve(remaining);
    while (remaining > 0) {
        auto pick = rng.below(remaining);
        std::size_t s = 0;
        for (; s < per_source.size(); ++s) {
            const std::size_t left = per_source[s].size() - next[s];
            if (pick < left) {
                break;
            }
            pick -= left;
        }
        out.push_back(std::move(per_source[s][next[s]++]));
        --remaining;
    }
    return out;
}

Batch dedup_within_batch(Batch batch) {
    std::unordered_set<std::string> seen;
    std::vector<TrainTriplet> kept;
    kept.reserve(batch.items.size());
    for (auto& item : batch.items) {
        const auto repeats = [&](const std::string& text) { return seen.contains(text); };
        bool duplicate = repeats(item.anchor) || repeats(item.positive);
        for (const auto& neg : item.negatives) {
            duplicate = duplicate || repeats(neg);
        }
        if (duplicate) {
            continue;
        }
        seen.insert(item.anchor);
        seen.insert(item.positive);
        seen.insert(item.negatives.begin(), item.negatives.end());
        kept.push_back(std::move(item));
    }
    batch.items = std::move(kept);
    return batch;
}

bool satisfies_batch_invariants(const Batch& batch) {
    std::unordered_set<std::string_view> seen;
    for (const auto& item : batch.items) {
        if (item.source != batch.source) {
            return false;
        }
        std::unordered_set<std::string_view> own{item.anchor, item.positive};
        own.insert(item.negatives.begin(), item.negatives.end());
        for (const auto& text : own) {
            if (seen.contains(text)) {
                return false;
            }
        }
        seen.insert(own.begin(), own.end());
    }
    return true;
}

}  // namespace embkit::batching
