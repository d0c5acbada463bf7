#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embkit/embedder.hpp"
#include "embkit/lexical_index.hpp"
#include "embkit/records.hpp"

namespace embkit::mining {

struct MiningConfig {
    double rrf_k = 60.0;
    std::size_t window_lo = 30;  // 1-based, inclusive
    std::size_t window_hi = 100;
    std::size_t negatives_per_query = 63;
    /// Depth requested from each ranker before fusion.
    std::size_t retrieval_depth = 100;

    void validate() const;
};

/// Reciprocal rank fusion: sum over lists of 1 / (rrf_k + rank).
/// Ties by ascending doc id. Throws InvalidArgument for no lists or lists
/// belonging to different queries.
RankedList rrf_fuse(std::span<const RankedList> lists, double rrf_k);

/// Doc ids at 1-based positions [window_lo, window_hi].
std::vector<std::string> select_window(const RankedList& fused, const MiningConfig& cfg);

/// Resolves a doc id to its text; returns nullopt for unknown ids.
using DocTextLookup = std::function<std::optional<std::string_view>(std::string_view)>;

DocTextLookup lookup_in(const lexical::InvertedIndex& index);

struct MinedCandidates {
    std::vector<std::string> negatives;
    std::vector<std::string> mined_positives;
};

/// Fuse, take the rank window, then (when an answer is given) move
/// answer-containing documents to mined_positives. Negatives are cut to
/// negatives_per_query afterwards.
MinedCandidates mine_hard_negatives(const TextRecord& query, const std::optional<std::string>& answer,
                                    const RankedList& bm25_list, const RankedList& dense_list,
                                    const DocTextLookup& docs, const MiningConfig& cfg);

/// Anything that turns a query into a ranked candidate list.
class DenseRanker {
  public:
    virtual ~DenseRanker() = default;
    virtual RankedList rank(const TextRecord& query, std::size_t k) const = 0;
};

/// Exhaustive cosine search over an index's documents with a dual encoder.
/// Documents with no in-vocabulary token are never returned.
class EmbedderDenseRanker final : public DenseRanker {
  public:
    EmbedderDenseRanker(const embed::EmbedderParams& params, const lexical::InvertedIndex& index);

    RankedList rank(const TextRecord& query, std::size_t k) const override;

  private:
    const embed::EmbedderParams& params_;
    const lexical::InvertedIndex& index_;
    std::vector<std::uint32_t> ordinals_;
    std::vector<std::vector<double>> doc_vectors_;
};

}  // namespace embkit::mining
