#include "embkit/mining.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "embkit/corpus.hpp"
#include "embkit/error.hpp"

namespace embkit::mining {

void MiningConfig::validate() const {
    if (!(rrf_k > 0.0) || !std::isfinite(rrf_k)) {
        throw InvalidArgument("rrf_k must be > 0");
    }
    if (window_lo < 1 || window_lo > window_hi) {
        throw InvalidArgument("mining window needs 1 <= window_lo <= window_hi");
    }
    if (negatives_per_query < 1) {
        throw InvalidArgument("negatives_per_query must be >= 1");
    }
    if (retrieval_depth < 1) {
        throw InvalidArgument("retrieval_depth must be >= 1");
    }
}

RankedList rrf_fuse(std::span<const RankedList> lists, double rrf_k) {
    if (lists.empty()) {
        throw InvalidArgument("rrf_fuse needs at least one ranked list");
    }
    if (!(rrf_k > 0.0)) {
        throw InvalidArgument("rrf_k must be > 0");
    }
    const std::string& query_id = lists.front().query_id;
    std::map<std::string_view, double> fused;
    for (const auto& list : lists) {
        if (list.query_id != query_id) {
            throw InvalidArgument("rrf_fuse got lists for queries '" + query_id + "' and '" + list.query_id + "'");
        }
        for (std::size_t pos = 0; pos < list.entries.size(); ++pos) {
            fused[list.entries[pos].doc_id] += 1.0 / (rrf_k + static_cast<double>(pos + 1));
        }
    }
    RankedList out;
    out.query_id = query_id;
    out.entries.reserve(fused.size());
    for (const auto& [doc, score] : fused) {
        out.entries.push_back(ScoredDoc{std::string(doc), score});
    }
    // std::map iterates in ascending id order; a stable sort keeps that as
    // the tie-break.
    std::stable_sort(out.entries.begin(), out.entries.end(),
                     [](const ScoredDoc& a, const ScoredDoc& b) { return a.score > b.score; });
    return out;
}

std::vector<std::string> select_window(const RankedList& fused, const MiningConfig& cfg) {
    cfg.validate();
    std::vector<std::string> out;
    const std::size_t n = fused.entries.size();
    if (n < cfg.window_lo) {
        return out;
    }
    const std::size_t last = std::min(cfg.window_hi, n);
    out.reserve(last - cfg.window_lo + 1);
    for (std::size_t pos = cfg.window_lo; pos <= last; ++pos) {
        out.push_back(fused.entries[pos - 1].doc_id);
    }
    return out;
}

DocTextLookup lookup_in(const lexical::InvertedIndex& index) {
    return [&index](std::string_view id) -> std::optional<std::string_view> {
        if (const auto ordinal = index.find_doc(id)) {
            return index.doc_text(*ordinal);
        }
        return std::nullopt;
    };
}

MinedCandidates mine_hard_negatives(const TextRecord& query, const std::optional<std::string>& answer,
                                    const RankedList& bm25_list, const RankedList& dense_list,
                                    const DocTextLookup& docs, const MiningConfig& cfg) {
    cfg.validate();
    for (const RankedList* list : {&bm25_list, &dense_list}) {
        if (list->query_id != query.id) {
            throw InvalidArgument("ranked list for '" + list->query_id + "' passed for query '" + query.id + "'");
        }
    }
    const RankedList lists[] = {bm25_list, dense_list};
    const RankedList fused = rrf_fuse(lists, cfg.rrf_k);
    std::vector<std::string> window = select_window(fused, cfg);

    MinedCandidates out;
    if (answer) {
        std::vector<TextRecord> candidates;
        candidates.reserve(window.size());
        for (auto& id : window) {
            const auto text = docs(id);
            if (!text) {
                throw InvalidArgument("no text for candidate doc '" + id + "'");
            }
            candidates.push_back(TextRecord{std::move(id), std::string(*text), {}});
        }
        auto split = corpus::extract_pseudo_positives(*answer, candidates);
        for (auto& r : split.mined_positives) {
            out.mined_positives.push_back(std::move(r.id));
        }
        for (auto& r : split.remaining_negatives) {
            out.negatives.push_back(std::move(r.id));
        }
    } else {
        out.negatives = std::move(window);
    }
    if (out.negatives.size() > cfg.negatives_per_query) {
        out.negatives.resize(cfg.negatives_per_query);
    }
    return out;
}

EmbedderDenseRanker::EmbedderDenseRanker(const embed::EmbedderParams& params, const lexical::InvertedIndex& index)
    : params_(params), index_(index) {
    for (std::uint32_t ordinal = 0; ordinal < index.doc_count(); ++ordinal) {
        const auto& text = index.doc_text(ordinal);
        if (text.empty() || embed::token_rows(params, text, embed::Role::Passage).empty()) {
            continue;
        }
        ordinals_.push_back(ordinal);
        doc_vectors_.push_back(embed::encode(params, text, embed::Role::Passage));
    }
}

RankedList EmbedderDenseRanker::rank(const TextRecord& query, std::size_t k) const {
    RankedList out;
    out.query_id = query.id;
    if (k == 0 || query.text.empty() || embed::token_rows(params_, query.text, embed::Role::Query).empty()) {
        return out;
    }
    const auto q = embed::encode(params_, query.text, embed::Role::Query);
    std::vector<double> scores(doc_vectors_.size());
    for (std::size_t i = 0; i < doc_vectors_.size(); ++i) {
        scores[i] = std::inner_product(q.begin(), q.end(), doc_vectors_[i].begin(), 0.0);
    }
    std::vector<std::size_t> order(doc_vectors_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, order.size());
    // Ordinals ascend with doc id, so the index tie-break is the id tie-break.
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) {
                              return scores[a] > scores[b];
                          }
                          return a < b;
                      });
    for (std::size_t i = 0; i < take; ++i) {
        out.entries.push_back(ScoredDoc{index_.doc_id(ordinals_[order[i]]), scores[order[i]]});
    }
    return out;
}

}  // namespace embkit::mining
