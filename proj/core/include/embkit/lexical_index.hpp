#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "embkit/records.hpp"

namespace embkit::lexical {

/// Latin/digit runs become lowercased tokens; CJK runs become overlapping
/// character bigrams (a lone CJK character is its own token); everything
/// else separates tokens.
std::vector<std::string> tokenize_lexical(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;
    bool operator==(const Bm25Params&) const = default;
};

struct Posting {
    std::uint32_t doc = 0;  // ordinal, see InvertedIndex
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Immutable BM25 index over one dataset. Documents are stored in ascending
/// id order, so a document's ordinal orders the same way as its id and
/// postings sorted by ordinal are sorted by doc id. Document texts are kept
/// alongside so mining can inspect candidates without the source file.
class InvertedIndex {
  public:
    InvertedIndex() = default;

    /// Throws InvalidArgument on a duplicate doc id.
    static InvertedIndex build(std::span<const TextRecord> docs, const Bm25Params& params);

    std::size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }

    std::optional<std::uint32_t> find_doc(std::string_view doc_id) const;
    const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_.at(ordinal); }
    const std::string& doc_text(std::uint32_t ordinal) const { return doc_texts_.at(ordinal); }
    const std::string& doc_source(std::uint32_t ordinal) const { return doc_sources_.at(ordinal); }
    std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_lengths_.at(ordinal); }

    std::size_t term_count() const { return postings_.size(); }
    std::span<const Posting> postings(const std::string& term) const;
    std::size_t document_frequency(const std::string& term) const { return postings(term).size(); }

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); positive for every df in [0, N].
    double idf(std::size_t df) const;

    /// Saturated term-frequency factor tf*(k1+1) / (tf + k1*(1-b+b*dl/avgdl)).
    double tf_weight(double tf, double doc_length) const;

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

    bool operator==(const InvertedIndex&) const = default;

  private:
    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::string> doc_texts_;
    std::vector<std::string> doc_sources_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

inline InvertedIndex build_index(std::span<const TextRecord> docs, const Bm25Params& params = {}) {
    return InvertedIndex::build(docs, params);
}

/// BM25 of an indexed document. Query terms are summed in order, so a
/// repeated term contributes twice. Throws InvalidArgument for an unknown id.
double bm25_score(const InvertedIndex& index, std::span<const std::string> query_tokens,
                  std::string_view doc_id);

/// BM25 of an arbitrary token sequence scored against the index's
/// collection statistics (df, N, avgdl).
double bm25_score_tokens(const InvertedIndex& index, std::span<const std::string> query_tokens,
                         std::span<const std::string> doc_tokens);

/// Up to k matching documents by descending BM25; ties by ascending doc id.
RankedList search_topk(const InvertedIndex& index, std::string_view query, std::size_t k);
RankedList search_topk_tokens(const InvertedIndex& index, std::span<const std::string> query_tokens,
                              std::size_t k);

}  // namespace embkit::lexical
