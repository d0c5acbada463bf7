#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embkit/records.hpp"

namespace embkit::corpus {

/// Code point ranges stripped by normalize_text: zero-width space/non-joiner/
/// joiner, LRM/RLM, BOM, soft hyphen and the bidi embedding controls.
struct CodePointRange {
    char32_t first;
    char32_t last;
};
inline constexpr CodePointRange kInvisibleRanges[] = {
    {U'\u200B', U'\u200F'},
    {U'\uFEFF', U'\uFEFF'},
    {U'\u00AD', U'\u00AD'},
    {U'\u202A', U'\u202E'},
};

bool is_invisible(char32_t cp);

/// NFKC-normalizes `raw` and removes invisible characters. Idempotent.
std::string normalize_text(std::string_view raw);

TextRecord normalize_record(TextRecord record);
TrainTriplet normalize_triplet(TrainTriplet triplet);

/// Sentence terminators. A run of consecutive terminators stays attached to
/// the sentence it ends.
inline constexpr char32_t kSentenceTerminators[] = {U'\u3002', U'\uFF01', U'\uFF1F', U'!', U'?'};

/// Splits after each terminator run. Concatenating the parts yields `text`.
std::vector<std::string> split_sentences(std::string_view text);

/// Returns the sentences of `text` in a seeded random order.
std::string shuffle_augment(std::string_view text, std::uint64_t seed);

struct PseudoPositiveSplit {
    std::vector<TextRecord> mined_positives;
    std::vector<TextRecord> remaining_negatives;
};

/// Moves every candidate whose normalized text contains the normalized
/// answer into mined_positives, preserving input order in both lists.
/// Throws InvalidArgument for an empty answer.
PseudoPositiveSplit extract_pseudo_positives(std::string_view answer,
                                             std::span<const TextRecord> candidates);

struct FilterConfig {
    double score_threshold = 0.8;
    double bottom_percentile = 20.0;

    void validate() const;
};

/// Keeps triplets whose positive teacher score is >= the threshold.
std::vector<TrainTriplet> filter_by_score_threshold(std::span<const TrainTriplet> triplets,
                                                    const FilterConfig& cfg);

struct ScoredItem {
    std::string id;
    double score = 0.0;

    bool operator==(const ScoredItem&) const = default;
};

/// Drops floor(n * percentile / 100) lowest-scoring items; among equal
/// scores the earlier item goes first. Survivors keep input order.
std::vector<ScoredItem> filter_bottom_percentile(std::span<const ScoredItem> items,
                                                 double percentile);

}  // namespace embkit::corpus
