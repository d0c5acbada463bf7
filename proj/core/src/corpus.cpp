#include "embkit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "embkit/error.hpp"
#include "embkit/rng.hpp"
#include "embkit/utf8.hpp"

namespace embkit {

void check_triplet(const TrainTriplet& triplet) {
    if (triplet.anchor.empty()) {
        throw InvalidArgument("triplet anchor is empty");
    }
    if (triplet.positive.empty()) {
        throw InvalidArgument("triplet positive is empty");
    }
    if (triplet.teacher_scores && triplet.teacher_scores->size() != triplet.negatives.size() + 1) {
        throw InvalidArgument("teacher_scores has " + std::to_string(triplet.teacher_scores->size()) +
                              " entries, expected " + std::to_string(triplet.negatives.size() + 1));
    }
}

std::vector<std::string> RankedList::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) {
        ids.push_back(e.doc_id);
    }
    return ids;
}

void check_ranked_list(const RankedList& list) {
    std::vector<std::string_view> ids;
    ids.reserve(list.entries.size());
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        if (i > 0 && list.entries[i].score > list.entries[i - 1].score) {
            throw InvalidArgument("ranked list for query '" + list.query_id + "' has increasing scores at position " +
                                  std::to_string(i + 1));
        }
        ids.push_back(list.entries[i].doc_id);
    }
    std::sort(ids.begin(), ids.end());
    if (const auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end()) {
        throw InvalidArgument("ranked list for query '" + list.query_id + "' repeats doc '" + std::string(*dup) +
                              "'");
    }
}

}  // namespace embkit

namespace embkit::corpus {

namespace {

const icu::Normalizer2& nfkc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* instance = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status) || instance == nullptr) {
        throw Error("ICU NFKC normalizer unavailable");
    }
    return *instance;
}

bool is_terminator(char32_t cp) {
    return std::find(std::begin(kSentenceTerminators), std::end(kSentenceTerminators), cp) !=
           std::end(kSentenceTerminators);
}

}  // namespace

bool is_invisible(char32_t cp) {
    return std::any_of(std::begin(kInvisibleRanges), std::end(kInvisibleRanges),
                       [cp](const CodePointRange& r) { return cp >= r.first && cp <= r.last; });
}

std::string normalize_text(std::string_view raw) {
    // Invisible characters go first: left in place, a joiner can block
    // composition and removing it afterwards would leave a non-NFKC string.
    std::u32string cps = utf8::decode(raw);
    std::erase_if(cps, is_invisible);
    const std::string stripped = utf8::encode(cps);

    const icu::UnicodeString input = icu::UnicodeString::fromUTF8(stripped);
    UErrorCode status = U_ZERO_ERROR;
    const icu::UnicodeString normalized = nfkc().normalize(input, status);
    if (U_FAILURE(status)) {
        throw Error(std::string("NFKC normalization failed: ") + u_errorName(status));
    }
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

TextRecord normalize_record(TextRecord record) {
    record.text = normalize_text(record.text);
    return record;
}

TrainTriplet normalize_triplet(TrainTriplet triplet) {
    triplet.anchor = normalize_text(triplet.anchor);
    triplet.positive = normalize_text(triplet.positive);
    for (auto& n : triplet.negatives) {
        n = normalize_text(n);
    }
    return triplet;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    const std::u32string cps = utf8::decode(text);
    std::u32string current;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        current.push_back(cps[i]);
        const bool ends_run = is_terminator(cps[i]) && (i + 1 == cps.size() || !is_terminator(cps[i + 1]));
        if (ends_run) {
            sentences.push_back(utf8::encode(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        sentences.push_back(utf8::encode(current));
    }
    return sentences;
}

std::string shuffle_augment(std::string_view text, std::uint64_t seed) {
    std::vector<std::string> sentences = split_sentences(text);
    Rng rng(seed);
    rng.shuffle(std::span<std::string>(sentences));
    std::string out;
    out.reserve(text.size());
    for (const auto& s : sentences) {
        out += s;
    }
    return out;
}

PseudoPositiveSplit extract_pseudo_positives(std::string_view answer, std::span<const TextRecord> candidates) {
    const std::string needle = normalize_text(answer);
    if (needle.empty()) {
        throw InvalidArgument("pseudo-positive extraction needs a non-empty answer");
    }
    PseudoPositiveSplit split;
    for (const auto& candidate : candidates) {
        if (normalize_text(candidate.text).find(needle) != std::string::npos) {
            split.mined_positives.push_back(candidate);
        } else {
            split.remaining_negatives.push_back(candidate);
        }
    }
    return split;
}

void FilterConfig::validate() const {
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
        throw InvalidArgument("score_threshold must lie in [0, 1]");
    }
    if (!(bottom_percentile >= 0.0 && bottom_percentile <= 100.0)) {
        throw InvalidArgument("bottom_percentile must lie in [0, 100]");
    }
}

std::vector<TrainTriplet> filter_by_score_threshold(std::span<const TrainTriplet> triplets,
                                                    const FilterConfig& cfg) {
    cfg.validate();
    std::vector<TrainTriplet> kept;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        const auto& t = triplets[i];
        if (!t.teacher_scores || t.teacher_scores->empty()) {
            throw InvalidArgument("triplet #" + std::to_string(i) + " (anchor '" + t.anchor +
                                  "') has no teacher_scores");
        }
        if (!(t.teacher_scores->front() < cfg.score_threshold)) {
            kept.push_back(t);
        }
    }
    return kept;
}

std::vector<ScoredItem> filter_bottom_percentile(std::span<const ScoredItem> items, double percentile) {
    if (!(percentile >= 0.0 && percentile <= 100.0)) {
        throw InvalidArgument("percentile must lie in [0, 100]");
    }
    const auto n = items.size();
    const auto drop = static_cast<std::size_t>(std::floor(static_cast<double>(n) * percentile / 100.0));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return items[a].score < items[b].score; });
    std::vector<bool> removed(n, false);
    for (std::size_t i = 0; i < drop; ++i) {
        removed[order[i]] = true;
    }
    std::vector<ScoredItem> kept;
    kept.reserve(n - drop);
    for (std::size_t i = 0; i < n; ++i) {
        if (!removed[i]) {
            kept.push_back(items[i]);
        }
    }
    return kept;
}

}  // namespace embkit::corpus
