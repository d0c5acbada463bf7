#pragma once

#include <optional>
#include <string>
#include <vector>

namespace embkit {

/// One identified text unit (document or query).
struct TextRecord {
    std::string id;
    std::string text;
    std::string source;

    bool operator==(const TextRecord&) const = default;
};

/// The universal training row: anchor, positive, hard negatives and an
/// optional list of teacher scores aligned to [positive] + negatives.
struct TrainTriplet {
    std::string anchor;
    std::string positive;
    std::vector<std::string> negatives;
    std::string source;
    std::optional<std::vector<double>> teacher_scores;

    bool operator==(const TrainTriplet&) const = default;
};

/// Throws InvalidArgument when the triplet breaks its invariants
/// (empty anchor/positive, teacher_scores length mismatch).
void check_triplet(const TrainTriplet& triplet);

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Ordered candidates for one query. Scores are non-increasing and doc ids
/// unique within the list.
struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries;

    std::vector<std::string> doc_ids() const;
    bool operator==(const RankedList&) const = default;
};

/// Throws InvalidArgument if scores increase somewhere or a doc id repeats.
void check_ranked_list(const RankedList& list);

}  // namespace embkit
