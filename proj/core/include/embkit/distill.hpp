#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embkit/batching.hpp"
#include "embkit/embedder.hpp"

namespace embkit::distill {

/// (x - min) / (max - min); a constant list maps to 0.5 everywhere.
std::vector<double> minmax_normalize(std::span<const double> scores);

struct DistillBatchRow {
    std::string query;
    std::vector<std::string> candidates;  // [positive] + negatives
    std::vector<double> teacher_scores;
};

/// Throws InvalidArgument when the triplet has no teacher scores.
DistillBatchRow row_from_triplet(const TrainTriplet& triplet);

/// KL(p || q) with p = softmax(minmax(teacher)), q = softmax(minmax(student))
/// and student scores the query/candidate cosine similarities.
/// Throws InvalidArgument for fewer than two candidates.
embed::LossAndGradient distillation_loss(const embed::EmbedderParams& params, const DistillBatchRow& row);

enum class LossFamily { Retrieval, Nli };

/// Maps dataset tags to the loss applied to their rows.
class DatasetRegistry {
  public:
    DatasetRegistry() = default;
    using Map = std::map<std::string, LossFamily, std::less<>>;

    explicit DatasetRegistry(Map families) : families_(std::move(families)) {}

    void add(std::string tag, LossFamily family) { families_[std::move(tag)] = family; }
    bool contains(std::string_view tag) const;
    /// Throws InvalidArgument for an unregistered tag.
    LossFamily family(std::string_view tag) const;

    const Map& entries() const { return families_; }

  private:
    Map families_;
};

LossFamily parse_loss_family(std::string_view name);
std::string_view to_string(LossFamily family);

/// Retrieval batches: mean distillation loss over rows. NLI batches: the
/// improved contrastive loss. Throws for a mixed-source batch or an
/// unknown tag.
embed::LossAndGradient decoupled_step(const embed::EmbedderParams& params, const batching::Batch& batch,
                                      const DatasetRegistry& registry);

/// Fine-tunes an embedder with decoupled steps over task-homogeneous,
/// deduplicated batches. Uses cfg.hard_negatives per row.
embed::EmbedderParams distill_train(embed::EmbedderParams params, std::span<const TrainTriplet> triplets,
                                    const DatasetRegistry& registry, const embed::TrainingConfig& cfg,
                                    embed::TrainLog* log = nullptr);

}  // namespace embkit::distill
