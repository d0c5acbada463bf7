#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embkit/embedder.hpp"
#include "embkit/lexical_index.hpp"
#include "embkit/records.hpp"

namespace embkit::rerank {

inline constexpr std::size_t kFeatureCount = 4;
inline constexpr int kFeatureSchemaVersion = 1;

/// Feature order: token-set Jaccard, BM25, embedder cosine, log(1 + doc tokens).
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "jaccard", "bm25", "embed_cosine", "log_doc_length"};

using Features = std::array<double, kFeatureCount>;

/// Logistic regression over query/document interaction features.
struct RerankerParams {
    std::vector<double> feature_weights = std::vector<double>(kFeatureCount, 0.0);
    double bias = 0.0;

    void validate() const;
    bool operator==(const RerankerParams&) const = default;
};

/// Optional resources behind the BM25 and cosine features. A missing
/// resource yields a 0 feature.
struct FeatureContext {
    const lexical::InvertedIndex* index = nullptr;
    const embed::EmbedderParams* embedder = nullptr;
    std::size_t max_length = 512;
};

/// Both texts are tokenized and cut to max_length tokens before any feature
/// is computed. Throws InvalidArgument for an empty text.
Features rerank_features(std::string_view query, std::string_view doc, const FeatureContext& ctx);

/// weights . features + bias
double rerank_logit(const RerankerParams& params, std::span<const double> features);

/// logistic(rerank_logit); strictly inside (0, 1) for finite inputs.
double rerank_score(const RerankerParams& params, std::span<const double> features);

struct RerankerGradient {
    std::vector<double> feature_weights;
    double bias = 0.0;
};

struct ListwiseLoss {
    double loss = 0.0;
    RerankerGradient gradient;
};

/// -log softmax of the positive over [positive] + negatives logits.
/// Throws InvalidArgument when negatives is empty.
ListwiseLoss listwise_ce_from_features(const RerankerParams& params, const Features& positive,
                                       std::span<const Features> negatives);

ListwiseLoss listwise_ce_loss(const RerankerParams& params, const FeatureContext& ctx,
                              std::string_view query, std::string_view positive,
                              std::span<const std::string> negatives);

struct StageConfig {
    int stage = 1;
    std::size_t max_length = 256;
    bool shuffle_positive = true;
    std::size_t hard_negatives = 63;
    double learning_rate = 0.05;
    std::size_t batch_size = 16;
    std::size_t epochs = 1;
    double warmup_ratio = 0.10;
    std::uint64_t seed = 0;

    static StageConfig first_stage();
    static StageConfig second_stage();
    void validate() const;
};

/// One training stage of listwise CE with gradient descent.
/// Throws InvalidArgument on empty data.
RerankerParams train_reranker_stage(RerankerParams params, std::span<const TrainTriplet> data,
                                    const StageConfig& cfg, const FeatureContext& ctx);

RerankerParams train_reranker_two_stage(const RerankerParams& init,
                                        std::span<const TrainTriplet> stage1_data,
                                        std::span<const TrainTriplet> stage2_data,
                                        const StageConfig& cfg1, const StageConfig& cfg2,
                                        const FeatureContext& ctx);

/// On-disk reranker: parameters plus what the features were computed with.
struct RerankerModel {
    RerankerParams params;
    std::size_t max_length = 512;
    bool uses_index = false;
    bool uses_embedder = false;

    void save(const std::filesystem::path& path) const;
    static RerankerModel load(const std::filesystem::path& path);
};

}  // namespace embkit::rerank
