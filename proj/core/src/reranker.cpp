#include "embkit/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "embkit/corpus.hpp"
#include "embkit/error.hpp"
#include "embkit/records_io.hpp"
#include "embkit/rng.hpp"

namespace embkit::rerank {

namespace {

std::vector<std::string> truncated_tokens(std::string_view text, std::size_t max_length) {
    auto tokens = lexical::tokenize_lexical(text);
    if (tokens.size() > max_length) {
        tokens.resize(max_length);
    }
    return tokens;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::set<std::string_view> sa(a.begin(), a.end());
    const std::set<std::string_view> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& t : sa) {
        inter += sb.count(t);
    }
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double embed_cosine(const embed::EmbedderParams& embedder, const std::vector<std::string>& query,
                    const std::vector<std::string>& doc) {
    if (embed::token_rows(embedder, query, embed::Role::Query).empty() ||
        embed::token_rows(embedder, doc, embed::Role::Passage).empty()) {
        return 0.0;
    }
    const auto q = embed::encode_tokens(embedder, query, embed::Role::Query);
    const auto d = embed::encode_tokens(embedder, doc, embed::Role::Passage);
    return std::inner_product(q.begin(), q.end(), d.begin(), 0.0);
}

double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_width(const RerankerParams& params, std::size_t width) {
    if (params.feature_weights.size() != width) {
        throw InvalidArgument("reranker has " + std::to_string(params.feature_weights.size()) +
                              " weights but got " + std::to_string(width) + " features");
    }
}

}  // namespace

void RerankerParams::validate() const {
    if (feature_weights.size() != kFeatureCount) {
        throw InvalidArgument("reranker needs exactly " + std::to_string(kFeatureCount) + " feature weights");
    }
    if (!std::all_of(feature_weights.begin(), feature_weights.end(), [](double w) { return std::isfinite(w); }) ||
        !std::isfinite(bias)) {
        throw InvalidArgument("reranker parameters must be finite");
    }
}

Features rerank_features(std::string_view query, std::string_view doc, const FeatureContext& ctx) {
    if (query.empty() || doc.empty()) {
        throw InvalidArgument("rerank_features needs non-empty query and document");
    }
    const auto q = truncated_tokens(query, ctx.max_length);
    const auto d = truncated_tokens(doc, ctx.max_length);
    Features f{};
    f[0] = jaccard(q, d);
    f[1] = ctx.index != nullptr ? lexical::bm25_score_tokens(*ctx.index, q, d) : 0.0;
    f[2] = ctx.embedder != nullptr ? embed_cosine(*ctx.embedder, q, d) : 0.0;
    f[3] = std::log1p(static_cast<double>(d.size()));
    return f;
}

double rerank_logit(const RerankerParams& params, std::span<const double> features) {
    check_width(params, features.size());
    return std::inner_product(features.begin(), features.end(), params.feature_weights.begin(), params.bias);
}

double rerank_score(const RerankerParams& params, std::span<const double> features) {
    return logistic(rerank_logit(params, features));
}

ListwiseLoss listwise_ce_from_features(const RerankerParams& params, const Features& positive,
                                       std::span<const Features> negatives) {
    if (negatives.empty()) {
        throw InvalidArgument("listwise loss needs at least one negative");
    }
    std::vector<double> logits;
    logits.reserve(negatives.size() + 1);
    logits.push_back(rerank_logit(params, positive));
    for (const auto& f : negatives) {
        logits.push_back(rerank_logit(params, f));
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (const double x : logits) {
        z += std::exp(x - m);
    }
    const double log_z = m + std::log(z);

    ListwiseLoss out;
    out.loss = log_z - logits[0];
    out.gradient.feature_weights.assign(kFeatureCount, 0.0);
    // dL/dz_j = softmax_j - [j == positive]
    for (std::size_t j = 0; j < logits.size(); ++j) {
        const double coeff = std::exp(logits[j] - log_z) - (j == 0 ? 1.0 : 0.0);
        const Features& f = j == 0 ? positive : negatives[j - 1];
        for (std::size_t d = 0; d < kFeatureCount; ++d) {
            out.gradient.feature_weights[d] += coeff * f[d];
        }
        out.gradient.bias += coeff;
    }
    return out;
}

ListwiseLoss listwise_ce_loss(const RerankerParams& params, const FeatureContext& ctx, std::string_view query,
                              std::string_view positive, std::span<const std::string> negatives) {
    if (negatives.empty()) {
        throw InvalidArgument("listwise loss needs at least one negative");
    }
    const Features pos = rerank_features(query, positive, ctx);
    std::vector<Features> negs;
    negs.reserve(negatives.size());
    for (const auto& n : negatives) {
        negs.push_back(rerank_features(query, n, ctx));
    }
    return listwise_ce_from_features(params, pos, negs);
}

StageConfig StageConfig::first_stage() {
    StageConfig c;
    c.stage = 1;
    c.max_length = 256;
    c.shuffle_positive = true;
    c.learning_rate = 0.05;
    c.batch_size = 32;
    return c;
}

StageConfig StageConfig::second_stage() {
    StageConfig c;
    c.stage = 2;
    c.max_length = 512;
    c.shuffle_positive = false;
    c.learning_rate = 0.005;
    c.batch_size = 4;
    return c;
}

void StageConfig::validate() const {
    if (stage != 1 && stage != 2) {
        throw InvalidArgument("stage must be 1 or 2");
    }
    if (hard_negatives < 1) {
        throw InvalidArgument("hard_negatives must be >= 1");
    }
    if (max_length < 1) {
        throw InvalidArgument("max_length must be >= 1");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("learning_rate must be > 0");
    }
    if (batch_size < 1) {
        throw InvalidArgument("batch_size must be >= 1");
    }
    if (!(warmup_ratio >= 0.0 && warmup_ratio <= 1.0)) {
        throw InvalidArgument("warmup_ratio must lie in [0, 1]");
    }
}

RerankerParams train_reranker_stage(RerankerParams params, std::span<const TrainTriplet> data,
                                    const StageConfig& cfg, const FeatureContext& base) {
    cfg.validate();
    params.validate();
    if (data.empty()) {
        throw InvalidArgument("stage " + std::to_string(cfg.stage) + " training data is empty");
    }
    FeatureContext ctx = base;
    ctx.max_length = cfg.max_length;

    // Negative features never change between epochs; positive features do
    // when the positive is re-shuffled each epoch.
    std::vector<std::vector<Features>> negative_features(data.size());
    std::vector<Features> positive_features(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& row = data[i];
        if (row.negatives.empty()) {
            throw InvalidArgument("stage " + std::to_string(cfg.stage) + " row #" + std::to_string(i) +
                                  " has no negatives");
        }
        const std::size_t count = std::min(cfg.hard_negatives, row.negatives.size());
        for (std::size_t k = 0; k < count; ++k) {
            negative_features[i].push_back(rerank_features(row.anchor, row.negatives[k], ctx));
        }
        if (!cfg.shuffle_positive) {
            positive_features[i] = rerank_features(row.anchor, row.positive, ctx);
        }
    }

    const std::size_t steps_per_epoch = (data.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total = steps_per_epoch * cfg.epochs;
    std::size_t step = 0;
    std::vector<std::size_t> order(data.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::uint64_t epoch_seed = derive_seed(cfg.seed, "stage" + std::to_string(cfg.stage) + "-epoch-" +
                                                                   std::to_string(epoch));
        if (cfg.shuffle_positive) {
            for (std::size_t i = 0; i < data.size(); ++i) {
                const auto shuffled = corpus::shuffle_augment(data[i].positive, derive_seed(epoch_seed, i));
                positive_features[i] = rerank_features(data[i].anchor, shuffled, ctx);
            }
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(epoch_seed);
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            RerankerGradient sum{std::vector<double>(kFeatureCount, 0.0), 0.0};
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t i = order[b];
                const auto loss = listwise_ce_from_features(params, positive_features[i], negative_features[i]);
                for (std::size_t d = 0; d < kFeatureCount; ++d) {
                    sum.feature_weights[d] += loss.gradient.feature_weights[d];
                }
                sum.bias += loss.gradient.bias;
            }
            const double lr = embed::scheduled_learning_rate(cfg.learning_rate, step, total, cfg.warmup_ratio) /
                              static_cast<double>(end - start);
            for (std::size_t d = 0; d < kFeatureCount; ++d) {
                params.feature_weights[d] -= lr * sum.feature_weights[d];
            }
            params.bias -= lr * sum.bias;
            ++step;
        }
    }
    return params;
}

RerankerParams train_reranker_two_stage(const RerankerParams& init, std::span<const TrainTriplet> stage1_data,
                                        std::span<const TrainTriplet> stage2_data, const StageConfig& cfg1,
                                        const StageConfig& cfg2, const FeatureContext& ctx) {
    if (stage1_data.empty() || stage2_data.empty()) {
        throw InvalidArgument("two-stage training needs non-empty data for both stages");
    }
    const RerankerParams after_first = train_reranker_stage(init, stage1_data, cfg1, ctx);
    if (cfg2.epochs == 0) {
        return after_first;
    }
    return train_reranker_stage(after_first, stage2_data, cfg2, ctx);
}

void RerankerModel::save(const std::filesystem::path& path) const {
    params.validate();
    nlohmann::json j;
    j["format"] = "embkit-reranker";
    j["feature_schema_version"] = kFeatureSchemaVersion;
    j["features"] = std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end());
    j["weights"] = params.feature_weights;
    j["bias"] = params.bias;
    j["max_length"] = max_length;
    j["uses_index"] = uses_index;
    j["uses_embedder"] = uses_embedder;
    io::write_file(path, j.dump(2) + "\n");
}

RerankerModel RerankerModel::load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
        if (j.at("format") != "embkit-reranker") {
            throw IoError(path.string() + " is not a reranker model");
        }
        if (j.at("feature_schema_version").get<int>() != kFeatureSchemaVersion) {
            throw IoError(path.string() + ": unsupported feature schema version");
        }
        RerankerModel m;
        m.params.feature_weights = j.at("weights").get<std::vector<double>>();
        m.params.bias = j.at("bias").get<double>();
        m.max_length = j.at("max_length").get<std::size_t>();
        m.uses_index = j.at("uses_index").get<bool>();
        m.uses_embedder = j.at("uses_embedder").get<bool>();
        m.params.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace embkit::rerank
