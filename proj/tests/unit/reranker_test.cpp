#include <gtest/gtest.h>

#include <cmath>

#include "embkit/error.hpp"
#include "embkit/reranker.hpp"
#include "embkit/rng.hpp"
#include "oracles/finite_diff.hpp"
#include "support/fixtures.hpp"

using namespace embkit;
using namespace embkit::rerank;

namespace {

Features random_features(Rng& rng) {
    Features f{};
    for (auto& v : f) v = rng.uniform() * 4.0 - 2.0;
    return f;
}

RerankerParams random_params(Rng& rng) {
    RerankerParams p;
    for (auto& w : p.feature_weights) w = rng.uniform() * 2.0 - 1.0;
    p.bias = rng.uniform() - 0.5;
    return p;
}

}  // namespace

TEST(RerankFeatures, JaccardOnIdenticalAndDisjoint) {
    const FeatureContext ctx;
    const auto same = rerank_features("alpha beta gamma", "alpha beta gamma", ctx);
    EXPECT_DOUBLE_EQ(same[0], 1.0);
    const auto disjoint = rerank_features("alpha beta", "delta epsilon", ctx);
    EXPECT_DOUBLE_EQ(disjoint[0], 0.0);
    EXPECT_DOUBLE_EQ(rerank_features("a b", "b c", ctx)[0], 1.0 / 3.0);
}

TEST(RerankFeatures, FixedWidthAndMissingResources) {
    const FeatureContext ctx;
    const auto f = rerank_features("q", "one two three", ctx);
    EXPECT_EQ(f.size(), kFeatureCount);
    EXPECT_EQ(f[1], 0.0);
    EXPECT_EQ(f[2], 0.0);
    EXPECT_THROW(rerank_features("", "doc", ctx), InvalidArgument);
    EXPECT_THROW(rerank_features("q", "", ctx), InvalidArgument);
}

TEST(RerankFeatures, LogLengthFeature) {
    const FeatureContext ctx;
    EXPECT_DOUBLE_EQ(rerank_features("q", "w", ctx)[3], std::log(2.0));
    std::string doc;
    for (int i = 0; i < 15; ++i) doc += "t" + std::to_string(i) + " ";
    EXPECT_DOUBLE_EQ(rerank_features("q", doc, ctx)[3], std::log(16.0));
    doc.clear();
    for (int i = 0; i < 63; ++i) doc += "t" + std::to_string(i) + " ";
    EXPECT_NEAR(rerank_features("q", doc, ctx)[3], 4.1588830833596715, 1e-12);
}

TEST(RerankFeatures, TruncationCapsLength) {
    FeatureContext ctx;
    ctx.max_length = 4;
    std::string doc;
    for (int i = 0; i < 20; ++i) doc += "t" + std::to_string(i) + " ";
    EXPECT_DOUBLE_EQ(rerank_features("q", doc, ctx)[3], std::log1p(4.0));
}

TEST(RerankFeatures, UsesIndexAndEmbedderWhenGiven) {
    const std::vector<TextRecord> docs = {{"d1", "alpha beta", "s"}, {"d2", "gamma", "s"}, {"d3", "delta", "s"}};
    const auto index = lexical::build_index(docs);
    const auto vocab = embed::build_vocabulary(std::vector<std::string>{"alpha beta gamma delta"});
    const auto emb = embed::EmbedderParams::create(vocab, 8, 0.01, 11);
    FeatureContext ctx{&index, &emb, 512};
    const auto f = rerank_features("alpha", "alpha beta", ctx);
    EXPECT_GT(f[1], 0.0);
    EXPECT_NE(f[2], 0.0);
    EXPECT_LE(std::abs(f[2]), 1.0 + 1e-12);
    EXPECT_EQ(rerank_features("unknownword", "alpha beta", ctx)[2], 0.0);
}

TEST(RerankScore, ZeroWeightsGiveHalf) {
    const RerankerParams p;
    const Features f{0.3, 1.2, -0.4, 2.0};
    EXPECT_DOUBLE_EQ(rerank_score(p, f), 0.5);
}

TEST(RerankScore, MatchesLogisticAndBiasLimits) {
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        const auto p = random_params(rng);
        const auto f = random_features(rng);
        double z = p.bias;
        for (std::size_t d = 0; d < kFeatureCount; ++d) z += p.feature_weights[d] * f[d];
        EXPECT_NEAR(rerank_score(p, f), 1.0 / (1.0 + std::exp(-z)), 1e-12);
    }
    RerankerParams big;
    big.bias = 1e6;
    EXPECT_DOUBLE_EQ(rerank_score(big, Features{}), 1.0);
    big.bias = -1e6;
    const double low = rerank_score(big, Features{});
    EXPECT_GE(low, 0.0);
    EXPECT_LT(low, 1e-300);
}

TEST(RerankScore, WidthMismatchThrows) {
    const RerankerParams p;
    const std::vector<double> three = {1, 2, 3};
    EXPECT_THROW(rerank_logit(p, three), InvalidArgument);
}

TEST(ListwiseCe, EqualLogitsGiveLogCount) {
    const RerankerParams p;
    for (const std::size_t n : {1u, 15u, 63u}) {
        const std::vector<Features> negs(n, Features{0.1, 0.2, 0.3, 0.4});
        const auto loss = listwise_ce_from_features(p, Features{0.5, 0.5, 0.5, 0.5}, negs);
        EXPECT_NEAR(loss.loss, std::log(1.0 + static_cast<double>(n)), 1e-12);
    }
    EXPECT_THROW(listwise_ce_from_features(p, Features{}, std::span<const Features>{}), InvalidArgument);
}

TEST(ListwiseCe, GradientMatchesFiniteDifferences) {
    Rng rng(77);
    for (int t = 0; t < 25; ++t) {
        auto p = random_params(rng);
        const auto pos = random_features(rng);
        std::vector<Features> negs;
        for (std::size_t k = 1 + rng.below(10); k > 0; --k) negs.push_back(random_features(rng));
        const auto analytic = listwise_ce_from_features(p, pos, negs);
        std::vector<double> x = p.feature_weights;
        x.push_back(p.bias);
        const auto numeric = oracle::central_differences(x, [&] {
            RerankerParams q;
            q.feature_weights.assign(x.begin(), x.begin() + kFeatureCount);
            q.bias = x.back();
            return listwise_ce_from_features(q, pos, negs).loss;
        });
        std::vector<double> a = analytic.gradient.feature_weights;
        a.push_back(analytic.gradient.bias);
        const auto check = oracle::compare_gradients(a, numeric);
        EXPECT_TRUE(check.ok) << "worst " << check.worst_rel;
        EXPECT_NEAR(analytic.gradient.bias, 0.0, 1e-12);
    }
}

TEST(ListwiseCe, InvariantToNegativeOrder) {
    Rng rng(3);
    const auto p = random_params(rng);
    const auto pos = random_features(rng);
    std::vector<Features> negs;
    for (int k = 0; k < 8; ++k) negs.push_back(random_features(rng));
    const double base = listwise_ce_from_features(p, pos, negs).loss;
    rng.shuffle(std::span<Features>(negs));
    EXPECT_NEAR(listwise_ce_from_features(p, pos, negs).loss, base, 1e-12);
}

TEST(ListwiseCe, TextEntryPointMatchesFeatures) {
    const FeatureContext ctx;
    Rng rng(4);
    const auto p = random_params(rng);
    const std::vector<std::string> negs = {"x y", "alpha z z"};
    const auto a = listwise_ce_loss(p, ctx, "alpha beta", "alpha beta gamma", negs);
    std::vector<Features> nf;
    for (const auto& n : negs) nf.push_back(rerank_features("alpha beta", n, ctx));
    const auto b = listwise_ce_from_features(p, rerank_features("alpha beta", "alpha beta gamma", ctx), nf);
    EXPECT_DOUBLE_EQ(a.loss, b.loss);
}

namespace {

std::vector<TrainTriplet> toy_triplets(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainTriplet> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string topic = "topic" + std::to_string(i);
        TrainTriplet t{topic + " question", topic + " answer text here", {}, "s", std::nullopt};
        for (int k = 0; k < 5; ++k) t.negatives.push_back(testsupport::random_sentence(rng, 40, 2, 8));
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

TEST(StageConfig, DefaultsAndValidation) {
    const auto s1 = StageConfig::first_stage();
    const auto s2 = StageConfig::second_stage();
    EXPECT_EQ(s1.max_length, 256u);
    EXPECT_TRUE(s1.shuffle_positive);
    EXPECT_EQ(s2.max_length, 512u);
    EXPECT_FALSE(s2.shuffle_positive);
    EXPECT_GT(s1.learning_rate, s2.learning_rate);
    auto bad = s1;
    bad.stage = 3;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s1;
    bad.learning_rate = 0.0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s1;
    bad.hard_negatives = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(TrainReranker, LearnsOverlapAndIsDeterministic) {
    const auto data = toy_triplets(40, 5);
    auto cfg = StageConfig::first_stage();
    cfg.epochs = 3;
    cfg.seed = 9;
    const FeatureContext ctx;
    const auto a = train_reranker_stage(RerankerParams{}, data, cfg, ctx);
    const auto b = train_reranker_stage(RerankerParams{}, data, cfg, ctx);
    EXPECT_EQ(a, b);
    EXPECT_GT(a.feature_weights[0], 0.0);
    double before = 0.0, after = 0.0;
    for (const auto& row : data) {
        before += listwise_ce_loss(RerankerParams{}, ctx, row.anchor, row.positive, row.negatives).loss;
        after += listwise_ce_loss(a, ctx, row.anchor, row.positive, row.negatives).loss;
    }
    EXPECT_LT(after, before);
}

TEST(TrainReranker, TwoStageWithZeroSecondEpochsEqualsFirstStage) {
    const auto d1 = toy_triplets(20, 1);
    const auto d2 = toy_triplets(10, 2);
    auto c1 = StageConfig::first_stage();
    c1.seed = 4;
    auto c2 = StageConfig::second_stage();
    c2.epochs = 0;
    const FeatureContext ctx;
    EXPECT_EQ(train_reranker_two_stage(RerankerParams{}, d1, d2, c1, c2, ctx),
              train_reranker_stage(RerankerParams{}, d1, c1, ctx));
}

TEST(TrainReranker, Errors) {
    const FeatureContext ctx;
    EXPECT_THROW(train_reranker_stage(RerankerParams{}, {}, StageConfig::first_stage(), ctx), InvalidArgument);
    std::vector<TrainTriplet> no_negs = {{"q", "p", {}, "s", std::nullopt}};
    EXPECT_THROW(train_reranker_stage(RerankerParams{}, no_negs, StageConfig::first_stage(), ctx), InvalidArgument);
    const auto d = toy_triplets(3, 1);
    EXPECT_THROW(train_reranker_two_stage(RerankerParams{}, d, {}, StageConfig::first_stage(),
                                          StageConfig::second_stage(), ctx),
                 InvalidArgument);
}

TEST(RerankerModel, SaveLoadRoundTrip) {
    testsupport::TempDir dir("rr");
    RerankerModel m;
    m.params.feature_weights = {0.1, -0.25, 3.5, 1e-7};
    m.params.bias = -0.125;
    m.max_length = 300;
    m.uses_index = true;
    m.save(dir / "m.json");
    const auto back = RerankerModel::load(dir / "m.json");
    EXPECT_EQ(back.params, m.params);
    EXPECT_EQ(back.max_length, 300u);
    EXPECT_TRUE(back.uses_index);
    EXPECT_FALSE(back.uses_embedder);
    {
        std::ofstream out(dir / "bad.json");
        out << "{\"format\": \"other\"}";
    }
    EXPECT_THROW(RerankerModel::load(dir / "bad.json"), IoError);
}
