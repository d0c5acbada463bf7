#include "embkit/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "binary_io.hpp"
#include "embkit/batching.hpp"
#include "embkit/corpus.hpp"
#include "embkit/error.hpp"
#include "embkit/lexical_index.hpp"
#include "embkit/rng.hpp"
#include "embedder_internal.hpp"

namespace embkit::embed {

namespace {

constexpr std::string_view kModelMagic = "EMBKEMB\n";
constexpr std::uint32_t kModelVersion = 1;

const std::vector<std::string>& prefix_tokens(Role role) {
    static const std::vector<std::string> query = lexical::tokenize_lexical(kQueryPrefix);
    static const std::vector<std::string> passage = lexical::tokenize_lexical(kPassagePrefix);
    return role == Role::Query ? query : passage;
}

double log_sum_exp(std::span<const double> xs) {
    const double m = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (const double x : xs) {
        sum += std::exp(x - m);
    }
    return m + std::log(sum);
}

}  // namespace

std::string_view prefix_for(Role role) { return role == Role::Query ? kQueryPrefix : kPassagePrefix; }

EmbedderParams EmbedderParams::create(std::vector<std::string> vocab, std::size_t dim, double tau,
                                      std::uint64_t seed, double init_scale) {
    EmbedderParams p;
    p.dim_ = dim;
    p.tau_ = tau;
    p.vocab_ = std::move(vocab);
    for (std::uint32_t i = 0; i < p.vocab_.size(); ++i) {
        if (!p.rows_.emplace(p.vocab_[i], i).second) {
            throw InvalidArgument("duplicate vocabulary entry '" + p.vocab_[i] + "'");
        }
    }
    p.table_.resize(p.vocab_.size() * dim);
    Rng rng(seed);
    for (auto& x : p.table_) {
        x = rng.uniform(-init_scale, init_scale);
    }
    p.validate();
    return p;
}

std::optional<std::uint32_t> EmbedderParams::token_row(std::string_view token) const {
    const auto it = rows_.find(std::string(token));
    if (it == rows_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void EmbedderParams::validate() const {
    if (dim_ < 1) {
        throw InvalidArgument("embedder dim must be >= 1");
    }
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) {
        throw InvalidArgument("embedder temperature must be > 0");
    }
    if (table_.size() != vocab_.size() * dim_) {
        throw InvalidArgument("embedding table shape does not match vocab x dim");
    }
    if (!std::all_of(table_.begin(), table_.end(), [](double x) { return std::isfinite(x); })) {
        throw InvalidArgument("embedding table holds non-finite values");
    }
}

void EmbedderParams::save(const std::filesystem::path& path) const {
    embkit::detail::BinaryWriter w(path);
    w.magic(kModelMagic);
    w.u32(kModelVersion);
    w.u64(dim_);
    w.f64(tau_);
    w.str(label_);
    w.u64(vocab_.size());
    for (const auto& token : vocab_) {
        w.str(token);
    }
    for (const double x : table_) {
        w.f64(x);
    }
    w.finish();
}

EmbedderParams EmbedderParams::load(const std::filesystem::path& path) {
    embkit::detail::BinaryReader r(path);
    r.expect_magic(kModelMagic);
    if (const auto version = r.u32(); version != kModelVersion) {
        throw IoError(path.string() + ": unsupported embedder version " + std::to_string(version));
    }
    EmbedderParams p;
    p.dim_ = r.count(1 << 20);
    p.tau_ = r.f64();
    p.label_ = r.str();
    const auto n = r.count();
    p.vocab_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        p.vocab_.push_back(r.str());
        if (!p.rows_.emplace(p.vocab_.back(), static_cast<std::uint32_t>(i)).second) {
            throw IoError(path.string() + ": duplicate vocabulary entry");
        }
    }
    p.table_.resize(n * p.dim_);
    for (auto& x : p.table_) {
        x = r.f64();
    }
    r.expect_end();
    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return p;
}

std::vector<std::string> build_vocabulary(std::span<const std::string> texts) {
    std::set<std::string> tokens;
    for (const Role role : {Role::Query, Role::Passage}) {
        tokens.insert(prefix_tokens(role).begin(), prefix_tokens(role).end());
    }
    for (const auto& text : texts) {
        for (auto& t : lexical::tokenize_lexical(text)) {
            tokens.insert(std::move(t));
        }
    }
    return {tokens.begin(), tokens.end()};
}

std::vector<std::string> build_vocabulary(std::span<const TrainTriplet> triplets) {
    std::vector<std::string> texts;
    for (const auto& t : triplets) {
        texts.push_back(t.anchor);
        texts.push_back(t.positive);
        texts.insert(texts.end(), t.negatives.begin(), t.negatives.end());
    }
    return build_vocabulary(std::span<const std::string>(texts));
}

std::vector<std::uint32_t> token_rows(const EmbedderParams& params, std::span<const std::string> text_tokens,
                                      Role role) {
    std::vector<std::uint32_t> rows;
    rows.reserve(text_tokens.size() + 2);
    for (const auto& t : prefix_tokens(role)) {
        if (const auto r = params.token_row(t)) {
            rows.push_back(*r);
        }
    }
    const std::size_t prefix_count = rows.size();
    for (const auto& t : text_tokens) {
        if (const auto r = params.token_row(t)) {
            rows.push_back(*r);
        }
    }
    if (rows.size() == prefix_count) {
        rows.clear();
    }
    return rows;
}

std::vector<std::uint32_t> token_rows(const EmbedderParams& params, std::string_view text, Role role) {
    const auto tokens = lexical::tokenize_lexical(text);
    return token_rows(params, tokens, role);
}

namespace detail {

Encoded encode_rows(const EmbedderParams& params, std::vector<std::uint32_t> rows) {
    if (rows.empty()) {
        throw InvalidArgument("text has no in-vocabulary tokens");
    }
    Encoded enc;
    enc.rows = std::move(rows);
    enc.unit.assign(params.dim(), 0.0);
    for (const auto r : enc.rows) {
        const auto row = params.row(r);
        for (std::size_t d = 0; d < row.size(); ++d) {
            enc.unit[d] += row[d];
        }
    }
    const double inv_count = 1.0 / static_cast<double>(enc.rows.size());
    double sq = 0.0;
    for (auto& x : enc.unit) {
        x *= inv_count;
        sq += x * x;
    }
    enc.norm = std::sqrt(sq);
    if (!(enc.norm > 0.0)) {
        throw InvalidArgument("mean-pooled embedding is the zero vector");
    }
    for (auto& x : enc.unit) {
        x /= enc.norm;
    }
    return enc;
}

Encoded encode_text(const EmbedderParams& params, std::string_view text, Role role) {
    if (text.empty()) {
        throw InvalidArgument("cannot encode empty text");
    }
    return encode_rows(params, token_rows(params, text, role));
}

void backprop(const Encoded& enc, std::span<const double> grad_unit, std::span<double> grad_table,
              std::size_t dim) {
    // d(v/|v|)/dv = (I - e e^T) / |v|, then the mean spreads 1/T to each row.
    const double proj = std::inner_product(enc.unit.begin(), enc.unit.end(), grad_unit.begin(), 0.0);
    const double scale = 1.0 / (enc.norm * static_cast<double>(enc.rows.size()));
    for (const auto r : enc.rows) {
        double* g = grad_table.data() + static_cast<std::size_t>(r) * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            g[d] += (grad_unit[d] - enc.unit[d] * proj) * scale;
        }
    }
}

void apply_gradient(EmbedderParams& params, std::span<const double> gradient, double learning_rate) {
    auto table = params.table();
    for (std::size_t i = 0; i < table.size(); ++i) {
        table[i] -= learning_rate * gradient[i];
    }
}

std::vector<std::vector<std::vector<TrainTriplet>>> plan_epochs(std::span<const TrainTriplet> triplets,
                                                                const TrainingConfig& cfg) {
    std::vector<TrainTriplet> data;
    data.reserve(triplets.size() * (cfg.augment_shuffled_positives ? 2 : 1));
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        TrainTriplet t = triplets[i];
        if (t.negatives.size() > cfg.hard_negatives) {
            t.negatives.resize(cfg.hard_negatives);
            if (t.teacher_scores) {
                t.teacher_scores->resize(cfg.hard_negatives + 1);
            }
        }
        const bool augment =
            cfg.augment_shuffled_positives && corpus::split_sentences(t.positive).size() > 1;
        data.push_back(t);
        if (augment) {
            TrainTriplet shuffled = t;
            shuffled.positive = corpus::shuffle_augment(t.positive, derive_seed(cfg.seed, i));
            data.push_back(std::move(shuffled));
        }
    }
    std::vector<std::vector<std::vector<TrainTriplet>>> epochs;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto batches = batching::task_homogeneous_batches(data, cfg.batch_size,
                                                          derive_seed(cfg.seed, "epoch-" + std::to_string(epoch)));
        std::vector<std::vector<TrainTriplet>> steps;
        steps.reserve(batches.size());
        for (auto& b : batches) {
            steps.push_back(batching::dedup_within_batch(std::move(b)).items);
        }
        epochs.push_back(std::move(steps));
    }
    return epochs;
}

}  // namespace detail

std::vector<double> encode(const EmbedderParams& params, std::string_view text, Role role) {
    return detail::encode_text(params, text, role).unit;
}

std::vector<double> encode_tokens(const EmbedderParams& params, std::span<const std::string> text_tokens,
                                  Role role) {
    return detail::encode_rows(params, token_rows(params, text_tokens, role)).unit;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw InvalidArgument("cosine_similarity needs vectors of equal length");
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        throw InvalidArgument("cosine_similarity of a zero vector");
    }
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

namespace {

/// Loss and d(loss)/d(score) for every score block.
double contrastive_forward_backward(const ContrastiveScores& s, ContrastiveScores* grad) {
    const std::size_t n = s.batch;
    if (n == 0) {
        throw InvalidArgument("contrastive loss needs a non-empty batch");
    }
    if (grad != nullptr) {
        grad->batch = n;
        grad->qp.assign(n * n, 0.0);
        grad->qq.assign(n * n, 0.0);
        grad->pp.assign(n * n, 0.0);
        grad->qn.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            grad->qn[i].assign(s.qn[i].size(), 0.0);
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    std::vector<double> terms;
    for (std::size_t i = 0; i < n; ++i) {
        terms.clear();
        for (std::size_t j = 0; j < n; ++j) {
            terms.push_back(s.at(s.qp, i, j));
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                terms.push_back(s.at(s.qq, i, j));
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            terms.push_back(s.at(s.qp, j, i));
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                terms.push_back(s.at(s.pp, i, j));
            }
        }
        terms.insert(terms.end(), s.qn[i].begin(), s.qn[i].end());
        const double log_z = log_sum_exp(terms);
        total += log_z - s.at(s.qp, i, i);
        if (grad == nullptr) {
            continue;
        }
        // Walk the terms in the order they were pushed.
        std::size_t t = 0;
        const auto w = [&]() { return std::exp(terms[t++] - log_z) * inv_n; };
        for (std::size_t j = 0; j < n; ++j) {
            grad->at(grad->qp, i, j) += w();
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                grad->at(grad->qq, i, j) += w();
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            grad->at(grad->qp, j, i) += w();
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                grad->at(grad->pp, i, j) += w();
            }
        }
        for (std::size_t k = 0; k < s.qn[i].size(); ++k) {
            grad->qn[i][k] += w();
        }
        grad->at(grad->qp, i, i) -= inv_n;
    }
    return total * inv_n;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
    for (std::size_t d = 0; d < y.size(); ++d) {
        y[d] += a * x[d];
    }
}

}  // namespace

double contrastive_loss_from_scores(const ContrastiveScores& scores) {
    return contrastive_forward_backward(scores, nullptr);
}

LossAndGradient improved_contrastive_loss(const EmbedderParams& params, std::span<const TrainTriplet> batch) {
    const std::size_t n = batch.size();
    if (n == 0) {
        throw InvalidArgument("contrastive loss needs a non-empty batch");
    }
    {
        std::unordered_map<std::string_view, std::size_t> owner;
        for (std::size_t i = 0; i < n; ++i) {
            const auto claim = [&](const std::string& text) {
                const auto [it, inserted] = owner.emplace(text, i);
                if (!inserted && it->second != i) {
                    throw InvalidArgument("text '" + text + "' appears in batch items " +
                                          std::to_string(it->second) + " and " + std::to_string(i) +
                                          "; deduplicate the batch first");
                }
            };
            claim(batch[i].anchor);
            claim(batch[i].positive);
            for (const auto& neg : batch[i].negatives) {
                claim(neg);
            }
        }
    }

    std::vector<detail::Encoded> q;
    std::vector<detail::Encoded> p;
    std::vector<std::vector<detail::Encoded>> neg(n);
    q.reserve(n);
    p.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        q.push_back(detail::encode_text(params, batch[i].anchor, Role::Query));
        p.push_back(detail::encode_text(params, batch[i].positive, Role::Passage));
        for (const auto& text : batch[i].negatives) {
            neg[i].push_back(detail::encode_text(params, text, Role::Passage));
        }
    }

    const double inv_tau = 1.0 / params.tau();
    ContrastiveScores s;
    s.batch = n;
    s.qp.resize(n * n);
    s.qq.resize(n * n);
    s.pp.resize(n * n);
    s.qn.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            s.at(s.qp, i, j) = dot(q[i].unit, p[j].unit) * inv_tau;
            s.at(s.qq, i, j) = dot(q[i].unit, q[j].unit) * inv_tau;
            s.at(s.pp, i, j) = dot(p[i].unit, p[j].unit) * inv_tau;
        }
        for (const auto& e : neg[i]) {
            s.qn[i].push_back(dot(q[i].unit, e.unit) * inv_tau);
        }
    }

    ContrastiveScores ds;
    LossAndGradient out;
    out.loss = contrastive_forward_backward(s, &ds);

    const std::size_t dim = params.dim();
    std::vector<std::vector<double>> gq(n, std::vector<double>(dim, 0.0));
    std::vector<std::vector<double>> gp(n, std::vector<double>(dim, 0.0));
    std::vector<std::vector<std::vector<double>>> gn(n);
    for (std::size_t i = 0; i < n; ++i) {
        gn[i].assign(neg[i].size(), std::vector<double>(dim, 0.0));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double cqp = ds.at(ds.qp, i, j) * inv_tau;
            axpy(gq[i], cqp, p[j].unit);
            axpy(gp[j], cqp, q[i].unit);
            const double cqq = ds.at(ds.qq, i, j) * inv_tau;
            axpy(gq[i], cqq, q[j].unit);
            axpy(gq[j], cqq, q[i].unit);
            const double cpp = ds.at(ds.pp, i, j) * inv_tau;
            axpy(gp[i], cpp, p[j].unit);
            axpy(gp[j], cpp, p[i].unit);
        }
        for (std::size_t k = 0; k < neg[i].size(); ++k) {
            const double c = ds.qn[i][k] * inv_tau;
            axpy(gq[i], c, neg[i][k].unit);
            axpy(gn[i][k], c, q[i].unit);
        }
    }

    out.gradient.assign(params.table().size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        detail::backprop(q[i], gq[i], out.gradient, dim);
        detail::backprop(p[i], gp[i], out.gradient, dim);
        for (std::size_t k = 0; k < neg[i].size(); ++k) {
            detail::backprop(neg[i][k], gn[i][k], out.gradient, dim);
        }
    }
    return out;
}

void TrainingConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("learning_rate must be > 0");
    }
    if (!(warmup_ratio >= 0.0 && warmup_ratio <= 1.0)) {
        throw InvalidArgument("warmup_ratio must lie in [0, 1]");
    }
    if (batch_size < 1) {
        throw InvalidArgument("batch_size must be >= 1");
    }
}

double scheduled_learning_rate(double peak, std::size_t step, std::size_t total_steps, double warmup_ratio) {
    if (total_steps == 0 || step >= total_steps) {
        return 0.0;
    }
    const auto warmup = static_cast<std::size_t>(std::ceil(warmup_ratio * static_cast<double>(total_steps)));
    if (step < warmup) {
        return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
    }
    return peak * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
}

EmbedderParams train_embedder(EmbedderParams params, std::span<const TrainTriplet> triplets,
                              const TrainingConfig& cfg, TrainLog* log) {
    cfg.validate();
    params.validate();
    if (triplets.empty()) {
        throw InvalidArgument("train_embedder needs at least one triplet");
    }
    const auto epochs = detail::plan_epochs(triplets, cfg);
    std::size_t total = 0;
    for (const auto& e : epochs) {
        total += e.size();
    }
    std::size_t step = 0;
    for (const auto& epoch : epochs) {
        for (const auto& batch : epoch) {
            const auto result = improved_contrastive_loss(params, batch);
            detail::apply_gradient(params, result.gradient,
                                   scheduled_learning_rate(cfg.learning_rate, step, total, cfg.warmup_ratio));
            if (log != nullptr) {
                log->step_losses.push_back(result.loss);
            }
            ++step;
        }
    }
    return params;
}

}  // namespace embkit::embed
