#include "embkit/distill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embedder_internal.hpp"
#include "embkit/error.hpp"

namespace embkit::distill {

namespace {

std::vector<double> log_softmax(std::span<const double> xs) {
    const double m = *std::max_element(xs.begin(), xs.end());
    double z = 0.0;
    for (const double x : xs) {
        z += std::exp(x - m);
    }
    const double log_z = m + std::log(z);
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = xs[i] - log_z;
    }
    return out;
}

}  // namespace

std::vector<double> minmax_normalize(std::span<const double> scores) {
    if (scores.empty()) {
        throw InvalidArgument("minmax_normalize needs at least one score");
    }
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double min = *lo;
    const double range = *hi - min;
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = range > 0.0 ? (scores[i] - min) / range : 0.5;
    }
    return out;
}

DistillBatchRow row_from_triplet(const TrainTriplet& triplet) {
    if (!triplet.teacher_scores) {
        throw InvalidArgument("distillation row for anchor '" + triplet.anchor + "' has no teacher_scores");
    }
    check_triplet(triplet);
    DistillBatchRow row;
    row.query = triplet.anchor;
    row.candidates.reserve(triplet.negatives.size() + 1);
    row.candidates.push_back(triplet.positive);
    row.candidates.insert(row.candidates.end(), triplet.negatives.begin(), triplet.negatives.end());
    row.teacher_scores = *triplet.teacher_scores;
    return row;
}

embed::LossAndGradient distillation_loss(const embed::EmbedderParams& params, const DistillBatchRow& row) {
    const std::size_t n = row.candidates.size();
    if (n < 2) {
        throw InvalidArgument("distillation needs at least two candidates");
    }
    if (row.teacher_scores.size() != n) {
        throw InvalidArgument("teacher_scores must align with candidates");
    }
    const auto query = embed::detail::encode_text(params, row.query, embed::Role::Query);
    std::vector<embed::detail::Encoded> cands;
    cands.reserve(n);
    std::vector<double> student(n);
    for (std::size_t i = 0; i < n; ++i) {
        cands.push_back(embed::detail::encode_text(params, row.candidates[i], embed::Role::Passage));
        student[i] = std::inner_product(query.unit.begin(), query.unit.end(), cands[i].unit.begin(), 0.0);
    }

    const auto y = minmax_normalize(student);
    const auto t = minmax_normalize(row.teacher_scores);
    const auto log_p = log_softmax(t);
    const auto log_q = log_softmax(y);

    embed::LossAndGradient out;
    std::vector<double> grad_y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::exp(log_p[i]);
        out.loss += p * (log_p[i] - log_q[i]);
        grad_y[i] = std::exp(log_q[i]) - p;
    }
    out.loss = std::max(out.loss, 0.0);

    // Back through min-max: y_i = (s_i - s_a) / (s_b - s_a) with a/b the
    // first argmin/argmax. A constant student list has zero gradient.
    std::vector<double> grad_s(n, 0.0);
    const auto a = static_cast<std::size_t>(std::min_element(student.begin(), student.end()) - student.begin());
    const auto b = static_cast<std::size_t>(std::max_element(student.begin(), student.end()) - student.begin());
    const double range = student[b] - student[a];
    if (range > 0.0) {
        double toward_min = 0.0;
        double toward_max = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            grad_s[i] = grad_y[i] / range;
            toward_min += grad_y[i] * (y[i] - 1.0);
            toward_max -= grad_y[i] * y[i];
        }
        grad_s[a] += toward_min / range;
        grad_s[b] += toward_max / range;
    }

    const std::size_t dim = params.dim();
    out.gradient.assign(params.table().size(), 0.0);
    std::vector<double> grad_q(dim, 0.0);
    std::vector<double> grad_c(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            grad_q[d] += grad_s[i] * cands[i].unit[d];
            grad_c[d] = grad_s[i] * query.unit[d];
        }
        embed::detail::backprop(cands[i], grad_c, out.gradient, dim);
    }
    embed::detail::backprop(query, grad_q, out.gradient, dim);
    return out;
}

bool DatasetRegistry::contains(std::string_view tag) const { return families_.find(tag) != families_.end(); }

LossFamily DatasetRegistry::family(std::string_view tag) const {
    const auto it = families_.find(tag);
    if (it == families_.end()) {
        throw InvalidArgument("source tag '" + std::string(tag) + "' is not in the dataset registry");
    }
    return it->second;
}

LossFamily parse_loss_family(std::string_view name) {
    if (name == "retrieval" || name == "qa") {
        return LossFamily::Retrieval;
    }
    if (name == "nli") {
        return LossFamily::Nli;
    }
    throw InvalidArgument("unknown loss family '" + std::string(name) + "' (expected retrieval or nli)");
}

std::string_view to_string(LossFamily family) { return family == LossFamily::Retrieval ? "retrieval" : "nli"; }

embed::LossAndGradient decoupled_step(const embed::EmbedderParams& params, const batching::Batch& batch,
                                      const DatasetRegistry& registry) {
    if (batch.items.empty()) {
        throw InvalidArgument("decoupled_step needs a non-empty batch");
    }
    for (const auto& item : batch.items) {
        if (item.source != batch.source) {
            throw InvalidArgument("batch tagged '" + batch.source + "' holds a row from '" + item.source + "'");
        }
    }
    if (registry.family(batch.source) == LossFamily::Nli) {
        return embed::improved_contrastive_loss(params, batch.items);
    }
    embed::LossAndGradient total;
    total.gradient.assign(params.table().size(), 0.0);
    for (const auto& item : batch.items) {
        const auto result = distillation_loss(params, row_from_triplet(item));
        total.loss += result.loss;
        for (std::size_t i = 0; i < total.gradient.size(); ++i) {
            total.gradient[i] += result.gradient[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.items.size());
    total.loss *= inv;
    for (auto& g : total.gradient) {
        g *= inv;
    }
    return total;
}

embed::EmbedderParams distill_train(embed::EmbedderParams params, std::span<const TrainTriplet> triplets,
                                    const DatasetRegistry& registry, const embed::TrainingConfig& cfg,
                                    embed::TrainLog* log) {
    cfg.validate();
    params.validate();
    if (triplets.empty()) {
        throw InvalidArgument("distill_train needs at least one triplet");
    }
    for (const auto& t : triplets) {
        registry.family(t.source);
    }
    const auto epochs = embed::detail::plan_epochs(triplets, cfg);
    std::size_t total = 0;
    for (const auto& e : epochs) {
        total += e.size();
    }
    std::size_t step = 0;
    for (const auto& epoch : epochs) {
        for (const auto& items : epoch) {
            const batching::Batch batch{items.front().source, items};
            const auto result = decoupled_step(params, batch, registry);
            embed::detail::apply_gradient(
                params, result.gradient,
                embed::scheduled_learning_rate(cfg.learning_rate, step, total, cfg.warmup_ratio));
            if (log != nullptr) {
                log->step_losses.push_back(result.loss);
            }
            ++step;
        }
    }
    return params;
}

}  // namespace embkit::distill
