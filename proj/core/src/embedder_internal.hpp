#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "embkit/embedder.hpp"

// Forward pieces shared by the contrastive and distillation losses.
namespace embkit::embed::detail {

struct Encoded {
    std::vector<std::uint32_t> rows;  // token rows, repeats kept
    std::vector<double> unit;         // normalized mean
    double norm = 0.0;                // norm of the mean before normalization
};

Encoded encode_rows(const EmbedderParams& params, std::vector<std::uint32_t> rows);
Encoded encode_text(const EmbedderParams& params, std::string_view text, Role role);

/// Adds d(loss)/d(table) given d(loss)/d(unit embedding).
void backprop(const Encoded& enc, std::span<const double> grad_unit, std::span<double> grad_table,
              std::size_t dim);

void apply_gradient(EmbedderParams& params, std::span<const double> gradient, double learning_rate);

/// Per epoch, the deduplicated task-homogeneous batches to train on.
std::vector<std::vector<std::vector<TrainTriplet>>> plan_epochs(std::span<const TrainTriplet> triplets,
                                                                const TrainingConfig& cfg);

}  // namespace embkit::embed::detail
