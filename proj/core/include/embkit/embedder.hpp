#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "embkit/records.hpp"

namespace embkit::embed {

enum class Role { Query, Passage };

inline constexpr std::string_view kQueryPrefix = "クエリ: ";
inline constexpr std::string_view kPassagePrefix = "文章: ";

std::string_view prefix_for(Role role);

/// Token-embedding table of a mean-pooling dual encoder.
class EmbedderParams {
  public:
    EmbedderParams() = default;

    /// Rows drawn uniformly from [-init_scale, init_scale]. Duplicate vocab
    /// entries are rejected.
    static EmbedderParams create(std::vector<std::string> vocab, std::size_t dim, double tau,
                                 std::uint64_t seed, double init_scale = 1.0);

    std::size_t dim() const { return dim_; }
    double tau() const { return tau_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    const std::vector<std::string>& vocab() const { return vocab_; }
    std::optional<std::uint32_t> token_row(std::string_view token) const;

    std::span<const double> row(std::size_t r) const { return {table_.data() + r * dim_, dim_}; }
    std::span<double> row(std::size_t r) { return {table_.data() + r * dim_, dim_}; }
    std::span<const double> table() const { return table_; }
    std::span<double> table() { return table_; }

    /// Free-form provenance written into the model file.
    const std::string& label() const { return label_; }
    void set_label(std::string label) { label_ = std::move(label); }

    void validate() const;

    void save(const std::filesystem::path& path) const;
    static EmbedderParams load(const std::filesystem::path& path);

    bool operator==(const EmbedderParams& other) const {
        return dim_ == other.dim_ && tau_ == other.tau_ && vocab_ == other.vocab_ &&
               table_ == other.table_ && label_ == other.label_;
    }

  private:
    std::size_t dim_ = 0;
    double tau_ = 0.01;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, std::uint32_t> rows_;
    std::vector<double> table_;
    std::string label_;
};

/// Sorted token inventory of every text in `triplets` plus both prefixes.
std::vector<std::string> build_vocabulary(std::span<const TrainTriplet> triplets);
std::vector<std::string> build_vocabulary(std::span<const std::string> texts);

/// Row indices of the in-vocabulary tokens of prefix + text, in order
/// (repeats kept). Unknown tokens are skipped. Empty when no token of the
/// text itself is known; the prefix alone does not make a text encodable.
std::vector<std::uint32_t> token_rows(const EmbedderParams& params, std::string_view text, Role role);
std::vector<std::uint32_t> token_rows(const EmbedderParams& params,
                                      std::span<const std::string> text_tokens, Role role);

/// Unit-norm mean of the token rows of prefix + text. Throws InvalidArgument
/// for empty text or when no token of the text is in the vocabulary.
std::vector<double> encode(const EmbedderParams& params, std::string_view text, Role role);
std::vector<double> encode_tokens(const EmbedderParams& params, std::span<const std::string> text_tokens,
                                  Role role);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Loss value plus a dense gradient laid out like the embedding table.
struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Temperature-scaled similarity blocks of one batch, with s(a,b) = cos/tau.
/// qp(i,j) = s(q_i,p_j), qq(i,j) = s(q_i,q_j), pp(i,j) = s(p_i,p_j),
/// qn[i][k] = s(q_i, n_ik). pq is read as qp transposed.
struct ContrastiveScores {
    std::size_t batch = 0;
    std::vector<double> qp;
    std::vector<double> qq;
    std::vector<double> pp;
    std::vector<std::vector<double>> qn;

    double& at(std::vector<double>& m, std::size_t i, std::size_t j) const { return m[i * batch + j]; }
    double at(const std::vector<double>& m, std::size_t i, std::size_t j) const { return m[i * batch + j]; }
};

/// Mean over i of -log(e^{s(q_i,p_i)} / Z_i) where Z_i sums
/// s(q_i,p_j) over all j, s(q_i,q_j) over j != i, s(q_j,p_i) over all j,
/// s(p_i,p_j) over j != i and s(q_i,n) over the item's negatives.
double contrastive_loss_from_scores(const ContrastiveScores& scores);

/// Improved contrastive loss with exact gradients w.r.t. the table.
/// Throws InvalidArgument when a text repeats across items of the batch.
LossAndGradient improved_contrastive_loss(const EmbedderParams& params,
                                          std::span<const TrainTriplet> batch);

struct TrainingConfig {
    double learning_rate = 1e-4;
    double warmup_ratio = 0.10;
    std::size_t batch_size = 32;
    std::size_t epochs = 1;
    std::size_t hard_negatives = 1;
    std::uint64_t seed = 0;
    /// Adds, next to each triplet, a copy whose positive has its sentences
    /// shuffled (only when the positive has more than one sentence).
    bool augment_shuffled_positives = false;

    void validate() const;
};

struct TrainLog {
    std::vector<double> step_losses;
};

/// Peak learning rate scaled by linear warmup over the first
/// ceil(warmup_ratio * total) steps, then linear decay to zero.
double scheduled_learning_rate(double peak, std::size_t step, std::size_t total_steps,
                               double warmup_ratio);

/// Gradient descent over task-homogeneous, deduplicated batches.
/// Throws InvalidArgument for an empty triplet list.
EmbedderParams train_embedder(EmbedderParams params, std::span<const TrainTriplet> triplets,
                              const TrainingConfig& cfg, TrainLog* log = nullptr);

}  // namespace embkit::embed
