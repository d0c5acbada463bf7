#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "embkit/corpus.hpp"
#include "embkit/distill.hpp"
#include "embkit/embedder.hpp"
#include "embkit/error.hpp"
#include "embkit/evalx.hpp"
#include "embkit/lexical_index.hpp"
#include "embkit/mining.hpp"
#include "embkit/reranker.hpp"

// File-level entry points shared by the command line tool and the pipeline
// runner. Each takes already-resolved paths and parsed settings.
namespace embkit::cli {

namespace fs = std::filesystem;

enum class Schema { TextRecord, Triplet, Query, Run, Qrels };
Schema parse_schema(std::string_view name);
std::string_view to_string(Schema schema);

/// Settings that come from the JSON config files (mining.json, train.json,
/// rerank.json). Unknown keys are rejected.
mining::MiningConfig parse_mining_config(std::string_view json_text);

struct EmbedderSettings {
    embed::TrainingConfig training;
    std::size_t dim = 64;
    double tau = 0.01;
    double init_scale = 1.0;
    std::optional<distill::DatasetRegistry> registry;
};
EmbedderSettings parse_embedder_settings(std::string_view json_text);

struct RerankSettings {
    rerank::StageConfig stage1 = rerank::StageConfig::first_stage();
    rerank::StageConfig stage2 = rerank::StageConfig::second_stage();
};
RerankSettings parse_rerank_settings(std::string_view json_text);

distill::DatasetRegistry parse_registry(std::string_view json_text);

struct NormalizeArgs {
    fs::path input;
    fs::path output;
    Schema schema = Schema::TextRecord;
};
void normalize_file(const NormalizeArgs& args);

struct BuildIndexArgs {
    fs::path input;
    fs::path output;
    lexical::Bm25Params params;
};
void build_index_file(const BuildIndexArgs& args);

struct MineArgs {
    fs::path index;
    std::optional<fs::path> dense_model;
    fs::path queries;
    mining::MiningConfig config;
    fs::path out;
};
struct MineSummary {
    std::size_t queries = 0;
    std::size_t written = 0;
    std::size_t skipped_without_positive = 0;
};
MineSummary mine_file(const MineArgs& args);

struct TrainEmbedArgs {
    fs::path data;
    EmbedderSettings settings;
    std::optional<fs::path> init_model;
    fs::path out;
};
embed::TrainLog train_embed_file(const TrainEmbedArgs& args);

struct TrainRerankArgs {
    fs::path stage1;
    fs::path stage2;
    std::optional<fs::path> index;
    std::optional<fs::path> embedder;
    RerankSettings settings;
    fs::path out;
};
void train_rerank_file(const TrainRerankArgs& args);

/// Pairs mode reads {"query","doc"} rows and writes them back with "score".
/// Triplet mode attaches teacher_scores to each triplet.
struct ScoreArgs {
    fs::path model;
    std::optional<fs::path> pairs;
    std::optional<fs::path> triplets;
    std::optional<fs::path> index;
    std::optional<fs::path> embedder;
    fs::path out;
};
void score_file(const ScoreArgs& args);

enum class FilterMode { Threshold, BottomPercentile };
struct FilterArgs {
    fs::path input;
    fs::path output;
    FilterMode mode = FilterMode::Threshold;
    corpus::FilterConfig config;
};
struct FilterSummary {
    std::size_t input = 0;
    std::size_t kept = 0;
};
FilterSummary filter_file(const FilterArgs& args);

struct DistillTrainArgs {
    std::vector<fs::path> data;  // concatenated in order
    std::string teacher_tag;
    fs::path embedder;
    EmbedderSettings settings;
    fs::path out;
};
embed::TrainLog distill_train_file(const DistillTrainArgs& args);

enum class RetrieveMode { Bm25, Dense, Hybrid };
struct RetrieveArgs {
    fs::path index;
    std::optional<fs::path> embedder;
    fs::path queries;
    RetrieveMode mode = RetrieveMode::Bm25;
    std::size_t k = 100;
    double rrf_k = 60.0;
    fs::path out;
};
void retrieve_file(const RetrieveArgs& args);

struct EvalArgs {
    fs::path run;
    fs::path qrels;
    std::vector<evalx::MetricSpec> metrics;
    std::optional<fs::path> out;
};
evalx::EvalReport eval_files(const EvalArgs& args);

struct ValidationReport {
    std::size_t rows = 0;
    std::vector<std::pair<std::size_t, std::string>> failures;  // (line, message)

    std::string to_text() const;
};
/// Throws IoError when the file cannot be read.
ValidationReport validate_data(const fs::path& path, Schema schema);

}  // namespace embkit::cli
