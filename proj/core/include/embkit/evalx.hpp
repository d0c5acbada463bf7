#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embkit/records.hpp"

namespace embkit::evalx {

/// doc id -> relevance grade (>= 0)
using Judgments = std::map<std::string, int, std::less<>>;
/// query id -> judgments
using QRels = std::map<std::string, Judgments, std::less<>>;

/// Exponential gain (2^rel - 1) with log2(i + 1) discount, divided by the
/// DCG of the grades sorted descending.
double ndcg_at_k(std::span<const std::string> ranking, const Judgments& rels, std::size_t k);

/// Sum of precision@i over relevant hits i <= k, divided by min(R, k).
double map_at_k(std::span<const std::string> ranking, const Judgments& rels, std::size_t k);

double recall_at_k(std::span<const std::string> ranking, const Judgments& rels, std::size_t k);

struct MetricSpec {
    enum class Kind { Ndcg, Map, Recall };
    Kind kind = Kind::Ndcg;
    std::size_t k = 10;

    /// "ndcg@10", "map@10", "recall@30"
    static MetricSpec parse(std::string_view text);
    static std::vector<MetricSpec> parse_list(std::string_view comma_separated);
    std::string name() const;
    double compute(std::span<const std::string> ranking, const Judgments& rels) const;
};

struct QueryMetrics {
    std::string query_id;
    std::vector<double> values;  // aligned with EvalReport::metrics
};

struct EvalReport {
    std::vector<MetricSpec> metrics;
    std::vector<QueryMetrics> per_query;  // ascending query id
    std::vector<double> mean;

    std::string to_json() const;
};

using Run = std::map<std::string, RankedList, std::less<>>;

/// Per-query metrics for every query in qrels plus macro averages. Queries
/// missing from the run score 0. Throws InvalidArgument for a run query
/// that has no judgments or a judged query without relevant documents.
EvalReport evaluate_run(const Run& run, const QRels& qrels, std::span<const MetricSpec> metrics);

/// TSV: query_id<TAB>doc_id<TAB>grade
QRels load_qrels(const std::filesystem::path& path);
QRels parse_qrels(std::string_view tsv);
void save_qrels(const std::filesystem::path& path, const QRels& qrels);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side is constant.
double spearman_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace embkit::evalx
