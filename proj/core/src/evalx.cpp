#include "embkit/evalx.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "embkit/error.hpp"
#include "embkit/records_io.hpp"

namespace embkit::evalx {

namespace {

void check_inputs(std::span<const std::string> ranking, const Judgments& rels, std::size_t k) {
    if (k == 0) {
        throw InvalidArgument("metric cutoff k must be >= 1");
    }
    bool any_relevant = false;
    for (const auto& [doc, grade] : rels) {
        if (grade < 0) {
            throw InvalidArgument("negative relevance grade for doc '" + doc + "'");
        }
        any_relevant = any_relevant || grade > 0;
    }
    if (!any_relevant) {
        throw InvalidArgument("judgments contain no relevant document");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& doc : ranking) {
        if (!seen.insert(doc).second) {
            throw InvalidArgument("ranking repeats doc '" + doc + "'");
        }
    }
}

int grade_of(const Judgments& rels, const std::string& doc) {
    const auto it = rels.find(doc);
    return it == rels.end() ? 0 : it->second;
}

std::size_t relevant_count(const Judgments& rels) {
    return static_cast<std::size_t>(
        std::count_if(rels.begin(), rels.end(), [](const auto& kv) { return kv.second > 0; }));
}

double gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

}  // namespace

double ndcg_at_k(std::span<const std::string> ranking, const Judgments& rels, std::size_t k) {
    check_inputs(ranking, rels, k);
    double dcg = 0.0;
    const std::size_t depth = std::min(k, ranking.size());
    for (std::size_t i = 0; i < depth; ++i) {
        dcg += gain(grade_of(rels, ranking[i])) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> ideal;
    for (const auto& [_, grade] : rels) {
        if (grade > 0) {
            ideal.push_back(grade);
        }
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += gain(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

double map_at_k(std::span<const std::string> ranking, const Judgments& rels, std::size_t k) {
    check_inputs(ranking, rels, k);
    const std::size_t depth = std::min(k, ranking.size());
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (grade_of(rels, ranking[i]) > 0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(std::min(relevant_count(rels), k));
}

double recall_at_k(std::span<const std::string> ranking, const Judgments& rels, std::size_t k) {
    check_inputs(ranking, rels, k);
    const std::size_t depth = std::min(k, ranking.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        hits += grade_of(rels, ranking[i]) > 0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(relevant_count(rels));
}

MetricSpec MetricSpec::parse(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto at = lower.find('@');
    if (at == std::string::npos) {
        throw InvalidArgument("metric '" + std::string(text) + "' must look like name@k");
    }
    const std::string name = lower.substr(0, at);
    MetricSpec spec;
    if (name == "ndcg") {
        spec.kind = Kind::Ndcg;
    } else if (name == "map") {
        spec.kind = Kind::Map;
    } else if (name == "recall") {
        spec.kind = Kind::Recall;
    } else {
        throw InvalidArgument("unknown metric '" + name + "'");
    }
    const std::string_view digits = std::string_view(lower).substr(at + 1);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), spec.k);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || spec.k == 0) {
        throw InvalidArgument("metric '" + std::string(text) + "' needs a positive integer cutoff");
    }
    return spec;
}

std::vector<MetricSpec> MetricSpec::parse_list(std::string_view comma_separated) {
    std::vector<MetricSpec> out;
    std::size_t start = 0;
    while (start <= comma_separated.size()) {
        const auto end = std::min(comma_separated.find(',', start), comma_separated.size());
        auto piece = comma_separated.substr(start, end - start);
        while (!piece.empty() && piece.front() == ' ') {
            piece.remove_prefix(1);
        }
        while (!piece.empty() && piece.back() == ' ') {
            piece.remove_suffix(1);
        }
        if (!piece.empty()) {
            out.push_back(parse(piece));
        }
        start = end + 1;
    }
    if (out.empty()) {
        throw InvalidArgument("no metrics requested");
    }
    return out;
}

std::string MetricSpec::name() const {
    const char* base = kind == Kind::Ndcg ? "ndcg" : kind == Kind::Map ? "map" : "recall";
    return std::string(base) + "@" + std::to_string(k);
}

double MetricSpec::compute(std::span<const std::string> ranking, const Judgments& rels) const {
    switch (kind) {
        case Kind::Ndcg:
            return ndcg_at_k(ranking, rels, k);
        case Kind::Map:
            return map_at_k(ranking, rels, k);
        case Kind::Recall:
            return recall_at_k(ranking, rels, k);
    }
    return 0.0;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["metrics"] = nlohmann::json::array();
    for (const auto& m : metrics) {
        j["metrics"].push_back(m.name());
    }
    j["per_query"] = nlohmann::json::array();
    for (const auto& q : per_query) {
        nlohmann::json row;
        row["query_id"] = q.query_id;
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            row[metrics[m].name()] = q.values[m];
        }
        j["per_query"].push_back(std::move(row));
    }
    j["mean"] = nlohmann::json::object();
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        j["mean"][metrics[m].name()] = mean[m];
    }
    j["queries"] = per_query.size();
    return j.dump(2);
}

EvalReport evaluate_run(const Run& run, const QRels& qrels, std::span<const MetricSpec> metrics) {
    if (metrics.empty()) {
        throw InvalidArgument("no metrics requested");
    }
    for (const auto& [query_id, _] : run) {
        if (qrels.find(query_id) == qrels.end()) {
            throw InvalidArgument("run query '" + query_id + "' has no relevance judgments");
        }
    }
    EvalReport report;
    report.metrics.assign(metrics.begin(), metrics.end());
    report.mean.assign(metrics.size(), 0.0);
    for (const auto& [query_id, rels] : qrels) {
        QueryMetrics qm{query_id, std::vector<double>(metrics.size(), 0.0)};
        const auto it = run.find(query_id);
        const std::vector<std::string> ranking = it == run.end() ? std::vector<std::string>{} : it->second.doc_ids();
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            try {
                qm.values[m] = metrics[m].compute(ranking, rels);
            } catch (const InvalidArgument& e) {
                throw InvalidArgument("query '" + query_id + "': " + e.what());
            }
            report.mean[m] += qm.values[m];
        }
        report.per_query.push_back(std::move(qm));
    }
    if (!report.per_query.empty()) {
        for (auto& m : report.mean) {
            m /= static_cast<double>(report.per_query.size());
        }
    }
    return report;
}

QRels parse_qrels(std::string_view tsv) {
    QRels qrels;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < tsv.size()) {
        auto end = tsv.find('\n', start);
        if (end == std::string_view::npos) {
            end = tsv.size();
        }
        std::string_view line = tsv.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t f = 0;
        while (true) {
            const auto tab = line.find('\t', f);
            fields.push_back(line.substr(f, tab == std::string_view::npos ? std::string_view::npos : tab - f));
            if (tab == std::string_view::npos) {
                break;
            }
            f = tab + 1;
        }
        const auto fail = [&](const std::string& why) {
            throw InvalidArgument("qrels line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 3) {
            fail("expected query_id<TAB>doc_id<TAB>grade");
        }
        int grade = 0;
        const auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), grade);
        if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size() || grade < 0) {
            fail("grade must be a non-negative integer");
        }
        if (fields[0].empty() || fields[1].empty()) {
            fail("empty query or doc id");
        }
        auto& judgments = qrels[std::string(fields[0])];
        if (!judgments.emplace(std::string(fields[1]), grade).second) {
            fail("duplicate judgment for doc '" + std::string(fields[1]) + "'");
        }
    }
    return qrels;
}

QRels load_qrels(const std::filesystem::path& path) {
    try {
        return parse_qrels(io::read_file(path));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

void save_qrels(const std::filesystem::path& path, const QRels& qrels) {
    std::ostringstream out;
    for (const auto& [query_id, judgments] : qrels) {
        for (const auto& [doc_id, grade] : judgments) {
            out << query_id << '\t' << doc_id << '\t' << grade << '\n';
        }
    }
    io::write_file(path, out.str());
}

namespace {

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) {
            ++j;
        }
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = avg;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("spearman_correlation needs equal-length inputs");
    }
    if (a.size() < 2) {
        return 0.0;
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double cov = 0.0;
    double va = 0.0;
    double vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) {
        return 0.0;
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace embkit::evalx
