#pragma once

// Okapi BM25 recomputed from raw token lists: counts every statistic by a
// full scan instead of reading the inverted index.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct TokenDoc {
    std::string id;
    std::vector<std::string> tokens;
};

inline double naive_bm25(const std::vector<TokenDoc>& docs, const std::vector<std::string>& query,
                         std::size_t target, double k1 = 1.2, double b = 0.75) {
    const double n = static_cast<double>(docs.size());
    double total_len = 0.0;
    for (const auto& d : docs) total_len += static_cast<double>(d.tokens.size());
    const double avgdl = total_len / n;
    const double dl = static_cast<double>(docs[target].tokens.size());

    double score = 0.0;
    for (const auto& term : query) {
        double df = 0.0;
        for (const auto& d : docs) {
            if (std::find(d.tokens.begin(), d.tokens.end(), term) != d.tokens.end()) df += 1.0;
        }
        const double tf = static_cast<double>(std::count(docs[target].tokens.begin(), docs[target].tokens.end(), term));
        if (tf == 0.0) continue;
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
    return score;
}

/// (doc id, score) for every doc with a positive score, best first, ties by id.
inline std::vector<std::pair<std::string, double>> naive_rank(const std::vector<TokenDoc>& docs,
                                                              const std::vector<std::string>& query) {
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const double s = naive_bm25(docs, query, i);
        if (s > 0.0) out.emplace_back(docs[i].id, s);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

}  // namespace oracle
