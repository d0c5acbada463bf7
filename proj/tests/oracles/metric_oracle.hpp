#pragma once

// Brute-force retrieval metrics written from the textbook definitions,
// independent of evalx. Everything is recomputed from scratch per cutoff.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Grades = std::map<std::string, int>;

inline int grade_of(const Grades& g, const std::string& doc) {
    auto it = g.find(doc);
    return it == g.end() ? 0 : it->second;
}

inline double dcg(const std::vector<int>& gains_in_order, std::size_t k) {
    double total = 0.0;
    for (std::size_t pos = 1; pos <= k && pos <= gains_in_order.size(); ++pos) {
        total += (std::pow(2.0, gains_in_order[pos - 1]) - 1.0) / std::log2(static_cast<double>(pos) + 1.0);
    }
    return total;
}

inline double ndcg(const std::vector<std::string>& ranking, const Grades& g, std::size_t k) {
    std::vector<int> got;
    for (const auto& d : ranking) got.push_back(grade_of(g, d));
    std::vector<int> ideal;
    for (const auto& [d, v] : g) ideal.push_back(v);
    std::sort(ideal.begin(), ideal.end(), [](int a, int b) { return a > b; });
    return dcg(got, k) / dcg(ideal, k);
}

inline double average_precision(const std::vector<std::string>& ranking, const Grades& g, std::size_t k) {
    std::size_t relevant = 0;
    for (const auto& [d, v] : g) relevant += v > 0 ? 1 : 0;
    double sum = 0.0;
    for (std::size_t cut = 1; cut <= std::min(k, ranking.size()); ++cut) {
        if (grade_of(g, ranking[cut - 1]) <= 0) continue;
        std::size_t hits = 0;
        for (std::size_t j = 0; j < cut; ++j) hits += grade_of(g, ranking[j]) > 0 ? 1 : 0;
        sum += static_cast<double>(hits) / static_cast<double>(cut);
    }
    return sum / static_cast<double>(std::min(relevant, k));
}

inline double recall(const std::vector<std::string>& ranking, const Grades& g, std::size_t k) {
    std::size_t relevant = 0, found = 0;
    for (const auto& [d, v] : g) {
        if (v <= 0) continue;
        ++relevant;
        const auto end = ranking.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranking.size()));
        if (std::find(ranking.begin(), end, d) != end) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(relevant);
}

}  // namespace oracle
