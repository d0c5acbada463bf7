#pragma once

// Improved contrastive loss evaluated straight from its definition with plain
// exponentials, given already-encoded unit vectors.

#include <cmath>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double dotp(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double improved_contrastive(const std::vector<Vec>& q, const std::vector<Vec>& p,
                                   const std::vector<std::vector<Vec>>& negs, double tau) {
    const std::size_t n = q.size();
    auto e = [tau](const Vec& a, const Vec& b) { return std::exp(dotp(a, b) / tau); };
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += e(q[i], p[j]);
        for (std::size_t j = 0; j < n; ++j) if (j != i) z += e(q[i], q[j]);
        for (std::size_t j = 0; j < n; ++j) z += e(q[j], p[i]);
        for (std::size_t j = 0; j < n; ++j) if (j != i) z += e(p[i], p[j]);
        for (const auto& neg : negs[i]) z += e(q[i], neg);
        loss += -std::log(e(q[i], p[i]) / z);
    }
    return loss / static_cast<double>(n);
}

}  // namespace oracle
