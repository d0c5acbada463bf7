#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdRelTol = 1e-4;
inline constexpr double kFdAbsFloor = 1e-8;

/// Central differences of f with respect to every entry of x.
inline std::vector<double> central_differences(std::span<double> x, const std::function<double()>& f,
                                               double h = kFdStep) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = f();
        x[i] = saved - h;
        const double down = f();
        x[i] = saved;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

struct GradientCheck {
    bool ok = true;
    double worst_rel = 0.0;
    std::size_t entries = 0;
};

/// |a - n| <= rel * max(|a|, |n|) + floor, entry by entry.
inline GradientCheck compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                       double rel = kFdRelTol, double floor = kFdAbsFloor) {
    GradientCheck out;
    out.entries = analytic.size();
    if (analytic.size() != numeric.size()) {
        out.ok = false;
        return out;
    }
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double diff = std::abs(analytic[i] - numeric[i]);
        const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
        if (diff > rel * scale + floor) out.ok = false;
        if (scale > floor) out.worst_rel = std::max(out.worst_rel, diff / scale);
    }
    return out;
}

}  // namespace oracle
