#pragma once

#include "stw/chart.hpp"

#include <vector>

namespace stw_test {

/// Comfortable interior sampling boxes per chart family, well clear of the
/// coordinate-singular edges so stencils and geodesics stay in-domain.
inline std::vector<stw::Interval> sample_box(const stw::Chart& chart) {
    const std::string& n = chart.name;
    auto starts_with = [&](const char* p) { return n.rfind(p, 0) == 0; };
    if (starts_with("minkowski"))
        return std::vector<stw::Interval>(static_cast<size_t>(chart.dim), {-5.0, 5.0});
    if (starts_with("sphere2"))
        return {{0.35, M_PI - 0.35}, {0.1, 2.0 * M_PI - 0.1}};
    if (starts_with("schwarzschild"))
        return {{-3.0, 3.0}, {3.0, 9.0}, {0.9, M_PI - 0.9}, {0.1, 2.0 * M_PI - 0.1}};
    if (starts_with("desitter2")) return {{-3.0, 3.0}, {0.1, 0.8}};
    if (starts_with("desitter"))
        return {{-3.0, 3.0}, {0.1, 0.75}, {0.9, M_PI - 0.9}, {0.1, 2.0 * M_PI - 0.1}};
    return chart.domain;
}

inline stw::Vec random_point(const stw::Chart& chart, stw::Rng& rng) {
    auto box = sample_box(chart);
    stw::Vec x(chart.dim);
    for (int i = 0; i < chart.dim; ++i)
        x[i] = rng.uniform(box[static_cast<size_t>(i)].lo, box[static_cast<size_t>(i)].hi);
    return x;
}

inline stw::Vec random_direction(int dim, stw::Rng& rng) {
    stw::Vec v(dim);
    for (;;) {
        for (int i = 0; i < dim; ++i) v[i] = rng.normal();
        double n = v.norm();
        if (n > 1e-8) return stw::Vec(v / n);
    }
}

inline stw::Vec vec(std::initializer_list<double> xs) {
    stw::Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace stw_test
