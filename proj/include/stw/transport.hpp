#pragma once

#include "stw/geodesic.hpp"

#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace stw {

struct Tangent {
    Vec base;
    Vec comp;  // contravariant components
};

/// Linear map T_x -> T_y by parallel transport along a stored geodesic,
/// columns indexed by the coordinate basis at x (mixed-index P^mu_alpha).
struct Propagator {
    Mat matrix;
    uint64_t geodesic_hash = 0;
};

inline uint64_t geodesic_hash(const Geodesic& g) {
    uint64_t h = fnv1a(g.chart->name.data(), g.chart->name.size());
    for (const auto& nd : g.nodes) {
        h = fnv1a(&nd.s, sizeof(double), h);
        h = fnv1a(nd.x.data(), sizeof(double) * static_cast<size_t>(nd.x.size()), h);
        h = fnv1a(nd.v.data(), sizeof(double) * static_cast<size_t>(nd.v.size()), h);
    }
    return h;
}

namespace detail {

/// Integrates the transport system X' = -Γ(x(s))(x'(s), X) for ncol column
/// vectors stacked in a d x ncol matrix, over [s_from, s_to] of the geodesic.
inline Mat transport_columns(const Geodesic& geo, const Mat& cols, double s_from, double s_to,
                             double rtol = 1e-11, double atol = 1e-13) {
    const Chart& chart = *geo.chart;
    const int d = chart.dim;
    const int nc = static_cast<int>(cols.cols());

    auto rhs = [&](double s, const State& y, State& dy) {
        Vec x(d), v(d);
        geo.eval(s, &x, &v);
        Christoffels G = christoffel_unchecked(chart, x);
        for (int c = 0; c < nc; ++c) {
            for (int al = 0; al < d; ++al) {
                double acc = 0.0;
                for (int b = 0; b < d; ++b)
                    for (int m = 0; m < d; ++m)
                        acc += G(al, b, m) * v[b] * y[c * d + m];
                dy[c * d + al] = -acc;
            }
        }
    };

    State y0(d * nc);
    for (int c = 0; c < nc; ++c)
        for (int i = 0; i < d; ++i) y0[c * d + i] = cols(i, c);

    State yend = y0;
    auto accept = [&](double, const State& y, const State&) {
        yend = y;
        return true;
    };
    dp45_integrate(rhs, s_from, s_to, y0, rtol, atol, (s_to - s_from) / 64.0, accept);

    Mat out(d, nc);
    for (int c = 0; c < nc; ++c)
        for (int i = 0; i < d; ++i) out(i, c) = yend[c * d + i];
    return out;
}

}  // namespace detail

/// Parallel transport of X from γ(s_from) to γ(s_to) (defaults: whole path).
inline Tangent transport_vector(const Geodesic& geo, const Tangent& X, double s_from = -1.0,
                                double s_to = -1.0) {
    if (s_from < 0) s_from = geo.s0();
    if (s_to < 0) s_to = geo.s1();
    Vec base_expect(geo.chart->dim), dummy;
    geo.eval(s_from, &base_expect, nullptr);
    if ((X.base - base_expect).norm() > 1e-9 * (1.0 + base_expect.norm()))
        throw MismatchedBaseError("transport_vector: vector not based at γ(s_from)");
    Mat cols(geo.chart->dim, 1);
    cols.col(0) = X.comp;
    Mat out = detail::transport_columns(geo, cols, s_from, s_to);
    Vec end(geo.chart->dim);
    geo.eval(s_to, &end, nullptr);
    return Tangent{end, Vec(out.col(0))};
}

inline Propagator propagator(const Geodesic& geo) {
    const int d = geo.chart->dim;
    Propagator P;
    P.matrix = detail::transport_columns(geo, Mat::Identity(d, d), geo.s0(), geo.s1());
    P.geodesic_hash = geodesic_hash(geo);
    return P;
}

/// Deterministic values make cache races benign; last writer wins.
inline Propagator propagator_cached(const Geodesic& geo) {
    static std::unordered_map<uint64_t, Mat> cache;
    static std::shared_mutex mtx;
    uint64_t h = geodesic_hash(geo);
    {
        std::shared_lock lk(mtx);
        auto it = cache.find(h);
        if (it != cache.end()) return Propagator{it->second, h};
    }
    Propagator P = propagator(geo);
    std::unique_lock lk(mtx);
    cache[h] = P.matrix;
    return P;
}

/// max |g(y)(PX,PY) - g(x)(X,Y)| over sampled vector pairs: the transport
/// isometry defect.
inline double isometry_residual(const Geodesic& geo, const Propagator& P, Rng& rng,
                                int trials = 20) {
    const Chart& chart = *geo.chart;
    const int d = chart.dim;
    Mat gx = chart.metric(geo.x0());
    Mat gy = chart.metric(geo.x1());
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        Vec X(d), Y(d);
        for (int i = 0; i < d; ++i) {
            X[i] = rng.uniform(-1.0, 1.0);
            Y[i] = rng.uniform(-1.0, 1.0);
        }
        Vec PX = P.matrix * X, PY = P.matrix * Y;
        double lhs = PX.dot(gy * PY);
        double rhs = X.dot(gx * Y);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace stw
