#pragma once

#include "stw/chart.hpp"

#include <algorithm>

namespace stw {

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with FSAL and PI-free step control

namespace detail {

struct DP45Tableau {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
    // b - b* (error weights)
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

/// One adaptive DP45 integration. `accept` is called after every accepted
/// step with (s, y, f(y)); returning false stops the run (used for domain
/// exits). Throws StepFailureError when the step size underflows.
template <typename Rhs, typename Accept>
void dp45_integrate(const Rhs& rhs, double s0, double s1, const State& y0, double rtol,
                    double atol, double h_max, const Accept& accept) {
    using T = DP45Tableau;
    const double span = s1 - s0;
    if (span <= 0.0) throw StepFailureError("dp45: empty integration span");
    const double h_min = span * 1e-13;
    const int n = static_cast<int>(y0.size());

    State y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), yerr(n);
    rhs(s0, y, k1);
    if (!accept(s0, y, k1)) return;

    double s = s0;
    double h = std::min(h_max, span / 64.0);
    long guard = 0;
    while (s < s1 - 1e-14 * span) {
        if (++guard > 2000000) throw StepFailureError("dp45: step count blew up");
        h = std::min(h, s1 - s);
        ytmp = y + h * T::a21 * k1;
        rhs(s + T::c2 * h, ytmp, k2);
        ytmp = y + h * (T::a31 * k1 + T::a32 * k2);
        rhs(s + T::c3 * h, ytmp, k3);
        ytmp = y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3);
        rhs(s + T::c4 * h, ytmp, k4);
        ytmp = y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4);
        rhs(s + T::c5 * h, ytmp, k5);
        ytmp = y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5);
        rhs(s + h, ytmp, k6);
        ynew = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
        rhs(s + h, ynew, k7);  // FSAL
        yerr = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(yerr[i]) / sc);
        }
        if (err <= 1.0) {
            s += h;
            y = ynew;
            k1 = k7;
            if (!accept(s, y, k1)) return;
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(fac, 0.2, 5.0);
        h = std::min(h, h_max);
        if (h < h_min) throw StepFailureError("dp45: step size underflow");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Geodesics

struct GeodesicNode {
    double s;
    Vec x;
    Vec v;
    Vec a;  // dv/ds at the node, kept for Hermite interpolation of v
};

/// A discretized affinely parametrized geodesic. Nodes are the accepted
/// integrator steps; between nodes the path is cubic Hermite in both x and v.
struct Geodesic {
    ChartPtr chart;
    std::vector<GeodesicNode> nodes;
    bool left_domain = false;
    int seed_index = -1;  // multistart lattice index that produced this path

    double s0() const { return nodes.front().s; }
    double s1() const { return nodes.back().s; }
    const Vec& x0() const { return nodes.front().x; }
    const Vec& v0() const { return nodes.front().v; }
    const Vec& x1() const { return nodes.back().x; }
    const Vec& v1() const { return nodes.back().v; }

    void eval(double s, Vec* x_out, Vec* v_out) const {
        const auto& ns = nodes;
        if (s <= ns.front().s) {
            if (x_out) *x_out = ns.front().x;
            if (v_out) *v_out = ns.front().v;
            return;
        }
        if (s >= ns.back().s) {
            if (x_out) *x_out = ns.back().x;
            if (v_out) *v_out = ns.back().v;
            return;
        }
        size_t hi = static_cast<size_t>(
            std::upper_bound(ns.begin(), ns.end(), s,
                             [](double val, const GeodesicNode& nd) { return val < nd.s; }) -
            ns.begin());
        const GeodesicNode& n0 = ns[hi - 1];
        const GeodesicNode& n1 = ns[hi];
        double h = n1.s - n0.s;
        double t = (s - n0.s) / h;
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        if (x_out) *x_out = h00 * n0.x + (h10 * h) * n0.v + h01 * n1.x + (h11 * h) * n1.v;
        if (v_out) *v_out = h00 * n0.v + (h10 * h) * n0.a + h01 * n1.v + (h11 * h) * n1.a;
    }

    /// g(v,v) is conserved along an affine geodesic; evaluated at the start.
    double affine_norm() const { return v0().dot(chart->metric(x0()) * v0()); }

    /// Metric arc length sqrt(|g(v,v)|) * span.
    double metric_length() const {
        return std::sqrt(std::abs(affine_norm())) * (s1() - s0());
    }
};

inline Vec geodesic_accel(const Chart& chart, const Vec& x, const Vec& v) {
    Christoffels G = detail::christoffel_unchecked(chart, x);
    const int d = chart.dim;
    Vec a = Vec::Zero(d);
    for (int al = 0; al < d; ++al) {
        double s = 0.0;
        for (int b = 0; b < d; ++b)
            for (int m = 0; m < d; ++m) s += G(al, b, m) * v[b] * v[m];
        a[al] = -s;
    }
    return a;
}

/// Integrates x'' = -Γ(x)(x',x') from (x, v) over [0, s_end]. If the path
/// exits the chart box the partial path is returned with left_domain set.
inline Geodesic integrate_geodesic(ChartPtr chart, const Vec& x, const Vec& v, double s_end,
                                   int steps = 128, double rtol = 1e-11, double atol = 1e-12) {
    require_in_domain(*chart, x, "integrate_geodesic");
    steps = std::max(steps, 16);
    const int d = chart->dim;

    auto rhs = [&](double, const State& y, State& dy) {
        Vec xx = y.head(d), vv = y.tail(d);
        dy.head(d) = vv;
        dy.tail(d) = geodesic_accel(*chart, xx, vv);
    };

    Geodesic geo;
    geo.chart = chart;
    State y0(2 * d);
    y0.head(d) = x;
    y0.tail(d) = v;

    bool exited = false;
    auto accept = [&](double s, const State& y, const State& f) {
        Vec xx = y.head(d);
        if (!chart->in_domain(xx)) {
            exited = true;
            return false;
        }
        geo.nodes.push_back(GeodesicNode{s, xx, Vec(y.tail(d)), Vec(f.tail(d))});
        return true;
    };

    // the RHS itself must stay evaluable slightly outside accepted nodes;
    // metric closures are total functions, so only node acceptance filters.
    detail::dp45_integrate(rhs, 0.0, s_end, y0, rtol, atol, s_end / std::max(16, steps), accept);
    geo.left_domain = exited;
    return geo;
}

/// Reversal reuses the stored nodes: s -> s_end - s, v -> -v.
inline Geodesic reverse_geodesic(const Geodesic& g) {
    Geodesic r;
    r.chart = g.chart;
    r.left_domain = g.left_domain;
    r.seed_index = g.seed_index;
    double send = g.s1();
    r.nodes.reserve(g.nodes.size());
    for (auto it = g.nodes.rbegin(); it != g.nodes.rend(); ++it)
        r.nodes.push_back(GeodesicNode{send - it->s, it->x, Vec(-it->v), it->a});
    return r;
}

/// Max |g(v,v) - g(v,v)|_0 over nodes: affine-parametrization drift.
inline double affine_norm_drift(const Geodesic& g) {
    double q0 = g.nodes.front().v.dot(g.chart->metric(g.nodes.front().x) * g.nodes.front().v);
    double worst = 0.0;
    for (const auto& nd : g.nodes) {
        double q = nd.v.dot(g.chart->metric(nd.x) * nd.v);
        worst = std::max(worst, std::abs(q - q0));
    }
    return worst;
}

/// Geodesic-equation residual |v' + Γ(v,v)| at interior nodes, with v'
/// from a 5-point Lagrange derivative of the stored velocities.
inline double geodesic_equation_residual(const Geodesic& g) {
    const auto& ns = g.nodes;
    if (ns.size() < 5) return 0.0;
    const int d = g.chart->dim;
    double worst = 0.0;
    for (size_t i = 2; i + 2 < ns.size(); ++i) {
        double si = ns[i].s;
        double w[5];
        for (int j = 0; j < 5; ++j) {
            double sj = ns[i - 2 + static_cast<size_t>(j)].s;
            double num = 0.0, den = 1.0;
            for (int m = 0; m < 5; ++m) {
                double sm = ns[i - 2 + static_cast<size_t>(m)].s;
                if (m == j) continue;
                den *= sj - sm;
                double prod = 1.0;
                for (int k = 0; k < 5; ++k) {
                    if (k == j || k == m) continue;
                    prod *= si - ns[i - 2 + static_cast<size_t>(k)].s;
                }
                num += prod;
            }
            w[j] = num / den;
        }
        Vec vp = Vec::Zero(d);
        for (int j = 0; j < 5; ++j) vp += w[j] * ns[i - 2 + static_cast<size_t>(j)].v;
        Vec res = vp - ns[i].a;  // a already equals -Γ(v,v) at the node
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Two-point connection problem

struct SearchConfig {
    int directions = 0;            // 0 = auto: 64 (d = 2) / 256 (d = 4)
    std::vector<double> magnitudes;  // velocity magnitudes; empty = auto
    int max_distinct = 16;         // beyond this the pair counts as exceptional
    double endpoint_tol = 1e-9;
    double dedup_tol = 1e-4;
    int newton_max_iter = 30;
    int coarse_steps = 48;
    int refine_candidates = 24;
    double rtol = 1e-11;
    double atol = 1e-12;
    double coord_speed_cap = 6.0;  // × coordinate distance, Lorentzian charts
    uint64_t lattice_seed = 0x51AB1E;
};

struct GeodesicBundle {
    Vec x, y;
    std::vector<Geodesic> geodesics;
    int n = 0;
};

namespace detail {

/// Fixed-step RK4 endpoint only; returns false if the path leaves the chart.
inline bool rk4_endpoint(const Chart& chart, const Vec& x, const Vec& v, int steps, Vec* out) {
    const int d = chart.dim;
    State y(2 * d);
    y.head(d) = x;
    y.tail(d) = v;
    auto f = [&](const State& s, State& ds) {
        Vec xx = s.head(d), vv = s.tail(d);
        ds.head(d) = vv;
        ds.tail(d) = geodesic_accel(chart, xx, vv);
    };
    double h = 1.0 / steps;
    State k1(2 * d), k2(2 * d), k3(2 * d), k4(2 * d), tmp(2 * d);
    for (int i = 0; i < steps; ++i) {
        f(y, k1);
        tmp = y + 0.5 * h * k1;
        f(tmp, k2);
        tmp = y + 0.5 * h * k2;
        f(tmp, k3);
        tmp = y + h * k3;
        f(tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!chart.in_domain(Vec(y.head(d)))) return false;
    }
    *out = y.head(d);
    return true;
}

/// Adaptive endpoint for the Newton iteration. Returns false on domain exit.
inline bool shoot_endpoint(ChartPtr chart, const Vec& x, const Vec& v, double rtol, double atol,
                           Vec* out) {
    const int d = chart->dim;
    auto rhs = [&](double, const State& y, State& dy) {
        Vec xx = y.head(d), vv = y.tail(d);
        dy.head(d) = vv;
        dy.tail(d) = geodesic_accel(*chart, xx, vv);
    };
    State y0(2 * d);
    y0.head(d) = x;
    y0.tail(d) = v;
    bool ok = true;
    Vec last = x;
    auto accept = [&](double, const State& y, const State&) {
        Vec xx = y.head(d);
        if (!chart->in_domain(xx)) {
            ok = false;
            return false;
        }
        last = xx;
        return true;
    };
    try {
        dp45_integrate(rhs, 0.0, 1.0, y0, rtol, atol, 1.0 / 16.0, accept);
    } catch (const StepFailureError&) {
        return false;
    }
    if (!ok) return false;
    *out = last;
    return true;
}

inline std::vector<Vec> direction_lattice(int dim, int count, uint64_t seed) {
    std::vector<Vec> dirs;
    dirs.reserve(static_cast<size_t>(count));
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            double a = 2.0 * M_PI * i / count;
            Vec u(2);
            u[0] = std::cos(a);
            u[1] = std::sin(a);
            dirs.push_back(u);
        }
        return dirs;
    }
    Rng rng(seed);
    while (static_cast<int>(dirs.size()) < count) {
        Vec u(dim);
        for (int i = 0; i < dim; ++i) u[i] = rng.normal();
        double n = u.norm();
        if (n < 1e-6) continue;
        dirs.push_back(Vec(u / n));
    }
    return dirs;
}

}  // namespace detail

/// Finds the distinct geodesics from x to y with γ(0) = x, γ(1) = y
/// (affine parameter normalized to [0,1]). Multistart shooting over a
/// deterministic velocity lattice, refined by damped Newton on the endpoint
/// mismatch. Throws ExceptionalPairError when nothing connects or the
/// distinct count exceeds the cap.
inline GeodesicBundle connect(ChartPtr chart, const Vec& x, const Vec& y,
                              const SearchConfig& cfg = {}) {
    require_in_domain(*chart, x, "connect");
    require_in_domain(*chart, y, "connect");
    const int d = chart->dim;
    Vec delta = wrapped_delta(y, x, chart->period);
    double dist = delta.norm();
    if (dist < 1e-12)
        throw ExceptionalPairError("connect: coincident points have no two-point problem");

    const double metric_cap = chart->geodesic_length_cap;
    const double euclid_cap =
        metric_cap > 0 ? 0.0 : cfg.coord_speed_cap * std::max(dist, 1e-3 * chart->domain_scale());

    // --- seed velocities ----------------------------------------------------
    int ndir = cfg.directions > 0 ? cfg.directions : (d == 2 ? 64 : 256);
    std::vector<Vec> seeds;
    seeds.push_back(delta);  // straight-chart-line seed, index 0
    auto dirs = detail::direction_lattice(d, ndir, cfg.lattice_seed);
    Mat gx = chart->metric(x);
    for (const Vec& u : dirs) {
        if (!cfg.magnitudes.empty()) {
            for (double m : cfg.magnitudes) seeds.push_back(Vec(m * u));
        } else if (metric_cap > 0) {
            double b = std::sqrt(std::abs(u.dot(gx * u)));
            if (b < 1e-12) continue;
            for (double frac : {0.15, 0.40, 0.65, 0.90})
                seeds.push_back(Vec((frac * metric_cap / b) * u));
        } else {
            for (double m : {0.8, 1.2, 2.0}) seeds.push_back(Vec(m * dist * u));
        }
    }

    // --- coarse sweep --------------------------------------------------------
    struct Candidate {
        double miss;
        Vec v;
        int seed_index;
    };
    std::vector<Candidate> cands;
    cands.reserve(seeds.size());
    Vec endp(d);
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (!detail::rk4_endpoint(*chart, x, seeds[i], cfg.coarse_steps, &endp)) continue;
        double miss = wrapped_delta(endp, y, chart->period).norm();
        cands.push_back(Candidate{miss, seeds[i], static_cast<int>(i)});
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.miss < b.miss; });

    // --- Newton refinement ---------------------------------------------------
    struct Solution {
        Vec v;
        double miss;
        int seed_index;
        Geodesic path;
    };
    std::vector<Solution> sols;
    std::vector<Vec> tried;

    auto endpoint_miss = [&](const Vec& v, Vec* Fout) -> bool {
        Vec e(d);
        if (!detail::shoot_endpoint(chart, x, v, cfg.rtol, cfg.atol, &e)) return false;
        *Fout = wrapped_delta(e, y, chart->period);
        return true;
    };

    int refined = 0;
    for (const Candidate& cand : cands) {
        if (static_cast<int>(sols.size()) > cfg.max_distinct) break;
        if (refined >= cfg.refine_candidates) break;
        bool near_tried = false;
        for (const Vec& t : tried)
            if ((t - cand.v).norm() < 1e-3 * (1.0 + cand.v.norm())) {
                near_tried = true;
                break;
            }
        if (near_tried) continue;
        tried.push_back(cand.v);
        ++refined;

        Vec v = cand.v, F(d);
        if (!endpoint_miss(v, &F)) continue;
        bool converged = false;
        for (int it = 0; it < cfg.newton_max_iter; ++it) {
            double fn = F.norm();
            if (fn < cfg.endpoint_tol) {
                converged = true;
                break;
            }
            Mat J(d, d);
            bool jac_ok = true;
            for (int j = 0; j < d; ++j) {
                double h = 1e-7 * (1.0 + std::abs(v[j]));
                Vec vpert = v;
                vpert[j] += h;
                Vec Fp(d);
                if (!endpoint_miss(vpert, &Fp)) {
                    jac_ok = false;
                    break;
                }
                J.col(j) = (Fp - F) / h;
            }
            if (!jac_ok) break;
            Eigen::FullPivLU<Mat> lu(J);
            if (!lu.isInvertible()) break;
            Vec step = lu.solve(Vec(-F));
            double lam = 1.0;
            bool improved = false;
            for (int bt = 0; bt < 10; ++bt) {
                Vec vtry = v + lam * step;
                Vec Ft(d);
                if (endpoint_miss(vtry, &Ft) && Ft.norm() < fn * (1.0 - 0.25 * lam)) {
                    v = vtry;
                    F = Ft;
                    improved = true;
                    break;
                }
                lam *= 0.5;
            }
            if (!improved) break;
        }
        if (!converged) continue;

        // caps: wrapped paths and runaway velocities do not count
        if (metric_cap > 0) {
            double q = v.dot(gx * v);
            if (std::sqrt(std::max(q, 0.0)) > metric_cap) continue;
        } else if (v.norm() > euclid_cap) {
            continue;
        }

        // dedup against accepted solutions by resampled path distance
        Geodesic path = integrate_geodesic(chart, x, v, 1.0, 128, cfg.rtol, cfg.atol);
        if (path.left_domain) continue;
        bool dup = false;
        Vec xa(d), xb(d);
        for (const Solution& s : sols) {
            double dmax = 0.0;
            for (int k = 0; k <= 16; ++k) {
                double sv = k / 16.0;
                path.eval(sv, &xa, nullptr);
                s.path.eval(sv, &xb, nullptr);
                dmax = std::max(dmax, wrapped_delta(xa, xb, chart->period).norm());
            }
            if (dmax < cfg.dedup_tol) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        sols.push_back(Solution{v, F.norm(), cand.seed_index, std::move(path)});
    }

    if (sols.empty())
        throw ExceptionalPairError("connect: no geodesic joins the pair after the full sweep");
    if (static_cast<int>(sols.size()) > cfg.max_distinct)
        throw ExceptionalPairError("connect: distinct-geodesic count exceeds cap, pair ruled exceptional");

    std::stable_sort(sols.begin(), sols.end(),
                     [](const Solution& a, const Solution& b) { return a.seed_index < b.seed_index; });

    GeodesicBundle bundle;
    bundle.x = x;
    bundle.y = y;
    for (Solution& s : sols) {
        s.path.seed_index = s.seed_index;
        bundle.geodesics.push_back(std::move(s.path));
    }
    bundle.n = static_cast<int>(bundle.geodesics.size());
    return bundle;
}

}  // namespace stw
