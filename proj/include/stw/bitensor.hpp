#pragma once

#include "stw/transport.hpp"

namespace stw {

// ---------------------------------------------------------------------------
// Isometric embeddings (closed forms: flat charts and the 2-sphere)

/// F: M -> E with Σ_k ∂_μF^k sign_k ∂_νF^k = g_{μν}.
struct EmbeddingMap {
    ChartPtr chart;
    int ambient_dim = 0;
    std::function<Eigen::VectorXd(const Vec&)> F;
    std::vector<double> signs;
    std::function<Eigen::MatrixXd(const Vec&)> jacobian;  // ambient_dim x d
};

inline EmbeddingMap make_embedding(ChartPtr chart) {
    EmbeddingMap e;
    e.chart = chart;
    const std::string& n = chart->name;
    auto starts_with = [&](const char* p) { return n.rfind(p, 0) == 0; };

    if (starts_with("minkowski")) {
        const int d = chart->dim;
        bool scaled = n.find("_scaled") != std::string::npos;
        double fac = scaled ? 0.5 : 1.0;  // x' = 2x chart carries g = η/4
        e.ambient_dim = d;
        e.signs.assign(static_cast<size_t>(d), 1.0);
        e.signs[0] = -1.0;
        e.F = [d, fac](const Vec& x) {
            Eigen::VectorXd out(d);
            for (int i = 0; i < d; ++i) out[i] = fac * x[i];
            return out;
        };
        e.jacobian = [d, fac](const Vec&) {
            return Eigen::MatrixXd(fac * Eigen::MatrixXd::Identity(d, d));
        };
        return e;
    }
    if (starts_with("sphere2")) {
        double r = detail::parse_param(n, "r", 1.0);
        e.ambient_dim = 3;
        e.signs = {1.0, 1.0, 1.0};
        e.F = [r](const Vec& a) {
            Eigen::VectorXd p(3);
            p[0] = r * std::sin(a[0]) * std::cos(a[1]);
            p[1] = r * std::sin(a[0]) * std::sin(a[1]);
            p[2] = r * std::cos(a[0]);
            return p;
        };
        e.jacobian = [r](const Vec& a) {
            double st = std::sin(a[0]), ct = std::cos(a[0]);
            double sp = std::sin(a[1]), cp = std::cos(a[1]);
            Eigen::MatrixXd J(3, 2);
            J << r * ct * cp, -r * st * sp,  //
                r * ct * sp, r * st * cp,    //
                -r * st, 0.0;
            return J;
        };
        return e;
    }
    throw ConfigInvalidError("no closed-form embedding for chart '" + n + "'");
}

/// max |Σ_k ∂F^k s_k ∂F^k - g| at x.
inline double embedding_isometry_residual(const EmbeddingMap& e, const Vec& x) {
    Eigen::MatrixXd J = e.jacobian(x);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(e.ambient_dim, e.ambient_dim);
    for (int k = 0; k < e.ambient_dim; ++k) S(k, k) = e.signs[static_cast<size_t>(k)];
    Eigen::MatrixXd induced = J.transpose() * S * J;
    Mat g = e.chart->metric(x);
    double worst = 0.0;
    for (int i = 0; i < e.chart->dim; ++i)
        for (int j = 0; j < e.chart->dim; ++j)
            worst = std::max(worst, std::abs(induced(i, j) - g(i, j)));
    return worst;
}

// ---------------------------------------------------------------------------
// The bitensor

struct BitensorValue {
    Vec x, y;
    Mat cov;  // h_{μν}(x,y): row index lives at x, column index at y
    Mat con;  // h^{μν}(x,y) via the inverse metrics at x and y
    int n = 0;
    enum class Construction { GeodesicAverage, Embedding } tag = Construction::GeodesicAverage;
    /// max defect between the two transport halves of the average; the
    /// transport isometry makes the second half redundant, so this measures
    /// exactly that redundancy.
    double redundancy = 0.0;
};

/// Geodesic-average recipe: average over connecting geodesics of the two
/// transport pairings, cov = 1/(2n) Σ_γ [P_γ^T g(y) + g(x) Q_γ] with
/// P_γ: T_x -> T_y and Q_γ the reverse transport.
inline BitensorValue bitensor_geodesic(ChartPtr chart, const Vec& x, const Vec& y,
                                       const SearchConfig& cfg = {}) {
    const int d = chart->dim;
    BitensorValue out;
    out.x = x;
    out.y = y;
    out.tag = BitensorValue::Construction::GeodesicAverage;

    MetricValue gx = metric_at(*chart, x);
    if (wrapped_delta(y, x, chart->period).norm() < 1e-14) {
        out.cov = gx.g;
        out.con = gx.g_inv;
        out.n = 1;
        return out;
    }
    MetricValue gy = metric_at(*chart, y);

    GeodesicBundle bundle = connect(chart, x, y, cfg);
    Mat acc = Mat::Zero(d, d);
    for (const Geodesic& g : bundle.geodesics) {
        Mat P = propagator_cached(g).matrix;
        Mat Q = propagator_cached(reverse_geodesic(g)).matrix;
        Mat halfA = P.transpose() * gy.g;
        Mat halfB = gx.g * Q;
        out.redundancy = std::max(out.redundancy, (halfA - halfB).cwiseAbs().maxCoeff());
        acc += halfA + halfB;
    }
    out.cov = acc / (2.0 * bundle.n);
    out.con = gx.g_inv * out.cov * gy.g_inv;
    out.n = bundle.n;
    return out;
}

/// Embedding formula h_{μν}(x,y) = Σ_k ∂_μF^k(x) sign_k ∂_νF^k(y).
inline BitensorValue bitensor_embedding(const EmbeddingMap& emb, const Vec& x, const Vec& y) {
    require_in_domain(*emb.chart, x, "bitensor_embedding");
    require_in_domain(*emb.chart, y, "bitensor_embedding");
    const int d = emb.chart->dim;
    Eigen::MatrixXd Jx = emb.jacobian(x), Jy = emb.jacobian(y);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(emb.ambient_dim, emb.ambient_dim);
    for (int k = 0; k < emb.ambient_dim; ++k) S(k, k) = emb.signs[static_cast<size_t>(k)];
    Eigen::MatrixXd cov = Jx.transpose() * S * Jy;

    BitensorValue out;
    out.x = x;
    out.y = y;
    out.tag = BitensorValue::Construction::Embedding;
    out.cov = Mat(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out.cov(i, j) = cov(i, j);
    out.con = metric_at(*emb.chart, x).g_inv * out.cov * metric_at(*emb.chart, y).g_inv;
    out.n = 1;
    return out;
}

// ---------------------------------------------------------------------------
// Axiom validation

/// A construction bound to nothing: hand it any chart and a pair.
struct BitensorConstruction {
    std::string name;
    std::function<BitensorValue(ChartPtr, const Vec&, const Vec&)> eval;
};

inline BitensorConstruction geodesic_construction(const SearchConfig& cfg = {}) {
    return {"geodesic-average", [cfg](ChartPtr c, const Vec& x, const Vec& y) {
                return bitensor_geodesic(c, x, y, cfg);
            }};
}

inline BitensorConstruction embedding_construction() {
    return {"embedding", [](ChartPtr c, const Vec& x, const Vec& y) {
                return bitensor_embedding(make_embedding(c), x, y);
            }};
}

/// Random event pairs: base point uniform in `box`, displacement uniform in
/// ±disp per coordinate (clamped into the box).
struct PairSampler {
    std::vector<Interval> box;
    Vec disp;

    std::pair<Vec, Vec> operator()(Rng& rng) const {
        const int d = static_cast<int>(box.size());
        Vec x(d), y(d);
        for (int i = 0; i < d; ++i) {
            const Interval& iv = box[static_cast<size_t>(i)];
            x[i] = rng.uniform(iv.lo, iv.hi);
            double dy = rng.uniform(-disp[i], disp[i]);
            y[i] = std::clamp(x[i] + dy, iv.lo, iv.hi);
        }
        return {x, y};
    }
};

struct AxiomReport {
    double bt1_max = 0.0;       // coincidence defect
    double bt3_max = 0.0;       // exchange-symmetry defect
    double bt2_joint_max = 0.0; // evaluate-then-transform vs transform-then-evaluate
    double bt2_arg_max = 0.0;   // per-argument version
    int samples = 0;
    int skipped_exceptional = 0;
    int skipped_overlap = 0;
    bool pass(double tol) const {
        return bt1_max < tol && bt3_max < tol && bt2_joint_max < tol && bt2_arg_max < tol;
    }
};

/// Checks coincidence, exchange symmetry and (when `to_chart` is non-null)
/// two-chart tensoriality on `count` sampled pairs. Exceptional pairs are
/// skipped and counted, never averaged over.
inline AxiomReport validate_bitensor_axioms(const BitensorConstruction& ctor, ChartPtr chart,
                                            ChartPtr to_chart, const PairSampler& sampler,
                                            int count, uint64_t seed) {
    AxiomReport rep;
    Rng rng(seed);
    if (to_chart && chart->transitions.find(to_chart->name) == chart->transitions.end())
        throw NoTransitionError("validate_bitensor_axioms: no transition to chart '" +
                                to_chart->name + "'");
    for (int k = 0; k < count; ++k) {
        auto [x, y] = sampler(rng);
        try {
            BitensorValue h = ctor.eval(chart, x, y);
            BitensorValue hr = ctor.eval(chart, y, x);
            BitensorValue hxx = ctor.eval(chart, x, x);

            rep.bt1_max = std::max(
                rep.bt1_max, (hxx.cov - chart->metric(x)).cwiseAbs().maxCoeff());
            rep.bt3_max = std::max(
                rep.bt3_max, (h.cov - Mat(hr.cov.transpose())).cwiseAbs().maxCoeff());

            if (to_chart) {
                Vec xp, yp;
                try {
                    xp = transition_point(*chart, *to_chart, x);
                    yp = transition_point(*chart, *to_chart, y);
                } catch (const OutOfOverlapError&) {
                    rep.skipped_overlap++;
                    continue;
                }
                BitensorValue hB = ctor.eval(to_chart, xp, yp);
                Mat Jx = transition_jacobian(*chart, *to_chart, x);
                Mat Jy = transition_jacobian(*chart, *to_chart, y);
                Mat joint = Jx * h.con * Jy.transpose();
                rep.bt2_joint_max =
                    std::max(rep.bt2_joint_max, (hB.con - joint).cwiseAbs().maxCoeff());
                // per-argument: undo one Jacobian at a time
                Mat JyT_inv = Mat(Eigen::FullPivLU<Mat>(Mat(Jy.transpose())).inverse());
                Mat Jx_inv = Mat(Eigen::FullPivLU<Mat>(Jx).inverse());
                Mat arg1 = hB.con * JyT_inv;        // transformed in x only
                Mat arg2 = Jx_inv * hB.con;         // transformed in y only
                rep.bt2_arg_max = std::max(
                    rep.bt2_arg_max, (arg1 - Mat(Jx * h.con)).cwiseAbs().maxCoeff());
                rep.bt2_arg_max = std::max(
                    rep.bt2_arg_max, (arg2 - Mat(h.con * Jy.transpose())).cwiseAbs().maxCoeff());
            }
            rep.samples++;
        } catch (const ExceptionalPairError&) {
            rep.skipped_exceptional++;
        }
    }
    return rep;
}

}  // namespace stw
