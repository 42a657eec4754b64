#pragma once

#include "stw/core.hpp"

#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace stw {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Γ^a_{bc}, stored dense with the lower-index symmetry kept explicit.
class Christoffels {
  public:
    Christoffels() = default;
    explicit Christoffels(int dim) : dim_(dim), v_(static_cast<size_t>(dim * dim * dim), 0.0) {}
    double& operator()(int a, int b, int c) { return v_[idx(a, b, c)]; }
    double operator()(int a, int b, int c) const { return v_[idx(a, b, c)]; }
    int dim() const { return dim_; }

  private:
    size_t idx(int a, int b, int c) const {
        return static_cast<size_t>((a * dim_ + b) * dim_ + c);
    }
    int dim_ = 0;
    std::vector<double> v_;
};

struct Chart;
using ChartPtr = std::shared_ptr<const Chart>;

/// Registered map into a sibling chart. The Jacobian is ∂x'/∂x; when no
/// analytic one is supplied it is formed by central differences with
/// period-aware deltas (safe across a 2π seam in the target angles).
struct Transition {
    std::string target;
    std::function<Vec(const Vec&)> forward;
    std::function<Mat(const Vec&)> jacobian;  // optional
};

/// A coordinate chart with an analytic metric. Immutable after the factory
/// returns it; every operation below is a pure function of (chart, point).
struct Chart {
    std::string name;
    int dim = 0;
    std::vector<int> signature;   // e.g. {-1, 1, 1, 1}
    std::vector<Interval> domain;
    std::vector<double> period;   // 0 = aperiodic coordinate
    std::function<Mat(const Vec&)> metric;
    std::function<Christoffels(const Vec&)> christoffel;  // optional analytic Γ
    double geodesic_length_cap = 0.0;  // metric arc length beyond which a
                                       // connecting path counts as wrapped
    std::map<std::string, Transition> transitions;

    bool in_domain(const Vec& x) const {
        if (x.size() != dim) return false;
        for (int i = 0; i < dim; ++i) {
            if (!std::isfinite(x[i])) return false;
            if (!domain[static_cast<size_t>(i)].contains(x[i])) return false;
        }
        return true;
    }

    double domain_scale() const {
        double s = 0.0;
        for (const auto& iv : domain) s = std::max(s, iv.hi - iv.lo);
        return s;
    }
};

struct MetricValue {
    Mat g;      // covariant
    Mat g_inv;  // contravariant
};

struct CurvatureBundle {
    std::vector<double> riemann;  // R^a_{bcd}, dense d^4
    Mat ricci;
    double scalar = 0.0;
    int dim = 0;
    double ricci_asymmetry = 0.0;  // max |R_{ab} - R_{ba}| before symmetrisation
    double riemann_at(int a, int b, int c, int d) const {
        return riemann[static_cast<size_t>(((a * dim + b) * dim + c) * dim + d)];
    }
};

// ---------------------------------------------------------------------------
// Metric evaluation

inline void require_in_domain(const Chart& chart, const Vec& x, const char* where) {
    if (!chart.in_domain(x)) {
        std::ostringstream os;
        os << where << ": point outside domain of chart '" << chart.name << "'";
        throw OutOfDomainError(os.str());
    }
}

inline MetricValue metric_at(const Chart& chart, const Vec& x) {
    require_in_domain(chart, x, "metric_at");
    MetricValue mv;
    mv.g = chart.metric(x);
    Eigen::FullPivLU<Mat> lu(mv.g);
    if (!lu.isInvertible())
        throw SingularMetricError("metric_at: metric not invertible on chart '" + chart.name + "'");
    mv.g_inv = lu.inverse();
    return mv;
}

inline double volume_density_at(const Chart& chart, const Vec& x) {
    require_in_domain(chart, x, "volume_density_at");
    return std::sqrt(std::abs(chart.metric(x).determinant()));
}

enum class CausalType { Timelike, Null, Spacelike };

inline CausalType causal_type(const Chart& chart, const Vec& x, const Vec& v,
                              double tol = 1e-9) {
    Mat g = chart.metric(x);
    double q = v.dot(g * v);
    double scale = std::max(1.0, (g * v).norm() * v.norm());
    if (std::abs(q) < tol * scale) return CausalType::Null;
    return q < 0 ? CausalType::Timelike : CausalType::Spacelike;
}

// ---------------------------------------------------------------------------
// Numerical differentiation of the metric

namespace detail {

inline double fd_step(double coord, double rel = 1e-5) {
    return rel * std::max(1.0, std::abs(coord));
}

/// "1" not "1.000000" in generated chart names.
inline std::string num_str(double v) {
    if (v == static_cast<double>(static_cast<long long>(v)))
        return std::to_string(static_cast<long long>(v));
    std::ostringstream os;
    os << v;
    return os.str();
}

inline Mat metric_partial(const Chart& chart, const Vec& x, int mu) {
    double h = fd_step(x[mu]);
    Vec xp = x, xm = x;
    xp[mu] += h;
    xm[mu] -= h;
    if (!chart.in_domain(xp) || !chart.in_domain(xm))
        throw StencilClippedError("metric_partial: stencil exits domain of '" + chart.name + "'");
    return (chart.metric(xp) - chart.metric(xm)) / (2.0 * h);
}

}  // namespace detail

/// Γ^a_{bc} = 1/2 g^{ad} (∂_b g_{dc} + ∂_c g_{db} - ∂_d g_{bc}).
/// Uses the chart's analytic symbols when present, central differences
/// otherwise.
inline Christoffels christoffel_at(const Chart& chart, const Vec& x) {
    require_in_domain(chart, x, "christoffel_at");
    if (chart.christoffel) return chart.christoffel(x);
    const int d = chart.dim;
    MetricValue mv = metric_at(chart, x);
    std::vector<Mat> dg(static_cast<size_t>(d));
    for (int mu = 0; mu < d; ++mu) dg[static_cast<size_t>(mu)] = detail::metric_partial(chart, x, mu);
    Christoffels G(d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = b; c < d; ++c) {
                double s = 0.0;
                for (int e = 0; e < d; ++e)
                    s += mv.g_inv(a, e) *
                         (dg[static_cast<size_t>(b)](e, c) + dg[static_cast<size_t>(c)](e, b) -
                          dg[static_cast<size_t>(e)](b, c));
                G(a, b, c) = 0.5 * s;
                G(a, c, b) = G(a, b, c);
            }
    return G;
}

/// Same formula but always numeric, for cross-checking analytic symbols.
inline Christoffels christoffel_numeric(const Chart& chart, const Vec& x) {
    Chart copy = chart;
    copy.christoffel = nullptr;
    return christoffel_at(copy, x);
}

namespace detail {

/// Γ without the domain gate. Integrator stages probe slightly past the box
/// before node acceptance filters; the metric closures are total functions.
inline Christoffels christoffel_unchecked(const Chart& chart, const Vec& x) {
    if (chart.christoffel) return chart.christoffel(x);
    const int d = chart.dim;
    Mat g = chart.metric(x);
    Mat g_inv = Mat(Eigen::FullPivLU<Mat>(g).inverse());
    std::vector<Mat> dg(static_cast<size_t>(d));
    for (int mu = 0; mu < d; ++mu) {
        double h = fd_step(x[mu]);
        Vec xp = x, xm = x;
        xp[mu] += h;
        xm[mu] -= h;
        dg[static_cast<size_t>(mu)] = (chart.metric(xp) - chart.metric(xm)) / (2.0 * h);
    }
    Christoffels G(d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = b; c < d; ++c) {
                double s = 0.0;
                for (int e = 0; e < d; ++e)
                    s += g_inv(a, e) *
                         (dg[static_cast<size_t>(b)](e, c) + dg[static_cast<size_t>(c)](e, b) -
                          dg[static_cast<size_t>(e)](b, c));
                G(a, b, c) = 0.5 * s;
                G(a, c, b) = G(a, b, c);
            }
    return G;
}

}  // namespace detail

/// R^a_{bcd} = ∂_c Γ^a_{db} - ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} - Γ^a_{de} Γ^e_{cb},
/// Ricci_{bd} = R^a_{bad}. Sign convention pinned so the unit 2-sphere has
/// scalar +2. Γ derivatives use a 4th-order 5-point stencil.
inline CurvatureBundle curvature_at(const Chart& chart, const Vec& x) {
    require_in_domain(chart, x, "curvature_at");
    const int d = chart.dim;

    auto gamma = [&](const Vec& p) { return christoffel_at(chart, p); };

    // dG[mu](a,b,c) = ∂_mu Γ^a_{bc}
    std::vector<Christoffels> dG(static_cast<size_t>(d));
    for (int mu = 0; mu < d; ++mu) {
        double h = detail::fd_step(x[mu], 1e-2);
        Vec x1 = x, x2 = x, x3 = x, x4 = x;
        x1[mu] -= 2 * h;
        x2[mu] -= h;
        x3[mu] += h;
        x4[mu] += 2 * h;
        if (!chart.in_domain(x1) || !chart.in_domain(x4))
            throw StencilClippedError("curvature_at: stencil exits domain of '" + chart.name + "'");
        Christoffels g1 = gamma(x1), g2 = gamma(x2), g3 = gamma(x3), g4 = gamma(x4);
        Christoffels out(d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int c = 0; c < d; ++c)
                    out(a, b, c) =
                        (g1(a, b, c) - 8.0 * g2(a, b, c) + 8.0 * g3(a, b, c) - g4(a, b, c)) /
                        (12.0 * h);
        dG[static_cast<size_t>(mu)] = out;
    }

    Christoffels G = gamma(x);
    CurvatureBundle cb;
    cb.dim = d;
    cb.riemann.assign(static_cast<size_t>(d * d * d * d), 0.0);
    auto R = [&](int a, int b, int c, int e) -> double& {
        return cb.riemann[static_cast<size_t>(((a * d + b) * d + c) * d + e)];
    };
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c)
                for (int e = c + 1; e < d; ++e) {
                    double val = dG[static_cast<size_t>(c)](a, e, b) -
                                 dG[static_cast<size_t>(e)](a, c, b);
                    for (int l = 0; l < d; ++l)
                        val += G(a, c, l) * G(l, e, b) - G(a, e, l) * G(l, c, b);
                    R(a, b, c, e) = val;
                    R(a, b, e, c) = -val;  // antisymmetry exact by construction
                }

    cb.ricci = Mat::Zero(d, d);
    for (int b = 0; b < d; ++b)
        for (int e = 0; e < d; ++e) {
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += R(a, b, a, e);
            cb.ricci(b, e) = s;
        }
    cb.ricci_asymmetry = (cb.ricci - Mat(cb.ricci.transpose())).cwiseAbs().maxCoeff();
    cb.ricci = 0.5 * (cb.ricci + Mat(cb.ricci.transpose()));

    Mat g_inv = metric_at(chart, x).g_inv;
    cb.scalar = (g_inv * cb.ricci).trace();
    return cb;
}

/// ∇_a g_{bc} reassembled from Γ; should vanish (metric compatibility).
inline double metric_compatibility_residual(const Chart& chart, const Vec& x) {
    const int d = chart.dim;
    Christoffels G = christoffel_at(chart, x);
    Mat g = chart.metric(x);
    double worst = 0.0;
    for (int a = 0; a < d; ++a) {
        Mat dg = detail::metric_partial(chart, x, a);
        for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c) {
                double r = dg(b, c);
                for (int l = 0; l < d; ++l) r -= G(l, b, a) * g(l, c) + G(l, c, a) * g(b, l);
                worst = std::max(worst, std::abs(r));
            }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Tensor transport between charts

/// Dense little tensor with a variance tag per index: 'u' upper, 'd' lower.
struct Tensor {
    std::vector<double> data;
    std::vector<char> variance;
    int dim = 0;

    int rank() const { return static_cast<int>(variance.size()); }
    size_t size() const { return data.size(); }
    double& at(const std::vector<int>& idx) { return data[flat(idx)]; }
    double at(const std::vector<int>& idx) const { return data[flat(idx)]; }
    size_t flat(const std::vector<int>& idx) const {
        size_t f = 0;
        for (int i : idx) f = f * static_cast<size_t>(dim) + static_cast<size_t>(i);
        return f;
    }
    static Tensor from_matrix(const Mat& m, char v1, char v2) {
        Tensor t;
        t.dim = static_cast<int>(m.rows());
        t.variance = {v1, v2};
        t.data.resize(static_cast<size_t>(t.dim * t.dim));
        for (int i = 0; i < t.dim; ++i)
            for (int j = 0; j < t.dim; ++j) t.data[static_cast<size_t>(i * t.dim + j)] = m(i, j);
        return t;
    }
    Mat to_matrix() const {
        Mat m(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) = data[static_cast<size_t>(i * dim + j)];
        return m;
    }
    static Tensor from_vector(const Vec& v, char var) {
        Tensor t;
        t.dim = static_cast<int>(v.size());
        t.variance = {var};
        t.data.assign(v.data(), v.data() + v.size());
        return t;
    }
};

namespace detail {

inline Mat numeric_jacobian(const Transition& tr, const Chart& to_chart, const Vec& x) {
    const int d = static_cast<int>(x.size());
    Mat J(d, d);
    for (int j = 0; j < d; ++j) {
        double h = fd_step(x[j], 1e-6);
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        Vec fp = tr.forward(xp), fm = tr.forward(xm);
        Vec df = wrapped_delta(fp, fm, to_chart.period);
        for (int i = 0; i < d; ++i) J(i, j) = df[i] / (2.0 * h);
    }
    return J;
}

/// Contract one tensor axis with matrix M (new_i = sum_a M(i,a) T(..a..)).
inline Tensor contract_axis(const Tensor& t, int axis, const Mat& M) {
    Tensor out = t;
    const int d = t.dim;
    std::vector<int> idx(static_cast<size_t>(t.rank()), 0);
    size_t total = t.size();
    for (size_t f = 0; f < total; ++f) {
        size_t rem = f;
        for (int k = t.rank() - 1; k >= 0; --k) {
            idx[static_cast<size_t>(k)] = static_cast<int>(rem % static_cast<size_t>(d));
            rem /= static_cast<size_t>(d);
        }
        double s = 0.0;
        std::vector<int> src = idx;
        for (int a = 0; a < d; ++a) {
            src[static_cast<size_t>(axis)] = a;
            s += M(idx[static_cast<size_t>(axis)], a) * t.at(src);
        }
        out.data[f] = s;
    }
    return out;
}

}  // namespace detail

/// Pushes a tensor at x through the registered transition chart_from -> chart_to.
/// Upper indices contract with J = ∂x'/∂x, lower ones with J^{-T}.
inline Tensor transform_tensor(const Chart& from, const Chart& to, const Vec& x,
                               const Tensor& t) {
    auto it = from.transitions.find(to.name);
    if (it == from.transitions.end())
        throw NoTransitionError("transform_tensor: no transition " + from.name + " -> " + to.name);
    const Transition& tr = it->second;
    if (!from.in_domain(x)) throw OutOfOverlapError("transform_tensor: x outside source chart");
    Vec xp = tr.forward(x);
    if (!to.in_domain(xp)) throw OutOfOverlapError("transform_tensor: image outside target chart");

    Mat J = tr.jacobian ? tr.jacobian(x) : detail::numeric_jacobian(tr, to, x);
    Mat Jinv = Mat(Eigen::FullPivLU<Mat>(J).inverse());
    Tensor out = t;
    for (int axis = 0; axis < t.rank(); ++axis) {
        if (t.variance[static_cast<size_t>(axis)] == 'u')
            out = detail::contract_axis(out, axis, J);
        else
            out = detail::contract_axis(out, axis, Mat(Jinv.transpose()));
    }
    return out;
}

inline Vec transition_point(const Chart& from, const Chart& to, const Vec& x) {
    auto it = from.transitions.find(to.name);
    if (it == from.transitions.end())
        throw NoTransitionError("transition_point: no transition " + from.name + " -> " + to.name);
    Vec xp = it->second.forward(x);
    if (!to.in_domain(xp)) throw OutOfOverlapError("transition_point: image outside target chart");
    return xp;
}

inline Mat transition_jacobian(const Chart& from, const Chart& to, const Vec& x) {
    auto it = from.transitions.find(to.name);
    if (it == from.transitions.end())
        throw NoTransitionError("transition_jacobian: no transition registered");
    if (it->second.jacobian) return it->second.jacobian(x);
    return detail::numeric_jacobian(it->second, to, x);
}

// ---------------------------------------------------------------------------
// Built-in charts and the registry

namespace detail {

inline Vec make_vec(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

/// Static spherically symmetric metric diag(-f, 1/f, r^2, r^2 sin^2 θ)
/// shared by the Schwarzschild and de Sitter factories.
inline std::shared_ptr<Chart> static_spherical(const std::string& name,
                                               std::function<double(double)> f,
                                               std::function<double(double)> fprime,
                                               Interval r_dom) {
    auto c = std::make_shared<Chart>();
    c->name = name;
    c->dim = 4;
    c->signature = {-1, 1, 1, 1};
    c->domain = {{-256.0, 256.0}, r_dom, {1e-3, M_PI - 1e-3}, {-8.0 * M_PI, 8.0 * M_PI}};
    c->period = {0.0, 0.0, 0.0, 2.0 * M_PI};
    c->metric = [f](const Vec& x) {
        double r = x[1], th = x[2];
        double fv = f(r);
        Mat g = Mat::Zero(4, 4);
        g(0, 0) = -fv;
        g(1, 1) = 1.0 / fv;
        g(2, 2) = r * r;
        g(3, 3) = r * r * std::sin(th) * std::sin(th);
        return g;
    };
    c->christoffel = [f, fprime](const Vec& x) {
        double r = x[1], th = x[2];
        double fv = f(r), fp = fprime(r);
        double st = std::sin(th), ct = std::cos(th);
        Christoffels G(4);
        G(0, 0, 1) = G(0, 1, 0) = fp / (2.0 * fv);
        G(1, 0, 0) = 0.5 * fv * fp;
        G(1, 1, 1) = -fp / (2.0 * fv);
        G(1, 2, 2) = -r * fv;
        G(1, 3, 3) = -r * fv * st * st;
        G(2, 1, 2) = G(2, 2, 1) = 1.0 / r;
        G(2, 3, 3) = -st * ct;
        G(3, 1, 3) = G(3, 3, 1) = 1.0 / r;
        G(3, 2, 3) = G(3, 3, 2) = ct / st;
        return G;
    };
    return c;
}

inline Vec sphere_embed(double th, double ph) {
    return make_vec({std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)});
}

inline Vec sphere_angles(const Vec& p) {
    double th = std::acos(std::clamp(p[2] / p.norm(), -1.0, 1.0));
    double ph = std::atan2(p[1], p[0]);
    if (ph < 0) ph += 2.0 * M_PI;
    return make_vec({th, ph});
}

/// Rotation used for the rotated-pole sibling charts.
constexpr double kPoleTilt = 0.7;

inline Vec rotate_sphere_point(double th, double ph, double alpha) {
    Vec p = sphere_embed(th, ph);
    double c = std::cos(alpha), s = std::sin(alpha);
    Vec q = make_vec({c * p[0] + s * p[2], p[1], -s * p[0] + c * p[2]});
    return sphere_angles(q);
}

}  // namespace detail

inline std::shared_ptr<Chart> make_minkowski(int dim, double scale = 1.0,
                                             const std::string& name_override = "") {
    auto c = std::make_shared<Chart>();
    c->name = name_override.empty() ? ("minkowski" + std::to_string(dim)) : name_override;
    c->dim = dim;
    c->signature.assign(static_cast<size_t>(dim), 1);
    c->signature[0] = -1;
    c->domain.assign(static_cast<size_t>(dim), Interval{-64.0, 64.0});
    c->period.assign(static_cast<size_t>(dim), 0.0);
    double s2 = scale * scale;
    c->metric = [dim, s2](const Vec&) {
        Mat g = Mat::Identity(dim, dim) / s2;
        g(0, 0) = -1.0 / s2;
        return g;
    };
    c->christoffel = [dim](const Vec&) { return Christoffels(dim); };
    return c;
}

inline std::shared_ptr<Chart> make_sphere2(double radius, bool rotated = false) {
    auto c = std::make_shared<Chart>();
    c->name = (rotated ? "sphere2rot:r=" : "sphere2:r=") + detail::num_str(radius);
    c->dim = 2;
    c->signature = {1, 1};
    c->domain = {{1e-6, M_PI - 1e-6}, {-8.0 * M_PI, 8.0 * M_PI}};
    c->period = {0.0, 2.0 * M_PI};
    double r2 = radius * radius;
    c->metric = [r2](const Vec& x) {
        Mat g = Mat::Zero(2, 2);
        g(0, 0) = r2;
        double st = std::sin(x[0]);
        g(1, 1) = r2 * st * st;
        return g;
    };
    c->christoffel = [](const Vec& x) {
        double th = x[0];
        Christoffels G(2);
        G(0, 1, 1) = -std::sin(th) * std::cos(th);
        G(1, 0, 1) = G(1, 1, 0) = std::cos(th) / std::sin(th);
        return G;
    };
    c->geodesic_length_cap = 2.0 * M_PI * radius * 0.999;
    return c;
}

/// Chart registry. Accepts "minkowski2", "minkowski4", "sphere2:r=1",
/// "schwarzschild:M=1", "desitter:L=1", "desitter2:L=1" plus the sibling
/// charts used by transition tests ("sphere2rot:r=1", "minkowski4_scaled",
/// "schwarzschildrot:M=1"). Transitions between siblings come pre-registered.
inline ChartPtr make_chart(const std::string& spec);

namespace detail {

inline double parse_param(const std::string& spec, const std::string& key, double fallback,
                          bool* found = nullptr) {
    if (found) *found = false;
    auto pos = spec.find(':');
    if (pos == std::string::npos) return fallback;
    std::string rest = spec.substr(pos + 1);
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigInvalidError("bad chart parameter '" + item + "'");
        if (item.substr(0, eq) == key) {
            try {
                double v = std::stod(item.substr(eq + 1));
                if (found) *found = true;
                return v;
            } catch (const std::exception&) {
                throw ConfigInvalidError("bad numeric value in chart spec '" + spec + "'");
            }
        }
    }
    return fallback;
}

inline void link_sphere_factor_rotation(Chart& plain, Chart& rot, int theta_axis) {
    const double a = kPoleTilt;
    auto fwd = [a, theta_axis](const Vec& x) {
        Vec out = x;
        Vec tp = rotate_sphere_point(x[theta_axis], x[theta_axis + 1], a);
        out[theta_axis] = tp[0];
        out[theta_axis + 1] = tp[1];
        return out;
    };
    auto bwd = [a, theta_axis](const Vec& x) {
        Vec out = x;
        Vec tp = rotate_sphere_point(x[theta_axis], x[theta_axis + 1], -a);
        out[theta_axis] = tp[0];
        out[theta_axis + 1] = tp[1];
        return out;
    };
    plain.transitions[rot.name] = Transition{rot.name, fwd, nullptr};
    rot.transitions[plain.name] = Transition{plain.name, bwd, nullptr};
}

}  // namespace detail

inline ChartPtr make_chart(const std::string& spec) {
    std::string base = spec.substr(0, spec.find(':'));

    if (base == "minkowski2" || base == "minkowski4") {
        int d = base == "minkowski2" ? 2 : 4;
        auto plain = make_minkowski(d);
        auto scaled = make_minkowski(d, 2.0, base + "_scaled");
        // x' = 2x: a flat chart in stretched coordinates, g' = η/4
        Mat J2 = Mat::Identity(d, d) * 2.0;
        Mat Jh = Mat::Identity(d, d) * 0.5;
        plain->transitions[scaled->name] =
            Transition{scaled->name, [](const Vec& x) { return Vec(2.0 * x); },
                       [J2](const Vec&) { return J2; }};
        scaled->transitions[plain->name] =
            Transition{plain->name, [](const Vec& x) { return Vec(0.5 * x); },
                       [Jh](const Vec&) { return Jh; }};
        return plain;
    }
    if (base == "minkowski2_scaled" || base == "minkowski4_scaled") {
        int d = base == "minkowski2_scaled" ? 2 : 4;
        std::string plain_name = base.substr(0, base.find('_'));
        auto scaled = make_minkowski(d, 2.0, base);
        Mat Jh = Mat::Identity(d, d) * 0.5;
        scaled->transitions[plain_name] =
            Transition{plain_name, [](const Vec& x) { return Vec(0.5 * x); },
                       [Jh](const Vec&) { return Jh; }};
        return scaled;
    }
    if (base == "sphere2" || base == "sphere2rot") {
        double r = detail::parse_param(spec, "r", 1.0);
        if (!(r > 0) || !std::isfinite(r))
            throw ConfigInvalidError("sphere2 radius must be positive: '" + spec + "'");
        auto plain = make_sphere2(r, false);
        auto rot = make_sphere2(r, true);
        detail::link_sphere_factor_rotation(*plain, *rot, 0);
        return base == "sphere2" ? ChartPtr(plain) : ChartPtr(rot);
    }
    if (base == "schwarzschild" || base == "schwarzschildrot") {
        double M = detail::parse_param(spec, "M", 1.0);
        if (!(M > 0) || !std::isfinite(M))
            throw ConfigInvalidError("schwarzschild mass must be positive: '" + spec + "'");
        auto f = [M](double r) { return 1.0 - 2.0 * M / r; };
        auto fp = [M](double r) { return 2.0 * M / (r * r); };
        Interval rdom{2.0 * M * 1.05, 64.0 * M};
        auto plain =
            detail::static_spherical("schwarzschild:M=" + detail::num_str(M), f, fp, rdom);
        auto rot =
            detail::static_spherical("schwarzschildrot:M=" + detail::num_str(M), f, fp, rdom);
        detail::link_sphere_factor_rotation(*plain, *rot, 2);
        return base == "schwarzschild" ? ChartPtr(plain) : ChartPtr(rot);
    }
    if (base == "desitter") {
        double L = detail::parse_param(spec, "L", 1.0);
        if (!(L > 0) || !std::isfinite(L))
            throw ConfigInvalidError("desitter length must be positive: '" + spec + "'");
        auto f = [L](double r) { return 1.0 - r * r / (L * L); };
        auto fp = [L](double r) { return -2.0 * r / (L * L); };
        return detail::static_spherical("desitter:L=" + detail::num_str(L), f, fp,
                                        Interval{0.02 * L, 0.9 * L});
    }
    if (base == "desitter2") {
        double L = detail::parse_param(spec, "L", 1.0);
        if (!(L > 0) || !std::isfinite(L))
            throw ConfigInvalidError("desitter2 length must be positive: '" + spec + "'");
        auto c = std::make_shared<Chart>();
        c->name = "desitter2:L=" + detail::num_str(L);
        c->dim = 2;
        c->signature = {-1, 1};
        c->domain = {{-256.0, 256.0}, {0.02 * L, 0.9 * L}};
        c->period = {0.0, 0.0};
        c->metric = [L](const Vec& x) {
            double fv = 1.0 - x[1] * x[1] / (L * L);
            Mat g = Mat::Zero(2, 2);
            g(0, 0) = -fv;
            g(1, 1) = 1.0 / fv;
            return g;
        };
        c->christoffel = [L](const Vec& x) {
            double r = x[1];
            double fv = 1.0 - r * r / (L * L);
            double fp = -2.0 * r / (L * L);
            Christoffels G(2);
            G(0, 0, 1) = G(0, 1, 0) = fp / (2.0 * fv);
            G(1, 0, 0) = 0.5 * fv * fp;
            G(1, 1, 1) = -fp / (2.0 * fv);
            return G;
        };
        return c;
    }
    throw ConfigInvalidError("unknown chart spec '" + spec + "'");
}

}  // namespace stw
