#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace stw {

// Small fixed-capacity vectors/matrices: charts have d <= 4, integrator
// states run up to d + d*d = 20 doubles. Stack storage keeps the geodesic
// shooting loops allocation-free.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 8, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 32, 1>;
using Cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Error types

struct OutOfDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StencilClippedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoTransitionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutOfOverlapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StepFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LeftDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ExceptionalPairError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MismatchedBaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SpecMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IncommensurateWavevectorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HermiticityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CFLViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedGeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigInvalidError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Misc utilities

inline double wrap_to_pm(double x, double period) {
    if (period <= 0.0) return x;
    double w = std::remainder(x, period);
    return w;
}

/// Coordinate difference a - b with periodic coordinates wrapped to the
/// nearest representative. `period[i] == 0` marks an aperiodic coordinate.
inline Vec wrapped_delta(const Vec& a, const Vec& b, const std::vector<double>& period) {
    Vec d = a - b;
    for (int i = 0; i < d.size(); ++i)
        if (period[static_cast<size_t>(i)] > 0.0)
            d[i] = wrap_to_pm(d[i], period[static_cast<size_t>(i)]);
    return d;
}

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

/// Fixed-shape pairwise summation. The reduction tree depends only on n,
/// so results are identical no matter how work is scheduled.
template <typename T>
T pairwise_sum(const T* v, size_t n) {
    if (n == 0) return T{};
    if (n <= 8) {
        T s = v[0];
        for (size_t i = 1; i < n; ++i) s += v[i];
        return s;
    }
    size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
    return pairwise_sum(v.data(), v.size());
}

/// Runs fn(i) for i in [0, n). Items must be independent; results are
/// deterministic for any worker count.
inline void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    int nw = std::min<int>(threads, static_cast<int>(n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nw));
    std::atomic<size_t> next{0};
    for (int w = 0; w < nw; ++w)
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

/// Deterministic RNG wrapper used everywhere a seed appears in a config.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(eng_);
    }
    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

}  // namespace stw
