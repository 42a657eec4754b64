#include "stw/chart.hpp"

#include "support/test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace stw;
using stw_test::random_point;
using stw_test::vec;

TEST_CASE("metric evaluation on the built-in charts", "[chart]") {
    SECTION("minkowski4 is diag(-1,1,1,1) and self-inverse") {
        auto c = make_chart("minkowski4");
        auto mv = metric_at(*c, vec({0.3, -1.2, 4.0, 0.0}));
        Mat eta = Mat::Identity(4, 4);
        eta(0, 0) = -1.0;
        REQUIRE((mv.g - eta).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((mv.g_inv - eta).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("unit sphere at theta=pi/4") {
        auto c = make_chart("sphere2:r=1");
        auto mv = metric_at(*c, vec({M_PI / 4, 0.0}));
        REQUIRE(mv.g(0, 0) == Catch::Approx(1.0));
        REQUIRE(mv.g(1, 1) == Catch::Approx(0.5));
        REQUIRE(mv.g(0, 1) == 0.0);
    }
    SECTION("schwarzschild g_tt at r=4") {
        auto c = make_chart("schwarzschild:M=1");
        auto mv = metric_at(*c, vec({0.0, 4.0, M_PI / 2, 0.0}));
        REQUIRE(mv.g(0, 0) == Catch::Approx(-0.5));
    }
    SECTION("product of metric and inverse is the identity within 1e-12") {
        Rng rng(11);
        for (const char* spec :
             {"minkowski2", "minkowski4", "sphere2:r=1", "schwarzschild:M=1", "desitter:L=1"}) {
            auto c = make_chart(spec);
            for (int k = 0; k < 20; ++k) {
                Vec x = random_point(*c, rng);
                auto mv = metric_at(*c, x);
                Mat prod = mv.g * mv.g_inv;
                REQUIRE((prod - Mat::Identity(c->dim, c->dim)).cwiseAbs().maxCoeff() < 1e-12);
            }
        }
    }
    SECTION("signature matches the declaration") {
        Rng rng(12);
        for (const char* spec : {"minkowski4", "sphere2:r=2", "schwarzschild:M=1"}) {
            auto c = make_chart(spec);
            Vec x = random_point(*c, rng);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(c->metric(x)));
            int neg = 0, pos = 0;
            for (int i = 0; i < c->dim; ++i) (es.eigenvalues()[i] < 0 ? neg : pos)++;
            int want_neg = 0;
            for (int s : c->signature) want_neg += s < 0;
            REQUIRE(neg == want_neg);
            REQUIRE(pos == c->dim - want_neg);
        }
    }
    SECTION("out-of-domain point is rejected") {
        auto c = make_chart("schwarzschild:M=1");
        REQUIRE_THROWS_AS(metric_at(*c, vec({0.0, 1.5, M_PI / 2, 0.0})), OutOfDomainError);
    }
    SECTION("degenerate metric is reported") {
        Chart bad;
        bad.name = "degenerate";
        bad.dim = 2;
        bad.signature = {1, 1};
        bad.domain = {{-1, 1}, {-1, 1}};
        bad.period = {0, 0};
        bad.metric = [](const Vec&) { return Mat::Zero(2, 2); };
        REQUIRE_THROWS_AS(metric_at(bad, vec({0.0, 0.0})), SingularMetricError);
    }
}

TEST_CASE("christoffel symbols", "[chart]") {
    SECTION("flat chart has vanishing symbols") {
        auto c = make_chart("minkowski4");
        auto G = christoffel_at(*c, vec({1.0, 2.0, 3.0, 4.0}));
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int d = 0; d < 4; ++d) REQUIRE(G(a, b, d) == 0.0);
    }
    SECTION("sphere closed forms at theta=pi/4") {
        auto c = make_chart("sphere2:r=1");
        auto G = christoffel_at(*c, vec({M_PI / 4, 1.0}));
        REQUIRE(G(0, 1, 1) == Catch::Approx(-0.5));
        REQUIRE(G(1, 0, 1) == Catch::Approx(1.0));
    }
    SECTION("schwarzschild Gamma^r_tt at r=4") {
        auto c = make_chart("schwarzschild:M=1");
        auto G = christoffel_at(*c, vec({0.0, 4.0, M_PI / 2, 0.0}));
        REQUIRE(G(1, 0, 0) == Catch::Approx(0.03125));
    }
    SECTION("numeric and analytic symbols agree within 1e-6 at 100 random points") {
        Rng rng(21);
        for (const char* spec :
             {"sphere2:r=1", "schwarzschild:M=1", "desitter:L=1", "desitter2:L=1"}) {
            auto c = make_chart(spec);
            double worst = 0.0;
            for (int k = 0; k < 100; ++k) {
                Vec x = random_point(*c, rng);
                auto Ga = christoffel_at(*c, x);
                auto Gn = christoffel_numeric(*c, x);
                for (int a = 0; a < c->dim; ++a)
                    for (int b = 0; b < c->dim; ++b)
                        for (int d = 0; d < c->dim; ++d)
                            worst = std::max(worst, std::abs(Ga(a, b, d) - Gn(a, b, d)));
            }
            INFO(spec);
            REQUIRE(worst < 1e-6);
        }
    }
    SECTION("lower-index symmetry and metric compatibility") {
        Rng rng(22);
        for (const char* spec : {"sphere2:r=2", "schwarzschild:M=1", "desitter:L=1"}) {
            auto c = make_chart(spec);
            for (int k = 0; k < 25; ++k) {
                Vec x = random_point(*c, rng);
                auto G = christoffel_at(*c, x);
                for (int a = 0; a < c->dim; ++a)
                    for (int b = 0; b < c->dim; ++b)
                        for (int d = 0; d < c->dim; ++d) REQUIRE(G(a, b, d) == G(a, d, b));
                REQUIRE(metric_compatibility_residual(*c, x) < 1e-6);
            }
        }
    }
    SECTION("stencil clipping near the domain edge of a numeric chart") {
        auto base = make_chart("sphere2:r=1");
        Chart numeric = *base;
        numeric.christoffel = nullptr;
        Vec edge = vec({numeric.domain[0].lo + 1e-9, 1.0});
        REQUIRE_THROWS_AS(christoffel_at(numeric, edge), StencilClippedError);
    }
}

TEST_CASE("curvature", "[chart]") {
    SECTION("flat chart has zero curvature") {
        auto c = make_chart("minkowski4");
        auto cb = curvature_at(*c, vec({0.0, 1.0, -2.0, 0.5}));
        REQUIRE(std::abs(cb.scalar) < 1e-12);
        for (double r : cb.riemann) REQUIRE(std::abs(r) < 1e-12);
    }
    SECTION("unit sphere scalar is +2, radius-r sphere 2/r^2") {
        auto c1 = make_chart("sphere2:r=1");
        REQUIRE(curvature_at(*c1, vec({M_PI / 3, 0.4})).scalar == Catch::Approx(2.0).margin(1e-7));
        auto c2 = make_chart("sphere2:r=2");
        REQUIRE(curvature_at(*c2, vec({1.1, 2.2})).scalar == Catch::Approx(0.5).margin(1e-7));
    }
    SECTION("schwarzschild is Ricci-flat within 1e-5") {
        auto c = make_chart("schwarzschild:M=1");
        auto cb = curvature_at(*c, vec({0.0, 5.0, M_PI / 2 - 0.2, 1.0}));
        REQUIRE(cb.ricci.cwiseAbs().maxCoeff() < 1e-5);
        REQUIRE(std::abs(cb.scalar) < 1e-5);
    }
    SECTION("riemann antisymmetry exact, ricci symmetric as computed") {
        Rng rng(31);
        for (const char* spec : {"sphere2:r=1", "schwarzschild:M=1", "desitter:L=1"}) {
            auto c = make_chart(spec);
            Vec x = random_point(*c, rng);
            auto cb = curvature_at(*c, x);
            const int d = c->dim;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    for (int m = 0; m < d; ++m)
                        for (int n = 0; n < d; ++n)
                            REQUIRE(cb.riemann_at(a, b, m, n) == -cb.riemann_at(a, b, n, m));
            REQUIRE((cb.ricci - Mat(cb.ricci.transpose())).cwiseAbs().maxCoeff() == 0.0);
            REQUIRE(cb.ricci_asymmetry < 1e-6);
            double tr = (metric_at(*c, x).g_inv * cb.ricci).trace();
            REQUIRE(cb.scalar == Catch::Approx(tr).margin(1e-13));
        }
    }
    SECTION("de sitter static patch has scalar R = 12/L^2") {
        auto c = make_chart("desitter:L=1");
        auto cb = curvature_at(*c, vec({0.0, 0.4, M_PI / 2, 1.0}));
        REQUIRE(cb.scalar == Catch::Approx(12.0).margin(1e-5));
    }
}

TEST_CASE("volume density", "[chart]") {
    auto mink = make_chart("minkowski4");
    REQUIRE(volume_density_at(*mink, vec({0, 0, 0, 0})) == Catch::Approx(1.0));
    auto sph = make_chart("sphere2:r=1");
    REQUIRE(volume_density_at(*sph, vec({M_PI / 6, 0.0})) == Catch::Approx(0.5));
    auto schw = make_chart("schwarzschild:M=1");
    REQUIRE(volume_density_at(*schw, vec({0.0, 4.0, M_PI / 2, 0.0})) == Catch::Approx(16.0));
    SECTION("equals sqrt(det g) for random points") {
        Rng rng(41);
        Vec x = random_point(*schw, rng);
        REQUIRE(volume_density_at(*schw, x) ==
                Catch::Approx(std::sqrt(std::abs(schw->metric(x).determinant()))));
    }
}

TEST_CASE("tensor transformation between charts", "[chart]") {
    SECTION("identity transition leaves tensors unchanged") {
        auto base = make_chart("minkowski2");
        Chart a = *base;
        a.transitions["minkowski2"] =
            Transition{"minkowski2", [](const Vec& x) { return x; }, nullptr};
        Vec x = vec({0.5, -0.25});
        Tensor t = Tensor::from_matrix(a.metric(x), 'd', 'd');
        Tensor out = transform_tensor(a, *base, x, t);
        for (size_t i = 0; i < t.data.size(); ++i)
            REQUIRE(out.data[i] == Catch::Approx(t.data[i]).margin(1e-14));
    }
    SECTION("uniform rescaling doubles contravariant vector components") {
        auto plain = make_chart("minkowski4");
        auto scaled = make_chart("minkowski4_scaled");
        Vec x = vec({1.0, 2.0, -1.0, 0.5});
        Vec v = vec({1.0, -2.0, 3.0, 4.0});
        Tensor out = transform_tensor(*plain, *scaled, x, Tensor::from_vector(v, 'u'));
        for (int i = 0; i < 4; ++i) REQUIRE(out.data[static_cast<size_t>(i)] == 2.0 * v[i]);
        // covariant components halve instead
        Tensor outc = transform_tensor(*plain, *scaled, x, Tensor::from_vector(v, 'd'));
        for (int i = 0; i < 4; ++i)
            REQUIRE(outc.data[static_cast<size_t>(i)] == Catch::Approx(0.5 * v[i]));
    }
    SECTION("sphere metric maps to the rotated round metric") {
        auto plain = make_chart("sphere2:r=1");
        auto rot = make_chart("sphere2rot:r=1");
        Rng rng(51);
        for (int k = 0; k < 20; ++k) {
            Vec x = vec({rng.uniform(1.0, M_PI - 1.0), rng.uniform(0.3, 5.9)});
            Vec xp = transition_point(*plain, *rot, x);
            Tensor g = Tensor::from_matrix(plain->metric(x), 'd', 'd');
            Tensor gp = transform_tensor(*plain, *rot, x, g);
            Mat expect = rot->metric(xp);
            REQUIRE((gp.to_matrix() - expect).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
    SECTION("round trip is the identity within 1e-10") {
        auto plain = make_chart("sphere2:r=1");
        auto rot = make_chart("sphere2rot:r=1");
        Rng rng(52);
        for (int k = 0; k < 20; ++k) {
            Vec x = vec({rng.uniform(1.0, M_PI - 1.0), rng.uniform(0.3, 5.9)});
            Vec xp = transition_point(*plain, *rot, x);
            Tensor t = Tensor::from_matrix(plain->metric(x), 'u', 'd');
            Tensor there = transform_tensor(*plain, *rot, x, t);
            Tensor back = transform_tensor(*rot, *plain, xp, there);
            for (size_t i = 0; i < t.data.size(); ++i)
                REQUIRE(back.data[i] == Catch::Approx(t.data[i]).margin(1e-10));
        }
    }
    SECTION("missing transition and out-of-overlap points are reported") {
        auto plain = make_chart("sphere2:r=1");
        auto schw = make_chart("schwarzschild:M=1");
        Tensor t = Tensor::from_vector(vec({1.0, 0.0}), 'u');
        REQUIRE_THROWS_AS(transform_tensor(*plain, *schw, vec({1.0, 1.0}), t), NoTransitionError);
        auto rot = make_chart("sphere2rot:r=1");
        // a point whose rotated image lands on the excluded pole cap
        Vec near_pole_image = vec({detail::kPoleTilt, M_PI});
        REQUIRE_THROWS_AS(transform_tensor(*plain, *rot, near_pole_image, t), OutOfOverlapError);
    }
}

TEST_CASE("chart registry", "[chart]") {
    REQUIRE(make_chart("sphere2:r=1")->name == "sphere2:r=1");
    REQUIRE(make_chart("schwarzschild:M=2")->dim == 4);
    REQUIRE_THROWS_AS(make_chart("sphere2:r=-1"), ConfigInvalidError);
    REQUIRE_THROWS_AS(make_chart("nosuchchart"), ConfigInvalidError);
    REQUIRE_THROWS_AS(make_chart("sphere2:r=banana"), ConfigInvalidError);
}
