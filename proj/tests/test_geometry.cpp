#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "magtrap/error.hpp"
#include "magtrap/geometry.hpp"

using namespace magtrap;
using std::numbers::pi;

namespace {

ScalarField constant_lambda(double v) { return ScalarField::constant(v); }

// lambda = 2 / (1 + x^2 + y^2): stereographic chart of the unit sphere.
ScalarField sphere_lambda(bool analytic) {
    ScalarField f;
    f.value = [](Point2 p) { return 2.0 / (1.0 + p.x * p.x + p.y * p.y); };
    if (analytic) {
        f.gradient = [](Point2 p) {
            const double d = 1.0 + p.x * p.x + p.y * p.y;
            return std::array<double, 2>{-4.0 * p.x / (d * d), -4.0 * p.y / (d * d)};
        };
    }
    return f;
}

ScalarField radial_b() {
    ScalarField f;
    f.value = [](Point2 p) { return 1.0 + 0.5 * (p.x * p.x + p.y * p.y); };
    return f;
}

// A skewed, non-conformal metric used for property checks.
SurfaceChart skew_chart() {
    ScalarField g11, g12, g22;
    g11.value = [](Point2 p) { return 2.0 + std::sin(p.x) * std::sin(p.x); };
    g12.value = [](Point2 p) { return 0.3 * std::cos(p.x + p.y); };
    g22.value = [](Point2 p) { return 1.5 + 0.5 * p.y * p.y; };
    return SurfaceChart::general({-2, 2, -2, 2}, g11, g12, g22);
}

}  // namespace

TEST_CASE("metric_at") {
    SUBCASE("flat chart is the identity") {
        const auto chart = SurfaceChart::flat({-1, 1, -1, 1});
        const MetricSample m = metric_at(chart, {0.3, -0.2});
        CHECK(m.g11 == 1.0);
        CHECK(m.g12 == 0.0);
        CHECK(m.g22 == 1.0);
        CHECK(m.det == 1.0);
        CHECK(m.sqrt_det == 1.0);
    }
    SUBCASE("conformal lambda = 2") {
        const auto chart = SurfaceChart::conformal({-1, 1, -1, 1}, constant_lambda(2.0));
        const MetricSample m = metric_at(chart, {0.5, 0.5});
        CHECK(m.g11 == 4.0);
        CHECK(m.g12 == 0.0);
        CHECK(m.g22 == 4.0);
        CHECK(m.det == 16.0);
        CHECK(m.sqrt_det == 4.0);
    }
    SUBCASE("exterior point is rejected") {
        const auto chart = SurfaceChart::flat({-1, 1, -1, 1});
        CHECK_THROWS_AS(metric_at(chart, {1.5, 0.0}), Error);
    }
    SUBCASE("non-positive-definite metric is rejected at construction") {
        ScalarField g11 = ScalarField::constant(1.0), g12 = ScalarField::constant(2.0),
                    g22 = ScalarField::constant(1.0);
        CHECK_THROWS_AS(SurfaceChart::general({0, 1, 0, 1}, g11, g12, g22), Error);
    }
    SUBCASE("declared flat must be the identity") {
        ScalarField one = ScalarField::constant(1.0), zero = ScalarField::constant(0.0);
        CHECK(SurfaceChart::general({0, 1, 0, 1}, one, zero, one, false, true).is_flat());
        ScalarField two = ScalarField::constant(2.0);
        CHECK_THROWS_AS(SurfaceChart::general({0, 1, 0, 1}, two, zero, one, false, true), Error);
    }
}

TEST_CASE("orthonormal_frame") {
    SUBCASE("flat") {
        const auto chart = SurfaceChart::flat({-1, 1, -1, 1});
        const Frame f = orthonormal_frame(chart, {0, 0});
        CHECK(f.e1.vx == 1.0);
        CHECK(f.e1.vy == 0.0);
        CHECK(f.e2.vx == 0.0);
        CHECK(f.e2.vy == 1.0);
    }
    SUBCASE("conformal lambda = 2") {
        const auto chart = SurfaceChart::conformal({-1, 1, -1, 1}, constant_lambda(2.0));
        const Frame f = orthonormal_frame(chart, {0.1, 0.2});
        CHECK(f.e1.vx == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(f.e1.vy == 0.0);
        CHECK(f.e2.vx == doctest::Approx(0.0));
        CHECK(f.e2.vy == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("orthonormal and positively oriented at 1e4 random points") {
        const auto chart = skew_chart();
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int i = 0; i < 10000; ++i) {
            const Point2 p{u(rng), u(rng)};
            const Frame f = orthonormal_frame(chart, p);
            CHECK(std::abs(inner(chart, p, f.e1, f.e1) - 1.0) < 1e-10);
            CHECK(std::abs(inner(chart, p, f.e2, f.e2) - 1.0) < 1e-10);
            CHECK(std::abs(inner(chart, p, f.e1, f.e2)) < 1e-10);
            const double orient = (f.e1.vx * f.e2.vy - f.e1.vy * f.e2.vx) * metric_at(chart, p).sqrt_det;
            CHECK(orient > 0.0);
        }
    }
}

TEST_CASE("gauss_curvature") {
    SUBCASE("flat chart vanishes") {
        const auto chart = SurfaceChart::flat({-1, 1, -1, 1});
        CHECK(std::abs(gauss_curvature(chart, {0.2, 0.7})) < 1e-8);
        ScalarField one = ScalarField::constant(1.0), zero = ScalarField::constant(0.0);
        ScalarField one_fd, zero_fd;
        one_fd.value = [](Point2) { return 1.0; };
        zero_fd.value = [](Point2) { return 0.0; };
        const auto general = SurfaceChart::general({-1, 1, -1, 1}, one_fd, zero_fd, one_fd);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-0.9, 0.9);
        for (int i = 0; i < 200; ++i) {
            CHECK(std::abs(gauss_curvature(general, {u(rng), u(rng)})) < 1e-8);
        }
    }
    SUBCASE("round sphere chart has K = 1") {
        for (bool analytic : {true, false}) {
            const auto chart = SurfaceChart::conformal({-2, 2, -2, 2}, sphere_lambda(analytic));
            for (Point2 p : {Point2{0, 0}, Point2{0.5, -0.3}, Point2{1.2, 0.8}}) {
                CHECK(gauss_curvature(chart, p) == doctest::Approx(1.0).epsilon(1e-6));
            }
        }
    }
    SUBCASE("hyperbolic half-plane has K = -1") {
        ScalarField lam;
        lam.value = [](Point2 p) { return 1.0 / p.y; };
        const auto conformal = SurfaceChart::conformal({-1, 1, 0.5, 2}, lam);
        CHECK(gauss_curvature(conformal, {0.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-6));

        // Same metric through the Brioschi route.
        ScalarField g, zero;
        g.value = [](Point2 p) { return 1.0 / (p.y * p.y); };
        zero.value = [](Point2) { return 0.0; };
        const auto general = SurfaceChart::general({-1, 1, 0.5, 2}, g, zero, g);
        CHECK(gauss_curvature(general, {0.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-6));
        CHECK(gauss_curvature(general, {0.3, 1.4}) == doctest::Approx(-1.0).epsilon(1e-6));
    }
    SUBCASE("stencil too close to the boundary") {
        ScalarField lam;
        lam.value = [](Point2 p) { return 1.0 / p.y; };
        const auto chart = SurfaceChart::conformal({-1, 1, 0.5, 2}, lam);
        CHECK_THROWS_AS(gauss_curvature(chart, {0.0, 2.0}), Error);
    }
}

TEST_CASE("gradient") {
    SUBCASE("flat radial field") {
        const auto chart = SurfaceChart::flat({-2, 2, -2, 2});
        const Gradient g = gradient(chart, radial_b(), {1, 0});
        CHECK(g.vec.vx == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::abs(g.vec.vy) < 1e-8);
        CHECK(g.norm == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("g = 4 Id raises the index") {
        const auto chart = SurfaceChart::conformal({-2, 2, -2, 2}, constant_lambda(2.0));
        const Gradient g = gradient(chart, radial_b(), {1, 0});
        CHECK(g.vec.vx == doctest::Approx(0.25).epsilon(1e-8));
        CHECK(std::abs(g.vec.vy) < 1e-8);
        CHECK(g.norm == doctest::Approx(0.5).epsilon(1e-8));
    }
    SUBCASE("critical point") {
        const auto chart = SurfaceChart::flat({-2, 2, -2, 2});
        CHECK(gradient(chart, radial_b(), {0, 0}).norm < 1e-8);
    }
    SUBCASE("conformal gradient is the Euclidean one divided by lambda^2") {
        const auto chart = SurfaceChart::conformal({-2, 2, -2, 2}, sphere_lambda(true));
        const auto flat = SurfaceChart::flat({-2, 2, -2, 2});
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        for (int i = 0; i < 500; ++i) {
            const Point2 p{u(rng), u(rng)};
            const double l = sphere_lambda(true)(p);
            const Gradient gc = gradient(chart, radial_b(), p);
            const Gradient ge = gradient(flat, radial_b(), p);
            CHECK(std::abs(gc.vec.vx - ge.vec.vx / (l * l)) < 1e-8);
            CHECK(std::abs(gc.vec.vy - ge.vec.vy / (l * l)) < 1e-8);
        }
    }
    SUBCASE("stencil leaving the domain") {
        const auto chart = SurfaceChart::flat({-2, 2, -2, 2});
        CHECK_THROWS_AS(gradient(chart, radial_b(), {2.0, 0.0}), Error);
    }
}

TEST_CASE("rotate_positively") {
    SUBCASE("flat quarter turn") {
        const auto chart = SurfaceChart::flat({-1, 1, -1, 1});
        const TangentVec r = rotate_positively(chart, {0, 0}, {1, 0});
        CHECK(r.vx == doctest::Approx(0.0));
        CHECK(r.vy == doctest::Approx(1.0));
    }
    SUBCASE("isometry, orthogonality and J^2 = -1") {
        const auto chart = skew_chart();
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int i = 0; i < 2000; ++i) {
            const Point2 p{u(rng), u(rng)};
            const TangentVec v{u(rng), u(rng)};
            const TangentVec jv = rotate_positively(chart, p, v);
            const TangentVec jjv = rotate_positively(chart, p, jv);
            CHECK(std::abs(norm(chart, p, jv) - norm(chart, p, v)) < 1e-12 * (1 + norm(chart, p, v)));
            CHECK(std::abs(inner(chart, p, v, jv)) < 1e-12 * (1 + inner(chart, p, v, v)));
            CHECK(std::abs(jjv.vx + v.vx) < 1e-12 * (1 + std::abs(v.vx)));
            CHECK(std::abs(jjv.vy + v.vy) < 1e-12 * (1 + std::abs(v.vy)));
        }
    }
}

TEST_CASE("second-order operators") {
    const auto flat = SurfaceChart::flat({-2, 2, -2, 2});
    SUBCASE("laplacian of the radial field is 2") {
        CHECK(laplacian(flat, radial_b(), {0.3, 0.4}) == doctest::Approx(2.0).epsilon(1e-6));
    }
    SUBCASE("<grad |grad B|, grad B> against finite differences of |grad B|") {
        ScalarField b;
        b.value = [](Point2 p) { return 2.0 + p.x * p.x + 3.0 * p.y * p.y + 0.2 * p.x * p.y * p.y; };
        const Point2 p{0.4, -0.3};
        const Gradient g = gradient(flat, b, p);
        ScalarField gn;
        gn.value = [&](Point2 q) { return gradient(flat, b, q).norm; };
        const double h = 1e-4;
        const double fd =
            (gn({p.x + h * g.vec.vx, p.y + h * g.vec.vy}) - gn({p.x - h * g.vec.vx, p.y - h * g.vec.vy})) /
            (2 * h);
        CHECK(grad_norm_along_grad(flat, b, p) == doctest::Approx(fd).epsilon(1e-5));
    }
    SUBCASE("laplace-beltrami on the sphere chart matches the conformal formula") {
        const auto chart = SurfaceChart::conformal({-2, 2, -2, 2}, sphere_lambda(true));
        const Point2 p{0.3, -0.2};
        const double l = sphere_lambda(true)(p);
        CHECK(laplacian(chart, radial_b(), p) == doctest::Approx(2.0 / (l * l)).epsilon(1e-6));
    }
}

TEST_CASE("frame connection") {
    SUBCASE("flat frame has no connection") {
        const auto chart = SurfaceChart::flat({-1, 1, -1, 1});
        CHECK(frame_connection(chart, {0.2, 0.1}, {0.6, 0.8}) == 0.0);
    }
    SUBCASE("half-plane: omega(u) = u^x / y for e1 = y d/dx") {
        // g = y^-2 Id, e1 = y d/dx, e2 = y d/dy: nabla_u e1 = u^x d/dy.
        ScalarField lam;
        lam.value = [](Point2 p) { return 1.0 / p.y; };
        const auto chart = SurfaceChart::conformal({-1, 1, 0.5, 2}, lam);
        const Point2 p{0.1, 1.3};
        CHECK(frame_connection(chart, p, {0.7, 0.2}) == doctest::Approx(0.7 / 1.3).epsilon(1e-7));
        CHECK(std::abs(frame_connection(chart, p, {0.0, 1.0})) < 1e-8);
    }
}
