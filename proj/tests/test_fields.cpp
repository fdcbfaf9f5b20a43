#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "magtrap/error.hpp"
#include "magtrap/fields.hpp"

using namespace magtrap;
using std::numbers::pi;

namespace {

ScalarField radial_b() {
    ScalarField f;
    f.value = [](Point2 p) { return 1.0 + 0.5 * (p.x * p.x + p.y * p.y); };
    f.gradient = [](Point2 p) { return std::array<double, 2>{p.x, p.y}; };
    return f;
}

const SurfaceChart& flat_chart() {
    static const SurfaceChart chart = SurfaceChart::flat({-2, 2, -2, 2});
    return chart;
}

}  // namespace

TEST_CASE("FieldSpec positivity") {
    CHECK_NOTHROW(FieldSpec(radial_b(), flat_chart()));
    ScalarField sign_change;
    sign_change.value = [](Point2 p) { return p.x; };
    CHECK_THROWS_AS(FieldSpec(sign_change, flat_chart()), Error);
    const FieldSpec f(radial_b(), flat_chart());
    CHECK(f.min_on_grid() == doctest::Approx(1.0));
}

TEST_CASE("vector_potential") {
    const FieldSpec unit(ScalarField::constant(1.0), flat_chart());
    SUBCASE("constant field") {
        const OneFormSample a = vector_potential(unit, flat_chart(), {1, 0}, {0, 0});
        CHECK(std::abs(a.a_x) < 1e-15);
        CHECK(a.a_y == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("p = base") {
        const OneFormSample a = vector_potential(unit, flat_chart(), {0.3, 0.3}, {0.3, 0.3});
        CHECK(a.a_x == 0.0);
        CHECK(a.a_y == 0.0);
    }
    SUBCASE("finite-difference curl reproduces B sqrt(g)") {
        ScalarField lam;
        lam.value = [](Point2 p) { return 2.0 / (1.0 + p.x * p.x + p.y * p.y); };
        const auto sphere = SurfaceChart::conformal({-2, 2, -2, 2}, lam);
        const FieldSpec field(radial_b(), sphere);
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-1.5, 1.5);
        const Point2 base{0.1, -0.2};
        const double h = 1e-4;
        for (int i = 0; i < 100; ++i) {
            const Point2 p{u(rng), u(rng)};
            const double day_dx = (vector_potential(field, sphere, {p.x + h, p.y}, base).a_y -
                                   vector_potential(field, sphere, {p.x - h, p.y}, base).a_y) / (2 * h);
            const double dax_dy = (vector_potential(field, sphere, {p.x, p.y + h}, base).a_x -
                                   vector_potential(field, sphere, {p.x, p.y - h}, base).a_x) / (2 * h);
            const double expected = field(p) * metric_at(sphere, p).sqrt_det;
            CHECK(std::abs(day_dx - dax_dy - expected) < 1e-6);
        }
    }
    SUBCASE("segment outside the domain") {
        CHECK_THROWS_AS(vector_potential(unit, flat_chart(), {3, 0}, {0, 0}), Error);
    }
}

TEST_CASE("trace_level_set") {
    const FieldSpec field(radial_b(), flat_chart());
    SUBCASE("radial field level 1.5 is the unit circle") {
        const LevelSet l = trace_level_set(field, flat_chart(), 1.5, {0.9, 0.1});
        CHECK(l.closed);
        CHECK(l.orientation == 1);
        double worst = 0.0;
        for (const Point2& p : l.points) worst = std::max(worst, std::abs(std::hypot(p.x, p.y) - 1.0));
        CHECK(worst < 1e-6);
        // Vertex radii deviate by less than 10x the corrector tolerance.
        CHECK(worst < 10 * 1e-9);
        CHECK(l.length() == doctest::Approx(2 * pi).epsilon(1e-4));
        CHECK(std::abs(l.length() - 2 * pi) < 1e-8);
        for (std::size_t i = 0; i + 1 < l.s.size(); ++i) CHECK(l.s[i + 1] > l.s[i]);
        const Point2 a = l.points.front(), b = l.points.back();
        CHECK(std::hypot(a.x - b.x, a.y - b.y) < 1e-12);
    }
    SUBCASE("re-tracing from another seed gives the same length") {
        const LevelSet a = trace_level_set(field, flat_chart(), 1.8, {1.2, 0.3});
        const LevelSet b = trace_level_set(field, flat_chart(), 1.8, {-0.5, -1.0});
        CHECK(std::abs(a.length() - b.length()) < 1e-6 * a.length());
    }
    SUBCASE("halving the step changes the length by < 1e-6 relative") {
        TraceOptions coarse, fine;
        coarse.step = 0.02;
        fine.step = 0.01;
        const LevelSet a = trace_level_set(field, flat_chart(), 1.3, {0.7, 0.0}, coarse);
        const LevelSet b = trace_level_set(field, flat_chart(), 1.3, {0.7, 0.0}, fine);
        CHECK(std::abs(a.length() - b.length()) < 1e-6 * b.length());
    }
    SUBCASE("level below min B is near-critical") {
        try {
            trace_level_set(field, flat_chart(), 0.5, {0.5, 0.5});
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::near_critical);
        }
    }
    SUBCASE("level leaving the domain is an open curve") {
        try {
            trace_level_set(field, flat_chart(), 3.5, {2.0, 0.9});
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::open_curve);
        }
    }
    SUBCASE("conformal metric uses metric arc length") {
        const auto scaled = SurfaceChart::conformal({-2, 2, -2, 2}, ScalarField::constant(2.0));
        const FieldSpec f2(radial_b(), scaled);
        const LevelSet l = trace_level_set(f2, scaled, 1.5, {1.0, 0.0});
        CHECK(l.length() == doctest::Approx(4 * pi).epsilon(1e-7));
    }
    SUBCASE("periodic strip closes around the cylinder") {
        const auto strip = SurfaceChart::flat({0, 2 * pi, -0.5, 3}, true);
        ScalarField b;
        b.value = [](Point2 p) { return 1.0 + p.y; };
        b.gradient = [](Point2) { return std::array<double, 2>{0.0, 1.0}; };
        const FieldSpec f(b, strip);
        const LevelSet l = trace_level_set(f, strip, 1.7, {1.0, 0.5});
        CHECK(l.closed);
        CHECK(l.length() == doctest::Approx(2 * pi).epsilon(1e-10));
        CHECK(std::abs(std::abs(l.points.back().x - l.points.front().x) - 2 * pi) < 1e-12);
    }
}

TEST_CASE("find_level_seed and LevelLocator") {
    const FieldSpec field(radial_b(), flat_chart());
    const Point2 s = find_level_seed(field, flat_chart(), 1.5, {0, 0}, 0.3);
    CHECK(field(s) == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(std::atan2(s.y, s.x) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS(find_level_seed(field, flat_chart(), 9.0, {0, 0}, 0.0), Error);
    const LevelLocator loc{{0, 0}, 0.0, {}};
    CHECK(loc.trace(field, flat_chart(), 2.0).length() == doctest::Approx(2 * pi * std::sqrt(2.0)));
}

TEST_CASE("line_integral") {
    const FieldSpec field(radial_b(), flat_chart());
    const LevelSet l = trace_level_set(field, flat_chart(), 1.5, {1.0, 0.0});
    SUBCASE("unit integrand is the arc length") {
        CHECK(std::abs(line_integral(l, [](Point2) { return 1.0; }) - 2 * pi) < 1e-6);
    }
    SUBCASE("zero integrand") {
        CHECK(line_integral(l, [](Point2) { return 0.0; }) == 0.0);
    }
    SUBCASE("B / |grad B| integrates to 3 pi") {
        const double v = line_integral(l, [&](Point2 p) {
            return field(p) / gradient(flat_chart(), field.strength(), p).norm;
        });
        CHECK(std::abs(v - 3 * pi) < 1e-5);
    }
    SUBCASE("open level set is rejected") {
        LevelSet open = l;
        open.closed = false;
        CHECK_THROWS_AS(line_integral(open, [](Point2) { return 1.0; }), Error);
    }
}
