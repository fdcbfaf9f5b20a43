#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "magtrap/dynamics.hpp"
#include "magtrap/error.hpp"

using namespace magtrap;
using std::numbers::pi;

namespace {

const SurfaceChart& big_chart() {
    static const SurfaceChart chart = SurfaceChart::flat({-5, 5, -5, 5});
    return chart;
}

ScalarField radial_b() {
    ScalarField f;
    f.value = [](Point2 p) { return 1.0 + 0.5 * (p.x * p.x + p.y * p.y); };
    f.gradient = [](Point2 p) { return std::array<double, 2>{p.x, p.y}; };
    return f;
}

IntegratorConfig rk4(double dt) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    return cfg;
}

// Mean center and mean radius of samples on one closed gyration.
std::pair<Point2, double> fit_circle(const Trajectory& t) {
    const std::size_t n = t.states.size() - 1;  // last sample repeats the first
    double cx = 0, cy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cx += t.states[i].x;
        cy += t.states[i].y;
    }
    cx /= n;
    cy /= n;
    double r = 0;
    for (std::size_t i = 0; i < n; ++i) r += std::hypot(t.states[i].x - cx, t.states[i].y - cy);
    return {{cx, cy}, r / n};
}

double max_excursion(const Trajectory& t, double c) {
    return std::max(std::abs(t.b_max - c), std::abs(t.b_min - c));
}

}  // namespace

TEST_CASE("magnetic_rhs") {
    const FieldSpec unit(ScalarField::constant(1.0), big_chart());
    SUBCASE("constant field, e = 1") {
        const StateRate r = magnetic_rhs(big_chart(), unit, {0, 0, 0}, 1.0);
        CHECK(r.dx == 1.0);
        CHECK(r.dy == 0.0);
        CHECK(r.dchi == -1.0);
    }
    SUBCASE("e = 2 doubles the turning rate") {
        CHECK(magnetic_rhs(big_chart(), unit, {0, 0, 0.4}, 2.0).dchi == -2.0);
    }
    SUBCASE("e = 0 is the geodesic equation") {
        CHECK(magnetic_rhs(big_chart(), unit, {1, 1, 0.4}, 0.0).dchi == 0.0);
    }
    SUBCASE("counterclockwise convention flips the sign") {
        CHECK(magnetic_rhs(big_chart(), unit, {0, 0, 0}, 1.0, false).dchi == 1.0);
    }
    SUBCASE("state outside the chart") {
        CHECK_THROWS_AS(magnetic_rhs(big_chart(), unit, {7, 0, 0}, 1.0), Error);
    }
}

TEST_CASE("integrate: constant field") {
    const FieldSpec unit(ScalarField::constant(1.0), big_chart());
    SUBCASE("closed gyrocircle after one period") {
        const Trajectory t = integrate(big_chart(), unit, {0, 0, 0}, 1.0, 2 * pi, rk4(2 * pi / 200));
        const ChargedState& end = t.states.back();
        CHECK(t.times.back() == 2 * pi);
        CHECK(std::abs(end.x) < 1e-6);
        CHECK(std::abs(end.y) < 1e-6);
        CHECK(std::abs(end.chi + 2 * pi) < 1e-6);
        CHECK(t.energy_drift < 1e-14);
    }
    SUBCASE("e = 2 gyrates on radius 1/2") {
        const Trajectory t = integrate(big_chart(), unit, {0, 0, 0}, 2.0, pi, rk4(pi / 400));
        const auto [center, radius] = fit_circle(t);
        CHECK(radius == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(center.y == doctest::Approx(-0.5).epsilon(1e-6));  // clockwise: center to the right
    }
    SUBCASE("radius 1/(eB) for e in {1, 10, 100}") {
        for (double e : {1.0, 10.0, 100.0}) {
            const double period = 2 * pi / e;
            const Trajectory t = integrate(big_chart(), unit, {0.2, -0.1, 1.0}, e, period,
                                           rk4(1e-3 * period));
            const auto fit = fit_circle(t);
            CHECK(std::abs(fit.second - 1.0 / e) < 1e-6 / e);
        }
    }
    SUBCASE("implicit midpoint also closes the circle") {
        IntegratorConfig cfg = rk4(2 * pi / 2000);
        cfg.scheme = Scheme::implicit_midpoint;
        const Trajectory t = integrate(big_chart(), unit, {0, 0, 0}, 1.0, 2 * pi, cfg);
        CHECK(std::hypot(t.states.back().x, t.states.back().y) < 1e-5);
    }
}

TEST_CASE("integrate: geodesics") {
    const FieldSpec unit(ScalarField::constant(1.0), big_chart());
    SUBCASE("e = 0 is a straight line") {
        const double heading = 0.7;
        const Trajectory t = integrate(big_chart(), unit, {-1, -1, heading}, 0.0, 2.0, rk4(0.01));
        for (const ChargedState& s : t.states) {
            const double cross = (s.x + 1) * std::sin(heading) - (s.y + 1) * std::cos(heading);
            CHECK(std::abs(cross) < 1e-8);
        }
    }
    SUBCASE("e = 0 leaves the chart with the exit flag") {
        const Trajectory t = integrate(big_chart(), unit, {0, 0, 0}, 0.0, 100.0, rk4(0.01));
        CHECK(t.exited_domain);
        CHECK(t.states.back().x <= 5.0);
        CHECK(t.states.back().x > 4.9);
        for (std::size_t i = 0; i + 1 < t.times.size(); ++i) CHECK(t.times[i + 1] > t.times[i]);
    }
    SUBCASE("hyperbolic half-plane geodesic is a semicircle") {
        ScalarField lam;
        lam.value = [](Point2 p) { return 1.0 / p.y; };
        lam.gradient = [](Point2 p) { return std::array<double, 2>{0.0, -1.0 / (p.y * p.y)}; };
        const auto hyp = SurfaceChart::conformal({-3, 3, 0.2, 3}, lam);
        const FieldSpec f(ScalarField::constant(1.0), hyp);
        const Trajectory t = integrate(hyp, f, {0, 1, 0}, 0.0, 1.5, rk4(1e-3));
        for (const ChargedState& s : t.states) CHECK(std::abs(std::hypot(s.x, s.y) - 1.0) < 1e-9);
    }
}

TEST_CASE("integrate: radial field") {
    const FieldSpec field(radial_b(), big_chart());
    SUBCASE("e = 50 stays near L_1.5 and the excursion halves when e doubles") {
        const double e = 50.0;
        IntegratorConfig cfg = rk4(default_time_step(e, 1.6));
        cfg.record_stride = 1000;
        const Trajectory t1 = integrate(big_chart(), field, {1, 0, 0.3}, e, 200.0, cfg);
        const double ex1 = max_excursion(t1, 1.5);
        CHECK(!t1.exited_domain);
        CHECK(ex1 < 3.0 / e);

        IntegratorConfig cfg2 = rk4(default_time_step(2 * e, 1.6));
        cfg2.record_stride = 1000;
        const Trajectory t2 = integrate(big_chart(), field, {1, 0, 0.3}, 2 * e, 200.0, cfg2);
        const double ratio = ex1 / max_excursion(t2, 1.5);
        CHECK(ratio > 1.6);
        CHECK(ratio < 2.4);
    }
    SUBCASE("time reversal: flip chi and charge, return to start") {
        // gamma(T - t) solves the flow with charge -e, so the reversal needs e -> -e.
        const double e = 5.0, horizon = 3.0;
        const ChargedState s0{0.8, -0.3, 1.1};
        const Trajectory fwd = integrate(big_chart(), field, s0, e, horizon, rk4(1e-3));
        ChargedState back = fwd.states.back();
        back.chi += pi;
        const Trajectory rev = integrate(big_chart(), field, back, -e, horizon, rk4(1e-3));
        const ChargedState& end = rev.states.back();
        CHECK(std::abs(end.x - s0.x) < 1e-6);
        CHECK(std::abs(end.y - s0.y) < 1e-6);
        CHECK(std::abs(std::remainder(end.chi - (s0.chi + pi), 2 * pi)) < 1e-6);
    }
    SUBCASE("rk4 observed order >= 3.8") {
        const double e = 5.0, horizon = 4.0;
        const ChargedState s0{1.0, 0.0, 0.5};
        auto endpoint = [&](double dt) {
            return integrate(big_chart(), field, s0, e, horizon, rk4(dt)).states.back();
        };
        const ChargedState a = endpoint(0.02), b = endpoint(0.01), c = endpoint(0.005);
        const double e1 = std::hypot(a.x - b.x, a.y - b.y);
        const double e2 = std::hypot(b.x - c.x, b.y - c.y);
        CHECK(std::log2(e1 / e2) >= 3.8);
    }
    SUBCASE("implicit midpoint is second order") {
        const double e = 5.0, horizon = 2.0;
        IntegratorConfig cfg;
        cfg.scheme = Scheme::implicit_midpoint;
        auto endpoint = [&](double dt) {
            cfg.dt = dt;
            return integrate(big_chart(), field, {1.0, 0.0, 0.5}, e, horizon, cfg).states.back();
        };
        const ChargedState a = endpoint(0.01), b = endpoint(0.005), c = endpoint(0.0025);
        const double order = std::log2(std::hypot(a.x - b.x, a.y - b.y) / std::hypot(b.x - c.x, b.y - c.y));
        CHECK(order == doctest::Approx(2.0).epsilon(0.1));
    }
}

TEST_CASE("integrate: argument checks") {
    const FieldSpec unit(ScalarField::constant(1.0), big_chart());
    CHECK_THROWS_AS(integrate(big_chart(), unit, {0, 0, 0}, 1.0, 1.0, rk4(0.0)), Error);
    CHECK_THROWS_AS(integrate(big_chart(), unit, {0, 0, 0}, 1.0, -1.0, rk4(0.1)), Error);
    CHECK_THROWS_AS(integrate(big_chart(), unit, {9, 0, 0}, 1.0, 1.0, rk4(0.1)), Error);
    IntegratorConfig capped = rk4(1e-3);
    capped.max_steps = 10;
    try {
        integrate(big_chart(), unit, {0, 0, 0}, 1.0, 1.0, capped);
        FAIL("expected step ceiling");
    } catch (const Error& err) {
        CHECK(err.code() == Errc::step_limit);
    }
}

TEST_CASE("rescale_period") {
    CHECK(rescale_period(10.0, 5.0) == 0.5);
    CHECK(rescale_period(1.0, 3.7) == 3.7);
    CHECK(10.0 * rescale_period(10.0, 5.0) == 5.0);
    CHECK_THROWS_AS(rescale_period(0.0, 1.0), Error);
    CHECK_THROWS_AS(rescale_period(-2.0, 1.0), Error);
}

TEST_CASE("default_time_step") {
    CHECK(default_time_step(1.0, 1.0) == doctest::Approx(2 * pi / 200));
    CHECK(steps_per_gyration(1.0, 1.0, default_time_step(1.0, 1.0)) == doctest::Approx(200.0));
}
