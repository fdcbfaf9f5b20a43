#include "magtrap/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "magtrap/error.hpp"

namespace magtrap {

namespace {

struct OutOfChart {};

ChargedState advance(const ChargedState& s, const StateRate& r, double h) {
    return {s.x + h * r.dx, s.y + h * r.dy, s.chi + h * r.dchi};
}

class Stepper {
public:
    Stepper(const SurfaceChart& chart, const FieldSpec& field, double charge,
            const IntegratorConfig& cfg)
        : chart_(chart), field_(field), charge_(charge), cfg_(cfg) {}

    StateRate rate(const ChargedState& s) const {
        if (!chart_.contains(s.position())) throw OutOfChart{};
        return magnetic_rhs(chart_, field_, s, charge_, cfg_.clockwise);
    }

    ChargedState step(const ChargedState& s, double h) const {
        return cfg_.scheme == Scheme::rk4_projected ? rk4(s, h) : midpoint(s, h);
    }

private:
    ChargedState rk4(const ChargedState& s, double h) const {
        const StateRate k1 = rate(s);
        const StateRate k2 = rate(advance(s, k1, 0.5 * h));
        const StateRate k3 = rate(advance(s, k2, 0.5 * h));
        const StateRate k4 = rate(advance(s, k3, h));
        return {s.x + h / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx),
                s.y + h / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy),
                s.chi + h / 6.0 * (k1.dchi + 2 * k2.dchi + 2 * k3.dchi + k4.dchi)};
    }

    ChargedState midpoint(const ChargedState& s, double h) const {
        ChargedState next = advance(s, rate(s), h);
        for (int it = 0; it < 100; ++it) {
            const ChargedState mid{0.5 * (s.x + next.x), 0.5 * (s.y + next.y),
                                   0.5 * (s.chi + next.chi)};
            const ChargedState upd = advance(s, rate(mid), h);
            const double change = std::abs(upd.x - next.x) + std::abs(upd.y - next.y) +
                                  std::abs(upd.chi - next.chi);
            next = upd;
            if (change <= cfg_.implicit_tol * (1.0 + std::abs(next.chi))) return next;
        }
        throw Error(Errc::quadrature, "implicit midpoint iteration did not converge; reduce dt");
    }

    const SurfaceChart& chart_;
    const FieldSpec& field_;
    double charge_;
    const IntegratorConfig& cfg_;
};

}  // namespace

const char* to_string(Scheme scheme) {
    return scheme == Scheme::rk4_projected ? "rk4_projected" : "implicit_midpoint";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "rk4_projected" || name == "rk4") return Scheme::rk4_projected;
    if (name == "implicit_midpoint") return Scheme::implicit_midpoint;
    throw Error(Errc::invalid_argument, "unknown integration scheme '" + name + "'");
}

StateRate magnetic_rhs(const SurfaceChart& chart, const FieldSpec& field, const ChargedState& state,
                       double charge, bool clockwise) {
    const Point2 p = state.position();
    const Frame f = orthonormal_frame(chart, p);
    const double c = std::cos(state.chi), s = std::sin(state.chi);
    const TangentVec u{c * f.e1.vx + s * f.e2.vx, c * f.e1.vy + s * f.e2.vy};
    const double b = field(chart.wrap(p));
    const double gyration = (clockwise ? -1.0 : 1.0) * charge * b;
    return {u.vx, u.vy, gyration - frame_connection(chart, p, u)};
}

Trajectory integrate(const SurfaceChart& chart, const FieldSpec& field, const ChargedState& start,
                     double charge, double horizon, const IntegratorConfig& config) {
    if (!(config.dt > 0.0)) throw Error(Errc::invalid_argument, "time step must be positive");
    if (!(horizon > 0.0)) throw Error(Errc::invalid_argument, "integration horizon must be positive");
    if (config.record_stride == 0) throw Error(Errc::invalid_argument, "record stride must be >= 1");
    if (!chart.contains(start.position())) {
        throw Error(Errc::outside_domain, "initial state outside the chart domain");
    }
    const double full_steps = std::ceil(horizon / config.dt * (1.0 - 1e-14));
    if (full_steps > static_cast<double>(config.max_steps)) {
        throw Error(Errc::step_limit, "horizon / dt exceeds the step ceiling");
    }
    const auto n = static_cast<std::size_t>(full_steps);

    Trajectory traj;
    traj.charge = charge;
    traj.dt = config.dt;
    traj.scheme = config.scheme;
    const std::size_t reserve = n / config.record_stride + 2;
    traj.times.reserve(reserve);
    traj.states.reserve(reserve);
    traj.field.reserve(reserve);

    auto b_at = [&](const ChargedState& s) { return field(chart.wrap(s.position())); };
    auto record = [&](double t, const ChargedState& s, double b) {
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.field.push_back(b);
        const Frame f = orthonormal_frame(chart, s.position());
        const TangentVec u{std::cos(s.chi) * f.e1.vx + std::sin(s.chi) * f.e2.vx,
                           std::cos(s.chi) * f.e1.vy + std::sin(s.chi) * f.e2.vy};
        const double energy = 0.5 * inner(chart, s.position(), u, u);
        traj.energy_drift = std::max(traj.energy_drift, std::abs(energy - 0.5));
    };

    Stepper stepper(chart, field, charge, config);
    ChargedState s = start;
    double b = b_at(s);
    traj.b_min = traj.b_max = b;
    record(0.0, s, b);

    for (std::size_t k = 1; k <= n; ++k) {
        const double t_prev = static_cast<double>(k - 1) * config.dt;
        const double t = (k == n) ? horizon : static_cast<double>(k) * config.dt;
        ChargedState next;
        try {
            next = stepper.step(s, t - t_prev);
        } catch (const OutOfChart&) {
            traj.exited_domain = true;
            break;
        }
        if (!chart.contains(next.position())) {
            traj.exited_domain = true;
            break;
        }
        s = next;
        b = b_at(s);
        traj.b_min = std::min(traj.b_min, b);
        traj.b_max = std::max(traj.b_max, b);
        traj.steps = k;
        if (k % config.record_stride == 0 || k == n) record(t, s, b);
    }
    if (traj.exited_domain && traj.times.back() < static_cast<double>(traj.steps) * config.dt) {
        record(static_cast<double>(traj.steps) * config.dt, s, b);
    }
    return traj;
}

double rescale_period(double charge, double period) {
    if (!(charge > 0.0)) throw Error(Errc::invalid_argument, "charge must be positive");
    return period / charge;
}

double default_time_step(double charge, double b_max) {
    if (!(charge > 0.0) || !(b_max > 0.0)) {
        throw Error(Errc::invalid_argument, "default step needs positive charge and field");
    }
    return 2.0 * std::numbers::pi / (charge * b_max) / 200.0;
}

double steps_per_gyration(double charge, double b_max, double dt) {
    return 2.0 * std::numbers::pi / (std::abs(charge) * b_max) / dt;
}

}  // namespace magtrap
