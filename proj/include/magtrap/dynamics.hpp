#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "magtrap/fields.hpp"
#include "magtrap/geometry.hpp"

namespace magtrap {

// A point of the unit tangent bundle: position plus the angle of the unit
// velocity measured from the frame vector e1. Speed is 1 by construction, so
// the energy is fixed at 1/2.
struct ChargedState {
    double x = 0.0;
    double y = 0.0;
    double chi = 0.0;

    Point2 position() const { return {x, y}; }
};

struct StateRate {
    double dx = 0.0;
    double dy = 0.0;
    double dchi = 0.0;
};

enum class Scheme { rk4_projected, implicit_midpoint };

const char* to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct IntegratorConfig {
    Scheme scheme = Scheme::rk4_projected;
    double dt = 0.0;
    std::size_t max_steps = 100'000'000;
    std::size_t record_stride = 1;  // store every k-th step (diagnostics still see every step)
    double implicit_tol = 1e-14;    // fixed-point tolerance for implicit_midpoint
    bool clockwise = true;          // positive e and B gyrate clockwise
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ChargedState> states;
    std::vector<double> field;  // B at each stored state
    double charge = 0.0;
    double dt = 0.0;
    Scheme scheme = Scheme::rk4_projected;
    bool exited_domain = false;
    std::size_t steps = 0;
    double b_min = 0.0;  // extrema of B over every step, not just stored ones
    double b_max = 0.0;
    double energy_drift = 0.0;  // max | |u|_g^2 / 2 - 1/2 | over stored states
};

// Hamiltonian vector field on S^1M: velocity u = cos(chi) e1 + sin(chi) e2 and
// dchi/dt = -e B - <nabla_u e1, e2> (sign of the e B term flips when !clockwise).
StateRate magnetic_rhs(const SurfaceChart& chart, const FieldSpec& field, const ChargedState& state,
                       double charge, bool clockwise = true);

// Fixed-step integration over [0, T]; the final step is shortened to land on T.
// Leaving the chart stops the run with exited_domain set.
Trajectory integrate(const SurfaceChart& chart, const FieldSpec& field, const ChargedState& start,
                     double charge, double horizon, const IntegratorConfig& config);

// epsilon * T with epsilon = 1/e: the period of the rescaled flow.
double rescale_period(double charge, double period);

// (2 pi / (e B_max)) / 200.
double default_time_step(double charge, double b_max);

// Steps per gyration 2 pi / (e B_max) at step dt.
double steps_per_gyration(double charge, double b_max, double dt);

}  // namespace magtrap
