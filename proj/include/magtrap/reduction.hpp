#pragma once

#include <vector>

#include "magtrap/dynamics.hpp"
#include "magtrap/fields.hpp"
#include "magtrap/geometry.hpp"

namespace magtrap {

// S^1-invariant potential A = A_r dr + A_theta dtheta + A_z dz on R^3 minus
// the z-axis. Components are functions of (r, z) stored as Point2{r, z}.
struct AxisymmetricPotential {
    ScalarField a_r = ScalarField::constant(0.0);
    ScalarField a_theta = ScalarField::constant(0.0);
    ScalarField a_z = ScalarField::constant(0.0);
};

// (M - e A_theta)^2 / (2 r^2)
double effective_potential(const AxisymmetricPotential& pot, double M, double e, double r, double z);

// dA_z/dr - dA_r/dz, the dr^dz coefficient of dA.
double reduced_field(const AxisymmetricPotential& pot, double r, double z);

enum class MetricConvention {
    jacobi,   // metric 2 (E - V_eff) g, B_eff = B_theta / (2 (E - V_eff))
    literal,  // metric (E - V_eff)^{-1} g, B_eff = B_theta (E - V_eff)
};

struct ReduceOptions {
    Rect domain{0.1, 3.0, -3.0, 3.0};  // (r, z) search rectangle
    double r_floor = 1e-3;
    double margin = -1.0;  // < 0: 1e-2 * E
    int grid = 65;         // admissibility grid per side
    MetricConvention convention = MetricConvention::jacobi;
};

// Half-plane surface problem at fixed angular momentum M and energy E,
// charted by (x, y) = (r, z) so that dr^dz is the positive orientation.
// Orbits of (chart, field, charge) at unit speed trace the projected 3D
// orbits; the reduced time is tau = int 2 (E - V_eff) dt.
struct ReducedProblem {
    AxisymmetricPotential potential;
    double M = 0.0;
    double e = 0.0;
    double E = 0.0;
    double margin = 0.0;
    MetricConvention convention = MetricConvention::jacobi;
    Rect domain;
    SurfaceChart chart = SurfaceChart::flat({});
    FieldSpec field{ScalarField::constant(1.0), chart};  // |B_eff|
    double charge = 0.0;  // e * sign(B_eff)
    // Euclidean view: B_theta on the flat (r, z) chart, |B_theta| as field.
    SurfaceChart euclidean_chart = SurfaceChart::flat({});
    FieldSpec euclidean_field{ScalarField::constant(1.0), euclidean_chart};

    double v_eff(Point2 p) const;
    double b_theta(Point2 p) const;
    double b_eff(Point2 p) const;  // signed, for the chosen convention
    // Coefficient of g_E = (E - V_eff)^{-1} g.
    double cotangent_metric_factor(Point2 p) const;
};

ReducedProblem reduce(const AxisymmetricPotential& pot, double M, double e, double E,
                      const ReduceOptions& options = {});

struct State3D {
    double r = 1.0, theta = 0.0, z = 0.0;
    double p_r = 0.0, p_theta = 0.0, p_z = 0.0;
};

struct Trajectory3D {
    std::vector<double> times;
    std::vector<State3D> states;
    double energy_drift = 0.0;   // max |H - H(0)|
    double p_theta_drift = 0.0;  // max |p_theta - p_theta(0)|
};

double hamiltonian_3d(const AxisymmetricPotential& pot, double e, const State3D& s);

// Canonical state with p_theta = M, speed sqrt(2 (E - V_eff)) and (r, z)
// velocity at angle chi from d/dr.
State3D oracle_initial_state(const AxisymmetricPotential& pot, double M, double e, double E,
                             double r, double z, double chi);

// RK4 on the canonical equations of H; stops with an error if r < r_floor.
Trajectory3D full3d_oracle(const AxisymmetricPotential& pot, const State3D& start, double e,
                           double horizon, double dt, double r_floor = 1e-3,
                           std::size_t record_stride = 1);

// int 2 (E - V_eff) dt along the oracle run (trapezoid rule).
double reduced_time(const Trajectory3D& traj, const AxisymmetricPotential& pot, double M, double e,
                    double E);

// Symmetric Hausdorff distance between two polylines.
double hausdorff_distance(const std::vector<Point2>& a, const std::vector<Point2>& b);

std::vector<Point2> project_rz(const Trajectory3D& traj);
std::vector<Point2> positions(const Trajectory& traj);

}  // namespace magtrap
