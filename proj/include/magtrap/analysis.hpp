#pragma once

#include <string>
#include <vector>

#include "magtrap/fields.hpp"
#include "magtrap/geometry.hpp"

namespace magtrap {

// B-weighted metric area of {c_ref <= B <= c} (negative when c < c_ref).
//
// The region is swept by rays from `center`, which must see every level
// involved as a star-shaped curve (e.g. the extremum of B inside the
// annulus). Angles use the periodic trapezoid rule and each ray segment a
// Gauss-Legendre rule; both are refined together until successive estimates
// agree to rel_tol.
double action_integral(const FieldSpec& field, const SurfaceChart& chart, double c, double c_ref,
                       Point2 center, double rel_tol = 1e-7);

// dI/dB at the level: line integral of B / |grad B| over it.
double dI_dB(const FieldSpec& field, const SurfaceChart& chart, const LevelSet& level,
             double grad_floor = 1e-6, double rel_tol = 1e-11);

enum class SecondDerivativeRoute {
    finite_difference,  // centered difference of dI/dB across c -/+ delta, one Richardson step
    expanded,           // line integral of the expanded integrand minus (2/c) dI/dB
};

// Pointwise integrand whose line integral over L_c equals the twist quantity
// T(c) = d2I/dB2 + (2/c) dI/dB:
//   3/|grad B| - 2 B <grad|grad B|, grad B>/|grad B|^4 + B Lap(B)/|grad B|^3.
struct ExpandedTerms {
    double inverse_gradient = 0.0;  // 3 / |grad B|
    double gradient_growth = 0.0;   // -2 B <grad|grad B|, grad B> / |grad B|^4
    double laplacian = 0.0;         // B Lap(B) / |grad B|^3
    double total = 0.0;
};

ExpandedTerms expanded_integrand(const FieldSpec& field, const SurfaceChart& chart, Point2 p);

// Line integral of expanded_integrand(...).total over the level.
double expanded_twist(const FieldSpec& field, const SurfaceChart& chart, const LevelSet& level);

double d2I_dB2(const FieldSpec& field, const SurfaceChart& chart, double c,
               const LevelLocator& locator,
               SecondDerivativeRoute route = SecondDerivativeRoute::finite_difference);

struct TwistSample {
    double c = 0.0;
    double dI_dB = 0.0;
    double d2I_dB2 = 0.0;
    double twist = 0.0;     // d2I/dB2 + (2/c) dI/dB
    double relative = 0.0;  // |twist| / ((2/c) dI/dB)
};

TwistSample twist_quantity(const FieldSpec& field, const SurfaceChart& chart, double c,
                           const LevelLocator& locator,
                           SecondDerivativeRoute route = SecondDerivativeRoute::finite_difference);

enum class LevelClass { nondegenerate, degenerate, near_critical_skipped };

const char* to_string(LevelClass cls);

// Nondegenerate iff |T| > tolerance * (2/c) * dI/dB.
LevelClass classify(const TwistSample& sample, double tolerance);

struct ActionRecord {
    double c = 0.0;
    double I = 0.0;
    double dI_dB = 0.0;
    double d2I_dB2 = 0.0;
    double twist = 0.0;
    LevelClass cls = LevelClass::nondegenerate;
};

struct ActionProfile {
    double c_ref = 0.0;  // zero of I: the lowest traced level
    std::vector<ActionRecord> records;
};

struct LevelReport {
    double c = 0.0;
    LevelClass cls = LevelClass::nondegenerate;
    double twist = 0.0;
    double relative = 0.0;
    std::string note;
};

struct DegeneracyReport {
    double tolerance = 0.0;
    std::vector<LevelReport> levels;
};

struct ScanOptions {
    double tolerance = 1e-3;
    SecondDerivativeRoute route = SecondDerivativeRoute::finite_difference;
    double action_tol = 1e-9;
    bool compute_action = true;  // I(c) needs rays from the locator origin
};

struct ScanResult {
    ActionProfile profile;
    DegeneracyReport report;
};

// n equally spaced levels in [c_min, c_max]; near-critical levels are skipped
// and reported, at least two levels must be traceable.
ScanResult degeneracy_scan(const FieldSpec& field, const SurfaceChart& chart, double c_min,
                           double c_max, int n, const LevelLocator& locator,
                           const ScanOptions& options = {});

// d^2 (1/B) / dI^2 at the interior records of a profile (nonuniform
// three-point differences); element k belongs to records[k + 1].
std::vector<double> inverse_field_curvature(const ActionProfile& profile);

// Coefficients h_i = L^{(i-1)} B^{-1} / (i (i + 1)), i = 1..order, of the
// flat-case normal form Hamiltonian, with L the derivative along v_perp / B
// for the unit velocity at angle chi.
struct NormalFormSeries {
    std::vector<double> coefficients;
    double partial_sum(double epsilon) const;
};

NormalFormSeries flat_normal_form_hamiltonian(const FieldSpec& field, const SurfaceChart& chart,
                                              Point2 p, double chi, int order);

}  // namespace magtrap
