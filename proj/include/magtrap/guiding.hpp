#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "magtrap/analysis.hpp"
#include "magtrap/dynamics.hpp"

namespace magtrap {

enum class GuidingMethod {
    sliding_average,   // mean position over one gyroperiod centered at the sample
    eikonal,           // q - (1/(e B)) J u at each sample
    averaged_eikonal,  // sliding average of the eikonal-shifted samples
};

const char* to_string(GuidingMethod method);

struct GyroDecomposition {
    std::vector<double> times;
    std::vector<Point2> centers;
    std::vector<double> gyroradius;  // |q - center| at each retained sample
    std::vector<double> phase;       // unwrapped polar angle of q - center
    double gyroperiod = 0.0;         // 2 pi / (e B(q(0)))
    double rms_gyroradius = 0.0;
    GuidingMethod method = GuidingMethod::sliding_average;
};

// Sliding-window methods drop the half period at each end of the run.
GyroDecomposition gyro_decompose(const Trajectory& traj, const FieldSpec& field,
                                 const SurfaceChart& chart, double charge,
                                 GuidingMethod method = GuidingMethod::sliding_average);

// A transversal curve {f = 0}. Crossings report time, the interpolated
// point, a coordinate along the section and the angle between the orbit
// chord and the section.
struct Section {
    std::function<double(Point2)> signed_distance;
    std::function<double(Point2)> coordinate;
    std::function<bool(Point2)> accept;  // e.g. the half of a line forming a ray
    int direction = 0;                   // +1 / -1 keep crossings where f increases / decreases

    static Section line(Point2 origin, double angle, int direction = 0);
    static Section ray(Point2 origin, double angle, int direction = 0);
    // {B = c}; the coordinate is the polar angle about `center`.
    static Section level(const FieldSpec& field, double c, Point2 center, int direction = 0);
};

struct Crossing {
    double time = 0.0;
    Point2 point;
    double coordinate = 0.0;
    double angle = 0.0;  // in (0, pi/2]
    int direction = 0;
};

struct SectionCrossings {
    std::vector<Crossing> crossings;
    double min_angle() const;
};

SectionCrossings section_crossings(const Trajectory& traj, const Section& section);

// Times where the gyrophase chi passes chi0 modulo 2 pi, one per gyration.
// With `guiding` set the stored point is the eikonal guiding center rather
// than the particle position.
SectionCrossings phase_crossings(const Trajectory& traj, const FieldSpec& field,
                                 const SurfaceChart& chart, double chi0, bool guiding = true);

struct RotationEstimate {
    double per_crossing = 0.0;  // least-squares slope of the unwrapped polar angle, radians
    double residual = 0.0;      // rms residual of the linear fit
    bool monotone = true;       // unwrapped angle strictly monotone
    std::size_t count = 0;
};

// Needs at least 20 crossings.
RotationEstimate rotation_number(const SectionCrossings& crossings, Point2 center);

struct PowerLaw {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
};

// Least-squares fit of log y = log prefactor + exponent log x.
PowerLaw fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct DriftOptions {
    double gyrations = 40.0;
    double steps_per_gyration = 200.0;
    double chi0 = 0.0;
    Point2 center;  // polar-angle origin for the drift
    unsigned threads = 0;
};

struct DriftRecord {
    double charge = 0.0;
    double drift_per_gyration = 0.0;  // |angle advance| per gyration about the center
    double oracle = 0.0;              // grad-B drift: pi |grad B| / (e^2 B^3 R)
    double action_prediction = 0.0;   // 2 pi * pi eps^2 |d(1/B)/dI|
    double residual = 0.0;
    bool monotone = true;
    std::size_t crossings = 0;
};

struct DriftScan {
    double c = 0.0;
    Point2 start;
    std::vector<DriftRecord> records;
    PowerLaw fit;  // drift against epsilon = 1/e
};

// Starts on L_c (found by the locator ray) and measures the angular drift
// of the guiding center for each charge.
DriftScan drift_scan(const FieldSpec& field, const SurfaceChart& chart, double c,
                     const std::vector<double>& charges, const LevelLocator& locator,
                     const DriftOptions& options = {});

struct OrbitOutcome {
    ChargedState start;
    double max_excursion = 0.0;  // sup |B(q(t)) - c| over every step
    bool exited_domain = false;
    bool left_annulus = false;
};

struct TrapRecord {
    double charge = 0.0;
    double horizon = 0.0;
    double median_excursion = 0.0;
    double max_excursion = 0.0;
    bool any_exit = false;  // domain exit or annulus exit in any orbit
    std::vector<OrbitOutcome> orbits;
};

struct TrapResult {
    double c = 0.0;
    double horizon = 0.0;
    double twist = 0.0;
    bool degenerate = false;
    std::vector<TrapRecord> records;  // sorted by charge
};

struct TrapOptions {
    std::uint64_t seed = 1;
    bool force = false;  // run on degenerate levels
    double tolerance = 1e-3;
    double steps_per_gyration = 200.0;
    std::optional<std::pair<double, double>> annulus;  // B range counted as trapped
    LevelLocator locator;
    unsigned threads = 0;
};

// Orbits start at uniformly random arc-length positions on L_c with uniformly
// random chi, drawn once from the seed and shared by all charges.
TrapResult trap_experiment(const FieldSpec& field, const SurfaceChart& chart, double c,
                           const std::vector<double>& charges, double horizon, int n_initial,
                           const TrapOptions& options);

// Uniform double in [0, 1) from a 64-bit engine, identical on every platform.
double unit_uniform(std::uint64_t bits);

}  // namespace magtrap
