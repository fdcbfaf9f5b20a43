#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "magtrap/geometry.hpp"

namespace magtrap {

// Positive magnetic field strength B on a chart; the 2-form is B times the
// metric area form.
class FieldSpec {
public:
    // Validates B > 0 on a grid over the chart. `support` optionally restricts
    // validation to the region where B is defined (e.g. inside a disk).
    FieldSpec(ScalarField strength, const SurfaceChart& chart,
              std::function<bool(Point2)> support = {});

    double operator()(Point2 p) const { return strength_.value(p); }
    const ScalarField& strength() const { return strength_; }
    const std::function<bool(Point2)>& support() const { return support_; }

    // Minimum of B over the validation grid.
    double min_on_grid() const { return min_on_grid_; }
    double max_on_grid() const { return max_on_grid_; }

private:
    ScalarField strength_;
    std::function<bool(Point2)> support_;
    double min_on_grid_ = 0.0;
    double max_on_grid_ = 0.0;
};

struct OneFormSample {
    double a_x = 0.0;
    double a_y = 0.0;
};

// Radial-homotopy potential with dA = B sqrt(det g) dx^dy, anchored at `base`.
OneFormSample vector_potential(const FieldSpec& field, const SurfaceChart& chart, Point2 p,
                               Point2 base);

struct TraceOptions {
    double step = 0.0;           // metric arc length per step; 0 = min(0.01, 1e-3 * extent)
    double grad_floor = 1e-6;    // refuse levels with |grad B| below this
    double residual_tol = 1e-12; // Newton corrector target for |B - c|
    std::size_t max_steps = 2'000'000;
};

// Closed polyline approximation of a component of {B = c}. Between vertices
// the curve is the cubic Hermite interpolant of the vertex tangents.
struct LevelSet {
    double c = 0.0;
    std::vector<Point2> points;      // unwrapped coordinates; closed => back() == front() (+ period shift)
    std::vector<TangentVec> tangents;  // unit coordinate-space tangent at each vertex
    std::vector<double> s;           // cumulative metric arc length, s[0] = 0
    bool closed = false;
    int orientation = 1;             // +1 counterclockwise in (x, y)
    SurfaceChart chart = SurfaceChart::flat({});

    double length() const { return s.empty() ? 0.0 : s.back(); }
    std::size_t segments() const { return points.empty() ? 0 : points.size() - 1; }
    // Position on segment i at local parameter t in [0, 1] (unwrapped).
    Point2 at(std::size_t segment, double t) const;
    // Coordinate derivative d/dt on segment i.
    TangentVec derivative(std::size_t segment, double t) const;
};

// Predictor step along J grad B, Newton corrector along grad B.
LevelSet trace_level_set(const FieldSpec& field, const SurfaceChart& chart, double c, Point2 seed,
                         const TraceOptions& options = {});

// First crossing of {B = c} along the ray origin + t (cos angle, sin angle).
Point2 find_level_seed(const FieldSpec& field, const SurfaceChart& chart, double c, Point2 origin,
                       double angle);

// Recipe for finding the component of {B = c} met by a ray, reused across levels.
struct LevelLocator {
    Point2 origin;
    double angle = 0.0;
    TraceOptions options;

    LevelSet trace(const FieldSpec& field, const SurfaceChart& chart, double c) const;
};

// Line integral of f ds over a closed level set (metric arc length), with
// Gauss-Legendre panels per segment doubled until the relative change is below
// rel_tol.
double line_integral(const LevelSet& level, const std::function<double(Point2)>& integrand,
                     double rel_tol = 1e-8);

}  // namespace magtrap
