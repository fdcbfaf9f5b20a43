#pragma once

#include <array>
#include <functional>
#include <memory>

namespace magtrap {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Components in the coordinate basis (d/dx, d/dy).
struct TangentVec {
    double vx = 0.0;
    double vy = 0.0;
};

struct Rect {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    Point2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

// Second coordinate partials of a scalar.
struct Hessian2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;
};

// A scalar function on a chart. Derivative handles are optional; when absent
// callers fall back to centered finite differences.
struct ScalarField {
    std::function<double(Point2)> value;
    std::function<std::array<double, 2>(Point2)> gradient;
    std::function<Hessian2(Point2)> hessian;

    static ScalarField constant(double c);

    double operator()(Point2 p) const { return value(p); }
    bool has_gradient() const { return static_cast<bool>(gradient); }
    bool has_hessian() const { return static_cast<bool>(hessian); }
};

struct MetricSample {
    double g11 = 1.0;
    double g12 = 0.0;
    double g22 = 1.0;
    double det = 1.0;
    double sqrt_det = 1.0;
};

// Metric plus its first coordinate partials: d11 = (dg11/dx, dg11/dy), etc.
struct MetricJet {
    MetricSample g;
    std::array<double, 2> d11{};
    std::array<double, 2> d12{};
    std::array<double, 2> d22{};
};

struct Frame {
    TangentVec e1;
    TangentVec e2;
};

struct Gradient {
    TangentVec vec;               // g^{-1} df
    std::array<double, 2> df{};   // (df/dx, df/dy)
    double norm = 0.0;            // sqrt(df(vec))
};

enum class MetricKind { flat, conformal, general };

// A single coordinate rectangle carrying a Riemannian metric. Immutable and
// cheap to copy (shared implementation).
class SurfaceChart {
public:
    static SurfaceChart flat(Rect domain, bool periodic_x = false);
    // g = lambda^2 * Id
    static SurfaceChart conformal(Rect domain, ScalarField lambda, bool periodic_x = false);
    // declared_flat requests a check that the components are the identity.
    static SurfaceChart general(Rect domain, ScalarField g11, ScalarField g12, ScalarField g22,
                                bool periodic_x = false, bool declared_flat = false);

    const Rect& domain() const;
    MetricKind kind() const;
    bool is_flat() const { return kind() == MetricKind::flat; }
    bool periodic_x() const;

    // Step for first-derivative finite differences: 1e-5 x domain width.
    double fd_step() const;
    // Step for second-derivative finite differences.
    double fd_step2() const;

    bool contains(Point2 p) const;
    // Maps x into [x_min, x_max) for periodic charts; identity otherwise.
    Point2 wrap(Point2 p) const;

    // Throws Errc::outside_domain or Errc::degenerate_metric.
    MetricSample metric(Point2 p) const;
    MetricJet metric_jet(Point2 p) const;

    // Conformal factor lambda; only valid for MetricKind::conformal.
    const ScalarField& conformal_factor() const;
    const ScalarField& component(int index) const;  // 0: g11, 1: g12, 2: g22

private:
    struct Impl;
    explicit SurfaceChart(std::shared_ptr<const Impl> impl);
    std::shared_ptr<const Impl> impl_;
};

MetricSample metric_at(const SurfaceChart& chart, Point2 p);

double inner(const SurfaceChart& chart, Point2 p, TangentVec u, TangentVec v);
double norm(const SurfaceChart& chart, Point2 p, TangentVec v);

// Gram-Schmidt on (d/dx, d/dy); e1 is parallel to d/dx, frame positively oriented.
Frame orthonormal_frame(const SurfaceChart& chart, Point2 p);

// Counterclockwise quarter turn in the tangent plane (the orientation operator J).
TangentVec rotate_positively(const SurfaceChart& chart, Point2 p, TangentVec v);

double gauss_curvature(const SurfaceChart& chart, Point2 p);

// Coordinate partials of f, analytic when available.
std::array<double, 2> partials(const SurfaceChart& chart, const ScalarField& f, Point2 p);
Hessian2 second_partials(const SurfaceChart& chart, const ScalarField& f, Point2 p);

Gradient gradient(const SurfaceChart& chart, const ScalarField& f, Point2 p);

// Laplace-Beltrami operator of f.
double laplacian(const SurfaceChart& chart, const ScalarField& f, Point2 p);

// Directional derivative of |grad f| along grad f, i.e. <grad |grad f|, grad f>.
double grad_norm_along_grad(const SurfaceChart& chart, const ScalarField& f, Point2 p);

// Levi-Civita connection coefficient <nabla_u e1, e2> of the orthonormal frame.
double frame_connection(const SurfaceChart& chart, Point2 p, TangentVec u);

}  // namespace magtrap
