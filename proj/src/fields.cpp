#include "magtrap/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "magtrap/error.hpp"
#include "magtrap/quadrature.hpp"

namespace magtrap {

namespace {

constexpr int kFieldGrid = 33;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

double default_step(const SurfaceChart& chart) {
    const Rect& d = chart.domain();
    return std::min(0.01, 1e-3 * std::max(d.width(), d.height()));
}

double eval_b(const FieldSpec& field, const SurfaceChart& chart, Point2 p) {
    if (!chart.contains(p)) {
        throw Error(Errc::open_curve, "level set trace left the chart domain near (" + fmt(p.x) +
                                          ", " + fmt(p.y) + ")");
    }
    const double b = field(chart.wrap(p));
    if (!std::isfinite(b)) {
        throw Error(Errc::open_curve, "field undefined at (" + fmt(p.x) + ", " + fmt(p.y) + ")");
    }
    return b;
}

// Newton projection onto {B = c} along the metric gradient.
Point2 project(const FieldSpec& field, const SurfaceChart& chart, double c, Point2 p,
               const TraceOptions& opt) {
    const double tol = opt.residual_tol * std::max(1.0, std::abs(c));
    for (int it = 0; it < 60; ++it) {
        const double r = eval_b(field, chart, p) - c;
        if (std::abs(r) <= tol) return p;
        const Gradient g = gradient(chart, field.strength(), chart.wrap(p));
        if (!(g.norm > opt.grad_floor)) {
            throw Error(Errc::near_critical,
                        "|grad B| below floor while projecting onto level " + fmt(c));
        }
        const double k = r / (g.norm * g.norm);
        // Damp steps that would jump far relative to the local gradient scale.
        double step = 1.0;
        Point2 q{p.x - k * g.vec.vx, p.y - k * g.vec.vy};
        for (int d = 0; d < 30; ++d) {
            if (chart.contains(q) && std::abs(eval_b(field, chart, q) - c) < std::abs(r)) break;
            step *= 0.5;
            q = {p.x - step * k * g.vec.vx, p.y - step * k * g.vec.vy};
        }
        p = q;
    }
    const double r = eval_b(field, chart, p) - c;
    if (std::abs(r) < 1e-9) return p;
    throw Error(Errc::near_critical, "Newton projection onto level " + fmt(c) +
                                         " did not converge (residual " + fmt(r) + ")");
}

// Unit (metric) tangent J grad B / |grad B| at p.
TangentVec level_tangent(const FieldSpec& field, const SurfaceChart& chart, Point2 p,
                         const TraceOptions& opt) {
    const Point2 q = chart.wrap(p);
    const Gradient g = gradient(chart, field.strength(), q);
    if (!(g.norm > opt.grad_floor)) {
        throw Error(Errc::near_critical, "|grad B| = " + fmt(g.norm) + " below floor at (" +
                                             fmt(p.x) + ", " + fmt(p.y) + ")");
    }
    const TangentVec t = rotate_positively(chart, q, g.vec);
    return {t.vx / g.norm, t.vy / g.norm};
}

TangentVec unit_coord(TangentVec v) {
    const double n = std::hypot(v.vx, v.vy);
    return {v.vx / n, v.vy / n};
}

double segment_length(const LevelSet& level, std::size_t i, std::size_t nodes) {
    const SurfaceChart& chart = level.chart;
    return quad::integrate(
        [&](double t) {
            const Point2 p = chart.wrap(level.at(i, t));
            return norm(chart, p, level.derivative(i, t));
        },
        0.0, 1.0, nodes);
}

}  // namespace

FieldSpec::FieldSpec(ScalarField strength, const SurfaceChart& chart,
                     std::function<bool(Point2)> support)
    : strength_(std::move(strength)), support_(std::move(support)) {
    if (!strength_.value) throw Error(Errc::invalid_argument, "field strength is empty");
    const Rect& d = chart.domain();
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    int count = 0;
    for (int i = 0; i < kFieldGrid; ++i) {
        for (int j = 0; j < kFieldGrid; ++j) {
            const Point2 p{d.x_min + d.width() * i / (kFieldGrid - 1),
                           d.y_min + d.height() * j / (kFieldGrid - 1)};
            if (support_ && !support_(p)) continue;
            const double b = strength_(p);
            if (!std::isfinite(b) || !(b > 0.0)) {
                throw Error(Errc::invalid_argument, "field must be positive: B(" + fmt(p.x) + ", " +
                                                        fmt(p.y) + ") = " + fmt(b));
            }
            lo = std::min(lo, b);
            hi = std::max(hi, b);
            ++count;
        }
    }
    if (count == 0) throw Error(Errc::invalid_argument, "field support misses the validation grid");
    min_on_grid_ = lo;
    max_on_grid_ = hi;
}

OneFormSample vector_potential(const FieldSpec& field, const SurfaceChart& chart, Point2 p,
                               Point2 base) {
    if (!chart.contains(p) || !chart.contains(base)) {
        throw Error(Errc::outside_domain, "vector potential segment leaves the chart domain");
    }
    const double dx = p.x - base.x, dy = p.y - base.y;
    auto weight = [&](double t) {
        const Point2 q{base.x + t * dx, base.y + t * dy};
        return t * field(chart.wrap(q)) * chart.metric(q).sqrt_det;
    };
    double prev = quad::integrate(weight, 0.0, 1.0, 16);
    double w = prev;
    bool converged = false;
    for (std::size_t panels = 2; panels <= 64; panels *= 2) {
        w = quad::integrate(weight, 0.0, 1.0, 16, panels);
        if (std::abs(w - prev) <= 1e-13 * std::max(1.0, std::abs(w))) {
            converged = true;
            break;
        }
        prev = w;
    }
    if (!converged) throw Error(Errc::quadrature, "vector potential quadrature did not converge");
    return {-w * dy, w * dx};
}

Point2 LevelSet::at(std::size_t i, double t) const {
    const Point2& p0 = points[i];
    const Point2& p1 = points[i + 1];
    const double l = std::hypot(p1.x - p0.x, p1.y - p0.y);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return {h00 * p0.x + h10 * l * tangents[i].vx + h01 * p1.x + h11 * l * tangents[i + 1].vx,
            h00 * p0.y + h10 * l * tangents[i].vy + h01 * p1.y + h11 * l * tangents[i + 1].vy};
}

TangentVec LevelSet::derivative(std::size_t i, double t) const {
    const Point2& p0 = points[i];
    const Point2& p1 = points[i + 1];
    const double l = std::hypot(p1.x - p0.x, p1.y - p0.y);
    const double t2 = t * t;
    const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
    const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
    return {d00 * p0.x + d10 * l * tangents[i].vx + d01 * p1.x + d11 * l * tangents[i + 1].vx,
            d00 * p0.y + d10 * l * tangents[i].vy + d01 * p1.y + d11 * l * tangents[i + 1].vy};
}

LevelSet trace_level_set(const FieldSpec& field, const SurfaceChart& chart, double c, Point2 seed,
                         const TraceOptions& options) {
    TraceOptions opt = options;
    if (!(opt.step > 0.0)) opt.step = default_step(chart);
    const double h = opt.step;

    LevelSet level;
    level.c = c;
    level.chart = chart;

    const Point2 start = project(field, chart, c, seed, opt);
    const TangentVec t0 = level_tangent(field, chart, start, opt);
    level.points.push_back(start);
    level.tangents.push_back(unit_coord(t0));

    const double period = chart.domain().width();
    double travelled = 0.0;  // coordinate path length
    Point2 p = start;
    TangentVec t = t0;

    for (std::size_t k = 0; k < opt.max_steps; ++k) {
        // Closure check: is the start (or its periodic image) within the next step?
        const double coord_step = h * std::hypot(t.vx, t.vy);
        if (travelled > 3.0 * coord_step) {
            Point2 target = start;
            if (chart.periodic_x()) {
                const double n = std::round((p.x - start.x) / period);
                target.x += n * period;
            }
            const double dx = target.x - p.x, dy = target.y - p.y;
            const double dist = std::hypot(dx, dy);
            if (dist <= 1.2 * coord_step && (dx * t.vx + dy * t.vy) > 0.0) {
                if (dist < 0.25 * coord_step && level.points.size() > 2) {
                    level.points.back() = target;
                    level.tangents.back() = level.tangents.front();
                } else {
                    level.points.push_back(target);
                    level.tangents.push_back(level.tangents.front());
                }
                level.closed = true;
                break;
            }
        }
        // Midpoint predictor along the level tangent, then Newton corrector.
        const Point2 mid{p.x + 0.5 * h * t.vx, p.y + 0.5 * h * t.vy};
        const TangentVec tm = level_tangent(field, chart, mid, opt);
        const Point2 pred{p.x + h * tm.vx, p.y + h * tm.vy};
        const Point2 next = project(field, chart, c, pred, opt);
        travelled += std::hypot(next.x - p.x, next.y - p.y);
        p = next;
        t = level_tangent(field, chart, p, opt);
        level.points.push_back(p);
        level.tangents.push_back(unit_coord(t));
    }
    if (!level.closed) {
        throw Error(Errc::step_limit, "level set trace hit the step ceiling at level " + fmt(c));
    }

    for (const Point2& q : level.points) {
        if (std::abs(eval_b(field, chart, q) - c) >= 1e-9) {
            throw Error(Errc::near_critical, "level set vertex residual exceeds 1e-9 at level " + fmt(c));
        }
    }

    // Orientation: signed area for curves closing in place, x-direction for
    // curves that close around a periodic chart.
    const Point2& last = level.points.back();
    if (chart.periodic_x() && std::abs(last.x - start.x) > 0.5 * period) {
        level.orientation = last.x > start.x ? 1 : -1;
    } else {
        double area = 0.0;
        for (std::size_t i = 0; i + 1 < level.points.size(); ++i) {
            area += level.points[i].x * level.points[i + 1].y - level.points[i + 1].x * level.points[i].y;
        }
        level.orientation = area >= 0.0 ? 1 : -1;
    }

    level.s.assign(level.points.size(), 0.0);
    for (std::size_t i = 0; i + 1 < level.points.size(); ++i) {
        level.s[i + 1] = level.s[i] + segment_length(level, i, 8);
    }
    return level;
}

Point2 find_level_seed(const FieldSpec& field, const SurfaceChart& chart, double c, Point2 origin,
                       double angle) {
    if (!chart.contains(origin)) {
        throw Error(Errc::outside_domain, "level seed origin outside the chart domain");
    }
    const double ux = std::cos(angle), uy = std::sin(angle);
    const double h = default_step(chart);
    auto b_at = [&](double s) { return field(chart.wrap({origin.x + s * ux, origin.y + s * uy})) - c; };
    const double f0 = b_at(0.0);
    if (f0 == 0.0) return origin;
    double s_prev = 0.0, f_prev = f0;
    for (double s = h;; s += h) {
        const Point2 q{origin.x + s * ux, origin.y + s * uy};
        if (!chart.contains(q) || (field.support() && !field.support()(chart.wrap(q)))) break;
        const double f = b_at(s);
        if (!std::isfinite(f)) break;
        if ((f > 0.0) != (f_prev > 0.0) || f == 0.0) {
            double lo = s_prev, hi = s, flo = f_prev;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
                const double m = 0.5 * (lo + hi);
                const double fm = b_at(m);
                if ((fm > 0.0) == (flo > 0.0)) {
                    lo = m;
                    flo = fm;
                } else {
                    hi = m;
                }
            }
            const double m = 0.5 * (lo + hi);
            return {origin.x + m * ux, origin.y + m * uy};
        }
        s_prev = s;
        f_prev = f;
    }
    throw Error(Errc::near_critical, "no crossing of level " + fmt(c) + " along the seed ray");
}

LevelSet LevelLocator::trace(const FieldSpec& field, const SurfaceChart& chart, double c) const {
    const Point2 seed = find_level_seed(field, chart, c, origin, angle);
    return trace_level_set(field, chart, c, seed, options);
}

double line_integral(const LevelSet& level, const std::function<double(Point2)>& integrand,
                     double rel_tol) {
    if (!level.closed) throw Error(Errc::open_curve, "line integral requires a closed level set");
    const SurfaceChart& chart = level.chart;
    auto total = [&](std::size_t panels) {
        double sum = 0.0, mag = 0.0;
        for (std::size_t i = 0; i < level.segments(); ++i) {
            sum += quad::integrate(
                [&](double t) {
                    const Point2 p = chart.wrap(level.at(i, t));
                    const double f = integrand(p);
                    const double ds = norm(chart, p, level.derivative(i, t));
                    mag += std::abs(f) * ds;
                    return f * ds;
                },
                0.0, 1.0, 3, panels);
        }
        return std::pair{sum, mag};
    };
    double prev = total(1).first;
    for (std::size_t panels = 2; panels <= 64; panels *= 2) {
        auto [cur, mag] = total(panels);
        // Scale by the integral of |f| so that vanishing integrals converge.
        if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), 1e-3 * mag) ||
            mag == 0.0) {
            return cur;
        }
        prev = cur;
    }
    throw Error(Errc::quadrature, "line integral did not converge");
}

}  // namespace magtrap
