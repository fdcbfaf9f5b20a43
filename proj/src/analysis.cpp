#include "magtrap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "magtrap/error.hpp"
#include "magtrap/quadrature.hpp"

namespace magtrap {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

bool usable(const FieldSpec& field, const SurfaceChart& chart, Point2 p) {
    if (!chart.contains(p)) return false;
    const Point2 q = chart.wrap(p);
    return !field.support() || field.support()(q);
}

// Distance t >= 0 at which B(origin + t dir) first reaches `level`. Zero when
// the origin is already on the far side.
double ray_crossing(const FieldSpec& field, const SurfaceChart& chart, Point2 origin,
                    std::array<double, 2> dir, double level, double side) {
    auto b_at = [&](double t) {
        const Point2 p{origin.x + t * dir[0], origin.y + t * dir[1]};
        if (!usable(field, chart, p)) {
            throw Error(Errc::outside_domain,
                        "a ray leaves the chart before reaching the level (annulus clipped)");
        }
        return side * (field(chart.wrap(p)) - level);
    };
    if (b_at(0.0) >= 0.0) return 0.0;
    const Rect& d = chart.domain();
    const double h = 2e-3 * std::max(d.width(), d.height());
    double lo = 0.0, hi = h;
    while (b_at(hi) < 0.0) {
        lo = hi;
        hi += h;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (b_at(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Integral of B sqrt(g) over {side * (B - level) < 0} seen from `center`,
// with n_angles rays and `panels` Gauss-Legendre panels per ray.
double swept_weight(const FieldSpec& field, const SurfaceChart& chart, Point2 center, double level,
                    double side, int n_angles, int panels) {
    const bool strip = chart.periodic_x();
    const Rect& d = chart.domain();
    double vertical = 1.0;
    if (strip) {
        const double by = partials(chart, field.strength(), chart.wrap(center))[1];
        vertical = (by >= 0.0 ? 1.0 : -1.0) * side;
    }
    double sum = 0.0;
    for (int j = 0; j < n_angles; ++j) {
        Point2 base = center;
        std::array<double, 2> dir;
        if (strip) {
            // Vertical rays over one period toward the level; area element dx dy.
            base.x = d.x_min + d.width() * j / n_angles;
            dir = {0.0, vertical};
        } else {
            const double theta = two_pi * j / n_angles;
            dir = {std::cos(theta), std::sin(theta)};
        }
        const double reach = ray_crossing(field, chart, base, dir, level, side);
        if (reach == 0.0) continue;
        sum += quad::integrate(
            [&](double t) {
                const Point2 p = chart.wrap({base.x + t * dir[0], base.y + t * dir[1]});
                const double w = field(p) * chart.metric(p).sqrt_det;
                return strip ? w : w * t;
            },
            0.0, reach, 12, panels);
    }
    return sum * (strip ? d.width() : two_pi) / n_angles;
}

double level_derivative(const FieldSpec& field, const SurfaceChart& chart, double c,
                        const LevelLocator& locator) {
    return dI_dB(field, chart, locator.trace(field, chart, c), locator.options.grad_floor);
}

// L^k (1/B) at tau = 0 for k < order, with L = (1/B) d/dtau along p + tau w, via Chebyshev
// differentiation on [-a, a] with n + 1 Lobatto nodes (n even).
std::vector<double> iterated_derivatives(const FieldSpec& field, Point2 p,
                                         std::array<double, 2> w, double a, int n, int order) {
    std::vector<double> x(n + 1), inv_b(n + 1), weight(n + 1);
    for (int j = 0; j <= n; ++j) {
        x[j] = (2 * j == n) ? 0.0 : std::cos(std::numbers::pi * j / n);
        weight[j] = ((j == 0 || j == n) ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0);
        inv_b[j] = 1.0 / field({p.x + a * x[j] * w[0], p.y + a * x[j] * w[1]});
    }
    std::vector<double> dmat((n + 1) * (n + 1), 0.0);
    for (int i = 0; i <= n; ++i) {
        double diag = 0.0;
        for (int j = 0; j <= n; ++j) {
            if (i == j) continue;
            const double v = weight[i] / weight[j] / (x[i] - x[j]) / a;
            dmat[i * (n + 1) + j] = v;
            diag -= v;
        }
        dmat[i * (n + 1) + i] = diag;
    }
    std::vector<double> g = inv_b, out;
    out.push_back(g[n / 2]);
    for (int k = 1; k < order; ++k) {
        std::vector<double> next(n + 1, 0.0);
        for (int i = 0; i <= n; ++i) {
            double acc = 0.0;
            for (int j = 0; j <= n; ++j) acc += dmat[i * (n + 1) + j] * g[j];
            next[i] = inv_b[i] * acc;
        }
        g.swap(next);
        out.push_back(g[n / 2]);
    }
    return out;
}

}  // namespace

double action_integral(const FieldSpec& field, const SurfaceChart& chart, double c, double c_ref,
                       Point2 center, double rel_tol) {
    if (!usable(field, chart, center)) {
        throw Error(Errc::outside_domain, "action center outside the chart");
    }
    if (!(rel_tol > 0.0)) throw Error(Errc::invalid_argument, "action tolerance must be positive");
    if (c == c_ref) return 0.0;
    const double b0 = field(chart.wrap(center));
    const double side_c = c > b0 ? 1.0 : -1.0;
    const double side_ref = c_ref > b0 ? 1.0 : -1.0;
    if (side_c != side_ref) {
        throw Error(Errc::invalid_argument, "levels lie on both sides of B at the action center");
    }
    // B grows away from the center when side = +1, so {c_ref <= B <= c} is
    // the difference of the swept regions of c and c_ref.
    double previous = 0.0;
    for (int n = 32, panels = 1; n <= 16384; n *= 2, panels *= 2) {
        const double value = side_c * (swept_weight(field, chart, center, c, side_c, n, panels) -
                                       swept_weight(field, chart, center, c_ref, side_c, n, panels));
        if (n > 32 && std::abs(value - previous) <= rel_tol * std::abs(value)) return value;
        previous = value;
    }
    throw Error(Errc::quadrature, "action integral did not converge");
}

double dI_dB(const FieldSpec& field, const SurfaceChart& chart, const LevelSet& level,
             double grad_floor, double rel_tol) {
    return line_integral(
        level,
        [&](Point2 p) {
            const Gradient g = gradient(chart, field.strength(), p);
            if (g.norm < grad_floor) {
                throw Error(Errc::near_critical, "|grad B| below the floor on the level");
            }
            return field(p) / g.norm;
        },
        rel_tol);
}

ExpandedTerms expanded_integrand(const FieldSpec& field, const SurfaceChart& chart, Point2 p) {
    const ScalarField& b = field.strength();
    const double value = b(p);
    const double n = gradient(chart, b, p).norm;
    if (!(n > 0.0)) throw Error(Errc::near_critical, "expanded integrand at a critical point");
    ExpandedTerms t;
    t.inverse_gradient = 3.0 / n;
    t.gradient_growth = -2.0 * value * grad_norm_along_grad(chart, b, p) / std::pow(n, 4);
    t.laplacian = value * laplacian(chart, b, p) / (n * n * n);
    t.total = t.inverse_gradient + t.gradient_growth + t.laplacian;
    return t;
}

double expanded_twist(const FieldSpec& field, const SurfaceChart& chart, const LevelSet& level) {
    return line_integral(
        level, [&](Point2 p) { return expanded_integrand(field, chart, p).total; });
}

double d2I_dB2(const FieldSpec& field, const SurfaceChart& chart, double c,
               const LevelLocator& locator, SecondDerivativeRoute route) {
    if (route == SecondDerivativeRoute::expanded) {
        const LevelSet level = locator.trace(field, chart, c);
        return expanded_twist(field, chart, level) -
               2.0 / c * dI_dB(field, chart, level, locator.options.grad_floor);
    }
    const double h = 1e-4 * std::abs(c);
    auto centered = [&](double step) {
        return (level_derivative(field, chart, c + step, locator) -
                level_derivative(field, chart, c - step, locator)) /
               (2.0 * step);
    };
    return (4.0 * centered(0.5 * h) - centered(h)) / 3.0;
}

TwistSample twist_quantity(const FieldSpec& field, const SurfaceChart& chart, double c,
                           const LevelLocator& locator, SecondDerivativeRoute route) {
    if (!(c > 0.0)) throw Error(Errc::invalid_argument, "level value must be positive");
    const LevelSet level = locator.trace(field, chart, c);
    TwistSample s;
    s.c = c;
    s.dI_dB = dI_dB(field, chart, level, locator.options.grad_floor);
    if (route == SecondDerivativeRoute::expanded) {
        s.twist = expanded_twist(field, chart, level);
        s.d2I_dB2 = s.twist - 2.0 / c * s.dI_dB;
    } else {
        s.d2I_dB2 = d2I_dB2(field, chart, c, locator, route);
        s.twist = s.d2I_dB2 + 2.0 / c * s.dI_dB;
    }
    s.relative = std::abs(s.twist) / (2.0 / c * s.dI_dB);
    return s;
}

const char* to_string(LevelClass cls) {
    switch (cls) {
        case LevelClass::nondegenerate: return "nondegenerate";
        case LevelClass::degenerate: return "degenerate";
        case LevelClass::near_critical_skipped: return "near_critical_skipped";
    }
    return "?";
}

LevelClass classify(const TwistSample& sample, double tolerance) {
    return sample.relative > tolerance ? LevelClass::nondegenerate : LevelClass::degenerate;
}

ScanResult degeneracy_scan(const FieldSpec& field, const SurfaceChart& chart, double c_min,
                           double c_max, int n, const LevelLocator& locator,
                           const ScanOptions& options) {
    if (n < 2) throw Error(Errc::invalid_argument, "a scan needs at least two levels");
    if (!(c_min > 0.0) || !(c_max > c_min)) {
        throw Error(Errc::invalid_argument, "scan range must satisfy 0 < c_min < c_max");
    }
    if (!(options.tolerance > 0.0)) {
        throw Error(Errc::invalid_argument, "degeneracy tolerance must be positive");
    }
    ScanResult out;
    out.report.tolerance = options.tolerance;
    bool have_ref = false;
    for (int k = 0; k < n; ++k) {
        const double c = c_min + (c_max - c_min) * k / (n - 1);
        LevelReport rep;
        rep.c = c;
        TwistSample s;
        try {
            s = twist_quantity(field, chart, c, locator, options.route);
        } catch (const Error& err) {
            if (err.code() != Errc::near_critical) throw;
            rep.cls = LevelClass::near_critical_skipped;
            rep.note = err.what();
            out.report.levels.push_back(rep);
            continue;
        }
        rep.cls = classify(s, options.tolerance);
        rep.twist = s.twist;
        rep.relative = s.relative;
        out.report.levels.push_back(rep);

        if (!have_ref) {
            out.profile.c_ref = c;
            have_ref = true;
        }
        ActionRecord r;
        r.c = c;
        r.dI_dB = s.dI_dB;
        r.d2I_dB2 = s.d2I_dB2;
        r.twist = s.twist;
        r.cls = rep.cls;
        if (options.compute_action) {
            r.I = action_integral(field, chart, c, out.profile.c_ref, locator.origin,
                                  options.action_tol);
        }
        out.profile.records.push_back(r);
    }
    if (out.profile.records.size() < 2) {
        throw Error(Errc::too_few_samples, "fewer than two levels could be traced");
    }
    return out;
}

std::vector<double> inverse_field_curvature(const ActionProfile& profile) {
    const auto& r = profile.records;
    if (r.size() < 3) throw Error(Errc::too_few_samples, "curvature needs three records");
    std::vector<double> out;
    for (std::size_t k = 1; k + 1 < r.size(); ++k) {
        const double x0 = r[k - 1].I, x1 = r[k].I, x2 = r[k + 1].I;
        if (!(x0 < x1 && x1 < x2)) {
            throw Error(Errc::invalid_argument, "action must increase along the profile");
        }
        const double s01 = (1.0 / r[k].c - 1.0 / r[k - 1].c) / (x1 - x0);
        const double s12 = (1.0 / r[k + 1].c - 1.0 / r[k].c) / (x2 - x1);
        out.push_back(2.0 * (s12 - s01) / (x2 - x0));
    }
    return out;
}

double NormalFormSeries::partial_sum(double epsilon) const {
    double sum = 0.0, power = 1.0;
    for (double h : coefficients) {
        sum += power * h;
        power *= epsilon;
    }
    return sum;
}

NormalFormSeries flat_normal_form_hamiltonian(const FieldSpec& field, const SurfaceChart& chart,
                                              Point2 p, double chi, int order) {
    if (!chart.is_flat()) {
        throw Error(Errc::invalid_argument, "the normal form series needs a flat chart");
    }
    if (order < 1 || order > 4) throw Error(Errc::invalid_argument, "order must be in 1..4");
    if (!usable(field, chart, p)) throw Error(Errc::outside_domain, "point outside the chart");
    const std::array<double, 2> w{-std::sin(chi), std::cos(chi)};

    // Longest symmetric segment along w inside the rectangle, capped.
    const Rect& d = chart.domain();
    double a = 0.25 * std::min(d.width(), d.height());
    auto clip = [&](double pos, double lo, double hi, double dir) {
        if (std::abs(dir) < 1e-300) return;
        a = std::min(a, std::min(hi - pos, pos - lo) / std::abs(dir));
    };
    clip(p.x, d.x_min, d.x_max, w[0]);
    clip(p.y, d.y_min, d.y_max, w[1]);
    a *= 0.999;
    if (!(a > 1e-8 * std::max(d.width(), d.height()))) {
        throw Error(Errc::outside_domain, "point too close to the chart boundary");
    }
    for (int j = 0; j <= 8; ++j) {
        const double t = a * (2.0 * j / 8 - 1.0);
        if (!usable(field, chart, {p.x + t * w[0], p.y + t * w[1]})) {
            throw Error(Errc::outside_domain, "field undefined along the normal form segment");
        }
    }

    const std::vector<double> fine = iterated_derivatives(field, p, w, a, 20, order);
    const std::vector<double> coarse = iterated_derivatives(field, p, w, a, 14, order);
    const double inv_b = 1.0 / field(p);
    NormalFormSeries out;
    for (int i = 1; i <= order; ++i) {
        double v = fine[i - 1];
        if (i == 1) {
            v = inv_b;
        } else if (std::abs(v - coarse[i - 1]) > 1e-6 * std::max(std::abs(v), inv_b)) {
            throw Error(Errc::quadrature, "normal form derivatives are not resolved");
        }
        out.coefficients.push_back(v / (i * (i + 1)));
    }
    return out;
}

}  // namespace magtrap
