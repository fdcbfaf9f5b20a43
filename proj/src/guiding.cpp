#include "magtrap/guiding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "magtrap/error.hpp"
#include "magtrap/parallel.hpp"

namespace magtrap {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

TangentVec velocity(const SurfaceChart& chart, const ChargedState& s) {
    const Frame f = orthonormal_frame(chart, chart.wrap(s.position()));
    const double c = std::cos(s.chi), n = std::sin(s.chi);
    return {c * f.e1.vx + n * f.e2.vx, c * f.e1.vy + n * f.e2.vy};
}

// q - (1/(e B)) J u: the center of the osculating gyrocircle.
Point2 eikonal_center(const SurfaceChart& chart, const FieldSpec& field, const ChargedState& s,
                      double charge) {
    const Point2 q = s.position();
    const Point2 w = chart.wrap(q);
    const TangentVec ju = rotate_positively(chart, w, velocity(chart, s));
    const double k = 1.0 / (charge * field(w));
    return {q.x - k * ju.vx, q.y - k * ju.vy};
}

// Mean over [a, b] of the piecewise-linear interpolant of (t, p).
class WindowMean {
public:
    WindowMean(const std::vector<double>& t, const std::vector<Point2>& p) : t_(t), p_(p) {
        cx_.assign(t.size(), 0.0);
        cy_.assign(t.size(), 0.0);
        for (std::size_t k = 1; k < t.size(); ++k) {
            const double h = 0.5 * (t[k] - t[k - 1]);
            cx_[k] = cx_[k - 1] + h * (p[k].x + p[k - 1].x);
            cy_[k] = cy_[k - 1] + h * (p[k].y + p[k - 1].y);
        }
    }

    Point2 operator()(double a, double b) const {
        const Point2 hi = cumulative(b), lo = cumulative(a);
        return {(hi.x - lo.x) / (b - a), (hi.y - lo.y) / (b - a)};
    }

private:
    Point2 cumulative(double t) const {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t k = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
        k = std::min(k, t_.size() - 2);
        const double span = t_[k + 1] - t_[k];
        const double alpha = (t - t_[k]) / span;
        const Point2 mid{p_[k].x + alpha * (p_[k + 1].x - p_[k].x),
                         p_[k].y + alpha * (p_[k + 1].y - p_[k].y)};
        const double h = 0.5 * (t - t_[k]);
        return {cx_[k] + h * (p_[k].x + mid.x), cy_[k] + h * (p_[k].y + mid.y)};
    }

    const std::vector<double>& t_;
    const std::vector<Point2>& p_;
    std::vector<double> cx_, cy_;
};

double unwrap_step(double previous, double angle) {
    return previous + std::remainder(angle - previous, two_pi);
}

}  // namespace

const char* to_string(GuidingMethod method) {
    switch (method) {
        case GuidingMethod::sliding_average: return "sliding_average";
        case GuidingMethod::eikonal: return "eikonal";
        case GuidingMethod::averaged_eikonal: return "averaged_eikonal";
    }
    return "?";
}

GyroDecomposition gyro_decompose(const Trajectory& traj, const FieldSpec& field,
                                 const SurfaceChart& chart, double charge, GuidingMethod method) {
    if (charge == 0.0) throw Error(Errc::invalid_argument, "gyro decomposition needs e != 0");
    if (traj.states.size() < 8) throw Error(Errc::too_few_samples, "trajectory too short");
    const Point2 q0 = chart.wrap(traj.states.front().position());
    const double b0 = field(q0);
    GyroDecomposition out;
    out.method = method;
    out.gyroperiod = two_pi / (std::abs(charge) * b0);
    const double t0 = traj.times.front(), t1 = traj.times.back();
    if (t1 - t0 < 3.0 * out.gyroperiod) {
        throw Error(Errc::too_few_samples, "trajectory spans fewer than 3 gyroperiods");
    }
    const double grad = gradient(chart, field.strength(), q0).norm;
    const double gyroradius = 1.0 / (std::abs(charge) * b0);
    if (grad > 0.0 && b0 / grad < 3.0 * gyroradius) {
        throw Error(Errc::invalid_argument, "charge too small for scale separation");
    }

    std::vector<Point2> base(traj.states.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        base[i] = method == GuidingMethod::sliding_average
                      ? traj.states[i].position()
                      : eikonal_center(chart, field, traj.states[i], charge);
    }
    const WindowMean mean(traj.times, base);
    const double half = 0.5 * out.gyroperiod;
    double phase = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double t = traj.times[i];
        Point2 center = base[i];
        if (method != GuidingMethod::eikonal) {
            if (t - half < t0 || t + half > t1) continue;
            center = mean(t - half, t + half);
        }
        const Point2 q = traj.states[i].position();
        const TangentVec d{q.x - center.x, q.y - center.y};
        const double angle = std::atan2(d.vy, d.vx);
        phase = out.phase.empty() ? angle : unwrap_step(phase, angle);
        out.times.push_back(t);
        out.centers.push_back(center);
        out.gyroradius.push_back(norm(chart, chart.wrap(q), d));
        out.phase.push_back(phase);
    }
    double sq = 0.0;
    for (double r : out.gyroradius) sq += r * r;
    out.rms_gyroradius = std::sqrt(sq / static_cast<double>(out.gyroradius.size()));
    return out;
}

Section Section::line(Point2 origin, double angle, int direction) {
    const double dx = std::cos(angle), dy = std::sin(angle);
    Section s;
    s.signed_distance = [=](Point2 q) { return dx * (q.y - origin.y) - dy * (q.x - origin.x); };
    s.coordinate = [=](Point2 q) { return dx * (q.x - origin.x) + dy * (q.y - origin.y); };
    s.direction = direction;
    return s;
}

Section Section::ray(Point2 origin, double angle, int direction) {
    Section s = line(origin, angle, direction);
    const auto coord = s.coordinate;
    s.accept = [coord](Point2 q) { return coord(q) >= 0.0; };
    return s;
}

Section Section::level(const FieldSpec& field, double c, Point2 center, int direction) {
    Section s;
    s.signed_distance = [field, c](Point2 q) { return field(q) - c; };
    s.coordinate = [center](Point2 q) { return std::atan2(q.y - center.y, q.x - center.x); };
    s.direction = direction;
    return s;
}

double SectionCrossings::min_angle() const {
    double m = std::numbers::pi / 2;
    for (const Crossing& c : crossings) m = std::min(m, c.angle);
    return m;
}

SectionCrossings section_crossings(const Trajectory& traj, const Section& section) {
    SectionCrossings out;
    const auto& st = traj.states;
    if (st.size() < 2) throw Error(Errc::too_few_samples, "trajectory too short for a section");
    double f_prev = section.signed_distance(st[0].position());
    for (std::size_t i = 0; i + 1 < st.size(); ++i) {
        const double f_next = section.signed_distance(st[i + 1].position());
        const double f_here = f_prev;
        f_prev = f_next;
        if ((f_here < 0.0) == (f_next < 0.0)) continue;
        const int dir = f_next > f_here ? 1 : -1;
        if (section.direction != 0 && dir != section.direction) continue;
        const double alpha = f_here / (f_here - f_next);
        const Point2 a = st[i].position(), b = st[i + 1].position();
        const Point2 p{a.x + alpha * (b.x - a.x), a.y + alpha * (b.y - a.y)};
        if (section.accept && !section.accept(p)) continue;

        // Angle between chord and section from |df| / (|grad f| |chord|).
        const double h = 1e-6 * (1.0 + std::abs(p.x) + std::abs(p.y));
        const double gx = (section.signed_distance({p.x + h, p.y}) -
                           section.signed_distance({p.x - h, p.y})) / (2 * h);
        const double gy = (section.signed_distance({p.x, p.y + h}) -
                           section.signed_distance({p.x, p.y - h})) / (2 * h);
        const double chord = std::hypot(b.x - a.x, b.y - a.y);
        const double sine = std::abs(f_next - f_here) / (std::hypot(gx, gy) * chord);

        Crossing c;
        c.time = traj.times[i] + alpha * (traj.times[i + 1] - traj.times[i]);
        c.point = p;
        c.coordinate = section.coordinate(p);
        c.angle = std::asin(std::min(1.0, sine));
        c.direction = dir;
        if (!out.crossings.empty() && c.time <= out.crossings.back().time) continue;
        out.crossings.push_back(c);
    }
    if (out.crossings.empty()) throw Error(Errc::too_few_samples, "orbit does not cross the section");
    return out;
}

SectionCrossings phase_crossings(const Trajectory& traj, const FieldSpec& field,
                                 const SurfaceChart& chart, double chi0, bool guiding) {
    SectionCrossings out;
    const auto& st = traj.states;
    auto point = [&](std::size_t i) {
        return guiding ? eikonal_center(chart, field, st[i], traj.charge) : st[i].position();
    };
    for (std::size_t i = 0; i + 1 < st.size(); ++i) {
        const double a = st[i].chi, b = st[i + 1].chi;
        if (a == b) continue;
        const double lo = std::min(a, b), hi = std::max(a, b);
        // Multiples chi0 + 2 pi m in (lo, hi], or [lo, hi) when chi decreases.
        const double m_first = b > a ? std::floor((lo - chi0) / two_pi) + 1
                                     : std::ceil((lo - chi0) / two_pi);
        const int dir = b > a ? 1 : -1;
        std::vector<double> hits;
        for (double m = m_first; chi0 + two_pi * m <= hi; m += 1.0) {
            const double target = chi0 + two_pi * m;
            if (dir > 0 ? target > lo : target < hi) hits.push_back(target);
        }
        if (dir < 0) std::reverse(hits.begin(), hits.end());
        if (hits.empty()) continue;
        const Point2 pa = point(i), pb = point(i + 1);
        for (double target : hits) {
            const double alpha = (target - a) / (b - a);
            Crossing c;
            c.time = traj.times[i] + alpha * (traj.times[i + 1] - traj.times[i]);
            c.point = {pa.x + alpha * (pb.x - pa.x), pa.y + alpha * (pb.y - pa.y)};
            c.coordinate = target;
            c.angle = std::numbers::pi / 2;
            c.direction = dir;
            if (!out.crossings.empty() && c.time <= out.crossings.back().time) continue;
            out.crossings.push_back(c);
        }
    }
    if (out.crossings.empty()) throw Error(Errc::too_few_samples, "gyrophase never reaches chi0");
    return out;
}

RotationEstimate rotation_number(const SectionCrossings& crossings, Point2 center) {
    const auto& c = crossings.crossings;
    if (c.size() < 20) throw Error(Errc::too_few_samples, "rotation number needs >= 20 crossings");
    RotationEstimate est;
    est.count = c.size();
    std::vector<double> angle(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double a = std::atan2(c[i].point.y - center.y, c[i].point.x - center.x);
        angle[i] = i == 0 ? a : unwrap_step(angle[i - 1], a);
    }
    const double n = static_cast<double>(c.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double x = static_cast<double>(i);
        sx += x;
        sy += angle[i];
        sxx += x * x;
        sxy += x * angle[i];
    }
    est.per_crossing = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - est.per_crossing * sx) / n;
    double ss = 0.0;
    int sign = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double r = angle[i] - intercept - est.per_crossing * static_cast<double>(i);
        ss += r * r;
        if (i > 0) {
            const double step = angle[i] - angle[i - 1];
            const int s = step > 0 ? 1 : (step < 0 ? -1 : 0);
            if (s == 0 || (sign != 0 && s != sign)) est.monotone = false;
            sign = s;
        }
    }
    est.residual = std::sqrt(ss / n);
    return est;
}

PowerLaw fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(Errc::too_few_samples, "power-law fit needs at least two (x, y) pairs");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw Error(Errc::invalid_argument, "power-law fit needs positive data");
        }
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    const double vx = n * sxx - sx * sx, vy = n * syy - sy * sy, cov = n * sxy - sx * sy;
    if (!(vx > 0.0)) throw Error(Errc::invalid_argument, "power-law fit needs distinct x values");
    PowerLaw fit;
    fit.exponent = cov / vx;
    fit.prefactor = std::exp((sy - fit.exponent * sx) / n);
    fit.r_squared = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
    return fit;
}

DriftScan drift_scan(const FieldSpec& field, const SurfaceChart& chart, double c,
                     const std::vector<double>& charges, const LevelLocator& locator,
                     const DriftOptions& options) {
    if (charges.size() < 2) throw Error(Errc::invalid_argument, "drift scan needs two charges");
    for (double e : charges) {
        if (!(e > 0.0)) throw Error(Errc::invalid_argument, "drift scan charges must be positive");
    }
    DriftScan scan;
    scan.c = c;
    scan.start = find_level_seed(field, chart, c, locator.origin, locator.angle);
    const LevelSet level = locator.trace(field, chart, c);
    const double didb = dI_dB(field, chart, level, locator.options.grad_floor);
    const Point2 p0 = scan.start;
    const double grad = gradient(chart, field.strength(), chart.wrap(p0)).norm;
    const double radius = std::hypot(p0.x - options.center.x, p0.y - options.center.y);

    scan.records.resize(charges.size());
    parallel_for(
        charges.size(),
        [&](std::size_t k) {
            const double e = charges[k];
            const double period = two_pi / (e * c);
            IntegratorConfig cfg;
            cfg.dt = period / options.steps_per_gyration;
            const Trajectory traj = integrate(chart, field, {p0.x, p0.y, options.chi0}, e,
                                              options.gyrations * period, cfg);
            if (traj.exited_domain) throw Error(Errc::outside_domain, "drift orbit left the chart");
            const RotationEstimate rot =
                rotation_number(phase_crossings(traj, field, chart, options.chi0), options.center);
            DriftRecord& r = scan.records[k];
            r.charge = e;
            r.drift_per_gyration = std::abs(rot.per_crossing);
            r.oracle = std::numbers::pi * grad / (e * e * c * c * c * radius);
            r.action_prediction = two_pi * std::numbers::pi / (e * e) / (c * c * didb);
            r.residual = rot.residual;
            r.monotone = rot.monotone;
            r.crossings = rot.count;
        },
        options.threads);
    std::sort(scan.records.begin(), scan.records.end(),
              [](const DriftRecord& a, const DriftRecord& b) { return a.charge < b.charge; });
    std::vector<double> eps, drift;
    for (const DriftRecord& r : scan.records) {
        eps.push_back(1.0 / r.charge);
        drift.push_back(r.drift_per_gyration);
    }
    scan.fit = fit_power_law(eps, drift);
    return scan;
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

TrapResult trap_experiment(const FieldSpec& field, const SurfaceChart& chart, double c,
                           const std::vector<double>& charges, double horizon, int n_initial,
                           const TrapOptions& options) {
    if (!(c > 0.0)) throw Error(Errc::invalid_argument, "level value must be positive");
    if (!(horizon > 0.0)) throw Error(Errc::invalid_argument, "horizon must be positive");
    if (n_initial < 1) throw Error(Errc::invalid_argument, "need at least one initial condition");
    if (charges.empty()) throw Error(Errc::invalid_argument, "charge list is empty");
    for (double e : charges) {
        if (!(e >= 0.0)) throw Error(Errc::invalid_argument, "charges must be non-negative");
    }

    TrapResult result;
    result.c = c;
    result.horizon = horizon;
    const TwistSample twist = twist_quantity(field, chart, c, options.locator);
    result.twist = twist.twist;
    result.degenerate = classify(twist, options.tolerance) == LevelClass::degenerate;
    if (result.degenerate && !options.force) {
        throw Error(Errc::degenerate_level, "level set degenerate");
    }

    const LevelSet level = options.locator.trace(field, chart, c);
    std::mt19937_64 rng(options.seed);
    std::vector<ChargedState> starts;
    for (int k = 0; k < n_initial; ++k) {
        const double s = unit_uniform(rng()) * level.length();
        const double chi = two_pi * unit_uniform(rng());
        const auto it = std::upper_bound(level.s.begin(), level.s.end(), s);
        const std::size_t seg = std::min<std::size_t>(
            it == level.s.begin() ? 0 : static_cast<std::size_t>(it - level.s.begin()) - 1,
            level.segments() - 1);
        const double t = (s - level.s[seg]) / (level.s[seg + 1] - level.s[seg]);
        const Point2 p = chart.wrap(level.at(seg, t));
        starts.push_back({p.x, p.y, chi});
    }

    std::vector<double> sorted = charges;
    std::sort(sorted.begin(), sorted.end());
    result.records.resize(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        result.records[k].charge = sorted[k];
        result.records[k].horizon = horizon;
        result.records[k].orbits.resize(starts.size());
    }
    const std::size_t per = starts.size();
    parallel_for(
        sorted.size() * per,
        [&](std::size_t task) {
            const std::size_t k = task / per, j = task % per;
            const double e = sorted[k];
            IntegratorConfig cfg;
            cfg.dt = two_pi / (std::max(e, 1.0) * c) / options.steps_per_gyration;
            cfg.record_stride = cfg.max_steps;
            const Trajectory traj = integrate(chart, field, starts[j], e, horizon, cfg);
            OrbitOutcome& o = result.records[k].orbits[j];
            o.start = starts[j];
            o.max_excursion = std::max(traj.b_max - c, c - traj.b_min);
            o.exited_domain = traj.exited_domain;
            if (options.annulus) {
                o.left_annulus = traj.b_min < options.annulus->first ||
                                 traj.b_max > options.annulus->second;
            }
        },
        options.threads);

    for (TrapRecord& r : result.records) {
        std::vector<double> ex;
        for (const OrbitOutcome& o : r.orbits) {
            ex.push_back(o.max_excursion);
            r.any_exit = r.any_exit || o.exited_domain || o.left_annulus;
        }
        std::sort(ex.begin(), ex.end());
        const std::size_t n = ex.size();
        r.median_excursion = n % 2 ? ex[n / 2] : 0.5 * (ex[n / 2 - 1] + ex[n / 2]);
        r.max_excursion = ex.back();
    }
    return result;
}

}  // namespace magtrap
