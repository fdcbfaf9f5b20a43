#include "magtrap/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "magtrap/error.hpp"

namespace magtrap {

namespace {

std::array<double, 2> derivs(const ScalarField& f, Point2 p) {
    if (f.has_gradient()) return f.gradient(p);
    const double hr = 1e-6 * std::max(1.0, std::abs(p.x));
    const double hz = 1e-6 * std::max(1.0, std::abs(p.y));
    return {(f({p.x + hr, p.y}) - f({p.x - hr, p.y})) / (2 * hr),
            (f({p.x, p.y + hz}) - f({p.x, p.y - hz})) / (2 * hz)};
}

void require_positive_r(double r) {
    if (!(r > 0.0)) throw Error(Errc::outside_domain, "r must be positive (the z-axis is removed)");
}

double v_eff_at(const AxisymmetricPotential& pot, double M, double e, Point2 p) {
    const double k = M - e * pot.a_theta(p);
    return k * k / (2.0 * p.x * p.x);
}

std::array<double, 2> v_eff_gradient(const AxisymmetricPotential& pot, double M, double e, Point2 p) {
    const double k = M - e * pot.a_theta(p);
    const auto da = derivs(pot.a_theta, p);
    const double r2 = p.x * p.x;
    return {-k * e * da[0] / r2 - k * k / (r2 * p.x), -k * e * da[1] / r2};
}

// Largest all-true axis-aligned block of a row-major n x n mask, as
// (i0, i1, j0, j1) inclusive, i indexing r and j indexing z.
std::array<int, 4> largest_block(const std::vector<char>& mask, int n) {
    std::vector<int> height(n, 0);
    std::array<int, 4> best{-1, -1, -1, -1};
    long best_area = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) height[i] = mask[j * n + i] ? height[i] + 1 : 0;
        std::vector<int> stack;
        for (int i = 0; i <= n; ++i) {
            const int h = i < n ? height[i] : 0;
            while (!stack.empty() && height[stack.back()] >= h) {
                const int top = stack.back();
                stack.pop_back();
                const int left = stack.empty() ? 0 : stack.back() + 1;
                // Cells count as area only when the block spans >= 2 nodes each way.
                const int w = i - left, hh = height[top];
                const long area = static_cast<long>(w - 1) * (hh - 1);
                if (w >= 2 && hh >= 2 && area > best_area) {
                    best_area = area;
                    best = {left, i - 1, j - hh + 1, j};
                }
            }
            stack.push_back(i);
        }
    }
    return best;
}

double seg_distance(Point2 p, Point2 a, Point2 b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy);
}

// Max over points of a of the distance to the polyline b, using a bucket grid
// of b's segments.
double directed_hausdorff(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    double x0 = b[0].x, x1 = b[0].x, y0 = b[0].y, y1 = b[0].y;
    for (const Point2& p : b) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const std::size_t nseg = std::max<std::size_t>(b.size() - 1, 1);
    const int g = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(nseg))), 1, 1024);
    const double h = std::max({(x1 - x0) / g, (y1 - y0) / g, 1e-300});
    const int gx = static_cast<int>((x1 - x0) / h) + 1, gy = static_cast<int>((y1 - y0) / h) + 1;
    std::vector<std::vector<std::uint32_t>> cells(static_cast<std::size_t>(gx) * gy);
    auto cell_of = [&](double v, double lo, int count) {
        return std::clamp(static_cast<int>((v - lo) / h), 0, count - 1);
    };
    if (b.size() == 1) {
        cells[0].push_back(0);
    }
    for (std::size_t s = 0; s + 1 < b.size(); ++s) {
        const int i0 = cell_of(std::min(b[s].x, b[s + 1].x), x0, gx);
        const int i1 = cell_of(std::max(b[s].x, b[s + 1].x), x0, gx);
        const int j0 = cell_of(std::min(b[s].y, b[s + 1].y), y0, gy);
        const int j1 = cell_of(std::max(b[s].y, b[s + 1].y), y0, gy);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) cells[j * gx + i].push_back(static_cast<std::uint32_t>(s));
    }
    double worst = 0.0;
    for (const Point2& p : a) {
        const int ci = cell_of(p.x, x0, gx), cj = cell_of(p.y, y0, gy);
        double best = std::numeric_limits<double>::infinity();
        for (int ring = 0; ring <= std::max(gx, gy); ++ring) {
            for (int j = cj - ring; j <= cj + ring; ++j) {
                if (j < 0 || j >= gy) continue;
                for (int i = ci - ring; i <= ci + ring; ++i) {
                    if (i < 0 || i >= gx) continue;
                    if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
                    for (std::uint32_t s : cells[j * gx + i]) {
                        const Point2 q = b[s];
                        const Point2 r = s + 1 < b.size() ? b[s + 1] : b[s];
                        best = std::min(best, seg_distance(p, q, r));
                    }
                }
            }
            if (best <= ring * h) break;
        }
        worst = std::max(worst, best);
    }
    return worst;
}

State3D rhs(const AxisymmetricPotential& pot, double e, const State3D& s) {
    const Point2 p{s.r, s.z};
    const double ar = pot.a_r(p), at = pot.a_theta(p), az = pot.a_z(p);
    const auto dar = derivs(pot.a_r, p), dat = derivs(pot.a_theta, p), daz = derivs(pot.a_z, p);
    const double vr = s.p_r - e * ar, vz = s.p_z - e * az, k = s.p_theta - e * at;
    const double r2 = s.r * s.r;
    State3D d;
    d.r = vr;
    d.z = vz;
    d.theta = k / r2;
    d.p_theta = 0.0;
    d.p_r = e * k * dat[0] / r2 + k * k / (r2 * s.r) + e * vr * dar[0] + e * vz * daz[0];
    d.p_z = e * k * dat[1] / r2 + e * vr * dar[1] + e * vz * daz[1];
    return d;
}

State3D axpy(const State3D& s, const State3D& d, double h) {
    return {s.r + h * d.r,         s.theta + h * d.theta, s.z + h * d.z,
            s.p_r + h * d.p_r,     s.p_theta + h * d.p_theta, s.p_z + h * d.p_z};
}

}  // namespace

double effective_potential(const AxisymmetricPotential& pot, double M, double e, double r, double z) {
    require_positive_r(r);
    return v_eff_at(pot, M, e, {r, z});
}

double reduced_field(const AxisymmetricPotential& pot, double r, double z) {
    require_positive_r(r);
    const double v = derivs(pot.a_z, {r, z})[0] - derivs(pot.a_r, {r, z})[1];
    if (!std::isfinite(v)) throw Error(Errc::eval_error, "reduced field derivative is not finite");
    return v;
}

double ReducedProblem::v_eff(Point2 p) const { return effective_potential(potential, M, e, p.x, p.y); }

double ReducedProblem::b_theta(Point2 p) const { return reduced_field(potential, p.x, p.y); }

double ReducedProblem::b_eff(Point2 p) const {
    const double w = E - v_eff(p);
    return convention == MetricConvention::jacobi ? b_theta(p) / (2.0 * w) : b_theta(p) * w;
}

double ReducedProblem::cotangent_metric_factor(Point2 p) const { return 1.0 / (E - v_eff(p)); }

ReducedProblem reduce(const AxisymmetricPotential& pot, double M, double e, double E,
                      const ReduceOptions& options) {
    if (!(options.r_floor > 0.0)) throw Error(Errc::invalid_argument, "r_floor must be positive");
    if (options.grid < 3) throw Error(Errc::invalid_argument, "admissibility grid too coarse");
    Rect hint = options.domain;
    hint.x_min = std::max(hint.x_min, options.r_floor);
    if (!(hint.x_max > hint.x_min) || !(hint.y_max > hint.y_min)) {
        throw Error(Errc::invalid_argument, "empty admissible region: domain lies below r_floor");
    }
    ReducedProblem rp;
    rp.potential = pot;
    rp.M = M;
    rp.e = e;
    rp.E = E;
    rp.convention = options.convention;
    rp.margin = options.margin < 0.0 ? 1e-2 * std::abs(E) : options.margin;

    const int n = options.grid;
    auto node = [&](const Rect& d, int i, int j) {
        return Point2{d.x_min + d.width() * i / (n - 1), d.y_min + d.height() * j / (n - 1)};
    };
    std::vector<char> mask(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double w = E - v_eff_at(pot, M, e, node(hint, i, j));
            mask[j * n + i] = std::isfinite(w) && w > rp.margin;
        }
    }
    const auto block = largest_block(mask, n);
    if (block[0] < 0) {
        throw Error(Errc::invalid_argument, "empty admissible region: E <= V_eff + margin");
    }
    const Point2 lo = node(hint, block[0], block[2]), hi = node(hint, block[1], block[3]);
    rp.domain = {lo.x, hi.x, lo.y, hi.y};

    int sign = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double b = rp.b_eff(node(rp.domain, i, j));
            const int s = b > 0.0 ? 1 : (b < 0.0 ? -1 : 0);
            if (s == 0 || (sign != 0 && s != sign)) {
                throw Error(Errc::invalid_argument,
                            "B_eff vanishes or changes sign on the admissible region");
            }
            sign = s;
        }
    }
    rp.charge = e * sign;

    const bool jacobi = options.convention == MetricConvention::jacobi;
    ScalarField lambda;
    lambda.value = [pot, M, e, E, jacobi](Point2 p) {
        const double w = E - v_eff_at(pot, M, e, p);
        return jacobi ? std::sqrt(2.0 * w) : 1.0 / std::sqrt(w);
    };
    lambda.gradient = [pot, M, e, E, jacobi](Point2 p) {
        const double w = E - v_eff_at(pot, M, e, p);
        const double dl = jacobi ? 1.0 / std::sqrt(2.0 * w) : -0.5 * std::pow(w, -1.5);
        const auto dv = v_eff_gradient(pot, M, e, p);
        return std::array<double, 2>{-dl * dv[0], -dl * dv[1]};
    };
    rp.chart = SurfaceChart::conformal(rp.domain, lambda);

    ScalarField beff;
    beff.value = [pot, M, e, E, jacobi, sign](Point2 p) {
        const double w = E - v_eff_at(pot, M, e, p);
        const double bt = reduced_field(pot, p.x, p.y);
        return sign * (jacobi ? bt / (2.0 * w) : bt * w);
    };
    rp.field = FieldSpec(beff, rp.chart);

    ScalarField btheta;
    btheta.value = [pot, sign](Point2 p) { return sign * reduced_field(pot, p.x, p.y); };
    rp.euclidean_chart = SurfaceChart::flat(rp.domain);
    rp.euclidean_field = FieldSpec(btheta, rp.euclidean_chart);
    return rp;
}

double hamiltonian_3d(const AxisymmetricPotential& pot, double e, const State3D& s) {
    require_positive_r(s.r);
    const Point2 p{s.r, s.z};
    const double k = s.p_theta - e * pot.a_theta(p);
    const double vr = s.p_r - e * pot.a_r(p), vz = s.p_z - e * pot.a_z(p);
    return k * k / (2.0 * s.r * s.r) + 0.5 * (vr * vr + vz * vz);
}

State3D oracle_initial_state(const AxisymmetricPotential& pot, double M, double e, double E,
                             double r, double z, double chi) {
    const double w = E - effective_potential(pot, M, e, r, z);
    if (!(w > 0.0)) throw Error(Errc::invalid_argument, "initial point is not energetically allowed");
    const double speed = std::sqrt(2.0 * w);
    const Point2 p{r, z};
    State3D s;
    s.r = r;
    s.z = z;
    s.p_theta = M;
    s.p_r = speed * std::cos(chi) + e * pot.a_r(p);
    s.p_z = speed * std::sin(chi) + e * pot.a_z(p);
    return s;
}

Trajectory3D full3d_oracle(const AxisymmetricPotential& pot, const State3D& start, double e,
                           double horizon, double dt, double r_floor, std::size_t record_stride) {
    if (!(dt > 0.0) || !(horizon > 0.0)) {
        throw Error(Errc::invalid_argument, "oracle needs positive dt and horizon");
    }
    if (record_stride == 0) throw Error(Errc::invalid_argument, "record stride must be >= 1");
    if (!(start.r >= r_floor)) throw Error(Errc::outside_domain, "initial r below r_floor");
    const auto n = static_cast<std::size_t>(std::ceil(horizon / dt * (1.0 - 1e-14)));
    Trajectory3D out;
    const double h0 = hamiltonian_3d(pot, e, start);
    State3D s = start;
    out.times.push_back(0.0);
    out.states.push_back(s);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t_prev = static_cast<double>(k - 1) * dt;
        const double t = k == n ? horizon : static_cast<double>(k) * dt;
        const double h = t - t_prev;
        const State3D k1 = rhs(pot, e, s);
        const State3D k2 = rhs(pot, e, axpy(s, k1, 0.5 * h));
        const State3D k3 = rhs(pot, e, axpy(s, k2, 0.5 * h));
        const State3D k4 = rhs(pot, e, axpy(s, k3, h));
        State3D sum = k1;
        sum = axpy(sum, k2, 2.0);
        sum = axpy(sum, k3, 2.0);
        sum = axpy(sum, k4, 1.0);
        s = axpy(s, sum, h / 6.0);
        if (!(s.r >= r_floor)) throw Error(Errc::outside_domain, "orbit approached the z-axis");
        out.energy_drift = std::max(out.energy_drift, std::abs(hamiltonian_3d(pot, e, s) - h0));
        out.p_theta_drift = std::max(out.p_theta_drift, std::abs(s.p_theta - start.p_theta));
        if (k % record_stride == 0 || k == n) {
            out.times.push_back(t);
            out.states.push_back(s);
        }
    }
    return out;
}

double reduced_time(const Trajectory3D& traj, const AxisymmetricPotential& pot, double M, double e,
                    double E) {
    double tau = 0.0;
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
        const State3D& a = traj.states[i - 1];
        const State3D& b = traj.states[i];
        const double wa = E - effective_potential(pot, M, e, a.r, a.z);
        const double wb = E - effective_potential(pot, M, e, b.r, b.z);
        tau += (traj.times[i] - traj.times[i - 1]) * (wa + wb);
    }
    return tau;
}

double hausdorff_distance(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    if (a.empty() || b.empty()) throw Error(Errc::invalid_argument, "Hausdorff distance of an empty set");
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

std::vector<Point2> project_rz(const Trajectory3D& traj) {
    std::vector<Point2> out;
    out.reserve(traj.states.size());
    for (const State3D& s : traj.states) out.push_back({s.r, s.z});
    return out;
}

std::vector<Point2> positions(const Trajectory& traj) {
    std::vector<Point2> out;
    out.reserve(traj.states.size());
    for (const ChargedState& s : traj.states) out.push_back(s.position());
    return out;
}

}  // namespace magtrap
