#include "magtrap/geometry.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "magtrap/error.hpp"

namespace magtrap {

namespace {

constexpr int kValidationGrid = 17;

std::string describe(Point2 p) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << p.x << ", " << p.y << ")";
    return os.str();
}

MetricSample make_sample(double g11, double g12, double g22, Point2 p) {
    const double det = g11 * g22 - g12 * g12;
    if (!(g11 > 0.0) || !(det > 0.0) || !std::isfinite(det)) {
        throw Error(Errc::degenerate_metric, "metric not positive definite at " + describe(p));
    }
    return {g11, g12, g22, det, std::sqrt(det)};
}

// Inverse metric components (g^11, g^12, g^22).
std::array<double, 3> inverse(const MetricSample& m) {
    return {m.g22 / m.det, -m.g12 / m.det, m.g11 / m.det};
}

// Christoffel symbols Gamma^k_ij with gamma[k][i][j].
using Christoffel = std::array<std::array<std::array<double, 2>, 2>, 2>;

Christoffel christoffel(const MetricJet& jet) {
    // dg[a][b][c] = d g_ab / dx^c
    double dg[2][2][2];
    for (int c = 0; c < 2; ++c) {
        dg[0][0][c] = jet.d11[c];
        dg[0][1][c] = jet.d12[c];
        dg[1][0][c] = jet.d12[c];
        dg[1][1][c] = jet.d22[c];
    }
    const auto ginv = inverse(jet.g);
    const double gi[2][2] = {{ginv[0], ginv[1]}, {ginv[1], ginv[2]}};
    Christoffel gamma{};
    for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                double s = 0.0;
                for (int l = 0; l < 2; ++l) {
                    s += gi[k][l] * (dg[l][j][i] + dg[l][i][j] - dg[i][j][l]);
                }
                gamma[k][i][j] = 0.5 * s;
            }
        }
    }
    return gamma;
}

double det3(const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace

ScalarField ScalarField::constant(double c) {
    ScalarField f;
    f.value = [c](Point2) { return c; };
    f.gradient = [](Point2) { return std::array<double, 2>{0.0, 0.0}; };
    f.hessian = [](Point2) { return Hessian2{}; };
    return f;
}

struct SurfaceChart::Impl {
    Rect domain;
    MetricKind kind = MetricKind::flat;
    bool periodic_x = false;
    ScalarField lambda;
    ScalarField g[3];
};

SurfaceChart::SurfaceChart(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {
    const Rect& d = impl_->domain;
    if (!(d.x_max > d.x_min) || !(d.y_max > d.y_min)) {
        throw Error(Errc::invalid_argument, "chart domain must have positive width and height");
    }
    if (impl_->kind == MetricKind::flat) return;
    for (int i = 0; i < kValidationGrid; ++i) {
        for (int j = 0; j < kValidationGrid; ++j) {
            const Point2 p{d.x_min + d.width() * i / (kValidationGrid - 1),
                           d.y_min + d.height() * j / (kValidationGrid - 1)};
            metric(p);  // throws on a non-positive-definite sample
        }
    }
}

SurfaceChart SurfaceChart::flat(Rect domain, bool periodic_x) {
    auto impl = std::make_shared<Impl>();
    impl->domain = domain;
    impl->kind = MetricKind::flat;
    impl->periodic_x = periodic_x;
    return SurfaceChart(std::move(impl));
}

SurfaceChart SurfaceChart::conformal(Rect domain, ScalarField lambda, bool periodic_x) {
    if (!lambda.value) throw Error(Errc::invalid_argument, "conformal factor is empty");
    auto impl = std::make_shared<Impl>();
    impl->domain = domain;
    impl->kind = MetricKind::conformal;
    impl->periodic_x = periodic_x;
    impl->lambda = std::move(lambda);
    return SurfaceChart(std::move(impl));
}

SurfaceChart SurfaceChart::general(Rect domain, ScalarField g11, ScalarField g12, ScalarField g22,
                                   bool periodic_x, bool declared_flat) {
    if (!g11.value || !g12.value || !g22.value) {
        throw Error(Errc::invalid_argument, "metric component is empty");
    }
    if (declared_flat) {
        for (int i = 0; i < kValidationGrid; ++i) {
            for (int j = 0; j < kValidationGrid; ++j) {
                const Point2 p{domain.x_min + domain.width() * i / (kValidationGrid - 1),
                               domain.y_min + domain.height() * j / (kValidationGrid - 1)};
                if (std::abs(g11(p) - 1.0) > 1e-12 || std::abs(g12(p)) > 1e-12 ||
                    std::abs(g22(p) - 1.0) > 1e-12) {
                    throw Error(Errc::invalid_argument,
                                "chart declared flat but metric differs from identity at " +
                                    describe(p));
                }
            }
        }
        return flat(domain, periodic_x);
    }
    auto impl = std::make_shared<Impl>();
    impl->domain = domain;
    impl->kind = MetricKind::general;
    impl->periodic_x = periodic_x;
    impl->g[0] = std::move(g11);
    impl->g[1] = std::move(g12);
    impl->g[2] = std::move(g22);
    return SurfaceChart(std::move(impl));
}

const Rect& SurfaceChart::domain() const { return impl_->domain; }
MetricKind SurfaceChart::kind() const { return impl_->kind; }
bool SurfaceChart::periodic_x() const { return impl_->periodic_x; }
double SurfaceChart::fd_step() const { return 1e-5 * impl_->domain.width(); }
double SurfaceChart::fd_step2() const { return 1e-4 * impl_->domain.width(); }

bool SurfaceChart::contains(Point2 p) const {
    const Rect& d = impl_->domain;
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    if (p.y < d.y_min || p.y > d.y_max) return false;
    return impl_->periodic_x || (p.x >= d.x_min && p.x <= d.x_max);
}

Point2 SurfaceChart::wrap(Point2 p) const {
    if (!impl_->periodic_x) return p;
    const Rect& d = impl_->domain;
    double x = std::fmod(p.x - d.x_min, d.width());
    if (x < 0.0) x += d.width();
    return {d.x_min + x, p.y};
}

MetricSample SurfaceChart::metric(Point2 p) const {
    if (!contains(p)) throw Error(Errc::outside_domain, "point outside chart domain: " + describe(p));
    const Point2 q = wrap(p);
    switch (impl_->kind) {
        case MetricKind::flat:
            return {};
        case MetricKind::conformal: {
            const double l = impl_->lambda(q);
            const double l2 = l * l;
            if (!(l2 > 0.0) || !std::isfinite(l2)) {
                throw Error(Errc::degenerate_metric, "conformal factor vanishes at " + describe(p));
            }
            return {l2, 0.0, l2, l2 * l2, l2};
        }
        case MetricKind::general:
            return make_sample(impl_->g[0](q), impl_->g[1](q), impl_->g[2](q), p);
    }
    return {};
}

MetricJet SurfaceChart::metric_jet(Point2 p) const {
    MetricJet jet;
    jet.g = metric(p);
    switch (impl_->kind) {
        case MetricKind::flat:
            break;
        case MetricKind::conformal: {
            const double l = impl_->lambda(wrap(p));
            const auto dl = partials(*this, impl_->lambda, p);
            for (int c = 0; c < 2; ++c) {
                jet.d11[c] = 2.0 * l * dl[c];
                jet.d22[c] = jet.d11[c];
            }
            break;
        }
        case MetricKind::general:
            jet.d11 = partials(*this, impl_->g[0], p);
            jet.d12 = partials(*this, impl_->g[1], p);
            jet.d22 = partials(*this, impl_->g[2], p);
            break;
    }
    return jet;
}

const ScalarField& SurfaceChart::conformal_factor() const {
    if (impl_->kind != MetricKind::conformal) {
        throw Error(Errc::invalid_argument, "chart is not conformal");
    }
    return impl_->lambda;
}

const ScalarField& SurfaceChart::component(int index) const {
    if (impl_->kind != MetricKind::general || index < 0 || index > 2) {
        throw Error(Errc::invalid_argument, "chart has no general metric component " +
                                                std::to_string(index));
    }
    return impl_->g[index];
}

MetricSample metric_at(const SurfaceChart& chart, Point2 p) { return chart.metric(p); }

double inner(const SurfaceChart& chart, Point2 p, TangentVec u, TangentVec v) {
    const MetricSample m = chart.metric(p);
    return m.g11 * u.vx * v.vx + m.g12 * (u.vx * v.vy + u.vy * v.vx) + m.g22 * u.vy * v.vy;
}

double norm(const SurfaceChart& chart, Point2 p, TangentVec v) {
    return std::sqrt(inner(chart, p, v, v));
}

Frame orthonormal_frame(const SurfaceChart& chart, Point2 p) {
    const MetricSample m = chart.metric(p);
    const double a = std::sqrt(m.g11);
    const double b = std::sqrt(m.g11 * m.det);
    return {{1.0 / a, 0.0}, {-m.g12 / b, m.g11 / b}};
}

TangentVec rotate_positively(const SurfaceChart& chart, Point2 p, TangentVec v) {
    const MetricSample m = chart.metric(p);
    return {-(m.g12 * v.vx + m.g22 * v.vy) / m.sqrt_det, (m.g11 * v.vx + m.g12 * v.vy) / m.sqrt_det};
}

std::array<double, 2> partials(const SurfaceChart& chart, const ScalarField& f, Point2 p) {
    if (f.gradient) {
        if (!chart.contains(p)) {
            throw Error(Errc::outside_domain, "point outside chart domain: " + describe(p));
        }
        return f.gradient(chart.wrap(p));
    }
    const double h = chart.fd_step();
    const Point2 s[4] = {{p.x + h, p.y}, {p.x - h, p.y}, {p.x, p.y + h}, {p.x, p.y - h}};
    for (const Point2& q : s) {
        if (!chart.contains(q)) {
            throw Error(Errc::outside_domain, "finite-difference stencil leaves the domain at " +
                                                  describe(p));
        }
    }
    return {(f(chart.wrap(s[0])) - f(chart.wrap(s[1]))) / (2.0 * h),
            (f(chart.wrap(s[2])) - f(chart.wrap(s[3]))) / (2.0 * h)};
}

Hessian2 second_partials(const SurfaceChart& chart, const ScalarField& f, Point2 p) {
    if (f.hessian) {
        if (!chart.contains(p)) {
            throw Error(Errc::outside_domain, "point outside chart domain: " + describe(p));
        }
        return f.hessian(chart.wrap(p));
    }
    if (f.gradient) {
        const double h = chart.fd_step2();
        const Point2 xp{p.x + h, p.y}, xm{p.x - h, p.y}, yp{p.x, p.y + h}, ym{p.x, p.y - h};
        const auto gxp = partials(chart, f, xp), gxm = partials(chart, f, xm);
        const auto gyp = partials(chart, f, yp), gym = partials(chart, f, ym);
        return {(gxp[0] - gxm[0]) / (2.0 * h),
                0.25 * ((gxp[1] - gxm[1]) + (gyp[0] - gym[0])) / h,
                (gyp[1] - gym[1]) / (2.0 * h)};
    }
    const double h = chart.fd_step2();
    auto at = [&](double dx, double dy) {
        const Point2 q{p.x + dx, p.y + dy};
        if (!chart.contains(q)) {
            throw Error(Errc::outside_domain, "finite-difference stencil leaves the domain at " +
                                                  describe(p));
        }
        return f(chart.wrap(q));
    };
    const double f0 = at(0, 0);
    return {(at(h, 0) - 2.0 * f0 + at(-h, 0)) / (h * h),
            (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h),
            (at(0, h) - 2.0 * f0 + at(0, -h)) / (h * h)};
}

Gradient gradient(const SurfaceChart& chart, const ScalarField& f, Point2 p) {
    const MetricSample m = chart.metric(p);
    const auto df = partials(chart, f, p);
    const auto gi = inverse(m);
    Gradient out;
    out.df = df;
    out.vec = {gi[0] * df[0] + gi[1] * df[1], gi[1] * df[0] + gi[2] * df[1]};
    out.norm = std::sqrt(std::max(0.0, df[0] * out.vec.vx + df[1] * out.vec.vy));
    return out;
}

double laplacian(const SurfaceChart& chart, const ScalarField& f, Point2 p) {
    const MetricJet jet = chart.metric_jet(p);
    const auto df = partials(chart, f, p);
    const Hessian2 h = second_partials(chart, f, p);
    const auto gi = inverse(jet.g);
    const double ginv[2][2] = {{gi[0], gi[1]}, {gi[1], gi[2]}};
    const double hess[2][2] = {{h.xx, h.xy}, {h.xy, h.yy}};
    const Christoffel gamma = christoffel(jet);
    double s = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            double cov = hess[i][j];
            for (int k = 0; k < 2; ++k) cov -= gamma[k][i][j] * df[k];
            s += ginv[i][j] * cov;
        }
    }
    return s;
}

double grad_norm_along_grad(const SurfaceChart& chart, const ScalarField& f, Point2 p) {
    const MetricJet jet = chart.metric_jet(p);
    const auto df = partials(chart, f, p);
    const Hessian2 h = second_partials(chart, f, p);
    const auto gi = inverse(jet.g);
    const double ginv[2][2] = {{gi[0], gi[1]}, {gi[1], gi[2]}};
    const double hess[2][2] = {{h.xx, h.xy}, {h.xy, h.yy}};
    const std::array<double, 2>* dcomp[2][2] = {{&jet.d11, &jet.d12}, {&jet.d12, &jet.d22}};

    double norm2 = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) norm2 += ginv[i][j] * df[i] * df[j];
    const double nrm = std::sqrt(norm2);
    if (!(nrm > 0.0)) return 0.0;

    // d_k |df|^2 = (d_k g^ij) f_i f_j + 2 g^ij f_ik f_j, with d_k g^ij = -g^ia (d_k g_ab) g^bj
    std::array<double, 2> dn2{};
    for (int k = 0; k < 2; ++k) {
        double s = 0.0;
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                double dginv = 0.0;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) dginv -= ginv[i][a] * (*dcomp[a][b])[k] * ginv[b][j];
                s += dginv * df[i] * df[j] + 2.0 * ginv[i][j] * hess[i][k] * df[j];
            }
        }
        dn2[k] = s;
    }
    const double grad_x = ginv[0][0] * df[0] + ginv[0][1] * df[1];
    const double grad_y = ginv[1][0] * df[0] + ginv[1][1] * df[1];
    return (dn2[0] * grad_x + dn2[1] * grad_y) / (2.0 * nrm);
}

double gauss_curvature(const SurfaceChart& chart, Point2 p) {
    switch (chart.kind()) {
        case MetricKind::flat:
            chart.metric(p);
            return 0.0;
        case MetricKind::conformal: {
            // K = -Laplacian_euclid(log lambda) / lambda^2
            const ScalarField& lam = chart.conformal_factor();
            const double l = lam(chart.wrap(p));
            double lap_log = 0.0;
            if (lam.has_gradient() || lam.has_hessian()) {
                const auto dl = partials(chart, lam, p);
                const Hessian2 hl = second_partials(chart, lam, p);
                lap_log = (hl.xx + hl.yy) / l - (dl[0] * dl[0] + dl[1] * dl[1]) / (l * l);
            } else {
                ScalarField log_lam;
                log_lam.value = [lam](Point2 q) { return std::log(lam(q)); };
                const Hessian2 h = second_partials(chart, log_lam, p);
                lap_log = h.xx + h.yy;
            }
            return -lap_log / (l * l);
        }
        case MetricKind::general: {
            // Brioschi formula in E = g11, F = g12, G = g22.
            const MetricSample m = chart.metric(p);
            const auto dE = partials(chart, chart.component(0), p);
            const auto dF = partials(chart, chart.component(1), p);
            const auto dG = partials(chart, chart.component(2), p);
            const Hessian2 hE = second_partials(chart, chart.component(0), p);
            const Hessian2 hF = second_partials(chart, chart.component(1), p);
            const Hessian2 hG = second_partials(chart, chart.component(2), p);
            const double E = m.g11, F = m.g12, G = m.g22;
            const double a[3][3] = {
                {-0.5 * hE.yy + hF.xy - 0.5 * hG.xx, 0.5 * dE[0], dF[0] - 0.5 * dE[1]},
                {dF[1] - 0.5 * dG[0], E, F},
                {0.5 * dG[1], F, G}};
            const double b[3][3] = {{0.0, 0.5 * dE[1], 0.5 * dG[0]},
                                    {0.5 * dE[1], E, F},
                                    {0.5 * dG[0], F, G}};
            return (det3(a) - det3(b)) / (m.det * m.det);
        }
    }
    return 0.0;
}

double frame_connection(const SurfaceChart& chart, Point2 p, TangentVec u) {
    if (chart.is_flat()) return 0.0;
    const MetricJet jet = chart.metric_jet(p);
    const Christoffel gamma = christoffel(jet);
    const double a = 1.0 / std::sqrt(jet.g.g11);
    // e1 = (a, 0), d_i a = -a^3 d_i g11 / 2
    const double da[2] = {-0.5 * a * a * a * jet.d11[0], -0.5 * a * a * a * jet.d11[1]};
    const double uu[2] = {u.vx, u.vy};
    double nab[2] = {0.0, 0.0};
    for (int i = 0; i < 2; ++i) {
        nab[0] += uu[i] * da[i];
        for (int k = 0; k < 2; ++k) nab[k] += gamma[k][i][0] * uu[i] * a;
    }
    const double b = std::sqrt(jet.g.g11 * jet.g.det);
    const TangentVec e2{-jet.g.g12 / b, jet.g.g11 / b};
    const MetricSample& m = jet.g;
    return m.g11 * nab[0] * e2.vx + m.g12 * (nab[0] * e2.vy + nab[1] * e2.vx) + m.g22 * nab[1] * e2.vy;
}

}  // namespace magtrap
