// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance            all criteria
//   acceptance 1 4 7      selected criteria
// Exit status is 0 when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "expr_fixtures.hpp"
#include "magtrap/analysis.hpp"
#include "magtrap/commands.hpp"
#include "magtrap/config.hpp"
#include "magtrap/dynamics.hpp"
#include "magtrap/error.hpp"
#include "magtrap/expr.hpp"
#include "magtrap/guiding.hpp"
#include "magtrap/reduction.hpp"

using namespace magtrap;
using std::numbers::pi;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "NOT ") + what;
    }
};

std::string num(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

const SurfaceChart& plane() {
    static const SurfaceChart chart = SurfaceChart::flat({-3, 3, -3, 3});
    return chart;
}

// B = 1 + (x^2 + y^2)/2
const FieldSpec& radial() {
    static const FieldSpec f = [] {
        ScalarField b;
        b.value = [](Point2 p) { return 1.0 + 0.5 * (p.x * p.x + p.y * p.y); };
        b.gradient = [](Point2 p) { return std::array<double, 2>{p.x, p.y}; };
        b.hessian = [](Point2) { return Hessian2{1.0, 0.0, 1.0}; };
        return FieldSpec(b, plane());
    }();
    return f;
}

const SurfaceChart& disk() {
    static const SurfaceChart chart = SurfaceChart::flat({-1, 1, -1, 1});
    return chart;
}

// B = (1 - x^2 - y^2)^(-1/2)
const FieldSpec& degenerate() {
    static const FieldSpec f = [] {
        ScalarField b;
        b.value = [](Point2 p) { return 1.0 / std::sqrt(1.0 - p.x * p.x - p.y * p.y); };
        b.gradient = [](Point2 p) {
            const double k = std::pow(1.0 - p.x * p.x - p.y * p.y, -1.5);
            return std::array<double, 2>{k * p.x, k * p.y};
        };
        return FieldSpec(b, disk(), [](Point2 p) { return p.x * p.x + p.y * p.y < 0.995; });
    }();
    return f;
}

// B = 2 + x^2 + 3 y^2
const FieldSpec& morse() {
    static const FieldSpec f = [] {
        ScalarField b;
        b.value = [](Point2 p) { return 2.0 + p.x * p.x + 3.0 * p.y * p.y; };
        b.gradient = [](Point2 p) { return std::array<double, 2>{2.0 * p.x, 6.0 * p.y}; };
        b.hessian = [](Point2) { return Hessian2{2.0, 0.0, 6.0}; };
        return FieldSpec(b, plane());
    }();
    return f;
}

const LevelLocator kCenterRay{{0.0, 0.0}, 0.3, {}};

Verdict action_derivative_identity() {
    Verdict v;
    const FieldSpec& f = radial();
    const double d15 = dI_dB(f, plane(), kCenterRay.trace(f, plane(), 1.5));
    const double rel = std::abs(d15 - 3 * pi) / (3 * pi);
    v.require(rel < 1e-4, "dI/dB(1.5) = " + num(d15, 12) + " vs 3 pi, rel " + num(rel, 2));
    const double h = 1e-3;
    double worst = 0.0;
    for (double c : {1.2, 1.5, 2.0}) {
        const double d = dI_dB(f, plane(), kCenterRay.trace(f, plane(), c));
        const double fd = (action_integral(f, plane(), c + h, 1.1, {0, 0}, 1e-11) -
                           action_integral(f, plane(), c - h, 1.1, {0, 0}, 1e-11)) /
                          (2 * h);
        worst = std::max(worst, std::abs(d - fd) / std::abs(fd));
    }
    v.require(worst < 1e-4, "dI/dB vs centered difference of I at c = 1.2, 1.5, 2.0: max rel " + num(worst, 2));
    return v;
}

Verdict twist_closed_form() {
    Verdict v;
    const TwistSample s = twist_quantity(radial(), plane(), 1.5, kCenterRay);
    const double rel = std::abs(s.twist - 6 * pi) / (6 * pi);
    v.require(rel < 1e-2, "T(1.5) = " + num(s.twist, 10) + " vs 6 pi, rel " + num(rel, 2));
    const ScanResult scan = degeneracy_scan(radial(), plane(), 1.1, 2.5, 15, kCenterRay);
    const auto nondeg = std::count_if(scan.report.levels.begin(), scan.report.levels.end(),
                                      [](const LevelReport& l) { return l.cls == LevelClass::nondegenerate; });
    v.require(nondeg == 15 && scan.report.levels.size() == 15,
              "scan over [1.1, 2.5]: " + std::to_string(nondeg) + "/15 nondegenerate");
    return v;
}

Verdict degenerate_null() {
    Verdict v;
    int ok = 0;
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double c = 1.1 + 0.1 * k;
        const TwistSample s = twist_quantity(degenerate(), disk(), c, kCenterRay);
        const double bound = 1e-3 * (2.0 / c) * s.dI_dB;
        worst = std::max(worst, std::abs(s.twist) / ((2.0 / c) * s.dI_dB));
        if (std::abs(s.twist) < bound) ++ok;
    }
    v.require(ok == 10, std::to_string(ok) + "/10 levels in [1.1, 2.0] with |T| < 1e-3 (2/c) dI/dB, max ratio " +
                            num(worst, 2));
    return v;
}

Verdict corollary_behavior() {
    Verdict v;
    const int n = 12;
    std::vector<double> cs, ts;
    bool all_nondegenerate = true;
    double noise = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double c = 2.02 + 0.38 * k / (n + 1);
        const TwistSample s = twist_quantity(morse(), plane(), c, kCenterRay);
        const TwistSample x = twist_quantity(morse(), plane(), c, kCenterRay, SecondDerivativeRoute::expanded);
        cs.push_back(c);
        ts.push_back(s.twist);
        noise = std::max(noise, 2.0 * std::abs(s.twist - x.twist));
        if (classify(s, 1e-3) != LevelClass::nondegenerate) all_nondegenerate = false;
    }
    v.require(all_nondegenerate, "all " + std::to_string(n) + " levels in (2.02, 2.4) nondegenerate");
    const bool same_sign = std::all_of(ts.begin(), ts.end(), [&](double t) { return t * ts[0] > 0; });
    v.require(same_sign, "common sign of T");
    // Growth counts when it exceeds twice the disagreement of the two derivative routes.
    int increasing_steps = 0;
    for (int k = 0; k + 1 < n; ++k) {
        if (std::abs(ts[k]) - std::abs(ts[k + 1]) > noise) ++increasing_steps;
    }
    const auto [lo, hi] = std::minmax_element(ts.begin(), ts.end());
    v.require(increasing_steps == n - 1,
              "|T| grows as c decreases (" + std::to_string(increasing_steps) + "/" + std::to_string(n - 1) +
                  " steps above noise " + num(noise, 2) + "; T in [" + num(*lo, 10) + ", " + num(*hi, 10) +
                  "], sqrt(3) pi = " + num(std::sqrt(3.0) * pi, 10) + ")");
    return v;
}

Verdict trapping_scaling() {
    Verdict v;
    TrapOptions opt;
    opt.seed = 1;
    opt.annulus = std::pair{1.1, 2.0};
    opt.locator = LevelLocator{{0, 0}, 0.0, {}};
    const TrapResult r = trap_experiment(radial(), plane(), 1.5, {20, 40, 80, 160}, 500.0, 8, opt);
    std::string medians;
    bool decreasing = true, ratios_ok = true, trapped = true;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        medians += (i ? ", " : "") + num(r.records[i].median_excursion, 4);
        if (i > 0) {
            const double ratio = r.records[i - 1].median_excursion / r.records[i].median_excursion;
            if (!(ratio > 1.0)) decreasing = false;
            if (ratio < 1.6 || ratio > 2.4) ratios_ok = false;
            medians += " (x1/" + num(ratio, 3) + ")";
        }
        if (r.records[i].charge >= 40 && r.records[i].any_exit) trapped = false;
    }
    v.require(r.records.size() == 4 && decreasing, "median excursion decreases with e: " + medians);
    v.require(ratios_ok, "consecutive ratios in [1.6, 2.4]");
    v.require(trapped, "no exit from 1.1 <= B <= 2.0 for e >= 40");
    return v;
}

Verdict drift_scaling() {
    Verdict v;
    const DriftScan scan = drift_scan(radial(), plane(), 1.5, {50, 100, 200}, LevelLocator{{0, 0}, 0.0, {}});
    v.require(std::abs(scan.fit.exponent - 2.0) <= 0.1, "fitted exponent " + num(scan.fit.exponent, 5));
    // Grad-B drift over one gyroperiod on the circle R = 1: |grad B| = 1, B = 1.5.
    const double e = 100.0, b = 1.5;
    const double oracle = (1.0 / (2.0 * e * b * b)) * (2 * pi / (e * b));
    const DriftRecord& mid = scan.records.at(1);
    const double rel = std::abs(mid.drift_per_gyration - oracle) / oracle;
    v.require(rel < 0.1, "e = 100 drift " + num(mid.drift_per_gyration) + " vs grad-B oracle " + num(oracle) +
                             ", rel " + num(rel, 2));
    v.detail += "; reported: action-derivative coefficient gives " + num(mid.action_prediction) + " (ratio " +
                num(mid.drift_per_gyration / mid.action_prediction, 4) + ")";
    return v;
}

Verdict integrator_quality() {
    Verdict v;
    const FieldSpec unit(ScalarField::constant(1.0), plane());
    IntegratorConfig cfg;
    cfg.dt = 2 * pi / 200;
    const ChargedState s0{0.3, -0.2, 0.7};
    const Trajectory t = integrate(plane(), unit, s0, 1.0, 2 * pi, cfg);
    const ChargedState& end = t.states.back();
    const double gap = std::max({std::abs(end.x - s0.x), std::abs(end.y - s0.y),
                                 std::abs(std::remainder(end.chi - s0.chi, 2 * pi))});
    v.require(gap < 1e-6, "gyrocircle closure after one period at 200 steps: " + num(gap, 3));

    const ChargedState r0{1.0, 0.0, 0.5};
    auto endpoint = [&](double dt) {
        IntegratorConfig c;
        c.dt = dt;
        return integrate(plane(), radial(), r0, 5.0, 4.0, c).states.back();
    };
    const ChargedState a = endpoint(0.02), b = endpoint(0.01), c = endpoint(0.005);
    const double order = std::log2(std::hypot(a.x - b.x, a.y - b.y) / std::hypot(b.x - c.x, b.y - c.y));
    v.require(order >= 3.8, "rk4_projected observed order " + num(order, 4));
    return v;
}

ScalarField az_quadratic() {
    ScalarField f;
    f.value = [](Point2 p) { return 0.5 * p.x * p.x; };
    f.gradient = [](Point2 p) { return std::array<double, 2>{p.x, 0.0}; };
    return f;
}

Verdict reduction_consistency() {
    Verdict v;
    AxisymmetricPotential pot;
    pot.a_z = az_quadratic();
    const double M = 0.0, e = 5.0, E = 0.5, chi = 0.4, horizon = 100.0, dt = 1e-3;
    const Point2 start{1.0, 0.0};
    ReduceOptions opt;
    opt.domain = {0.2, 3.0, -30.0, 30.0};
    const ReducedProblem rp = reduce(pot, M, e, E, opt);
    const Trajectory3D full = full3d_oracle(pot, oracle_initial_state(pot, M, e, E, start.x, start.y, chi), e,
                                            horizon, dt);
    IntegratorConfig cfg;
    cfg.dt = 2.0 * (E - effective_potential(pot, M, e, start.x, start.y)) * dt;
    const Trajectory red = integrate(rp.chart, rp.field, {start.x, start.y, chi}, rp.charge,
                                     reduced_time(full, pot, M, e, E), cfg);
    const double h = hausdorff_distance(project_rz(full), positions(red));
    v.require(!red.exited_domain && h < 1e-3, "Hausdorff distance " + num(h, 3));
    v.require(full.p_theta_drift < 1e-9, "p_theta drift " + num(full.p_theta_drift, 3));

    AxisymmetricPotential spot;
    spot.a_theta.value = [](Point2 p) { return 0.5 * p.x * p.x; };
    const double veff = effective_potential(spot, 1.0, 1.0, 1.0, 0.0);
    v.require(veff == 0.125, "V_eff(A_theta = r^2/2, M = 1, e = 1, r = 1) = " + num(veff, 17));
    return v;
}

std::size_t parse_offset(const std::string& text) {
    try {
        (void)Expr::parse(text, VarContext::surface);
    } catch (const ParseError& e) {
        return e.offset();
    }
    return std::string::npos;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict parser_fixtures() {
    Verdict v;
    int matched = 0;
    const auto& table = fixtures::expression_table();
    for (const auto& f : table) {
        const double got = Expr::parse(f.text, f.context).eval(fixtures::bindings_for(f));
        const double want = f.oracle(f.u, f.v);
        if (std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want))) ++matched;
    }
    v.require(matched == 50 && table.size() == 50, std::to_string(matched) + "/50 fixtures within 1e-12");

    const std::pair<const char*, std::size_t> malformed[] = {
        {"1 + ", 4}, {"(x + 1", 6}, {"x + 1)", 5}, {"2 * foo", 4}, {"sin(x, y)", 5}, {"cos()", 4},
        {"1 + r^2", 4}, {"x $ y", 2}, {"1.5e", 3}, {"", 0},
    };
    int positioned = 0;
    for (const auto& [text, offset] : malformed) {
        if (parse_offset(text) == offset) ++positioned;
    }
    v.require(positioned == 10, std::to_string(positioned) + "/10 malformed inputs with exact byte offsets");

    const RunConfig cfg = RunConfig::parse(
        "[surface]\ndomain = -3 3 -3 3\n[field]\nB = 1 + 0.5*(x^2 + y^2)\n"
        "[trap]\nc = 1.5\ne = 5 10\nT = 20\nn_initial = 4\norigin = 0 0\n");
    const auto root = std::filesystem::temp_directory_path() / "magtrap_acceptance_seed";
    std::filesystem::remove_all(root);
    std::vector<std::string> runs;
    for (const char* dir : {"a", "b"}) {
        CommandOptions opt;
        opt.out_dir = root / dir;
        opt.seed = 12345;
        run_command(cfg, Command::trap, opt);
        runs.push_back(slurp(opt.out_dir / "trap.csv") + slurp(opt.out_dir / "trap.json"));
    }
    v.require(runs[0] == runs[1] && !runs[0].empty(), "identical seed gives byte-identical trap outputs");
    return v;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "action-derivative identity", action_derivative_identity},
        {2, "twist quantity closed form", twist_closed_form},
        {3, "degenerate-field null test", degenerate_null},
        {4, "Morse minimum: nondegenerate, common sign, |T| growth", corollary_behavior},
        {5, "trapping scaling", trapping_scaling},
        {6, "drift power law", drift_scaling},
        {7, "integrator quality", integrator_quality},
        {8, "reduction consistency", reduction_consistency},
        {9, "parser fixtures and determinism", parser_fixtures},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("threw: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %d (%s): %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        if (!v.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
