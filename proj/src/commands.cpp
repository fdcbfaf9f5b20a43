#include "magtrap/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>

#include "magtrap/analysis.hpp"
#include "magtrap/dynamics.hpp"
#include "magtrap/error.hpp"
#include "magtrap/guiding.hpp"
#include "magtrap/output.hpp"
#include "magtrap/reduction.hpp"

namespace magtrap {

namespace {

using json = nlohmann::ordered_json;
constexpr double kHuge = 1e12;

std::string short_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Point2 center_of(const Rect& d) { return {0.5 * (d.x_min + d.x_max), 0.5 * (d.y_min + d.y_max)}; }

std::vector<double> level_values(double c_min, double c_max, long n) {
    std::vector<double> cs;
    for (long i = 0; i < n; ++i) cs.push_back(n == 1 ? c_min : c_min + (c_max - c_min) * i / (n - 1));
    return cs;
}

LevelLocator locator_from(const RunConfig& cfg, const std::string& section, const Rect& domain) {
    LevelLocator loc;
    loc.origin = cfg.point(section, "origin", center_of(domain));
    loc.angle = cfg.number(section, "angle", -kHuge, kHuge, 0.0);
    return loc;
}

std::vector<double> charges_from(const RunConfig& cfg, const std::string& section) {
    auto es = cfg.numbers(section, "e");
    for (double e : es) {
        if (!(e > 0.0)) {
            throw Error(Errc::invalid_argument, cfg.origin() + ": [" + section + "] e: charges must be positive");
        }
    }
    return es;
}

SecondDerivativeRoute route_from(const RunConfig& cfg, const std::string& section) {
    const std::string route = cfg.text(section, "route", "finite_difference");
    if (route == "finite_difference") return SecondDerivativeRoute::finite_difference;
    if (route == "expanded") return SecondDerivativeRoute::expanded;
    throw Error(Errc::invalid_argument,
                cfg.origin() + ": [" + section + "] route: '" + route + "' is not finite_difference or expanded");
}

std::filesystem::path emit(CommandOutcome& outcome, const std::filesystem::path& dir, const std::string& name) {
    const auto path = dir / name;
    outcome.files.push_back(path);
    return path;
}

CommandOutcome run_simulate(const RunConfig& cfg, const CommandOptions& opt) {
    const SurfaceProblem problem = build_surface_problem(cfg);
    const double e = cfg.number("simulate", "e", -kHuge, kHuge);
    if (e == 0.0) throw Error(Errc::invalid_argument, cfg.origin() + ": [simulate] e: charge must be nonzero");
    ChargedState start;
    start.x = cfg.number("simulate", "x0", -kHuge, kHuge);
    start.y = cfg.number("simulate", "y0", -kHuge, kHuge);
    start.chi = cfg.number("simulate", "chi0", -kHuge, kHuge, 0.0);
    const double horizon = cfg.number("simulate", "T", 0.0, kHuge);
    const double b_max = std::max(std::abs(problem.field.max_on_grid()), std::abs(problem.field.min_on_grid()));

    IntegratorConfig ic;
    ic.scheme = parse_scheme(cfg.text("simulate", "scheme", "rk4_projected"));
    ic.dt = cfg.has("simulate", "dt") ? cfg.number("simulate", "dt", 1e-300, kHuge)
                                      : default_time_step(std::abs(e), b_max);
    ic.record_stride = static_cast<std::size_t>(cfg.integer("simulate", "record_stride", 1, 1'000'000'000, 1));

    CommandOutcome outcome;
    const double spg = steps_per_gyration(std::abs(e), b_max, ic.dt);
    if (spg < 50.0) {
        outcome.warnings.push_back("dt = " + short_number(ic.dt) + " gives " + short_number(spg) +
                                   " steps per gyration (< 50); expect large integration errors");
    }
    const Trajectory traj = integrate(problem.chart, problem.field, start, e, horizon, ic);

    CsvTable csv({"t", "x", "y", "chi", "B"});
    std::vector<Point2> orbit;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& s = traj.states[i];
        csv.add(traj.times[i]).add(s.x).add(s.y).add(s.chi).add(traj.field[i]);
        csv.end_row();
        orbit.push_back(s.position());
    }
    csv.write(emit(outcome, opt.out_dir, "trajectory.csv"));
    SvgPlot plot("orbit, e = " + short_number(e), "x", "y");
    plot.equal_aspect();
    plot.polyline(orbit);
    plot.write(emit(outcome, opt.out_dir, "plot.svg"));

    outcome.summary = "simulate: " + std::to_string(traj.steps) + " steps (" + to_string(traj.scheme) +
                      ", dt = " + short_number(ic.dt) + "), t = " + short_number(traj.times.back()) +
                      ", B in [" + short_number(traj.b_min) + ", " + short_number(traj.b_max) +
                      "], energy drift " + short_number(traj.energy_drift) +
                      (traj.exited_domain ? ", left the domain" : "");
    return outcome;
}

CommandOutcome run_levels(const RunConfig& cfg, const CommandOptions& opt) {
    const SurfaceProblem problem = build_surface_problem(cfg);
    const double c_min = cfg.number("levels", "c_min", -kHuge, kHuge);
    const double c_max = cfg.number("levels", "c_max", c_min, kHuge);
    const long n = cfg.integer("levels", "n", 1, 1000);
    const LevelLocator loc = locator_from(cfg, "levels", problem.chart.domain());

    CommandOutcome outcome;
    CsvTable summary({"index", "c", "length", "closed", "orientation", "points"});
    SvgPlot plot("level sets of B", "x", "y");
    plot.equal_aspect();
    const auto cs = level_values(c_min, c_max, n);
    for (std::size_t k = 0; k < cs.size(); ++k) {
        const LevelSet level = loc.trace(problem.field, problem.chart, cs[k]);
        CsvTable csv({"s", "x", "y", "B"});
        for (std::size_t i = 0; i < level.points.size(); ++i) {
            csv.add(level.s[i]).add(level.points[i].x).add(level.points[i].y).add(problem.field(level.points[i]));
            csv.end_row();
        }
        char name[32];
        std::snprintf(name, sizeof name, "level_%03zu.csv", k);
        csv.write(emit(outcome, opt.out_dir, name));
        summary.add(static_cast<double>(k)).add(cs[k]).add(level.length());
        summary.add(level.closed ? "true" : "false").add(static_cast<double>(level.orientation));
        summary.add(static_cast<double>(level.points.size()));
        summary.end_row();
        plot.polyline(level.points);
    }
    summary.write(emit(outcome, opt.out_dir, "levels.csv"));
    plot.write(emit(outcome, opt.out_dir, "plot.svg"));
    outcome.summary = "levels: traced " + std::to_string(cs.size()) + " level sets in [" + short_number(c_min) +
                      ", " + short_number(c_max) + "]";
    return outcome;
}

struct ScanSettings {
    double c_min, c_max;
    long n;
    LevelLocator locator;
    ScanOptions options;
};

ScanSettings scan_settings(const RunConfig& cfg, const std::string& section, const Rect& domain) {
    ScanSettings s;
    s.c_min = cfg.number(section, "c_min", -kHuge, kHuge);
    s.c_max = cfg.number(section, "c_max", s.c_min, kHuge);
    s.n = cfg.integer(section, "n", 2, 1000);
    s.locator = locator_from(cfg, section, domain);
    s.options.tolerance = cfg.number(section, "tolerance", 0.0, 1.0, 1e-3);
    if (cfg.has(section, "route")) s.options.route = route_from(cfg, section);
    return s;
}

json scan_json(const ScanResult& scan) {
    json levels = json::array();
    bool all_nondegenerate = true;
    int sign = 0;
    bool common_sign = true;
    for (const auto& lv : scan.report.levels) {
        levels.push_back({{"c", lv.c},
                          {"class", to_string(lv.cls)},
                          {"twist", lv.twist},
                          {"relative", lv.relative},
                          {"note", lv.note}});
        if (lv.cls != LevelClass::nondegenerate) all_nondegenerate = false;
        if (lv.cls == LevelClass::near_critical_skipped) continue;
        const int s = lv.twist > 0 ? 1 : (lv.twist < 0 ? -1 : 0);
        if (sign == 0) sign = s;
        if (s != sign) common_sign = false;
    }
    return {{"tolerance", scan.report.tolerance},
            {"c_ref", scan.profile.c_ref},
            {"uniformly_nondegenerate", all_nondegenerate},
            {"common_sign", common_sign},
            {"levels", levels}};
}

CsvTable profile_csv(const ScanResult& scan) {
    CsvTable csv({"c", "I", "dIdB", "d2IdB2", "T", "class"});
    for (const auto& r : scan.profile.records) {
        csv.add(r.c).add(r.I).add(r.dI_dB).add(r.d2I_dB2).add(r.twist).add(to_string(r.cls));
        csv.end_row();
    }
    return csv;
}

std::vector<Point2> twist_curve(const ScanResult& scan) {
    std::vector<Point2> pts;
    for (const auto& r : scan.profile.records) pts.push_back({r.c, r.twist});
    return pts;
}

std::string scan_counts(const ScanResult& scan) {
    int nondeg = 0, deg = 0, skipped = 0;
    double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
    for (const auto& lv : scan.report.levels) {
        if (lv.cls == LevelClass::nondegenerate) ++nondeg;
        if (lv.cls == LevelClass::degenerate) ++deg;
        if (lv.cls == LevelClass::near_critical_skipped) {
            ++skipped;
            continue;
        }
        t_lo = std::min(t_lo, lv.twist);
        t_hi = std::max(t_hi, lv.twist);
    }
    return std::to_string(scan.report.levels.size()) + " levels, " + std::to_string(nondeg) + " nondegenerate, " +
           std::to_string(deg) + " degenerate, " + std::to_string(skipped) + " skipped, T in [" +
           short_number(t_lo) + ", " + short_number(t_hi) + "]";
}

CommandOutcome run_twist(const RunConfig& cfg, const CommandOptions& opt) {
    const SurfaceProblem problem = build_surface_problem(cfg);
    const ScanSettings s = scan_settings(cfg, "twist", problem.chart.domain());
    const ScanResult scan = degeneracy_scan(problem.field, problem.chart, s.c_min, s.c_max, static_cast<int>(s.n),
                                            s.locator, s.options);
    CommandOutcome outcome;
    profile_csv(scan).write(emit(outcome, opt.out_dir, "profile.csv"));
    json report = scan_json(scan);
    report["route"] = s.options.route == SecondDerivativeRoute::expanded ? "expanded" : "finite_difference";
    write_json(emit(outcome, opt.out_dir, "report.json"), report);
    SvgPlot plot("twist quantity T(c)", "c", "T");
    plot.polyline(twist_curve(scan));
    plot.scatter(twist_curve(scan));
    plot.write(emit(outcome, opt.out_dir, "plot.svg"));
    outcome.summary = "twist: " + scan_counts(scan);
    return outcome;
}

CommandOutcome run_trap(const RunConfig& cfg, const CommandOptions& opt) {
    const SurfaceProblem problem = build_surface_problem(cfg);
    const double c = cfg.number("trap", "c", -kHuge, kHuge);
    const auto charges = charges_from(cfg, "trap");
    const double horizon = cfg.number("trap", "T", 0.0, kHuge);
    const long n_initial = cfg.integer("trap", "n_initial", 1, 100000, 8);

    TrapOptions to;
    to.seed = opt.seed ? *opt.seed : cfg.unsigned64("trap", "seed", 1);
    to.force = opt.force;
    to.tolerance = cfg.number("trap", "tolerance", 0.0, 1.0, 1e-3);
    to.steps_per_gyration = cfg.number("trap", "steps_per_gyration", 4.0, 1e6, 200.0);
    if (cfg.has("trap", "annulus")) {
        const auto a = cfg.numbers("trap", "annulus", 2);
        if (!(a[1] > a[0])) throw Error(Errc::invalid_argument, cfg.origin() + ": [trap] annulus: expected lo < hi");
        to.annulus = std::make_pair(a[0], a[1]);
    }
    to.locator = locator_from(cfg, "trap", problem.chart.domain());
    to.threads = opt.threads;

    const TrapResult result = trap_experiment(problem.field, problem.chart, c, charges, horizon,
                                              static_cast<int>(n_initial), to);
    CommandOutcome outcome;
    if (result.degenerate) outcome.warnings.push_back("level is degenerate; running because --force was given");

    json records = json::array();
    CsvTable csv({"e", "median_excursion", "max_excursion", "any_exit"});
    std::vector<Point2> medians;
    for (const auto& r : result.records) {
        json orbits = json::array();
        for (const auto& o : r.orbits) {
            orbits.push_back({{"x0", o.start.x},
                              {"y0", o.start.y},
                              {"chi0", o.start.chi},
                              {"max_excursion", o.max_excursion},
                              {"exited_domain", o.exited_domain},
                              {"left_annulus", o.left_annulus}});
        }
        records.push_back({{"e", r.charge},
                           {"median_excursion", r.median_excursion},
                           {"max_excursion", r.max_excursion},
                           {"any_exit", r.any_exit},
                           {"orbits", orbits}});
        csv.add(r.charge).add(r.median_excursion).add(r.max_excursion).add(r.any_exit ? "true" : "false");
        csv.end_row();
        medians.push_back({r.charge, r.median_excursion});
    }
    json ratios = json::array();
    for (std::size_t i = 1; i < result.records.size(); ++i) {
        ratios.push_back(result.records[i - 1].median_excursion / result.records[i].median_excursion);
    }
    json doc = {{"c", result.c},
                {"horizon", result.horizon},
                {"twist", result.twist},
                {"degenerate", result.degenerate},
                {"forced", opt.force},
                {"seed", to.seed},
                {"n_initial", n_initial},
                {"records", records},
                {"median_ratios", ratios}};
    if (to.annulus) doc["annulus"] = {to.annulus->first, to.annulus->second};
    write_json(emit(outcome, opt.out_dir, "trap.json"), doc);
    csv.write(emit(outcome, opt.out_dir, "trap.csv"));
    SvgPlot plot("median max |B - c| against e", "e", "median excursion", true);
    plot.scatter(medians);
    plot.polyline(medians, "#888888");
    plot.write(emit(outcome, opt.out_dir, "plot.svg"));

    std::string line = "trap: c = " + short_number(c) + ", T = " + short_number(horizon) + ", medians";
    for (const auto& r : result.records) line += " e=" + short_number(r.charge) + ":" + short_number(r.median_excursion);
    const bool any_exit = std::any_of(result.records.begin(), result.records.end(), [](const auto& r) { return r.any_exit; });
    outcome.summary = line + (any_exit ? ", some orbits escaped" : ", all orbits trapped");
    return outcome;
}

CommandOutcome run_drift(const RunConfig& cfg, const CommandOptions& opt) {
    const SurfaceProblem problem = build_surface_problem(cfg);
    const double c = cfg.number("drift", "c", -kHuge, kHuge);
    const auto charges = charges_from(cfg, "drift");
    const LevelLocator loc = locator_from(cfg, "drift", problem.chart.domain());
    DriftOptions d;
    d.gyrations = cfg.number("drift", "gyrations", 3.0, 1e7, 40.0);
    d.steps_per_gyration = cfg.number("drift", "steps_per_gyration", 4.0, 1e6, 200.0);
    d.chi0 = cfg.number("drift", "chi0", -kHuge, kHuge, 0.0);
    d.center = cfg.point("drift", "center", loc.origin);
    d.threads = opt.threads;

    const DriftScan scan = drift_scan(problem.field, problem.chart, c, charges, loc, d);
    CommandOutcome outcome;
    CsvTable csv({"e", "epsilon", "drift_per_gyration", "oracle", "action_prediction", "crossings"});
    json records = json::array();
    std::vector<Point2> pts;
    for (const auto& r : scan.records) {
        csv.add(r.charge).add(1.0 / r.charge).add(r.drift_per_gyration).add(r.oracle).add(r.action_prediction);
        csv.add(static_cast<double>(r.crossings));
        csv.end_row();
        records.push_back({{"e", r.charge},
                           {"drift_per_gyration", r.drift_per_gyration},
                           {"oracle", r.oracle},
                           {"action_prediction", r.action_prediction},
                           {"oracle_ratio", r.drift_per_gyration / r.oracle},
                           {"residual", r.residual},
                           {"monotone", r.monotone},
                           {"crossings", r.crossings}});
        pts.push_back({1.0 / r.charge, r.drift_per_gyration});
    }
    csv.write(emit(outcome, opt.out_dir, "drift.csv"));
    json doc = {{"c", scan.c},
                {"start", {scan.start.x, scan.start.y}},
                {"fit", {{"exponent", scan.fit.exponent}, {"prefactor", scan.fit.prefactor}, {"r_squared", scan.fit.r_squared}}},
                {"records", records}};
    write_json(emit(outcome, opt.out_dir, "drift.json"), doc);

    SvgPlot plot("drift per gyration against epsilon = 1/e", "epsilon", "drift per gyration", true);
    plot.scatter(pts);
    if (pts.size() >= 2) {
        std::vector<Point2> fit;
        for (const auto& p : pts) fit.push_back({p.x, scan.fit.prefactor * std::pow(p.x, scan.fit.exponent)});
        plot.polyline(fit, "#888888");
    }
    plot.write(emit(outcome, opt.out_dir, "plot.svg"));
    outcome.summary = "drift: c = " + short_number(c) + ", " + std::to_string(scan.records.size()) +
                      " charges, fitted exponent " + short_number(scan.fit.exponent) +
                      " (R^2 = " + short_number(scan.fit.r_squared) + ")";
    return outcome;
}

CommandOutcome run_reduce(const RunConfig& cfg, const CommandOptions& opt) {
    const PotentialExprs exprs = potential_expressions(cfg);
    const AxisymmetricPotential pot = build_potential(exprs);
    const double M = cfg.number("reduce", "M", -kHuge, kHuge);
    const double e = cfg.number("reduce", "e", -kHuge, kHuge);
    const double E = cfg.number("reduce", "E", 0.0, kHuge);
    ReduceOptions ro;
    if (cfg.has("reduce", "domain")) ro.domain = cfg.rect("reduce", "domain");
    ro.r_floor = cfg.number("reduce", "r_floor", 1e-12, kHuge, ro.r_floor);
    ro.margin = cfg.number("reduce", "margin", 0.0, kHuge, -1.0);
    ro.grid = static_cast<int>(cfg.integer("reduce", "grid", 3, 4096, ro.grid));
    const std::string conv = cfg.text("reduce", "convention", "jacobi");
    if (conv == "jacobi") {
        ro.convention = MetricConvention::jacobi;
    } else if (conv == "literal") {
        ro.convention = MetricConvention::literal;
    } else {
        throw Error(Errc::invalid_argument, cfg.origin() + ": [reduce] convention: '" + conv + "' is not jacobi or literal");
    }

    const ReducedProblem rp = reduce(pot, M, e, E, ro);
    CommandOutcome outcome;
    RunConfig reduced = reduced_surface_config(exprs, rp);
    const bool scanning = cfg.has("scan");
    if (scanning) {
        for (const char* key : {"c_min", "c_max", "n", "origin", "angle", "tolerance"}) {
            if (cfg.has("scan", key)) reduced.set("twist", key, cfg.text("scan", key));
        }
    }
    write_text(emit(outcome, opt.out_dir, "reduced.cfg"), reduced.to_string());

    const Rect& d = rp.domain;
    const Point2 mid = center_of(d);
    json doc = {{"M", M},
                {"e", e},
                {"E", E},
                {"convention", conv},
                {"charge", rp.charge},
                {"margin", rp.margin},
                {"domain", {d.x_min, d.x_max, d.y_min, d.y_max}},
                {"center", {{"r", mid.x}, {"z", mid.y}, {"V_eff", rp.v_eff(mid)}, {"B_theta", rp.b_theta(mid)},
                            {"B_eff", rp.b_eff(mid)}}}};

    SvgPlot plot("reduced problem in the (r, z) half-plane", "r", "z");
    plot.equal_aspect();
    plot.polyline({{d.x_min, d.y_min}, {d.x_max, d.y_min}, {d.x_max, d.y_max}, {d.x_min, d.y_max}, {d.x_min, d.y_min}},
                  "#000000");
    std::string scan_line;
    if (scanning) {
        const ScanSettings s = scan_settings(cfg, "scan", d);
        const ScanResult beff = degeneracy_scan(rp.field, rp.chart, s.c_min, s.c_max, static_cast<int>(s.n),
                                                s.locator, s.options);
        const ScanResult btheta = degeneracy_scan(rp.euclidean_field, rp.euclidean_chart, s.c_min, s.c_max,
                                                  static_cast<int>(s.n), s.locator, s.options);
        profile_csv(beff).write(emit(outcome, opt.out_dir, "profile.csv"));
        profile_csv(btheta).write(emit(outcome, opt.out_dir, "profile_btheta.csv"));
        doc["scan"] = {{"B_eff", scan_json(beff)}, {"B_theta_euclidean", scan_json(btheta)}};
        for (const auto& r : beff.profile.records) {
            plot.polyline(s.locator.trace(rp.field, rp.chart, r.c).points);
        }
        scan_line = "; B_eff scan: " + scan_counts(beff) + "; B_theta scan: " + scan_counts(btheta);
    }
    write_json(emit(outcome, opt.out_dir, "reduce.json"), doc);
    plot.write(emit(outcome, opt.out_dir, "plot.svg"));
    outcome.summary = "reduce: admissible (r, z) = [" + short_number(d.x_min) + ", " + short_number(d.x_max) + "] x [" +
                      short_number(d.y_min) + ", " + short_number(d.y_max) + "], charge " + short_number(rp.charge) +
                      scan_line;
    return outcome;
}

}  // namespace

const char* to_string(Command command) {
    switch (command) {
        case Command::simulate: return "simulate";
        case Command::levels: return "levels";
        case Command::twist: return "twist";
        case Command::trap: return "trap";
        case Command::drift: return "drift";
        case Command::reduce: return "reduce";
    }
    return "?";
}

std::optional<Command> parse_command(std::string_view name) {
    for (Command c : {Command::simulate, Command::levels, Command::twist, Command::trap, Command::drift,
                      Command::reduce}) {
        if (name == to_string(c)) return c;
    }
    return std::nullopt;
}

std::filesystem::path resolve_output_dir(const std::optional<std::string>& cli_out, Command command) {
    if (cli_out && !cli_out->empty()) return *cli_out;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return std::filesystem::path("magtrap-out") / to_string(command);
}

CommandOutcome run_command(const RunConfig& config, Command command, const CommandOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) {
        throw Error(Errc::invalid_argument,
                    "cannot create output directory " + options.out_dir.string() + ": " + ec.message());
    }
    switch (command) {
        case Command::simulate: return run_simulate(config, options);
        case Command::levels: return run_levels(config, options);
        case Command::twist: return run_twist(config, options);
        case Command::trap: return run_trap(config, options);
        case Command::drift: return run_drift(config, options);
        case Command::reduce: return run_reduce(config, options);
    }
    throw Error(Errc::invalid_argument, "unknown command");
}

int exit_code_for(const Error& error) { return is_user_error(error.code()) ? 1 : 2; }

int run_command_reporting(const std::filesystem::path& config_path, Command command, const CommandOptions& options,
                          std::ostream& out, std::ostream& err) {
    try {
        const RunConfig config = RunConfig::load(config_path);
        const CommandOutcome outcome = run_command(config, command, options);
        for (const auto& w : outcome.warnings) err << "warning: " << w << '\n';
        out << outcome.summary << '\n';
        return 0;
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace magtrap
