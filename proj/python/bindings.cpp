#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "magtrap/analysis.hpp"
#include "magtrap/commands.hpp"
#include "magtrap/config.hpp"
#include "magtrap/dynamics.hpp"
#include "magtrap/error.hpp"
#include "magtrap/expr.hpp"
#include "magtrap/guiding.hpp"

namespace py = pybind11;
using namespace magtrap;

namespace {

using Domain = std::tuple<double, double, double, double>;
using XY = std::pair<double, double>;

VarContext context_from(const std::string& name) {
    if (name == "surface") return VarContext::surface;
    if (name == "axisymmetric") return VarContext::axisymmetric;
    throw Error(Errc::invalid_argument, "context must be 'surface' or 'axisymmetric'");
}

Var var_from(const std::string& name) {
    if (name == "x") return Var::x;
    if (name == "y") return Var::y;
    if (name == "r") return Var::r;
    if (name == "z") return Var::z;
    throw Error(Errc::invalid_argument, "unknown variable '" + name + "'");
}

class Surface {
public:
    Surface(const std::string& b, Domain domain, const std::string& metric, std::optional<std::string> lambda,
            std::optional<std::string> support, bool periodic_x) {
        RunConfig cfg;
        const auto [x0, x1, y0, y1] = domain;
        cfg.set("surface", "metric", metric);
        cfg.set("surface", "domain", format_number(x0) + " " + format_number(x1) + " " + format_number(y0) + " " +
                                         format_number(y1));
        cfg.set("surface", "periodic_x", periodic_x ? "true" : "false");
        if (lambda) cfg.set("surface", "lambda", *lambda);
        cfg.set("field", "B", b);
        if (support) cfg.set("field", "support", *support);
        problem_ = build_surface_problem(cfg);
    }

    double field(double x, double y) const { return problem_.field({x, y}); }

    py::dict trace_level(double c, XY origin, double angle) const {
        const LevelSet level = locator(origin, angle).trace(problem_.field, problem_.chart, c);
        std::vector<XY> pts;
        for (const auto& p : level.points) pts.emplace_back(p.x, p.y);
        py::dict d;
        d["c"] = c;
        d["points"] = pts;
        d["s"] = level.s;
        d["closed"] = level.closed;
        d["length"] = level.length();
        d["orientation"] = level.orientation;
        return d;
    }

    double di_db(double c, XY origin, double angle) const {
        return dI_dB(problem_.field, problem_.chart, locator(origin, angle).trace(problem_.field, problem_.chart, c));
    }

    double action(double c, double c_ref, XY center) const {
        return action_integral(problem_.field, problem_.chart, c, c_ref, {center.first, center.second});
    }

    py::dict twist(double c, XY origin, double angle, const std::string& route) const {
        const TwistSample s = twist_quantity(problem_.field, problem_.chart, c, locator(origin, angle), route_from(route));
        py::dict d;
        d["c"] = s.c;
        d["dI_dB"] = s.dI_dB;
        d["d2I_dB2"] = s.d2I_dB2;
        d["T"] = s.twist;
        d["relative"] = s.relative;
        return d;
    }

    py::list scan(double c_min, double c_max, int n, XY origin, double angle, double tolerance,
                  const std::string& route) const {
        ScanOptions opt;
        opt.tolerance = tolerance;
        opt.route = route_from(route);
        const ScanResult r = degeneracy_scan(problem_.field, problem_.chart, c_min, c_max, n, locator(origin, angle), opt);
        py::list out;
        for (const auto& lv : r.report.levels) {
            py::dict d;
            d["c"] = lv.c;
            d["class"] = to_string(lv.cls);
            d["T"] = lv.twist;
            d["relative"] = lv.relative;
            d["note"] = lv.note;
            for (const auto& rec : r.profile.records) {
                if (rec.c != lv.c) continue;
                d["I"] = rec.I;
                d["dI_dB"] = rec.dI_dB;
                d["d2I_dB2"] = rec.d2I_dB2;
            }
            out.append(d);
        }
        return out;
    }

    py::dict simulate(double e, double x0, double y0, double chi0, double horizon, std::optional<double> dt,
                      const std::string& scheme, std::size_t record_stride) const {
        IntegratorConfig cfg;
        cfg.scheme = parse_scheme(scheme);
        const double b_max = std::max(std::abs(problem_.field.max_on_grid()), std::abs(problem_.field.min_on_grid()));
        cfg.dt = dt ? *dt : default_time_step(std::abs(e), b_max);
        cfg.record_stride = record_stride;
        Trajectory t;
        {
            py::gil_scoped_release release;
            t = integrate(problem_.chart, problem_.field, {x0, y0, chi0}, e, horizon, cfg);
        }
        std::vector<double> xs, ys, chis;
        for (const auto& s : t.states) {
            xs.push_back(s.x);
            ys.push_back(s.y);
            chis.push_back(s.chi);
        }
        py::dict d;
        d["t"] = t.times;
        d["x"] = xs;
        d["y"] = ys;
        d["chi"] = chis;
        d["B"] = t.field;
        d["steps"] = t.steps;
        d["exited_domain"] = t.exited_domain;
        d["energy_drift"] = t.energy_drift;
        return d;
    }

    py::dict trap(double c, std::vector<double> charges, double horizon, int n_initial, std::uint64_t seed,
                  XY origin, double angle, std::optional<XY> annulus, bool force) const {
        TrapOptions opt;
        opt.seed = seed;
        opt.force = force;
        if (annulus) opt.annulus = *annulus;
        opt.locator = locator(origin, angle);
        TrapResult r;
        {
            py::gil_scoped_release release;
            r = trap_experiment(problem_.field, problem_.chart, c, charges, horizon, n_initial, opt);
        }
        py::list records;
        for (const auto& rec : r.records) {
            py::dict d;
            d["e"] = rec.charge;
            d["median_excursion"] = rec.median_excursion;
            d["max_excursion"] = rec.max_excursion;
            d["any_exit"] = rec.any_exit;
            records.append(d);
        }
        py::dict d;
        d["c"] = r.c;
        d["twist"] = r.twist;
        d["degenerate"] = r.degenerate;
        d["records"] = records;
        return d;
    }

    py::dict drift(double c, std::vector<double> charges, XY origin, double angle, double gyrations) const {
        DriftOptions opt;
        opt.gyrations = gyrations;
        opt.center = {origin.first, origin.second};
        DriftScan scan;
        {
            py::gil_scoped_release release;
            scan = drift_scan(problem_.field, problem_.chart, c, charges, locator(origin, angle), opt);
        }
        py::list records;
        for (const auto& r : scan.records) {
            py::dict d;
            d["e"] = r.charge;
            d["drift_per_gyration"] = r.drift_per_gyration;
            d["oracle"] = r.oracle;
            d["action_prediction"] = r.action_prediction;
            records.append(d);
        }
        py::dict d;
        d["records"] = records;
        d["exponent"] = scan.fit.exponent;
        d["prefactor"] = scan.fit.prefactor;
        return d;
    }

private:
    static LevelLocator locator(XY origin, double angle) {
        LevelLocator loc;
        loc.origin = {origin.first, origin.second};
        loc.angle = angle;
        return loc;
    }

    static SecondDerivativeRoute route_from(const std::string& route) {
        if (route == "finite_difference") return SecondDerivativeRoute::finite_difference;
        if (route == "expanded") return SecondDerivativeRoute::expanded;
        throw Error(Errc::invalid_argument, "route must be 'finite_difference' or 'expanded'");
    }

    SurfaceProblem problem_;
};

py::dict run(const std::string& command, const std::string& config, const std::string& out_dir, bool force,
             std::optional<std::uint64_t> seed) {
    const auto cmd = parse_command(command);
    if (!cmd) throw Error(Errc::invalid_argument, "unknown command '" + command + "'");
    CommandOptions opt;
    opt.out_dir = out_dir;
    opt.force = force;
    opt.seed = seed;
    const RunConfig cfg = RunConfig::load(config);
    CommandOutcome outcome;
    {
        py::gil_scoped_release release;
        outcome = run_command(cfg, *cmd, opt);
    }
    std::vector<std::string> files;
    for (const auto& f : outcome.files) files.push_back(f.string());
    py::dict d;
    d["summary"] = outcome.summary;
    d["warnings"] = outcome.warnings;
    d["files"] = files;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Charged-particle trapping on surfaces: level sets, action profiles, orbits.";

    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ParseError& e) {
            PyErr_SetObject(parse_error.ptr(), py::make_tuple(e.what(), e.offset()).ptr());
        } catch (const Error& e) {
            PyErr_SetObject(error.ptr(), py::make_tuple(e.what(), to_string(e.code())).ptr());
        }
    });

    py::class_<Expr>(m, "Expr")
        .def(py::init([](const std::string& text, const std::string& context) {
                 return Expr::parse(text, context_from(context));
             }),
             py::arg("text"), py::arg("context") = "surface")
        .def("__call__", [](const Expr& e, double u, double v) { return e.eval_at({u, v}); })
        .def("derivative", [](const Expr& e, const std::string& v) { return e.derivative(var_from(v)); })
        .def("depends_on", [](const Expr& e, const std::string& v) { return e.depends_on(var_from(v)); })
        .def("__str__", &Expr::to_string)
        .def("__repr__", [](const Expr& e) { return "Expr('" + e.to_string() + "')"; })
        .def("__eq__", &Expr::structurally_equal);

    py::class_<Surface>(m, "Surface")
        .def(py::init<const std::string&, Domain, const std::string&, std::optional<std::string>,
                      std::optional<std::string>, bool>(),
             py::arg("B"), py::arg("domain"), py::arg("metric") = "flat", py::arg("lam") = py::none(),
             py::arg("support") = py::none(), py::arg("periodic_x") = false)
        .def("field", &Surface::field, py::arg("x"), py::arg("y"))
        .def("trace_level", &Surface::trace_level, py::arg("c"), py::arg("origin") = XY{0, 0},
             py::arg("angle") = 0.0)
        .def("dI_dB", &Surface::di_db, py::arg("c"), py::arg("origin") = XY{0, 0}, py::arg("angle") = 0.0)
        .def("action", &Surface::action, py::arg("c"), py::arg("c_ref"), py::arg("center") = XY{0, 0})
        .def("twist", &Surface::twist, py::arg("c"), py::arg("origin") = XY{0, 0}, py::arg("angle") = 0.0,
             py::arg("route") = "finite_difference")
        .def("scan", &Surface::scan, py::arg("c_min"), py::arg("c_max"), py::arg("n"),
             py::arg("origin") = XY{0, 0}, py::arg("angle") = 0.0, py::arg("tolerance") = 1e-3,
             py::arg("route") = "finite_difference")
        .def("simulate", &Surface::simulate, py::arg("e"), py::arg("x0"), py::arg("y0"), py::arg("chi0") = 0.0,
             py::arg("T") = 1.0, py::arg("dt") = py::none(), py::arg("scheme") = "rk4_projected",
             py::arg("record_stride") = 1)
        .def("trap", &Surface::trap, py::arg("c"), py::arg("charges"), py::arg("T"), py::arg("n_initial") = 8,
             py::arg("seed") = 1, py::arg("origin") = XY{0, 0}, py::arg("angle") = 0.0,
             py::arg("annulus") = py::none(), py::arg("force") = false)
        .def("drift", &Surface::drift, py::arg("c"), py::arg("charges"), py::arg("origin") = XY{0, 0},
             py::arg("angle") = 0.0, py::arg("gyrations") = 40.0);

    m.def("run", &run, py::arg("command"), py::arg("config"), py::arg("out_dir"), py::arg("force") = false,
          py::arg("seed") = py::none(), "Run a CLI command in-process; returns summary, warnings, files.");
}
