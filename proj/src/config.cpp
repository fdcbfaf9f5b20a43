#include "magtrap/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "magtrap/error.hpp"

namespace magtrap {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool parse_double(const std::string& s, double& v) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(v);
}

}  // namespace

const std::map<std::string, std::vector<std::string>>& config_schema() {
    static const std::map<std::string, std::vector<std::string>> schema = {
        {"surface", {"metric", "domain", "periodic_x", "lambda", "g11", "g12", "g22"}},
        {"field", {"B", "support", "A_r", "A_theta", "A_z"}},
        {"simulate", {"e", "x0", "y0", "chi0", "T", "dt", "scheme", "record_stride"}},
        {"levels", {"c_min", "c_max", "n", "origin", "angle"}},
        {"twist", {"c_min", "c_max", "n", "origin", "angle", "tolerance", "route"}},
        {"trap", {"c", "e", "T", "n_initial", "seed", "origin", "angle", "annulus", "tolerance",
                  "steps_per_gyration"}},
        {"drift", {"c", "e", "gyrations", "steps_per_gyration", "origin", "angle", "center", "chi0"}},
        {"reduce", {"M", "e", "E", "domain", "r_floor", "margin", "convention", "grid"}},
        {"scan", {"c_min", "c_max", "n", "origin", "angle", "tolerance"}},
        {"reduced", {"M", "e", "E", "charge", "convention"}},
    };
    return schema;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(Errc::parse_error,
                    origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    RunConfig cfg;
    cfg.origin_ = origin;
    const auto& schema = config_schema();
    for (const auto& [name, section] : tree) {
        if (section.empty() && !section.data().empty()) {
            throw Error(Errc::invalid_argument, origin + ": key '" + name + "' outside any section");
        }
        const auto it = schema.find(name);
        if (it == schema.end()) throw Error(Errc::invalid_argument, origin + ": unknown section [" + name + "]");
        Section keys;
        for (const auto& [key, value] : section) {
            if (!value.empty()) {
                throw Error(Errc::invalid_argument, origin + ": nested key in [" + name + "] " + key);
            }
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
                throw Error(Errc::invalid_argument, origin + ": unknown key '" + key + "' in [" + name + "]");
            }
            keys.emplace_back(key, trim(value.data()));
        }
        cfg.sections_.emplace_back(name, std::move(keys));
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::invalid_argument, "cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

bool RunConfig::has(const std::string& section) const {
    return std::any_of(sections_.begin(), sections_.end(), [&](const auto& s) { return s.first == section; });
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

const std::string* RunConfig::find(const std::string& section, const std::string& key) const {
    for (const auto& [name, keys] : sections_) {
        if (name != section) continue;
        for (const auto& [k, v] : keys) {
            if (k == key) return &v;
        }
    }
    return nullptr;
}

void RunConfig::bad_value(const std::string& section, const std::string& key, const std::string& why) const {
    throw Error(Errc::invalid_argument, origin_ + ": [" + section + "] " + key + ": " + why);
}

std::string RunConfig::text(const std::string& section, const std::string& key) const {
    const std::string* v = find(section, key);
    if (!v) bad_value(section, key, "missing required key");
    if (v->empty()) bad_value(section, key, "empty value");
    return *v;
}

std::string RunConfig::text(const std::string& section, const std::string& key, const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v && !v->empty() ? *v : fallback;
}

double RunConfig::number(const std::string& section, const std::string& key, double lo, double hi) const {
    const std::string s = text(section, key);
    double v = 0.0;
    if (!parse_double(s, v)) bad_value(section, key, "'" + s + "' is not a number");
    if (v < lo || v > hi) {
        bad_value(section, key, s + " outside [" + format_number(lo) + ", " + format_number(hi) + "]");
    }
    return v;
}

double RunConfig::number(const std::string& section, const std::string& key, double lo, double hi,
                         double fallback) const {
    return has(section, key) ? number(section, key, lo, hi) : fallback;
}

long RunConfig::integer(const std::string& section, const std::string& key, long lo, long hi) const {
    const std::string s = text(section, key);
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        bad_value(section, key, "'" + s + "' is not an integer");
    }
    if (v < lo || v > hi) {
        bad_value(section, key, s + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
}

long RunConfig::integer(const std::string& section, const std::string& key, long lo, long hi, long fallback) const {
    return has(section, key) ? integer(section, key, lo, hi) : fallback;
}

std::uint64_t RunConfig::unsigned64(const std::string& section, const std::string& key,
                                    std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = text(section, key);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        bad_value(section, key, "'" + s + "' is not an unsigned 64-bit integer");
    }
    return v;
}

bool RunConfig::flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = text(section, key);
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    bad_value(section, key, "'" + s + "' is not a boolean");
}

std::vector<double> RunConfig::numbers(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(text(section, key))) {
        double v = 0.0;
        if (!parse_double(item, v)) bad_value(section, key, "'" + item + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) bad_value(section, key, "empty list");
    return out;
}

std::vector<double> RunConfig::numbers(const std::string& section, const std::string& key,
                                       std::size_t count) const {
    auto out = numbers(section, key);
    if (out.size() != count) {
        bad_value(section, key, "expected " + std::to_string(count) + " numbers, got " + std::to_string(out.size()));
    }
    return out;
}

Point2 RunConfig::point(const std::string& section, const std::string& key, Point2 fallback) const {
    if (!has(section, key)) return fallback;
    const auto v = numbers(section, key, 2);
    return {v[0], v[1]};
}

Rect RunConfig::rect(const std::string& section, const std::string& key) const {
    const auto v = numbers(section, key, 4);
    if (!(v[1] > v[0]) || !(v[3] > v[2])) bad_value(section, key, "expected x_min x_max y_min y_max with min < max");
    return {v[0], v[1], v[2], v[3]};
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
    auto sit = std::find_if(sections_.begin(), sections_.end(), [&](const auto& s) { return s.first == section; });
    if (sit == sections_.end()) {
        sections_.emplace_back(section, Section{});
        sit = std::prev(sections_.end());
    }
    for (auto& [k, v] : sit->second) {
        if (k == key) {
            v = value;
            return;
        }
    }
    sit->second.emplace_back(key, value);
}

std::string RunConfig::to_string() const {
    std::string out;
    for (const auto& [name, keys] : sections_) {
        if (!out.empty()) out += '\n';
        out += "[" + name + "]\n";
        for (const auto& [k, v] : keys) out += k + " = " + v + "\n";
    }
    return out;
}

SurfaceProblem build_surface_problem(const RunConfig& config) {
    const Rect domain = config.rect("surface", "domain");
    const bool periodic = config.flag("surface", "periodic_x", false);
    const std::string metric = config.text("surface", "metric", "flat");
    auto expr_of = [&](const std::string& section, const std::string& key) {
        try {
            return Expr::parse(config.text(section, key), VarContext::surface);
        } catch (const ParseError& e) {
            throw Error(Errc::parse_error, config.origin() + ": [" + section + "] " + key + ": " + e.what());
        }
    };

    SurfaceProblem problem;
    if (metric == "flat") {
        problem.chart = SurfaceChart::flat(domain, periodic);
    } else if (metric == "conformal") {
        problem.chart = SurfaceChart::conformal(domain, make_scalar_field(expr_of("surface", "lambda")), periodic);
    } else if (metric == "general") {
        problem.chart = SurfaceChart::general(domain, make_scalar_field(expr_of("surface", "g11")),
                                              make_scalar_field(expr_of("surface", "g12")),
                                              make_scalar_field(expr_of("surface", "g22")), periodic);
    } else {
        throw Error(Errc::invalid_argument,
                    config.origin() + ": [surface] metric: '" + metric + "' is not flat, conformal or general");
    }

    if (!config.has("field", "B")) {
        throw Error(Errc::invalid_argument, config.origin() + ": [field] B: missing required key");
    }
    problem.strength = expr_of("field", "B");
    std::function<bool(Point2)> support;
    if (config.has("field", "support")) {
        const Expr g = expr_of("field", "support");
        support = [g](Point2 p) { return g.eval_at(p) > 0.0; };
    }
    problem.field = FieldSpec(make_scalar_field(problem.strength), problem.chart, support);
    return problem;
}

PotentialExprs potential_expressions(const RunConfig& config) {
    auto expr_of = [&](const std::string& key) {
        if (!config.has("field", key)) return Expr::number(0.0);
        try {
            return Expr::parse(config.text("field", key), VarContext::axisymmetric);
        } catch (const ParseError& e) {
            throw Error(Errc::parse_error, config.origin() + ": [field] " + key + ": " + e.what());
        }
    };
    if (config.has("field", "B")) {
        throw Error(Errc::invalid_argument,
                    config.origin() + ": [field] B: reduce takes A_r, A_theta, A_z instead of B");
    }
    PotentialExprs p{expr_of("A_r"), expr_of("A_theta"), expr_of("A_z")};
    if (!config.has("field", "A_r") && !config.has("field", "A_theta") && !config.has("field", "A_z")) {
        throw Error(Errc::invalid_argument, config.origin() + ": [field] needs at least one of A_r, A_theta, A_z");
    }
    return p;
}

AxisymmetricPotential build_potential(const PotentialExprs& exprs) {
    AxisymmetricPotential pot;
    pot.a_r = make_scalar_field(exprs.a_r);
    pot.a_theta = make_scalar_field(exprs.a_theta);
    pot.a_z = make_scalar_field(exprs.a_z);
    return pot;
}

RunConfig reduced_surface_config(const PotentialExprs& exprs, const ReducedProblem& problem) {
    const Expr r = Expr::variable(Var::r);
    const Expr b_theta = exprs.a_z.derivative(Var::r) - exprs.a_r.derivative(Var::z);
    const Expr k = Expr::number(problem.M) - Expr::number(problem.e) * exprs.a_theta;
    const Expr v_eff = pow(k, Expr::number(2)) / (Expr::number(2) * pow(r, Expr::number(2)));
    const Expr w = Expr::number(problem.E) - v_eff;
    const bool jacobi = problem.convention == MetricConvention::jacobi;
    Expr lambda = jacobi ? call(Func::sqrt, Expr::number(2) * w) : Expr::number(1) / call(Func::sqrt, w);
    Expr b = jacobi ? b_theta / (Expr::number(2) * w) : b_theta * w;
    if (problem.charge < 0.0) b = -b;
    auto to_xy = [](const Expr& e) { return e.rename(Var::r, Var::x).rename(Var::z, Var::y).to_string(); };

    RunConfig cfg;
    const Rect& d = problem.domain;
    cfg.set("surface", "metric", "conformal");
    cfg.set("surface", "domain", format_number(d.x_min) + " " + format_number(d.x_max) + " " +
                                     format_number(d.y_min) + " " + format_number(d.y_max));
    cfg.set("surface", "lambda", to_xy(lambda));
    cfg.set("field", "B", to_xy(b));
    cfg.set("reduced", "M", format_number(problem.M));
    cfg.set("reduced", "e", format_number(problem.e));
    cfg.set("reduced", "E", format_number(problem.E));
    cfg.set("reduced", "charge", format_number(problem.charge));
    cfg.set("reduced", "convention", jacobi ? "jacobi" : "literal");
    return cfg;
}

}  // namespace magtrap
