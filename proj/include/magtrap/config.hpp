#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "magtrap/expr.hpp"
#include "magtrap/fields.hpp"
#include "magtrap/geometry.hpp"
#include "magtrap/reduction.hpp"

namespace magtrap {

// Sectioned key = value run configuration. Section and key names are
// checked against the schema; values are kept as text until requested.
class RunConfig {
public:
    static RunConfig parse(std::string_view text, const std::string& origin = "<config>");
    static RunConfig load(const std::filesystem::path& path);

    bool has(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    std::string text(const std::string& section, const std::string& key) const;
    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const;

    // Numbers are checked against [lo, hi]; violations are user errors.
    double number(const std::string& section, const std::string& key, double lo, double hi) const;
    double number(const std::string& section, const std::string& key, double lo, double hi,
                  double fallback) const;
    long integer(const std::string& section, const std::string& key, long lo, long hi) const;
    long integer(const std::string& section, const std::string& key, long lo, long hi, long fallback) const;
    std::uint64_t unsigned64(const std::string& section, const std::string& key, std::uint64_t fallback) const;
    bool flag(const std::string& section, const std::string& key, bool fallback) const;
    // Whitespace or comma separated numbers.
    std::vector<double> numbers(const std::string& section, const std::string& key) const;
    std::vector<double> numbers(const std::string& section, const std::string& key, std::size_t count) const;
    Point2 point(const std::string& section, const std::string& key, Point2 fallback) const;
    Rect rect(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    // Canonical text: sections and keys in insertion order.
    std::string to_string() const;

    const std::string& origin() const { return origin_; }

private:
    using Section = std::vector<std::pair<std::string, std::string>>;
    const std::string* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void bad_value(const std::string& section, const std::string& key,
                                const std::string& why) const;

    std::vector<std::pair<std::string, Section>> sections_;
    std::string origin_;
};

// Section name -> accepted keys.
const std::map<std::string, std::vector<std::string>>& config_schema();

struct SurfaceProblem {
    SurfaceChart chart = SurfaceChart::flat({});
    FieldSpec field{ScalarField::constant(1.0), chart};
    Expr strength;
};

// [surface] and [field] with a B expression, in (x, y).
SurfaceProblem build_surface_problem(const RunConfig& config);

// [field] with A_r, A_theta, A_z expressions in (r, z). Missing components are 0.
struct PotentialExprs {
    Expr a_r, a_theta, a_z;
};
PotentialExprs potential_expressions(const RunConfig& config);
AxisymmetricPotential build_potential(const PotentialExprs& exprs);

// Surface configuration reproducing a reduced problem: the conformal factor
// and |B_eff| written symbolically in (x, y) = (r, z).
RunConfig reduced_surface_config(const PotentialExprs& exprs, const ReducedProblem& problem);

}  // namespace magtrap
