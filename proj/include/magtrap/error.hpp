#pragma once

#include <stdexcept>
#include <string>

namespace magtrap {

enum class Errc {
    invalid_argument,   // bad user input (config, parameters)
    outside_domain,     // point or stencil left the chart rectangle
    degenerate_metric,  // metric not positive definite
    near_critical,      // |grad B| below the floor, or empty level set
    open_curve,         // level set trace left the domain
    step_limit,         // iteration / step ceiling hit
    quadrature,         // quadrature or root finding did not converge
    too_few_samples,    // trajectory / scan too short for the estimate
    degenerate_level,   // twist condition fails where it is required
    parse_error,        // expression syntax error
    eval_error,         // expression evaluation (math domain) error
};

const char* to_string(Errc code) noexcept;

// True when the error is attributable to user input rather than numerics.
bool is_user_error(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace magtrap
