#include "magtrap/error.hpp"

namespace magtrap {

const char* to_string(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_argument: return "invalid argument";
        case Errc::outside_domain: return "outside domain";
        case Errc::degenerate_metric: return "degenerate metric";
        case Errc::near_critical: return "near-critical level";
        case Errc::open_curve: return "open curve";
        case Errc::step_limit: return "step limit";
        case Errc::quadrature: return "quadrature failure";
        case Errc::too_few_samples: return "too few samples";
        case Errc::degenerate_level: return "degenerate level";
        case Errc::parse_error: return "parse error";
        case Errc::eval_error: return "evaluation error";
    }
    return "unknown";
}

bool is_user_error(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_argument:
        case Errc::degenerate_level:
        case Errc::parse_error:
            return true;
        default:
            return false;
    }
}

}  // namespace magtrap
