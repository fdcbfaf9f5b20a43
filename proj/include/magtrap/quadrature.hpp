#pragma once

#include <cstddef>
#include <vector>

namespace magtrap::quad {

struct Rule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule with n nodes. Rules are computed once and cached.
const Rule& gauss_legendre(std::size_t n);

// Integrates f over [a, b] with an n-point rule on `panels` equal panels.
template <class F>
double integrate(F&& f, double a, double b, std::size_t n, std::size_t panels = 1) {
    const Rule& r = gauss_legendre(n);
    const double w = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + w * static_cast<double>(p);
        double s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            s += r.weights[i] * f(lo + 0.5 * w * (r.nodes[i] + 1.0));
        }
        sum += 0.5 * w * s;
    }
    return sum;
}

}  // namespace magtrap::quad
