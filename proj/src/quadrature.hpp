#pragma once

#include <vector>

namespace oledmag {

struct QuadratureRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre rule of the given order (>= 1). Rules are computed once per
// order and cached; the returned reference stays valid for the program lifetime.
const QuadratureRule& gauss_legendre(int order);

}  // namespace oledmag
