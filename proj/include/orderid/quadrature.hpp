#pragma once

#include <vector>

namespace orderid {

/// Deterministic quadrature settings shared by every integral in the library.
/// Unbounded axes are truncated at trunc_radius standard deviations around the
/// integrand's anchor points before the rule is applied.
struct QuadratureScheme {
    enum class Rule { gauss_legendre, trapezoid };

    int nodes = 256;          // per axis, >= 16
    double trunc_radius = 8.0; // in noise standard deviations, >= 8
    Rule rule = Rule::gauss_legendre;
};

struct Nodes1D {
    std::vector<double> x;
    std::vector<double> w;
};

/// Gauss-Legendre nodes and weights on [-1, 1]; cached per node count.
const Nodes1D& gauss_legendre_reference(int n);

/// Nodes of the scheme's rule mapped onto [a, b].
Nodes1D nodes_on(double a, double b, const QuadratureScheme& scheme);

/// As nodes_on, but the interval is split at the interior breakpoints and each
/// piece gets its own rule, so integrands with kinks or jumps at known
/// locations are integrated piecewise-smoothly.
Nodes1D nodes_on_segmented(double a, double b, const std::vector<double>& interior_breaks,
                           const QuadratureScheme& scheme);

} // namespace orderid
