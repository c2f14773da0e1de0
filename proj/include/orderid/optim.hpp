#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace orderid {

struct OptimResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
};

/// Nelder-Mead simplex minimization on a box. Points outside the box are
/// rejected through a +inf objective, which keeps the simplex feasible.
OptimResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                        const std::vector<double>& start,
                        const std::vector<std::pair<double, double>>& box,
                        double tol = 1e-10, int max_evals = 4000);

/// Golden-section minimization of a univariate function on [a, b].
double golden_section(const std::function<double(double)>& objective, double a, double b,
                      double tol = 1e-10);

} // namespace orderid
