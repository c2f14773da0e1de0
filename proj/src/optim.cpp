#include "orderid/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orderid {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

OptimResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                        const std::vector<double>& start,
                        const std::vector<std::pair<double, double>>& box, double tol,
                        int max_evals) {
    const std::size_t n = start.size();
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i)
            if (x[i] < box[i].first || x[i] > box[i].second) return kInf;
        ++evals;
        return objective(x);
    };

    // Initial simplex: start plus per-axis offsets of 5% of the box width,
    // flipped inward when the step would leave the box.
    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> value(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = 0.05 * (box[i].second - box[i].first);
        double& c = simplex[i + 1][i];
        c = (c + step <= box[i].second) ? c + step : c - step;
    }
    for (std::size_t i = 0; i <= n; ++i) value[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    while (evals < max_evals) {
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];
        if (std::isfinite(value[worst]) &&
            value[worst] - value[best] < tol * (std::abs(value[best]) + tol))
            break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;
        }
        auto blend = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j)
                x[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
            return x;
        };

        const std::vector<double> reflected = blend(-1.0);
        const double fr = eval(reflected);
        if (fr < value[best]) {
            const std::vector<double> expanded = blend(-2.0);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                value[worst] = fe;
            } else {
                simplex[worst] = reflected;
                value[worst] = fr;
            }
            continue;
        }
        if (fr < value[second]) {
            simplex[worst] = reflected;
            value[worst] = fr;
            continue;
        }
        const std::vector<double> contracted = blend(fr < value[worst] ? -0.5 : 0.5);
        const double fc = eval(contracted);
        if (fc < std::min(fr, value[worst])) {
            simplex[worst] = contracted;
            value[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j)
                simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            value[i] = eval(simplex[i]);
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (value[i] < value[best]) best = i;
    return {simplex[best], value[best], evals};
}

double golden_section(const std::function<double(double)>& objective, double a, double b,
                      double tol) {
    const double phi = 0.61803398874989484820;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = objective(x2);
        }
    }
    return 0.5 * (a + b);
}

} // namespace orderid
