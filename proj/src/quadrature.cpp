#include "orderid/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace orderid {

namespace {

Nodes1D compute_gauss_legendre(int n) {
    Nodes1D out;
    out.x.resize(n);
    out.w.resize(n);
    const double pi = 3.14159265358979323846;
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton iteration from the Chebyshev-like initial guess.
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        out.x[i] = -x;
        out.x[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.w[i] = w;
        out.w[n - 1 - i] = w;
    }
    return out;
}

} // namespace

const Nodes1D& gauss_legendre_reference(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre_reference: node count must be positive");
    static std::map<int, Nodes1D> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

Nodes1D nodes_on(double a, double b, const QuadratureScheme& scheme) {
    Nodes1D out;
    const int n = std::max(2, scheme.nodes);
    if (!(b > a)) return out;
    if (scheme.rule == QuadratureScheme::Rule::trapezoid) {
        out.x.resize(n);
        out.w.resize(n);
        const double h = (b - a) / (n - 1);
        for (int i = 0; i < n; ++i) {
            out.x[i] = a + h * i;
            out.w[i] = (i == 0 || i == n - 1) ? h / 2.0 : h;
        }
        return out;
    }
    const Nodes1D& ref = gauss_legendre_reference(n);
    out.x.resize(n);
    out.w.resize(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        out.x[i] = mid + half * ref.x[i];
        out.w[i] = half * ref.w[i];
    }
    return out;
}

Nodes1D nodes_on_segmented(double a, double b, const std::vector<double>& interior_breaks,
                           const QuadratureScheme& scheme) {
    std::vector<double> edges;
    edges.push_back(a);
    for (double t : interior_breaks)
        if (t > a && t < b) edges.push_back(t);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    Nodes1D out;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const Nodes1D piece = nodes_on(edges[s], edges[s + 1], scheme);
        out.x.insert(out.x.end(), piece.x.begin(), piece.x.end());
        out.w.insert(out.w.end(), piece.w.begin(), piece.w.end());
    }
    return out;
}

} // namespace orderid
