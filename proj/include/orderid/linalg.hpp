#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace orderid {

/// Dense row-major square matrix, sized for parameter-space dimensions (<= 8).
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t dim) : n(dim), a(dim * dim, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

    static SquareMatrix identity(std::size_t dim) {
        SquareMatrix m(dim);
        for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// or nullopt if the matrix is not positive definite.
inline std::optional<SquareMatrix> cholesky(const SquareMatrix& m) {
    const std::size_t n = m.n;
    SquareMatrix l(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return std::nullopt;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

/// Solves L L^T x = b given the Cholesky factor L.
inline std::vector<double> cholesky_solve(const SquareMatrix& l, const std::vector<double>& b) {
    const std::size_t n = l.n;
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

inline double cholesky_log_det(const SquareMatrix& l) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.n; ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

/// y = L z for a lower-triangular L.
inline std::vector<double> lower_tri_apply(const SquareMatrix& l, const std::vector<double>& z) {
    const std::size_t n = l.n;
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) y[i] += l(i, j) * z[j];
    return y;
}

} // namespace orderid
