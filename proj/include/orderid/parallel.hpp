#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace orderid::par {

// Reductions are blocked with a fixed block size so the combine order never
// depends on the worker count: each block partial is a pure function of its
// index range, and partials are folded serially in index order. The serial
// variants run the identical blocked algorithm, so parallel and serial paths
// agree bit for bit.

inline constexpr std::size_t block_size = 2048;

namespace detail {
inline std::atomic<int>& worker_override() {
    static std::atomic<int> value{0};
    return value;
}
} // namespace detail

inline int hardware_workers() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Active worker count: explicit override if set, hardware default otherwise.
inline int max_workers() {
    const int v = detail::worker_override().load(std::memory_order_relaxed);
    return v > 0 ? v : hardware_workers();
}

/// n <= 0 restores the hardware default.
inline void set_max_workers(int n) {
    detail::worker_override().store(n > 0 ? n : 0, std::memory_order_relaxed);
}

inline std::size_t block_count(std::size_t n) {
    return (n + block_size - 1) / block_size;
}

template <class F>
double block_partial_sum(std::size_t block, std::size_t n, F& term) {
    const std::size_t lo = block * block_size;
    const std::size_t hi = std::min(n, lo + block_size);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
}

template <class F>
double blocked_sum_serial(std::size_t n, F&& term) {
    const std::size_t nb = block_count(n);
    double total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) total += block_partial_sum(b, n, term);
    return total;
}

template <class F>
double blocked_sum(std::size_t n, F&& term, int workers = 0) {
    const std::size_t nb = block_count(n);
    const int w = workers > 0 ? workers : max_workers();
    if (w <= 1 || nb <= 1) return blocked_sum_serial(n, term);
    std::vector<double> partial(nb);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(w)
#endif
    for (long long b = 0; b < static_cast<long long>(nb); ++b)
        partial[static_cast<std::size_t>(b)] =
            block_partial_sum(static_cast<std::size_t>(b), n, term);
    double total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) total += partial[b];
    return total;
}

struct LogAccumulator {
    double max_term = -std::numeric_limits<double>::infinity();
    double sum = 0.0; // sum of exp(term - max_term)

    void fold(const LogAccumulator& other) {
        if (other.sum == 0.0) return;
        if (sum == 0.0) {
            *this = other;
            return;
        }
        if (other.max_term <= max_term) {
            sum += other.sum * std::exp(other.max_term - max_term);
        } else {
            sum = sum * std::exp(max_term - other.max_term) + other.sum;
            max_term = other.max_term;
        }
    }

    double log_sum() const {
        if (sum == 0.0) return -std::numeric_limits<double>::infinity();
        return max_term + std::log(sum);
    }
};

template <class F>
LogAccumulator block_partial_logsum(std::size_t block, std::size_t n, F& term) {
    const std::size_t lo = block * block_size;
    const std::size_t hi = std::min(n, lo + block_size);
    LogAccumulator acc;
    double values[block_size]; // one evaluation per index
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i < hi; ++i) {
        values[i - lo] = term(i);
        m = std::max(m, values[i - lo]);
    }
    if (m == -std::numeric_limits<double>::infinity()) return acc;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += std::exp(values[i - lo] - m);
    acc.max_term = m;
    acc.sum = s;
    return acc;
}

/// log sum_i exp(term(i)) with the deterministic blocked fold.
template <class F>
double blocked_logsumexp_serial(std::size_t n, F&& term) {
    const std::size_t nb = block_count(n);
    LogAccumulator acc;
    for (std::size_t b = 0; b < nb; ++b) acc.fold(block_partial_logsum(b, n, term));
    return acc.log_sum();
}

template <class F>
double blocked_logsumexp(std::size_t n, F&& term, int workers = 0) {
    const std::size_t nb = block_count(n);
    const int w = workers > 0 ? workers : max_workers();
    if (w <= 1 || nb <= 1) return blocked_logsumexp_serial(n, term);
    std::vector<LogAccumulator> partial(nb);
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(w)
#endif
    for (long long b = 0; b < static_cast<long long>(nb); ++b)
        partial[static_cast<std::size_t>(b)] =
            block_partial_logsum(static_cast<std::size_t>(b), n, term);
    LogAccumulator acc;
    for (std::size_t b = 0; b < nb; ++b) acc.fold(partial[b]);
    return acc.log_sum();
}

/// Index-parallel loop for tasks that write to disjoint slots.
template <class F>
void parallel_for(std::size_t n, F&& fn, int workers = 0) {
    const int w = workers > 0 ? workers : max_workers();
    if (w <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) num_threads(w)
#endif
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        fn(static_cast<std::size_t>(i));
}

} // namespace orderid::par
