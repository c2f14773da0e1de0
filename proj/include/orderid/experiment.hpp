#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "orderid/families.hpp"
#include "orderid/parallel.hpp"
#include "orderid/posterior.hpp"

namespace orderid {

/// Full description of one Monte Carlo error-rate experiment. The error
/// curve is a pure function of this value: per-replication streams are keyed
/// by (n, replication), so neither the worker count nor the grid composition
/// perturbs individual replications.
struct ExperimentConfig {
    enum class Estimator { global, local, bayes_factor };
    enum class EvidenceMethod { quadrature, importance, auto_select };

    OrderIndexedFamily family;
    PriorSpec prior;
    Theta theta_star;
    int k_star = 1;
    Estimator estimator = Estimator::local;
    std::vector<std::size_t> n_grid;
    int replications = 100;
    EvidenceMethod evidence = EvidenceMethod::auto_select;
    int quadrature_nodes = 64;
    std::size_t importance_draws = 2000;
    std::uint64_t master_seed = 42;

    std::uint64_t fingerprint() const;
};

/// Monte Carlo frequencies of under/over/correct selection per sample size.
struct ErrorCurve {
    struct Row {
        std::size_t n = 0;
        int replications = 0;
        int under = 0;
        int over = 0;
        int correct = 0;
        int excluded = 0;
    };
    struct RepRecord {
        std::size_t n = 0;
        int rep = 0;
        int k_global = 0;
        int k_local = 0;
        int k_bayes_factor = 0;
        bool excluded = false;
    };

    std::vector<Row> rows;
    std::vector<RepRecord> records; // deterministic (n, rep) order
    std::uint64_t config_fingerprint = 0;
};

enum class ErrorKind { under, over };

ErrorCurve run_error_experiment(const ExperimentConfig& config);

struct RateFit {
    enum class Model { exponential, poly_log };

    Model model = Model::exponential;
    double intercept = 0.0;          // a in log freq = a - c n (or a - c log n + b log log n)
    double rate = 0.0;               // c
    double loglog_coeff = 0.0;       // b (poly_log only)
    double r_squared = 0.0;
    double predicted_exponent = 0.0; // (D1 - D2)/2, reported for comparison
};

/// Least-squares fit of log frequency against n on continuity-corrected
/// frequencies (count + 1/2) / (reps + 1). Throws InsufficientData with
/// fewer than 3 grid points carrying nonzero counts.
RateFit fit_exponential_rate(const ErrorCurve& curve, ErrorKind kind);

/// Least-squares fit of log freq = a - c log n + b log log n, with the
/// dimension-index prediction (d1 - d2)/2 attached for comparison.
RateFit fit_polylog_rate(const ErrorCurve& curve, ErrorKind kind, double d1, double d2,
                         double beta2);

/// Fit cores on plain (x, log y) points; the curve-facing wrappers above
/// apply the continuity correction and delegate here.
RateFit fit_exponential_points(const std::vector<double>& n, const std::vector<double>& log_freq);
RateFit fit_polylog_points(const std::vector<double>& n, const std::vector<double>& log_freq);

/// Deterministic parallel map: applies task to every index, collects results
/// in index order regardless of scheduling, and gathers thrown errors per
/// index instead of failing the batch.
template <class Result>
struct ReplicateOutcome {
    std::vector<Result> results;             // default-constructed on failure
    std::vector<std::pair<std::size_t, std::string>> failures;
};

template <class Result, class Task>
ReplicateOutcome<Result> replicate(std::size_t count, Task&& task) {
    ReplicateOutcome<Result> out;
    out.results.resize(count);
    std::vector<std::string> errors(count);
    std::vector<char> failed(count, 0);
    par::parallel_for(count, [&](std::size_t i) {
        try {
            out.results[i] = task(i);
        } catch (const std::exception& e) {
            failed[i] = 1;
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < count; ++i)
        if (failed[i]) out.failures.emplace_back(i, errors[i]);
    return out;
}

std::string estimator_name(ExperimentConfig::Estimator estimator);
ExperimentConfig::Estimator estimator_from_name(const std::string& name);

} // namespace orderid
