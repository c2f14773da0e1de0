#include "orderid/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "orderid/errors.hpp"

namespace orderid {

namespace {

std::uint64_t fnv1a(std::uint64_t hash, std::uint64_t value) {
    for (int b = 0; b < 8; ++b) {
        hash ^= (value >> (8 * b)) & 0xFF;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

std::uint64_t fnv1a(std::uint64_t hash, double value) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(value));
    std::memcpy(&bits, &value, sizeof(bits));
    return fnv1a(hash, bits);
}

} // namespace

std::uint64_t ExperimentConfig::fingerprint() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    h = fnv1a(h, static_cast<std::uint64_t>(family.kind));
    h = fnv1a(h, static_cast<std::uint64_t>(family.component));
    h = fnv1a(h, family.sigma);
    h = fnv1a(h, family.gamma_lo);
    h = fnv1a(h, family.gamma_hi);
    h = fnv1a(h, family.var_lo);
    h = fnv1a(h, family.var_hi);
    h = fnv1a(h, static_cast<std::uint64_t>(family.k_max));
    h = fnv1a(h, static_cast<std::uint64_t>(prior.within));
    h = fnv1a(h, prior.coeff_sd);
    for (double w : prior.order_weights) h = fnv1a(h, w);
    h = fnv1a(h, static_cast<std::uint64_t>(theta_star.k));
    for (double v : theta_star.v) h = fnv1a(h, v);
    h = fnv1a(h, static_cast<std::uint64_t>(k_star));
    h = fnv1a(h, static_cast<std::uint64_t>(estimator));
    for (std::size_t n : n_grid) h = fnv1a(h, static_cast<std::uint64_t>(n));
    h = fnv1a(h, static_cast<std::uint64_t>(replications));
    h = fnv1a(h, static_cast<std::uint64_t>(evidence));
    h = fnv1a(h, static_cast<std::uint64_t>(quadrature_nodes));
    h = fnv1a(h, static_cast<std::uint64_t>(importance_draws));
    h = fnv1a(h, master_seed);
    return h;
}

namespace {

struct RepOutcome {
    int k_global = 0;
    int k_local = 0;
    int k_bayes_factor = 0;
    bool excluded = false;
};

RepOutcome run_one_replication(const ExperimentConfig& config, std::size_t n, int rep) {
    RandomStream stream(config.master_seed, stream_index(0xE1, n, static_cast<std::uint64_t>(rep)));
    RepOutcome out;
    try {
        const Dataset data = sample(config.family, config.theta_star, n, stream);
        std::vector<LogEvidence> evidences;
        evidences.reserve(static_cast<std::size_t>(config.family.k_max));
        QuadratureScheme scheme;
        scheme.nodes = config.quadrature_nodes;
        for (int k = 1; k <= config.family.k_max; ++k) {
            const int dim = model_dimension(config.family, k);
            const bool quad =
                config.evidence == ExperimentConfig::EvidenceMethod::quadrature ||
                (config.evidence == ExperimentConfig::EvidenceMethod::auto_select && dim <= 3);
            if (quad && dim > 3)
                throw DimensionTooHigh("experiment: quadrature requested beyond D(k) = 3");
            if (quad) {
                evidences.push_back(
                    log_evidence_quadrature(config.family, config.prior, k, data, scheme));
            } else {
                RandomStream k_stream = stream.substream(stream_index(0xEC, static_cast<std::uint64_t>(k)));
                evidences.push_back(log_evidence_importance(config.family, config.prior, k, data,
                                                            config.importance_draws, k_stream));
            }
            if (!std::isfinite(evidences.back().log_value))
                throw Error("experiment: non-finite evidence at order " + std::to_string(k));
        }
        const OrderPosterior posterior = order_posterior(evidences, config.prior);
        out.k_global = estimate_global(posterior);
        out.k_local = estimate_local(posterior);
        out.k_bayes_factor = estimate_bayes_factor(evidences, config.prior);
    } catch (const std::exception&) {
        out.excluded = true;
    }
    return out;
}

} // namespace

ErrorCurve run_error_experiment(const ExperimentConfig& config) {
    if (config.n_grid.empty()) throw ValidationError("experiment: empty sample-size grid");
    for (std::size_t i = 1; i < config.n_grid.size(); ++i)
        if (config.n_grid[i] <= config.n_grid[i - 1])
            throw ValidationError("experiment: sample-size grid must be strictly increasing");
    if (config.replications < 1) throw ValidationError("experiment: replications must be >= 1");
    if (config.k_star > config.family.k_max)
        throw ValidationError("experiment: true order beyond k_max");

    const std::size_t total = config.n_grid.size() * static_cast<std::size_t>(config.replications);
    const auto outcome = replicate<RepOutcome>(total, [&](std::size_t idx) {
        const std::size_t n = config.n_grid[idx / static_cast<std::size_t>(config.replications)];
        const int rep = static_cast<int>(idx % static_cast<std::size_t>(config.replications));
        return run_one_replication(config, n, rep);
    });

    ErrorCurve curve;
    curve.config_fingerprint = config.fingerprint();
    curve.records.reserve(total);
    for (std::size_t gi = 0; gi < config.n_grid.size(); ++gi) {
        ErrorCurve::Row row;
        row.n = config.n_grid[gi];
        for (int rep = 0; rep < config.replications; ++rep) {
            const RepOutcome& r =
                outcome.results[gi * static_cast<std::size_t>(config.replications) +
                                static_cast<std::size_t>(rep)];
            ErrorCurve::RepRecord record;
            record.n = row.n;
            record.rep = rep;
            record.k_global = r.k_global;
            record.k_local = r.k_local;
            record.k_bayes_factor = r.k_bayes_factor;
            record.excluded = r.excluded;
            curve.records.push_back(record);
            if (r.excluded) {
                ++row.excluded;
                continue;
            }
            ++row.replications;
            int k_hat = r.k_local;
            if (config.estimator == ExperimentConfig::Estimator::global) k_hat = r.k_global;
            if (config.estimator == ExperimentConfig::Estimator::bayes_factor)
                k_hat = r.k_bayes_factor;
            if (k_hat < config.k_star)
                ++row.under;
            else if (k_hat > config.k_star)
                ++row.over;
            else
                ++row.correct;
        }
        curve.rows.push_back(row);
    }
    return curve;
}

namespace {

struct LeastSquares {
    // generic normal-equation solve for up to 3 columns
    static std::vector<double> solve(const std::vector<std::vector<double>>& columns,
                                     const std::vector<double>& y, double& r_squared) {
        const std::size_t p = columns.size(), n = y.size();
        std::vector<double> ata(p * p, 0.0), aty(p, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < p; ++a) {
                aty[a] += columns[a][i] * y[i];
                for (std::size_t b = 0; b < p; ++b) ata[a * p + b] += columns[a][i] * columns[b][i];
            }
        // Gaussian elimination with partial pivoting
        std::vector<double> m = ata, rhs = aty;
        for (std::size_t c = 0; c < p; ++c) {
            std::size_t pivot = c;
            for (std::size_t r = c + 1; r < p; ++r)
                if (std::abs(m[r * p + c]) > std::abs(m[pivot * p + c])) pivot = r;
            for (std::size_t cc = 0; cc < p; ++cc) std::swap(m[c * p + cc], m[pivot * p + cc]);
            std::swap(rhs[c], rhs[pivot]);
            for (std::size_t r = 0; r < p; ++r) {
                if (r == c || m[c * p + c] == 0.0) continue;
                const double f = m[r * p + c] / m[c * p + c];
                for (std::size_t cc = 0; cc < p; ++cc) m[r * p + cc] -= f * m[c * p + cc];
                rhs[r] -= f * rhs[c];
            }
        }
        std::vector<double> beta(p);
        for (std::size_t c = 0; c < p; ++c) beta[c] = rhs[c] / m[c * p + c];

        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(n);
        double ss_tot = 0.0, ss_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t a = 0; a < p; ++a) fit += beta[a] * columns[a][i];
            ss_res += (y[i] - fit) * (y[i] - fit);
            ss_tot += (y[i] - mean) * (y[i] - mean);
        }
        r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
        return beta;
    }
};

std::pair<std::vector<double>, std::vector<double>> corrected_points(const ErrorCurve& curve,
                                                                     ErrorKind kind) {
    std::vector<double> n, log_freq;
    int usable = 0;
    for (const auto& row : curve.rows) {
        const int count = kind == ErrorKind::under ? row.under : row.over;
        if (row.replications < 1) continue;
        if (count > 0) ++usable;
        const double freq =
            (static_cast<double>(count) + 0.5) / (static_cast<double>(row.replications) + 1.0);
        n.push_back(static_cast<double>(row.n));
        log_freq.push_back(std::log(freq));
    }
    if (usable < 3)
        throw InsufficientData("rate fit: need at least 3 grid points with nonzero error counts");
    return {n, log_freq};
}

} // namespace

RateFit fit_exponential_points(const std::vector<double>& n, const std::vector<double>& log_freq) {
    if (n.size() < 3) throw InsufficientData("rate fit: need at least 3 points");
    std::vector<double> ones(n.size(), 1.0), neg_n(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) neg_n[i] = -n[i];
    RateFit fit;
    fit.model = RateFit::Model::exponential;
    const auto beta = LeastSquares::solve({ones, neg_n}, log_freq, fit.r_squared);
    fit.intercept = beta[0];
    fit.rate = beta[1];
    return fit;
}

RateFit fit_polylog_points(const std::vector<double>& n, const std::vector<double>& log_freq) {
    if (n.size() < 3) throw InsufficientData("rate fit: need at least 3 points");
    std::vector<double> ones(n.size(), 1.0), neg_log(n.size()), loglog(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        neg_log[i] = -std::log(n[i]);
        loglog[i] = std::log(std::log(n[i]));
    }
    RateFit fit;
    fit.model = RateFit::Model::poly_log;
    const auto beta = LeastSquares::solve({ones, neg_log, loglog}, log_freq, fit.r_squared);
    fit.intercept = beta[0];
    fit.rate = beta[1];
    fit.loglog_coeff = beta[2];
    return fit;
}

RateFit fit_exponential_rate(const ErrorCurve& curve, ErrorKind kind) {
    const auto [n, log_freq] = corrected_points(curve, kind);
    return fit_exponential_points(n, log_freq);
}

RateFit fit_polylog_rate(const ErrorCurve& curve, ErrorKind kind, double d1, double d2,
                         double beta2) {
    const auto [n, log_freq] = corrected_points(curve, kind);
    RateFit fit = fit_polylog_points(n, log_freq);
    (void)beta2;
    fit.predicted_exponent = 0.5 * (d1 - d2);
    return fit;
}

std::string estimator_name(ExperimentConfig::Estimator estimator) {
    switch (estimator) {
    case ExperimentConfig::Estimator::global: return "global";
    case ExperimentConfig::Estimator::local: return "local";
    case ExperimentConfig::Estimator::bayes_factor: return "bayes-factor";
    }
    return "?";
}

ExperimentConfig::Estimator estimator_from_name(const std::string& name) {
    if (name == "global") return ExperimentConfig::Estimator::global;
    if (name == "local") return ExperimentConfig::Estimator::local;
    if (name == "bayes-factor") return ExperimentConfig::Estimator::bayes_factor;
    throw ValidationError("unknown estimator: " + name);
}

} // namespace orderid
