#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "orderid/families.hpp"
#include "orderid/quadrature.hpp"
#include "orderid/random.hpp"

namespace orderid {

/// Log marginal likelihood of one order: log of the prior-weighted integral
/// of the likelihood over the order-k parameter space.
struct LogEvidence {
    enum class Method { quadrature, importance };

    int k = 1;
    double log_value = 0.0;
    Method method = Method::quadrature;
    double std_error = 0.0;          // importance sampling only (bootstrap)
    bool degenerate_proposal = false; // importance fell back to prior sampling
};

/// Normalized posterior over orders 1..k_max.
struct OrderPosterior {
    std::vector<double> prob; // prob[k-1]

    int k_max() const { return static_cast<int>(prob.size()); }
    double at(int k) const { return prob[static_cast<std::size_t>(k) - 1]; }
};

/// Fast per-theta log-likelihood closure for a fixed dataset; used by the
/// evidence integrators and the MAP search so the per-point loop is paid once.
std::function<double(const Theta&)> make_loglik(const OrderIndexedFamily& family,
                                                const Dataset& data);

/// Sum of per-point log densities; -inf as soon as any point has density 0.
double log_likelihood(const OrderIndexedFamily& family, const Theta& theta, const Dataset& data);

/// Deterministic tensor-grid evaluation of the evidence integral by
/// log-sum-exp over the grid. Requires D(k) <= 3; throws DimensionTooHigh
/// otherwise. The change-points knot axis is integrated exactly segment by
/// segment since the likelihood is piecewise constant between data abscissae.
LogEvidence log_evidence_quadrature(const OrderIndexedFamily& family, const PriorSpec& prior,
                                    int k, const Dataset& data, const QuadratureScheme& scheme);

/// Importance-sampling evidence estimate with a Laplace proposal: multi-start
/// local MAP search, finite-difference Hessian, covariance inflated x2, and a
/// 5% defensive prior component. Reports a bootstrap standard error. If the
/// Hessian cannot be regularized to positive definite the proposal degrades
/// to pure prior sampling and the result is flagged.
LogEvidence log_evidence_importance(const OrderIndexedFamily& family, const PriorSpec& prior,
                                    int k, const Dataset& data, std::size_t draws,
                                    RandomStream& stream);

/// Posterior over orders from one evidence per k = 1..k_max.
OrderPosterior order_posterior(const std::vector<LogEvidence>& evidences, const PriorSpec& prior);

/// Posterior mode; ties break toward the smaller order.
int estimate_global(const OrderPosterior& posterior);

/// Smallest k whose posterior mass is not exceeded by that of k+1, with the
/// mass of k_max+1 taken as zero.
int estimate_local(const OrderPosterior& posterior);

/// Smallest k whose evidence ratio of k+1 against k is strictly below one.
int estimate_bayes_factor(const std::vector<LogEvidence>& evidences, const PriorSpec& prior);

/// log pi(k) + log evidence - loglik(theta_star): the prior-weighted evidence
/// normalized by the true likelihood (simulation settings only).
double log_bn(const OrderIndexedFamily& family, const PriorSpec& prior, int k,
              const Dataset& data, const Theta& theta_star, const QuadratureScheme& scheme);

} // namespace orderid
