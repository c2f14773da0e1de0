#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "orderid/density.hpp"
#include "orderid/families.hpp"
#include "orderid/posterior.hpp"

namespace orderid {

/// Fast evaluator of H(theta) = KL(f_star, f_theta) for a fixed true density.
/// Regression and change-points values are exact in coefficient/knot space;
/// mixtures reuse a cached quadrature grid. Agrees with kl_divergence on the
/// generic route (tested), and is what the optimizers below iterate on.
std::function<double(const Theta&)> make_kl_to_star(const OrderIndexedFamily& family,
                                                    const Theta& theta_star,
                                                    const QuadratureScheme& scheme);

struct KlInfimum {
    double value = 0.0;
    Theta argmin;
};

/// inf over the order-k space of KL(f_star, f_theta): coarse grid search
/// refined by local minimization from the best cells. Zero for k at or above
/// the true order, strictly positive below it.
KlInfimum kl_infimum(const OrderIndexedFamily& family, int k, const Theta& theta_star,
                     const QuadratureScheme& scheme);

/// Membership in the near-optimal slice {H(theta) <= hstar_value + delta/2}.
bool in_kl_slice(const OrderIndexedFamily& family, const Theta& theta,
                 const Theta& theta_star, double delta, double hstar_value,
                 const QuadratureScheme& scheme);

/// Grid-plus-ascent lower estimate of sup{q(theta, alpha)} over the slice.
/// The true supremum is not computable; this reports the best value seen on a
/// grid of grid_size points per axis refined by local ascent.
double moment_bound_estimate(const OrderIndexedFamily& family, int k, double delta, double alpha,
                             const Theta& theta_star, int grid_size,
                             const QuadratureScheme& scheme);

/// 5 (1 + log^2 M) / (2 alpha^2), the constant tying the second moment of the
/// log-likelihood ratio to H log^2 H near the true density.
double log_ratio_variance_constant(double moment_bound, double alpha);

struct VarianceEnvelopeReport {
    bool holds = false;
    double lhs = 0.0; // V(theta)
    double rhs = 0.0; // C1 H log^2 H
};

/// Checks V(theta) <= C1 H(theta) log^2 H(theta); only defined for
/// H(theta) <= e^-2 (throws DomainViolation outside).
VarianceEnvelopeReport check_variance_envelope(const OrderIndexedFamily& family,
                                               const Theta& theta, const Theta& theta_star,
                                               double c1, const QuadratureScheme& scheme);

/// One-sided likelihood-ratio test: 1 iff
///   sum log f(Z_i) - sum log f_star(Z_i) + n H(f) >= n rho + log c  (inclusive).
int likelihood_ratio_test(const Density& f, const Density& f_star, const Dataset& data,
                          double rho, double c, const QuadratureScheme& scheme);

struct TestErrorBounds {
    double type1 = 1.0;
    std::optional<double> type2; // defined only when rho + rho' < H(f)
};

/// Chernoff error bounds of the test above:
///   type1 = (1/c) exp(-(n rho / 2) min(rho / V_f, 1))
///   type2 = exp(-(n [H_f - rho - rho'] / 2) min([H_f - rho - rho'] / V_g, 1)).
TestErrorBounds test_error_bounds(double rho, double rho_prime, double c, double h_f,
                                  double v_f, double v_g, double n);

struct EvidenceBoundCheck {
    double frequency = 0.0;  // observed fraction of replications where the event held
    double bound = 0.0;      // 1 - 2 exp(-n delta^2 / (8 M))
    double slice_mass = 0.0; // Monte Carlo prior mass of the KL slice
    int reps = 0;
};

/// Monte Carlo check of the evidence lower-bound event: the fraction of
/// simulated datasets on which
///   log B_n(k) >= log(pi(k) slice_mass / 2) - n (H*_k + delta),
/// reported next to the probability bound it should dominate.
EvidenceBoundCheck evidence_lower_bound_check(const OrderIndexedFamily& family,
                                              const PriorSpec& prior, int k, double delta,
                                              std::size_t n, int reps, const Theta& theta_star,
                                              double moment_bound, RandomStream& stream,
                                              const QuadratureScheme& scheme);

/// Function pair l <= u sandwiching a density, with the size parameter delta
/// of the four moment conditions checked by is_delta_bracket. Mixture sample
/// spaces are scalar, so the members are univariate.
struct Bracket {
    std::function<double(double)> lower;
    std::function<double(double)> upper;
    double delta = 0.0;
    double eta = 0.0; // component-ball radius used by the construction
    Support box;      // integration window
};

/// All four bracket conditions at size delta:
///   mu(u - l) <= delta,                 P*(log u - log l)^2 <= delta^2,
///   P_{u-l}(log u - log f*)^2 <= delta log^2 delta,
///   P_l(log u - log l)^2 <= delta log^2 delta.
bool is_delta_bracket(const Bracket& bracket, const Density& f_star,
                      const QuadratureScheme& scheme);

/// Bracket around a mixture density: component envelopes are per-coordinate
/// extremizations of the Gaussian over an eta-ball, scaled by (1 -+ eps/tau);
/// eta is found by bisection against the validator. Throws EtaSearchFailed
/// when no radius in (0, 0.5] validates.
Bracket build_mixture_bracket(const OrderIndexedFamily& family, const Theta& theta, double eps,
                              double tau, const Density& f_star, const QuadratureScheme& scheme);

struct EntropyRegion {
    double weight_lo = 0.01; // smallest component weight covered
    double gamma_lo = 0.0;
    double gamma_hi = 0.0;   // component-parameter window (first coordinate)
};

/// log of the number of bracket cells a grid cover of the region needs:
/// a multiplicative net on the weights times a spacing-2 eta / d net per
/// component axis. An upper bound on the bracketing entropy.
double bracketing_entropy_estimate(const OrderIndexedFamily& family, int k,
                                   const EntropyRegion& region, double delta,
                                   const Density& f_star, const QuadratureScheme& scheme);

/// Locally conic coordinates of an overfitted mixture parameter (order k*+1
/// against a true order-k* mixture): matching permutation, excess component
/// parameter, scaled weight/location displacements R with sum(rho) = -1, and
/// the L1-calibrated scale t = p N(gamma, R).
struct ConicCoords {
    double t = 0.0;
    std::vector<double> gamma_extra;    // excess component parameter (size d)
    std::vector<double> rho;            // size k*, sums to -1
    std::vector<std::vector<double>> r; // k* displacement vectors of size d
    std::vector<int> perm;              // perm[j-1] = matched component of j
    double n_value = 0.0;               // L1 norm of the first-order combination
};

ConicCoords conic_coords(const OrderIndexedFamily& family, const Theta& theta,
                         const Theta& theta_star, const QuadratureScheme& scheme);

/// Inverse of conic_coords given the same true parameter (exact round trip).
Theta conic_reconstruct(const OrderIndexedFamily& family, const ConicCoords& coords,
                        const Theta& theta_star, const QuadratureScheme& scheme);

/// Per-parameter upper bound on the conic scale t:
///   2 + sum_j p*_j ||(gamma_j - gamma*_j)^T grad g_{gamma*_j}||_1.
double conic_scale_bound(const OrderIndexedFamily& family, const Theta& theta,
                         const Theta& theta_star, const QuadratureScheme& scheme);

/// Computable lower bound on the exponential underestimation rate constant of
/// the Fourier regression family:
///   1 / (12 max_{k < k*} [1/(2 sigma^2) + Delta_{k+1}/(2 sigma^2)
///                         + (2^{k*}/pi)(1 + Delta_{k+1})^2]),
/// Delta_{k+1} = (theta*_{k+1})^{-2} sum_{j >= k+2} (theta*_j)^2, Delta_{k*} = 0.
double regression_underestimation_rate_bound(const Theta& theta_star, double sigma);

struct OverestimationThresholds {
    long long n0 = 0;        // smallest n with 4 max_{m>=n} h(m) <= e^-2 / 2
    double delta0 = 0.0;     // that maximum at n0 (times 4)
    double delta_k1_min = 0.0;
};

/// Sample-size threshold and slice-size floor entering the overestimation
/// bounds, with h(m) = log(beta1 (log m)^beta2 m^{d2/2}) / m and
///   delta_k1_min = max(128 (1+s)(C1+2)(d1-d2), 128 C1 d1, log^-3 n0).
/// The tail maximum is evaluated by monotone tail truncation.
OverestimationThresholds overestimation_thresholds(double beta1, double beta2, double d1,
                                                   double d2, double s, double c1);

} // namespace orderid
