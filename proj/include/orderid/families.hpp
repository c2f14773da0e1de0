#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orderid/density.hpp"
#include "orderid/random.hpp"

namespace orderid {

enum class FamilyKind { fourier_regression, change_points, mixture };
enum class MixtureComponent { location, location_scale };

/// Parameter of one order inside a family: the order k and the packed
/// coordinate vector in the family's layout.
///
/// Layouts:
///   fourier_regression  k coefficients  (theta_1 .. theta_k)
///   change_points       k levels then k-1 knot increments
///                       (alpha_1 .. alpha_k, w_1 .. w_{k-1}), knots
///                       t_j = w_1 + ... + w_j, t_0 = 0, t_k = 1
///   mixture             k-1 free weights then k component parameters
///                       (p_1 .. p_{k-1}, gamma_1 .. gamma_k); the last
///                       weight is implicit. Location components have a
///                       scalar gamma (mean, unit variance); location-scale
///                       components pack (mean, variance) pairs.
struct Theta {
    int k = 1;
    std::vector<double> v;
};

/// Nested parameter spaces of one model family: the family kind, the compact
/// component box, the noise scale for the regression-type families, and the
/// largest order under consideration.
struct OrderIndexedFamily {
    FamilyKind kind = FamilyKind::mixture;
    MixtureComponent component = MixtureComponent::location;
    double sigma = 1.0;      // noise sd (regression-type families)
    double gamma_lo = -3.0;  // component box, first coordinate
    double gamma_hi = 3.0;
    double var_lo = 0.25;    // variance bounds (location-scale mixtures)
    double var_hi = 4.0;
    int k_max = 3;

    /// Component parameter dimension d (mixtures; 1 for the other families).
    int component_dim() const;
};

/// Euclidean dimension D(k) of the order-k parameter space.
int model_dimension(const OrderIndexedFamily& family, int k);

/// Within-order prior choices. family_default resolves to uniform boxes for
/// the regression-type families and, for mixtures, to the uniform weight
/// simplex times a pairwise-repulsive location density when d = 1 (uniform
/// locations when d = 2). gaussian_coeff is a conjugate test variant for the
/// regression family only.
struct PriorSpec {
    enum class WithinOrder { family_default, uniform_box, gaussian_coeff };

    std::vector<double> order_weights; // pi(k), k = 1..k_max; empty = uniform
    WithinOrder within = WithinOrder::family_default;
    double coeff_sd = 1.0;

    double log_order_prior(int k, int k_max) const;
};

struct Dataset {
    std::vector<SamplePoint> points;
    std::optional<Theta> generator;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::size_t size() const { return points.size(); }
};

/// Throws InvalidTheta unless theta matches the family layout for its order
/// and satisfies the box, weight and knot constraints.
void validate_theta(const OrderIndexedFamily& family, const Theta& theta);

/// f_theta(z).
double density_at(const OrderIndexedFamily& family, const Theta& theta, const SamplePoint& z);
double log_density_at(const OrderIndexedFamily& family, const Theta& theta, const SamplePoint& z);

/// n i.i.d. draws from P_theta, reproducible from the stream identity.
Dataset sample(const OrderIndexedFamily& family, const Theta& theta, std::size_t n,
               RandomStream& stream);

/// log pi_k(theta) for the within-order prior, normalized over the order-k
/// space (-inf outside it). Normalization constants are computed numerically
/// once per (family, prior, k) and cached.
double log_prior_density(const OrderIndexedFamily& family, const PriorSpec& prior,
                         const Theta& theta);

/// Unnormalized within-order log prior (-inf outside the order-k space);
/// log_prior_density = log_prior_unnormalized - log_prior_normalizer.
double log_prior_unnormalized(const OrderIndexedFamily& family, const PriorSpec& prior,
                              const Theta& theta);
double log_prior_normalizer(const OrderIndexedFamily& family, const PriorSpec& prior, int k);

/// Draw from the within-order prior at order k.
Theta sample_prior(const OrderIndexedFamily& family, const PriorSpec& prior, int k,
                   RandomStream& stream);

struct EffectiveDims {
    double d1;    // at k*+1
    double d2;    // at k*
    double beta2;
};

/// Dimension indices entering the overestimation rates. The change-points
/// family takes the tuning exponent tau in (0, 1/2).
EffectiveDims effective_dimensions(const OrderIndexedFamily& family, int k_star,
                                   double tau = 0.25);

/// Density object over the sample space for f_theta, with truncated support
/// and knot breakpoints filled in.
Density make_density(const OrderIndexedFamily& family, const Theta& theta);

/// Embedding of theta into the order-(k+1) space with the same density:
/// zero trailing coefficient (regression), duplicated final segment with a
/// zero-width increment (change points), zero-weight extra component
/// (mixtures).
Theta embed(const OrderIndexedFamily& family, const Theta& theta);

/// Mixture helper: theta with components permuted (weights follow their
/// component parameters; the implicit last weight is re-derived).
Theta permute_mixture(const OrderIndexedFamily& family, const Theta& theta,
                      const std::vector<int>& perm);

/// Axis-aligned bounding box of the packed coordinates of the order-k space.
/// Simplex constraints (mixture weights, knot increments) are additional.
std::vector<std::pair<double, double>> param_box(const OrderIndexedFamily& family, int k);

/// Regression mean function phi_theta(x) under the Fourier system
/// t_1 = 1, t_{2m} = sqrt(2) cos(2 pi m x), t_{2m+1} = sqrt(2) sin(2 pi m x);
/// for change points, the piecewise-constant level at x.
double mean_function(const OrderIndexedFamily& family, const Theta& theta, double x);

/// For the regression family: H(theta' vs theta) through the coefficient
/// identity 2 sigma^2 H = ||phi_theta' - phi_theta||_2^2 (orthonormal basis).
double regression_kl(const OrderIndexedFamily& family, const Theta& a, const Theta& b);

std::string family_kind_name(FamilyKind kind);
FamilyKind family_kind_from_name(const std::string& name);

} // namespace orderid
