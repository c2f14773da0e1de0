#include "orderid/families.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <tuple>

#include "orderid/errors.hpp"
#include "orderid/parallel.hpp"

namespace orderid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kBoxTol = 1e-12;

double log_normal_pdf(double z, double mean, double sd) {
    const double u = (z - mean) / sd;
    return -0.5 * u * u - std::log(sd) - kLogSqrt2Pi;
}

struct MixtureView {
    std::vector<double> weights; // all k weights, implicit last included
    std::vector<double> means;
    std::vector<double> sds;
};

MixtureView mixture_view(const OrderIndexedFamily& family, const Theta& theta) {
    MixtureView m;
    const int k = theta.k;
    const int d = family.component_dim();
    m.weights.resize(k);
    m.means.resize(k);
    m.sds.resize(k);
    double acc = 0.0;
    for (int j = 0; j + 1 < k; ++j) {
        m.weights[j] = theta.v[j];
        acc += theta.v[j];
    }
    m.weights[k - 1] = 1.0 - acc;
    const std::size_t off = static_cast<std::size_t>(k - 1);
    for (int j = 0; j < k; ++j) {
        m.means[j] = theta.v[off + static_cast<std::size_t>(j) * d];
        m.sds[j] = d == 2 ? std::sqrt(theta.v[off + static_cast<std::size_t>(j) * d + 1]) : 1.0;
    }
    return m;
}

std::vector<double> knot_positions(const Theta& theta) {
    // t_0 = 0, t_j = t_{j-1} + w_j, t_k = 1
    std::vector<double> t(static_cast<std::size_t>(theta.k) + 1);
    t[0] = 0.0;
    for (int j = 1; j < theta.k; ++j)
        t[static_cast<std::size_t>(j)] =
            t[static_cast<std::size_t>(j) - 1] + theta.v[static_cast<std::size_t>(theta.k + j) - 1];
    t[static_cast<std::size_t>(theta.k)] = 1.0;
    return t;
}

[[noreturn]] void bad_theta(const std::string& what) { throw InvalidTheta("invalid theta: " + what); }

} // namespace

int OrderIndexedFamily::component_dim() const {
    if (kind != FamilyKind::mixture) return 1;
    return component == MixtureComponent::location ? 1 : 2;
}

int model_dimension(const OrderIndexedFamily& family, int k) {
    if (k < 1) throw InvalidTheta("model_dimension: order must be >= 1");
    switch (family.kind) {
    case FamilyKind::fourier_regression:
        return k;
    case FamilyKind::change_points:
        return 2 * k - 1; // k levels + k-1 free knots
    case FamilyKind::mixture:
        return k * (family.component_dim() + 1) - 1;
    }
    return 0;
}

double PriorSpec::log_order_prior(int k, int k_max) const {
    if (k < 1 || k > k_max) return kNegInf;
    if (order_weights.empty()) return -std::log(static_cast<double>(k_max));
    if (static_cast<std::size_t>(k) > order_weights.size()) return kNegInf;
    double total = 0.0;
    for (double w : order_weights) total += w;
    return std::log(order_weights[static_cast<std::size_t>(k) - 1] / total);
}

void validate_theta(const OrderIndexedFamily& family, const Theta& theta) {
    const int k = theta.k;
    if (k < 1) bad_theta("order must be >= 1");
    if (static_cast<int>(theta.v.size()) != model_dimension(family, k))
        bad_theta("packed vector length does not match the family layout");

    auto in = [](double x, double lo, double hi) {
        return x >= lo - kBoxTol && x <= hi + kBoxTol;
    };

    switch (family.kind) {
    case FamilyKind::fourier_regression:
        for (double c : theta.v)
            if (!in(c, family.gamma_lo, family.gamma_hi)) bad_theta("coefficient outside the box");
        break;
    case FamilyKind::change_points: {
        for (int j = 0; j < k; ++j)
            if (!in(theta.v[static_cast<std::size_t>(j)], family.gamma_lo, family.gamma_hi))
                bad_theta("level outside the box");
        double acc = 0.0;
        for (int j = 0; j + 1 < k; ++j) {
            const double w = theta.v[static_cast<std::size_t>(k + j)];
            if (w < -kBoxTol) bad_theta("negative knot increment");
            acc += w;
        }
        if (acc > 1.0 + kBoxTol) bad_theta("knots exceed the unit interval");
        break;
    }
    case FamilyKind::mixture: {
        double acc = 0.0;
        for (int j = 0; j + 1 < k; ++j) {
            const double p = theta.v[static_cast<std::size_t>(j)];
            if (p < -kBoxTol) bad_theta("negative mixture weight");
            acc += p;
        }
        if (acc > 1.0 + kBoxTol) bad_theta("mixture weights sum beyond 1");
        const int d = family.component_dim();
        const std::size_t off = static_cast<std::size_t>(k - 1);
        for (int j = 0; j < k; ++j) {
            const double mean = theta.v[off + static_cast<std::size_t>(j) * d];
            if (!in(mean, family.gamma_lo, family.gamma_hi)) bad_theta("component mean outside the box");
            if (d == 2) {
                const double var = theta.v[off + static_cast<std::size_t>(j) * d + 1];
                if (!in(var, family.var_lo, family.var_hi)) bad_theta("component variance outside the box");
            }
        }
        break;
    }
    }
}

double mean_function(const OrderIndexedFamily& family, const Theta& theta, double x) {
    if (family.kind == FamilyKind::fourier_regression) {
        double phi = theta.v[0];
        const double sqrt2 = std::sqrt(2.0);
        for (int j = 2; j <= theta.k; ++j) {
            const int m = j / 2;
            const double arg = kTwoPi * m * x;
            phi += theta.v[static_cast<std::size_t>(j) - 1] * sqrt2 *
                   (j % 2 == 0 ? std::cos(arg) : std::sin(arg));
        }
        return phi;
    }
    // change points: level of the segment containing x, last segment closed at 1
    const auto t = knot_positions(theta);
    for (int j = 1; j < theta.k; ++j)
        if (x < t[static_cast<std::size_t>(j)]) return theta.v[static_cast<std::size_t>(j) - 1];
    return theta.v[static_cast<std::size_t>(theta.k) - 1];
}

namespace {

double log_density_unchecked(const OrderIndexedFamily& family, const Theta& theta,
                             const SamplePoint& z) {
    switch (family.kind) {
    case FamilyKind::fourier_regression:
    case FamilyKind::change_points: {
        if (z.x < 0.0 || z.x > 1.0) return kNegInf;
        return log_normal_pdf(z.y, mean_function(family, theta, z.x), family.sigma);
    }
    case FamilyKind::mixture: {
        const MixtureView m = mixture_view(family, theta);
        double best = kNegInf;
        std::vector<double> terms;
        terms.reserve(m.weights.size());
        for (std::size_t j = 0; j < m.weights.size(); ++j) {
            if (m.weights[j] <= 0.0) continue;
            const double t = std::log(m.weights[j]) + log_normal_pdf(z.x, m.means[j], m.sds[j]);
            terms.push_back(t);
            best = std::max(best, t);
        }
        if (terms.empty() || best == kNegInf) return kNegInf;
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - best);
        return best + std::log(acc);
    }
    }
    return kNegInf;
}

} // namespace

double log_density_at(const OrderIndexedFamily& family, const Theta& theta, const SamplePoint& z) {
    validate_theta(family, theta);
    return log_density_unchecked(family, theta, z);
}

double density_at(const OrderIndexedFamily& family, const Theta& theta, const SamplePoint& z) {
    const double l = log_density_at(family, theta, z);
    return l == kNegInf ? 0.0 : std::exp(l);
}

Dataset sample(const OrderIndexedFamily& family, const Theta& theta, std::size_t n,
               RandomStream& stream) {
    if (n < 1) throw InvalidTheta("sample: need n >= 1");
    validate_theta(family, theta);
    Dataset data;
    data.generator = theta;
    data.seed = stream.seed();
    data.stream = stream.index();
    data.points.reserve(n);
    switch (family.kind) {
    case FamilyKind::fourier_regression:
    case FamilyKind::change_points:
        for (std::size_t i = 0; i < n; ++i) {
            SamplePoint z;
            z.x = stream.uniform01();
            z.y = mean_function(family, theta, z.x) + family.sigma * stream.normal();
            data.points.push_back(z);
        }
        break;
    case FamilyKind::mixture: {
        const MixtureView m = mixture_view(family, theta);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = stream.uniform01();
            double c = 0.0;
            std::size_t j = m.weights.size() - 1;
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                c += m.weights[l];
                if (u <= c) {
                    j = l;
                    break;
                }
            }
            SamplePoint z;
            z.x = stream.normal(m.means[j], m.sds[j]);
            data.points.push_back(z);
        }
        break;
    }
    }
    return data;
}

namespace {

struct NormalizerKey {
    int kind;
    int component;
    int within;
    int k;
    double glo, ghi, vlo, vhi, coeff_sd;

    bool operator<(const NormalizerKey& o) const {
        return std::tie(kind, component, within, k, glo, ghi, vlo, vhi, coeff_sd) <
               std::tie(o.kind, o.component, o.within, o.k, o.glo, o.ghi, o.vlo, o.vhi, o.coeff_sd);
    }
};

// Volume of {w in R_+^m : sum w <= 1} is 1/m!.
double log_simplex_volume(int m) { return -std::lgamma(static_cast<double>(m) + 1.0); }

// Integral of prod_{j<j'} |g_j - g_j'| over [lo,hi]^k by tensor quadrature.
double log_repulsive_normalizer(int k, double lo, double hi) {
    const int per_axis = k <= 2 ? 160 : (k == 3 ? 72 : (k == 4 ? 36 : 20));
    QuadratureScheme scheme;
    scheme.nodes = per_axis;
    const Nodes1D nodes = nodes_on(lo, hi, scheme);
    const std::size_t m = nodes.x.size();
    std::size_t total = 1;
    for (int a = 0; a < k; ++a) total *= m;
    const double log_integral = par::blocked_logsumexp(total, [&](std::size_t idx) {
        double g[8];
        std::size_t rem = idx;
        double logw = 0.0;
        for (int a = 0; a < k; ++a) {
            const std::size_t i = rem % m;
            rem /= m;
            g[a] = nodes.x[i];
            logw += std::log(nodes.w[i]);
        }
        double s = 0.0;
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b) {
                const double gap = std::abs(g[a] - g[b]);
                if (gap <= 0.0) return kNegInf;
                s += std::log(gap);
            }
        return logw + s;
    });
    return log_integral;
}

} // namespace

// The repulsive mixture location prior is prod_{j<j'} |gamma_j - gamma_j'|
// over the box; everything else is uniform (or the Gaussian test variant).
double log_prior_unnormalized(const OrderIndexedFamily& family, const PriorSpec& prior,
                              const Theta& theta) {
    using W = PriorSpec::WithinOrder;
    try {
        validate_theta(family, theta);
    } catch (const InvalidTheta&) {
        return kNegInf;
    }
    if (prior.within == W::gaussian_coeff) {
        if (family.kind != FamilyKind::fourier_regression)
            throw ValidationError("gaussian_coeff prior is only defined for the regression family");
        double s = 0.0;
        for (double c : theta.v) s += log_normal_pdf(c, 0.0, prior.coeff_sd);
        return s;
    }
    if (family.kind == FamilyKind::mixture && prior.within == W::family_default &&
        family.component_dim() == 1 && theta.k >= 2) {
        const MixtureView m = mixture_view(family, theta);
        double s = 0.0;
        for (std::size_t j = 0; j < m.means.size(); ++j)
            for (std::size_t j2 = j + 1; j2 < m.means.size(); ++j2) {
                const double gap = std::abs(m.means[j] - m.means[j2]);
                if (gap <= 0.0) return kNegInf;
                s += std::log(gap);
            }
        return s;
    }
    return 0.0; // uniform over the order-k space
}

double log_prior_normalizer(const OrderIndexedFamily& family, const PriorSpec& prior, int k) {
    using W = PriorSpec::WithinOrder;
    static std::map<NormalizerKey, double> cache;
    static std::mutex mutex;
    const NormalizerKey key{static_cast<int>(family.kind), static_cast<int>(family.component),
                            static_cast<int>(prior.within), k, family.gamma_lo, family.gamma_hi,
                            family.var_lo, family.var_hi, prior.coeff_sd};
    {
        std::lock_guard<std::mutex> lock(mutex);
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    const double gwidth = family.gamma_hi - family.gamma_lo;
    double value = 0.0;
    switch (family.kind) {
    case FamilyKind::fourier_regression:
        if (prior.within == W::gaussian_coeff) {
            // Gaussian truncated to the box; the residual mass is the normalizer.
            QuadratureScheme scheme;
            scheme.nodes = 512;
            const Nodes1D nodes = nodes_on(family.gamma_lo, family.gamma_hi, scheme);
            double mass = 0.0;
            for (std::size_t i = 0; i < nodes.x.size(); ++i)
                mass += nodes.w[i] * std::exp(log_normal_pdf(nodes.x[i], 0.0, prior.coeff_sd));
            value = k * std::log(mass);
        } else {
            value = k * std::log(gwidth);
        }
        break;
    case FamilyKind::change_points:
        value = k * std::log(gwidth) + log_simplex_volume(k - 1);
        break;
    case FamilyKind::mixture: {
        const int d = family.component_dim();
        double loc = 0.0;
        if (d == 1 && prior.within == W::family_default && k >= 2) {
            if (k > 6) throw DimensionTooHigh("repulsive prior normalizer limited to k <= 6");
            loc = log_repulsive_normalizer(k, family.gamma_lo, family.gamma_hi);
        } else {
            loc = k * std::log(gwidth);
            if (d == 2) loc += k * std::log(family.var_hi - family.var_lo);
        }
        value = log_simplex_volume(k - 1) + loc;
        break;
    }
    }

    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key, value);
    return value;
}

double log_prior_density(const OrderIndexedFamily& family, const PriorSpec& prior,
                         const Theta& theta) {
    const double raw = log_prior_unnormalized(family, prior, theta);
    if (raw == kNegInf) return kNegInf;
    return raw - log_prior_normalizer(family, prior, theta.k);
}

Theta sample_prior(const OrderIndexedFamily& family, const PriorSpec& prior, int k,
                   RandomStream& stream) {
    using W = PriorSpec::WithinOrder;
    Theta theta;
    theta.k = k;
    theta.v.resize(static_cast<std::size_t>(model_dimension(family, k)));

    auto simplex_fill = [&](std::size_t offset, int parts) {
        // parts cells of the uniform simplex: spacings of parts-1 sorted uniforms
        std::vector<double> u(static_cast<std::size_t>(parts) - 1);
        for (double& x : u) x = stream.uniform01();
        std::sort(u.begin(), u.end());
        double prev = 0.0;
        for (int j = 0; j + 1 < parts; ++j) {
            theta.v[offset + static_cast<std::size_t>(j)] = u[static_cast<std::size_t>(j)] - prev;
            prev = u[static_cast<std::size_t>(j)];
        }
    };

    switch (family.kind) {
    case FamilyKind::fourier_regression:
        for (int j = 0; j < k; ++j) {
            if (prior.within == W::gaussian_coeff) {
                double c = stream.normal(0.0, prior.coeff_sd);
                while (c < family.gamma_lo || c > family.gamma_hi)
                    c = stream.normal(0.0, prior.coeff_sd);
                theta.v[static_cast<std::size_t>(j)] = c;
            } else {
                theta.v[static_cast<std::size_t>(j)] = stream.uniform(family.gamma_lo, family.gamma_hi);
            }
        }
        break;
    case FamilyKind::change_points:
        for (int j = 0; j < k; ++j)
            theta.v[static_cast<std::size_t>(j)] = stream.uniform(family.gamma_lo, family.gamma_hi);
        if (k >= 2) simplex_fill(static_cast<std::size_t>(k), k);
        break;
    case FamilyKind::mixture: {
        const int d = family.component_dim();
        const std::size_t off = static_cast<std::size_t>(k - 1);
        const bool repulsive = d == 1 && prior.within == W::family_default && k >= 2;
        // Rejection from the uniform envelope for the repulsive location prior.
        const double envelope =
            repulsive ? std::pow(family.gamma_hi - family.gamma_lo, 0.5 * k * (k - 1)) : 1.0;
        for (;;) {
            if (k >= 2) simplex_fill(0, k);
            for (int j = 0; j < k; ++j) {
                theta.v[off + static_cast<std::size_t>(j) * d] =
                    stream.uniform(family.gamma_lo, family.gamma_hi);
                if (d == 2)
                    theta.v[off + static_cast<std::size_t>(j) * d + 1] =
                        stream.uniform(family.var_lo, family.var_hi);
            }
            if (!repulsive) break;
            double logprod = 0.0;
            const MixtureView m = mixture_view(family, theta);
            for (std::size_t a = 0; a < m.means.size(); ++a)
                for (std::size_t b = a + 1; b < m.means.size(); ++b)
                    logprod += std::log(std::abs(m.means[a] - m.means[b]));
            if (std::log(stream.uniform01()) <= logprod - std::log(envelope)) break;
        }
        break;
    }
    }
    return theta;
}

EffectiveDims effective_dimensions(const OrderIndexedFamily& family, int k_star, double tau) {
    if (k_star < 1) throw InvalidTheta("effective_dimensions: k_star must be >= 1");
    const double dk = static_cast<double>(model_dimension(family, k_star));
    switch (family.kind) {
    case FamilyKind::fourier_regression:
        // Regular model: D1 = D at k*+1, D2 = D(k*).
        return {static_cast<double>(model_dimension(family, k_star + 1)), dk, 0.0};
    case FamilyKind::change_points:
        if (!(tau > 0.0 && tau < 0.5))
            throw DomainViolation("effective_dimensions: tau must lie in (0, 1/2)");
        return {dk + k_star, dk + k_star - 1.0 + 2.0 * tau, 0.0};
    case FamilyKind::mixture:
        return {dk + 1.0, dk, 0.0};
    }
    return {0.0, 0.0, 0.0};
}

Density make_density(const OrderIndexedFamily& family, const Theta& theta) {
    validate_theta(family, theta);
    const OrderIndexedFamily fam = family;
    const Theta th = theta;
    Support s;
    switch (family.kind) {
    case FamilyKind::fourier_regression:
    case FamilyKind::change_points: {
        s.dim = 2;
        s.axis[0].lo = 0.0;
        s.axis[0].hi = 1.0;
        s.axis[0].anchors = {0.0, 1.0};
        s.axis[0].scale = 1.0;
        if (family.kind == FamilyKind::change_points) {
            const auto t = knot_positions(theta);
            s.axis[0].breaks.assign(t.begin() + 1, t.end() - 1);
        }
        double lo = theta.v[0], hi = theta.v[0];
        if (family.kind == FamilyKind::fourier_regression) {
            double amp = 0.0;
            for (int j = 2; j <= theta.k; ++j)
                amp += std::sqrt(2.0) * std::abs(theta.v[static_cast<std::size_t>(j) - 1]);
            lo = theta.v[0] - amp;
            hi = theta.v[0] + amp;
        } else {
            for (int j = 1; j < theta.k; ++j) {
                lo = std::min(lo, theta.v[static_cast<std::size_t>(j)]);
                hi = std::max(hi, theta.v[static_cast<std::size_t>(j)]);
            }
        }
        s.axis[1].anchors = {lo, hi};
        s.axis[1].scale = family.sigma;
        break;
    }
    case FamilyKind::mixture: {
        s.dim = 1;
        const MixtureView m = mixture_view(family, theta);
        s.axis[0].anchors = m.means;
        s.axis[0].scale = *std::max_element(m.sds.begin(), m.sds.end());
        break;
    }
    }
    auto logf = [fam, th](const SamplePoint& z) { return log_density_unchecked(fam, th, z); };
    auto draw = [fam, th](RandomStream& stream) {
        return sample(fam, th, 1, stream).points.front();
    };
    return Density(s, logf, draw);
}

Theta embed(const OrderIndexedFamily& family, const Theta& theta) {
    validate_theta(family, theta);
    Theta out;
    out.k = theta.k + 1;
    out.v.resize(static_cast<std::size_t>(model_dimension(family, out.k)), 0.0);
    switch (family.kind) {
    case FamilyKind::fourier_regression:
        std::copy(theta.v.begin(), theta.v.end(), out.v.begin());
        break;
    case FamilyKind::change_points: {
        const int k = theta.k;
        for (int j = 0; j < k; ++j) out.v[static_cast<std::size_t>(j)] = theta.v[static_cast<std::size_t>(j)];
        out.v[static_cast<std::size_t>(k)] = theta.v[static_cast<std::size_t>(k) - 1]; // duplicated level
        // increments: original free ones, then the implicit remainder, then 0 width
        double acc = 0.0;
        for (int j = 0; j + 1 < k; ++j) {
            const double w = theta.v[static_cast<std::size_t>(k + j)];
            out.v[static_cast<std::size_t>(out.k + j)] = w;
            acc += w;
        }
        out.v[static_cast<std::size_t>(out.k + k) - 1] = 1.0 - acc;
        break;
    }
    case FamilyKind::mixture: {
        const int k = theta.k;
        const int d = family.component_dim();
        const MixtureView m = mixture_view(family, theta);
        // all k original weights become free, the new component carries weight 0
        for (int j = 0; j < k; ++j) out.v[static_cast<std::size_t>(j)] = m.weights[static_cast<std::size_t>(j)];
        const std::size_t off = static_cast<std::size_t>(out.k - 1);
        const std::size_t in_off = static_cast<std::size_t>(k - 1);
        for (int j = 0; j < k * d; ++j)
            out.v[off + static_cast<std::size_t>(j)] = theta.v[in_off + static_cast<std::size_t>(j)];
        // new component parameters: any point of the box works; use its center
        out.v[off + static_cast<std::size_t>(k) * d] = 0.5 * (family.gamma_lo + family.gamma_hi);
        if (d == 2)
            out.v[off + static_cast<std::size_t>(k) * d + 1] = 0.5 * (family.var_lo + family.var_hi);
        break;
    }
    }
    return out;
}

Theta permute_mixture(const OrderIndexedFamily& family, const Theta& theta,
                      const std::vector<int>& perm) {
    if (family.kind != FamilyKind::mixture) throw InvalidTheta("permute_mixture: mixture family only");
    validate_theta(family, theta);
    const int k = theta.k;
    const int d = family.component_dim();
    const MixtureView m = mixture_view(family, theta);
    Theta out;
    out.k = k;
    out.v.resize(theta.v.size());
    const std::size_t off = static_cast<std::size_t>(k - 1);
    for (int j = 0; j < k; ++j) {
        const int src = perm[static_cast<std::size_t>(j)];
        if (j + 1 < k) out.v[static_cast<std::size_t>(j)] = m.weights[static_cast<std::size_t>(src)];
        for (int c = 0; c < d; ++c)
            out.v[off + static_cast<std::size_t>(j) * d + static_cast<std::size_t>(c)] =
                theta.v[static_cast<std::size_t>(k - 1) + static_cast<std::size_t>(src) * d +
                        static_cast<std::size_t>(c)];
    }
    return out;
}

std::vector<std::pair<double, double>> param_box(const OrderIndexedFamily& family, int k) {
    std::vector<std::pair<double, double>> box;
    const int dim = model_dimension(family, k);
    box.reserve(static_cast<std::size_t>(dim));
    switch (family.kind) {
    case FamilyKind::fourier_regression:
        for (int j = 0; j < k; ++j) box.emplace_back(family.gamma_lo, family.gamma_hi);
        break;
    case FamilyKind::change_points:
        for (int j = 0; j < k; ++j) box.emplace_back(family.gamma_lo, family.gamma_hi);
        for (int j = 0; j + 1 < k; ++j) box.emplace_back(0.0, 1.0);
        break;
    case FamilyKind::mixture: {
        const int d = family.component_dim();
        for (int j = 0; j + 1 < k; ++j) box.emplace_back(0.0, 1.0);
        for (int j = 0; j < k; ++j) {
            box.emplace_back(family.gamma_lo, family.gamma_hi);
            if (d == 2) box.emplace_back(family.var_lo, family.var_hi);
        }
        break;
    }
    }
    return box;
}

double regression_kl(const OrderIndexedFamily& family, const Theta& a, const Theta& b) {
    if (family.kind != FamilyKind::fourier_regression)
        throw InvalidTheta("regression_kl: regression family only");
    const int k = std::max(a.k, b.k);
    double ss = 0.0;
    for (int j = 0; j < k; ++j) {
        const double ca = j < a.k ? a.v[static_cast<std::size_t>(j)] : 0.0;
        const double cb = j < b.k ? b.v[static_cast<std::size_t>(j)] : 0.0;
        ss += (ca - cb) * (ca - cb);
    }
    return ss / (2.0 * family.sigma * family.sigma);
}

std::string family_kind_name(FamilyKind kind) {
    switch (kind) {
    case FamilyKind::fourier_regression: return "fourier-regression";
    case FamilyKind::change_points: return "change-points";
    case FamilyKind::mixture: return "mixture";
    }
    return "?";
}

FamilyKind family_kind_from_name(const std::string& name) {
    if (name == "fourier-regression") return FamilyKind::fourier_regression;
    if (name == "change-points") return FamilyKind::change_points;
    if (name == "mixture") return FamilyKind::mixture;
    throw ValidationError("unknown family kind: " + name);
}

} // namespace orderid
