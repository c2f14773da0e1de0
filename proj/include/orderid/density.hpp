#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "orderid/quadrature.hpp"
#include "orderid/random.hpp"

namespace orderid {

/// Point of the sample space. Mixture families observe a scalar (x only);
/// the regression-type families observe a pair z = (x, y).
struct SamplePoint {
    double x = 0.0;
    double y = 0.0;
};

/// One axis of the support. lo/hi may be infinite; anchors and scale describe
/// where the mass sits so an unbounded axis can be truncated for quadrature.
/// breaks lists interior points where densities on this axis may jump or kink.
struct AxisSupport {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    std::vector<double> anchors; // e.g. component means, regression level range
    double scale = 1.0;          // noise standard deviation
    std::vector<double> breaks;

    /// Finite integration window at the given truncation radius.
    std::pair<double, double> window(double radius) const;
};

struct Support {
    int dim = 1;
    AxisSupport axis[2];
};

/// Hull of two supports: axis windows are merged, breakpoints pooled.
Support support_hull(const Support& a, const Support& b);

/// Evaluable density over the sample space: a log-density (exactly -inf off
/// support), a support descriptor, and a sampler driven by a RandomStream.
/// Immutable after construction and safe to share across threads.
class Density {
public:
    using LogFn = std::function<double(const SamplePoint&)>;
    using DrawFn = std::function<SamplePoint(RandomStream&)>;

    Density() = default;
    Density(Support support, LogFn log_density, DrawFn draw)
        : support_(std::move(support)), log_density_(std::move(log_density)),
          draw_(std::move(draw)) {}

    double log_density(const SamplePoint& z) const { return log_density_(z); }
    double density(const SamplePoint& z) const;

    SamplePoint draw(RandomStream& stream) const { return draw_(stream); }
    std::vector<SamplePoint> sample(std::size_t count, RandomStream& stream) const;

    const Support& support() const { return support_; }

private:
    Support support_;
    LogFn log_density_;
    DrawFn draw_;
};

/// Scalar Gaussian density N(mean, sd^2).
Density normal_density(double mean, double sd);

/// Scalar Gaussian mixture density sum_j w_j N(mean_j, sd_j^2).
Density gaussian_mixture_density(const std::vector<double>& weights,
                                 const std::vector<double>& means,
                                 const std::vector<double>& sds);

// Divergence and moment functionals. All are evaluated by deterministic
// tensor quadrature on the truncated supports; integrals where the dominated
// density vanishes on a set carrying mass of the dominating one return +inf,
// following the convention that V(f, f') = inf whenever undefined.

/// H(f, g) = P_f (log f - log g).
double kl_divergence(const Density& f, const Density& g, const QuadratureScheme& scheme);

/// V(f, g) = P_f (log f - log g)^2.
double v_divergence(const Density& f, const Density& g, const QuadratureScheme& scheme);

/// V(f, g) v V(g, f), the symmetrized second moment.
double v_max(const Density& f, const Density& g,
             const QuadratureScheme& scheme = QuadratureScheme{});

/// q(theta, alpha) = P*(l* - l_theta)^2 exp(alpha (l* - l_theta)) + V(f*, f_theta).
/// Returns +inf when the tilted moment keeps growing under truncation
/// refinement (the exponential moment diverges).
double q_moment(const Density& f_star, const Density& f_theta, double alpha,
                const QuadratureScheme& scheme);

/// L1 distance integral |f - g| d(mu), in [0, 2].
double l1_distance(const Density& f, const Density& g, const QuadratureScheme& scheme);

/// Integral of |fn| over the axis window. Sign changes of fn are located by
/// scouting and bisection and added as breakpoints, so the rule integrates
/// smooth pieces only.
double integral_abs(const AxisSupport& axis, const std::function<double(double)>& fn,
                    const QuadratureScheme& scheme);

} // namespace orderid
