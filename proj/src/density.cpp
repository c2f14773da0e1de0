#include "orderid/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "orderid/parallel.hpp"

namespace orderid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562; // log sqrt(2 pi)

// Mass of f allowed on the zero set of g before the divergence is declared infinite.
constexpr double kSupportTol = 1e-12;

} // namespace

std::pair<double, double> AxisSupport::window(double radius) const {
    double a = lo, b = hi;
    if (!anchors.empty()) {
        double amin = anchors.front(), amax = anchors.front();
        for (double v : anchors) {
            amin = std::min(amin, v);
            amax = std::max(amax, v);
        }
        a = std::max(a, amin - radius * scale);
        b = std::min(b, amax + radius * scale);
    }
    if (!std::isfinite(a) || !std::isfinite(b) || !(b > a))
        throw std::runtime_error("AxisSupport::window: axis has no finite integration window");
    return {a, b};
}

Support support_hull(const Support& a, const Support& b) {
    Support h;
    h.dim = a.dim;
    for (int d = 0; d < a.dim; ++d) {
        AxisSupport ax;
        ax.lo = std::min(a.axis[d].lo, b.axis[d].lo);
        ax.hi = std::max(a.axis[d].hi, b.axis[d].hi);
        ax.scale = std::max(a.axis[d].scale, b.axis[d].scale);
        ax.anchors = a.axis[d].anchors;
        ax.anchors.insert(ax.anchors.end(), b.axis[d].anchors.begin(), b.axis[d].anchors.end());
        ax.breaks = a.axis[d].breaks;
        ax.breaks.insert(ax.breaks.end(), b.axis[d].breaks.begin(), b.axis[d].breaks.end());
        std::sort(ax.breaks.begin(), ax.breaks.end());
        ax.breaks.erase(std::unique(ax.breaks.begin(), ax.breaks.end()), ax.breaks.end());
        h.axis[d] = ax;
    }
    return h;
}

double Density::density(const SamplePoint& z) const {
    const double l = log_density_(z);
    return l == kNegInf ? 0.0 : std::exp(l);
}

std::vector<SamplePoint> Density::sample(std::size_t count, RandomStream& stream) const {
    std::vector<SamplePoint> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(draw_(stream));
    return out;
}

Density normal_density(double mean, double sd) {
    return gaussian_mixture_density({1.0}, {mean}, {sd});
}

Density gaussian_mixture_density(const std::vector<double>& weights,
                                 const std::vector<double>& means,
                                 const std::vector<double>& sds) {
    if (weights.empty() || weights.size() != means.size() || weights.size() != sds.size())
        throw std::invalid_argument("gaussian_mixture_density: inconsistent component lists");
    Support s;
    s.dim = 1;
    s.axis[0].anchors = means;
    s.axis[0].scale = *std::max_element(sds.begin(), sds.end());

    auto log_density = [weights, means, sds](const SamplePoint& z) {
        double best = kNegInf;
        std::vector<double> terms(weights.size());
        for (std::size_t j = 0; j < weights.size(); ++j) {
            const double u = (z.x - means[j]) / sds[j];
            terms[j] = std::log(weights[j]) - 0.5 * u * u - std::log(sds[j]) - kLogSqrt2Pi;
            best = std::max(best, terms[j]);
        }
        if (best == kNegInf) return kNegInf;
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - best);
        return best + std::log(acc);
    };
    auto draw = [weights, means, sds](RandomStream& stream) {
        const double u = stream.uniform01();
        double c = 0.0;
        std::size_t j = weights.size() - 1;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            c += weights[i];
            if (u <= c) {
                j = i;
                break;
            }
        }
        SamplePoint z;
        z.x = stream.normal(means[j], sds[j]);
        return z;
    };
    return Density(s, log_density, draw);
}

namespace {

struct Grid {
    Nodes1D ax;       // first axis
    Nodes1D ay;       // second axis (empty when dim == 1)
    int dim = 1;

    std::size_t size() const { return dim == 1 ? ax.x.size() : ax.x.size() * ay.x.size(); }

    SamplePoint point(std::size_t i) const {
        SamplePoint z;
        if (dim == 1) {
            z.x = ax.x[i];
        } else {
            z.x = ax.x[i / ay.x.size()];
            z.y = ay.x[i % ay.x.size()];
        }
        return z;
    }

    double weight(std::size_t i) const {
        if (dim == 1) return ax.w[i];
        return ax.w[i / ay.x.size()] * ay.w[i % ay.x.size()];
    }
};

Grid make_grid(const Support& s, const QuadratureScheme& scheme, double radius_override = 0.0) {
    const double radius = radius_override > 0.0 ? radius_override : scheme.trunc_radius;
    Grid g;
    g.dim = s.dim;
    {
        const auto [a, b] = s.axis[0].window(radius);
        g.ax = nodes_on_segmented(a, b, s.axis[0].breaks, scheme);
    }
    if (s.dim == 2) {
        const auto [a, b] = s.axis[1].window(radius);
        g.ay = nodes_on_segmented(a, b, s.axis[1].breaks, scheme);
    }
    return g;
}

// P_f phi(log f, log g) with the dominating-support check. phi is evaluated
// only where f > 0; if g vanishes there on a set of f-mass beyond tolerance
// the result is +inf. The window is f's, but g's breakpoints are honored so
// jumps of log g (knots) never cross a quadrature segment.
template <class Phi>
double dominated_integral(const Density& f, const Density& g, const QuadratureScheme& scheme,
                          Phi&& phi, double radius_override = 0.0) {
    Support domain = f.support();
    for (int d = 0; d < domain.dim; ++d) {
        const auto& gb = g.support().axis[d].breaks;
        domain.axis[d].breaks.insert(domain.axis[d].breaks.end(), gb.begin(), gb.end());
        std::sort(domain.axis[d].breaks.begin(), domain.axis[d].breaks.end());
        domain.axis[d].breaks.erase(
            std::unique(domain.axis[d].breaks.begin(), domain.axis[d].breaks.end()),
            domain.axis[d].breaks.end());
    }
    const Grid grid = make_grid(domain, scheme, radius_override);
    const std::size_t n = grid.size();

    const double mismatch = par::blocked_sum(n, [&](std::size_t i) {
        const SamplePoint z = grid.point(i);
        const double lf = f.log_density(z);
        if (lf == kNegInf) return 0.0;
        return g.log_density(z) == kNegInf ? grid.weight(i) * std::exp(lf) : 0.0;
    });
    if (mismatch > kSupportTol) return kPosInf;

    return par::blocked_sum(n, [&](std::size_t i) {
        const SamplePoint z = grid.point(i);
        const double lf = f.log_density(z);
        if (lf == kNegInf) return 0.0;
        const double lg = g.log_density(z);
        if (lg == kNegInf) return 0.0; // below mismatch tolerance
        return grid.weight(i) * std::exp(lf) * phi(lf, lg);
    });
}

} // namespace

double kl_divergence(const Density& f, const Density& g, const QuadratureScheme& scheme) {
    return dominated_integral(f, g, scheme, [](double lf, double lg) { return lf - lg; });
}

double v_divergence(const Density& f, const Density& g, const QuadratureScheme& scheme) {
    return dominated_integral(f, g, scheme, [](double lf, double lg) {
        const double d = lf - lg;
        return d * d;
    });
}

double v_max(const Density& f, const Density& g, const QuadratureScheme& scheme) {
    return std::max(v_divergence(f, g, scheme), v_divergence(g, f, scheme));
}

double q_moment(const Density& f_star, const Density& f_theta, double alpha,
                const QuadratureScheme& scheme) {
    if (!(alpha > 0.0)) throw std::invalid_argument("q_moment: alpha must be positive");
    auto tilted = [alpha](double lf, double lg) {
        const double d = lf - lg;
        return d * d * std::exp(alpha * d);
    };
    // The tilted moment may fail to exist: refine the truncation and declare
    // divergence when successive tail extensions keep adding more mass.
    const double base = dominated_integral(f_star, f_theta, scheme, tilted);
    if (base == kPosInf) return kPosInf;
    const double r = scheme.trunc_radius;
    const double wide = dominated_integral(f_star, f_theta, scheme, tilted, 1.5 * r);
    const double wider = dominated_integral(f_star, f_theta, scheme, tilted, 2.0 * r);
    const double grow1 = wide - base;
    const double grow2 = wider - wide;
    const double magnitude = std::max(1e-300, std::abs(wide));
    if (grow1 > 0.01 * magnitude && grow2 > grow1) return kPosInf;

    const double v = v_divergence(f_star, f_theta, scheme);
    if (v == kPosInf) return kPosInf;
    return wider + v;
}

double integral_abs(const AxisSupport& axis, const std::function<double(double)>& fn,
                    const QuadratureScheme& scheme) {
    AxisSupport split = axis;
    const auto [a, b] = axis.window(scheme.trunc_radius);
    const int scout = 1024;
    double prev_x = a, prev_d = fn(a);
    for (int i = 1; i <= scout; ++i) {
        const double x = a + (b - a) * i / scout;
        const double d = fn(x);
        if (d == 0.0) {
            split.breaks.push_back(x);
        } else if (prev_d != 0.0 && (prev_d < 0.0) != (d < 0.0)) {
            double lo = prev_x, hi = x;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((fn(mid) < 0.0) == (prev_d < 0.0))
                    lo = mid;
                else
                    hi = mid;
            }
            split.breaks.push_back(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_d = d;
    }
    const Nodes1D nodes = nodes_on_segmented(a, b, split.breaks, scheme);
    return par::blocked_sum(nodes.x.size(), [&](std::size_t i) {
        return nodes.w[i] * std::abs(fn(nodes.x[i]));
    });
}

double l1_distance(const Density& f, const Density& g, const QuadratureScheme& scheme) {
    const Support hull = support_hull(f.support(), g.support());
    if (hull.dim == 1) {
        return integral_abs(hull.axis[0],
                            [&](double x) {
                                SamplePoint z;
                                z.x = x;
                                return f.density(z) - g.density(z);
                            },
                            scheme);
    }
    const Grid grid = make_grid(hull, scheme);
    return par::blocked_sum(grid.size(), [&](std::size_t i) {
        const SamplePoint z = grid.point(i);
        return grid.weight(i) * std::abs(f.density(z) - g.density(z));
    });
}

} // namespace orderid
