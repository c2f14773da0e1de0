#include "orderid/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "orderid/errors.hpp"
#include "orderid/linalg.hpp"
#include "orderid/optim.hpp"
#include "orderid/parallel.hpp"

namespace orderid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
constexpr double kTwoPi = 6.283185307179586476925286766559;

double logsumexp(const std::vector<double>& t) {
    double m = kNegInf;
    for (double v : t) m = std::max(m, v);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double v : t) s += std::exp(v - m);
    return m + std::log(s);
}

struct SortedXY {
    std::vector<double> x;  // ascending
    std::vector<double> s1; // prefix sums of y over the sorted order
    std::vector<double> s2; // prefix sums of y^2
};

SortedXY sort_by_x(const Dataset& data) {
    const std::size_t n = data.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return data.points[a].x < data.points[b].x;
    });
    SortedXY s;
    s.x.resize(n);
    s.s1.resize(n + 1, 0.0);
    s.s2.resize(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        s.x[i] = data.points[idx[i]].x;
        const double y = data.points[idx[i]].y;
        s.s1[i + 1] = s.s1[i] + y;
        s.s2[i + 1] = s.s2[i] + y * y;
    }
    return s;
}

} // namespace

std::function<double(const Theta&)> make_loglik(const OrderIndexedFamily& family,
                                                const Dataset& data) {
    const std::size_t n = data.size();
    switch (family.kind) {
    case FamilyKind::fourier_regression: {
        // ell_n(theta) = -(Syy - 2 theta.b + theta'G theta)/(2 sigma^2) - n log(sigma sqrt(2pi))
        const int kcap = family.k_max + 2;
        bool off_support = false;
        std::vector<double> basis(n * static_cast<std::size_t>(kcap));
        double syy = 0.0;
        const double sqrt2 = std::sqrt(2.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = data.points[i].x;
            const double y = data.points[i].y;
            if (x < 0.0 || x > 1.0) off_support = true;
            syy += y * y;
            for (int j = 1; j <= kcap; ++j) {
                double t = 1.0;
                if (j >= 2) {
                    const double arg = kTwoPi * (j / 2) * x;
                    t = sqrt2 * (j % 2 == 0 ? std::cos(arg) : std::sin(arg));
                }
                basis[i * static_cast<std::size_t>(kcap) + static_cast<std::size_t>(j - 1)] = t;
            }
        }
        std::vector<double> b(static_cast<std::size_t>(kcap), 0.0);
        std::vector<double> g(static_cast<std::size_t>(kcap) * static_cast<std::size_t>(kcap), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double y = data.points[i].y;
            const double* row = &basis[i * static_cast<std::size_t>(kcap)];
            for (int a = 0; a < kcap; ++a) {
                b[static_cast<std::size_t>(a)] += row[a] * y;
                for (int c = a; c < kcap; ++c)
                    g[static_cast<std::size_t>(a) * kcap + static_cast<std::size_t>(c)] += row[a] * row[c];
            }
        }
        const double sigma = family.sigma;
        const double log_norm = static_cast<double>(n) * (std::log(sigma) + kLogSqrt2Pi);
        return [=](const Theta& theta) {
            if (off_support) return kNegInf;
            const int k = theta.k;
            double quad = syy;
            for (int a = 0; a < k; ++a) {
                const double ta = theta.v[static_cast<std::size_t>(a)];
                quad -= 2.0 * ta * b[static_cast<std::size_t>(a)];
                quad += ta * ta * g[static_cast<std::size_t>(a) * kcap + static_cast<std::size_t>(a)];
                for (int c = a + 1; c < k; ++c)
                    quad += 2.0 * ta * theta.v[static_cast<std::size_t>(c)] *
                            g[static_cast<std::size_t>(a) * kcap + static_cast<std::size_t>(c)];
            }
            return -0.5 * quad / (sigma * sigma) - log_norm;
        };
    }
    case FamilyKind::change_points: {
        const SortedXY s = sort_by_x(data);
        bool off_support = false;
        for (double x : s.x)
            if (x < 0.0 || x > 1.0) off_support = true;
        const double sigma = family.sigma;
        const double log_norm = static_cast<double>(n) * (std::log(sigma) + kLogSqrt2Pi);
        return [=](const Theta& theta) {
            if (off_support) return kNegInf;
            const int k = theta.k;
            double quad = 0.0;
            double t_prev = 0.0;
            std::size_t i_prev = 0;
            for (int j = 1; j <= k; ++j) {
                const double t_j =
                    j == k ? 1.0
                           : t_prev + theta.v[static_cast<std::size_t>(k + j) - 1];
                // points with x in [t_{j-1}, t_j); the last segment is closed at 1
                const std::size_t i_j =
                    j == k ? s.x.size()
                           : static_cast<std::size_t>(
                                 std::lower_bound(s.x.begin(), s.x.end(), t_j) - s.x.begin());
                const double level = theta.v[static_cast<std::size_t>(j) - 1];
                const double cnt = static_cast<double>(i_j - i_prev);
                quad += (s.s2[i_j] - s.s2[i_prev]) - 2.0 * level * (s.s1[i_j] - s.s1[i_prev]) +
                        cnt * level * level;
                t_prev = t_j;
                i_prev = i_j;
            }
            return -0.5 * quad / (sigma * sigma) - log_norm;
        };
    }
    case FamilyKind::mixture: {
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = data.points[i].x;
        const int d = family.component_dim();
        return [xs, d](const Theta& theta) {
            const int k = theta.k;
            if (k > 12) throw DimensionTooHigh("mixture likelihood limited to 12 components");
            double w[12], mean[12], sd[12];
            double acc = 0.0;
            for (int j = 0; j + 1 < k; ++j) {
                w[j] = theta.v[static_cast<std::size_t>(j)];
                acc += w[j];
            }
            w[k - 1] = 1.0 - acc;
            const std::size_t off = static_cast<std::size_t>(k - 1);
            for (int j = 0; j < k; ++j) {
                mean[j] = theta.v[off + static_cast<std::size_t>(j) * d];
                sd[j] = d == 2 ? std::sqrt(theta.v[off + static_cast<std::size_t>(j) * d + 1]) : 1.0;
            }
            double logw[12], logsd[12];
            for (int j = 0; j < k; ++j) {
                logw[j] = w[j] > 0.0 ? std::log(w[j]) : kNegInf;
                logsd[j] = std::log(sd[j]);
            }
            double total = 0.0;
            for (double x : xs) {
                double best = kNegInf;
                double term[12];
                for (int j = 0; j < k; ++j) {
                    if (logw[j] == kNegInf) {
                        term[j] = kNegInf;
                        continue;
                    }
                    const double u = (x - mean[j]) / sd[j];
                    term[j] = logw[j] - 0.5 * u * u - logsd[j] - kLogSqrt2Pi;
                    best = std::max(best, term[j]);
                }
                if (best == kNegInf) return kNegInf;
                double se = 0.0;
                for (int j = 0; j < k; ++j)
                    if (term[j] != kNegInf) se += std::exp(term[j] - best);
                total += best + std::log(se);
            }
            return total;
        };
    }
    }
    return [](const Theta&) { return kNegInf; };
}

double log_likelihood(const OrderIndexedFamily& family, const Theta& theta, const Dataset& data) {
    if (data.size() == 0) throw ValidationError("log_likelihood: dataset is empty");
    validate_theta(family, theta);
    const double total = par::blocked_sum(data.size(), [&](std::size_t i) {
        return log_density_at(family, theta, data.points[i]);
    });
    return std::isnan(total) ? kNegInf : total;
}

namespace {

// Knot axis of the two-segment change-points model integrated exactly: the
// likelihood is constant in t between consecutive data abscissae.
LogEvidence change_points_two_segment_evidence(const OrderIndexedFamily& family,
                                               const PriorSpec& prior, const Dataset& data,
                                               const QuadratureScheme& scheme) {
    const SortedXY s = sort_by_x(data);
    const std::size_t n = s.x.size();
    const double sigma = family.sigma;
    const double log_norm = static_cast<double>(n) * (std::log(sigma) + kLogSqrt2Pi);
    const Nodes1D a_nodes = nodes_on(family.gamma_lo, family.gamma_hi, scheme);
    const std::size_t m = a_nodes.x.size();

    std::vector<double> edges;
    edges.push_back(0.0);
    for (double x : s.x)
        if (x > 0.0 && x < 1.0) edges.push_back(x);
    edges.push_back(1.0);

    const double log_prior = -log_prior_normalizer(family, prior, 2);
    const std::size_t cells = m * m;
    const double log_integral = par::blocked_logsumexp(cells, [&](std::size_t idx) {
        const std::size_t ia = idx / m, ib = idx % m;
        const double a1 = a_nodes.x[ia], a2 = a_nodes.x[ib];
        // sum over knot segments of len * exp(loglik at that split)
        std::vector<double> seg_terms;
        seg_terms.reserve(edges.size());
        std::size_t cut = 0;
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            const double len = edges[e + 1] - edges[e];
            while (cut < n && s.x[cut] <= edges[e]) ++cut;
            if (len <= 0.0) continue;
            const double cnt_l = static_cast<double>(cut);
            const double cnt_r = static_cast<double>(n - cut);
            const double quad = (s.s2[cut] - 2.0 * a1 * s.s1[cut] + cnt_l * a1 * a1) +
                                ((s.s2[n] - s.s2[cut]) - 2.0 * a2 * (s.s1[n] - s.s1[cut]) +
                                 cnt_r * a2 * a2);
            seg_terms.push_back(std::log(len) - 0.5 * quad / (sigma * sigma) - log_norm);
        }
        return std::log(a_nodes.w[ia]) + std::log(a_nodes.w[ib]) + logsumexp(seg_terms) + log_prior;
    });

    LogEvidence e;
    e.k = 2;
    e.log_value = log_integral;
    e.method = LogEvidence::Method::quadrature;
    return e;
}

} // namespace

LogEvidence log_evidence_quadrature(const OrderIndexedFamily& family, const PriorSpec& prior,
                                    int k, const Dataset& data, const QuadratureScheme& scheme) {
    const int dim = model_dimension(family, k);
    if (dim > 3)
        throw DimensionTooHigh("log_evidence_quadrature: D(k) = " + std::to_string(dim) +
                               " exceeds the tensor-grid limit of 3");
    LogEvidence e;
    e.k = k;
    e.method = LogEvidence::Method::quadrature;
    if (data.size() == 0) {
        e.log_value = 0.0; // the prior integrates to one
        return e;
    }
    if (family.kind == FamilyKind::change_points && k == 2)
        return change_points_two_segment_evidence(family, prior, data, scheme);

    const auto box = param_box(family, k);
    std::vector<Nodes1D> axes;
    axes.reserve(box.size());
    for (const auto& [lo, hi] : box) axes.push_back(nodes_on(lo, hi, scheme));

    std::size_t cells = 1;
    for (const auto& ax : axes) cells *= ax.x.size();

    const auto loglik = make_loglik(family, data);
    const double log_normalizer = log_prior_normalizer(family, prior, k);

    const double log_integral = par::blocked_logsumexp(cells, [&](std::size_t idx) {
        Theta theta;
        theta.k = k;
        theta.v.resize(box.size());
        std::size_t rem = idx;
        double logw = 0.0;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const std::size_t i = rem % axes[a].x.size();
            rem /= axes[a].x.size();
            theta.v[a] = axes[a].x[i];
            logw += std::log(axes[a].w[i]);
        }
        const double lp = log_prior_unnormalized(family, prior, theta);
        if (lp == kNegInf) return kNegInf;
        return logw + lp - log_normalizer + loglik(theta);
    });

    e.log_value = log_integral;
    return e;
}

namespace {

struct LaplaceProposal {
    std::vector<double> mode;
    std::vector<std::size_t> smooth_axes; // coordinates with usable curvature
    std::vector<std::size_t> flat_axes;   // proposed uniformly over their box
    std::vector<std::pair<double, double>> flat_box;
    SquareMatrix chol_precision; // Cholesky of the smooth-subspace Hessian
    double log_det_cov = 0.0;    // log det of the inflated covariance 2 H^{-1}
    double log_flat_volume = 0.0;
    bool degenerate = false;     // fall back to pure prior sampling
};

// theta' H theta through the Cholesky factor of H.
double precision_quadratic(const SquareMatrix& l, const std::vector<double>& d) {
    const std::size_t n = l.n;
    double q = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = j; i < n; ++i) s += l(i, j) * d[i];
        q += s * s;
    }
    return q;
}

LaplaceProposal build_proposal(const OrderIndexedFamily& family, const PriorSpec& prior, int k,
                               const std::function<double(const Theta&)>& loglik,
                               RandomStream& stream) {
    const auto box = param_box(family, k);
    const std::size_t dim = box.size();

    auto neg_log_post = [&](const std::vector<double>& x) {
        Theta theta{k, x};
        const double lp = log_prior_unnormalized(family, prior, theta);
        if (lp == kNegInf) return std::numeric_limits<double>::infinity();
        return -(lp + loglik(theta));
    };

    // Multi-start search; mixture starts are canonicalized to the
    // weight-sorted labeling to avoid chasing permuted copies of one mode.
    RandomStream starts_stream = stream.substream(0xA1);
    const int n_starts = 4 + 2 * static_cast<int>(dim);
    OptimResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n_starts; ++s) {
        Theta start = sample_prior(family, prior, k, starts_stream);
        if (family.kind == FamilyKind::mixture && k >= 2) {
            std::vector<double> w(static_cast<std::size_t>(k));
            double acc = 0.0;
            for (int j = 0; j + 1 < k; ++j) {
                w[static_cast<std::size_t>(j)] = start.v[static_cast<std::size_t>(j)];
                acc += w[static_cast<std::size_t>(j)];
            }
            w[static_cast<std::size_t>(k) - 1] = 1.0 - acc;
            std::vector<int> perm(static_cast<std::size_t>(k));
            std::iota(perm.begin(), perm.end(), 0);
            std::sort(perm.begin(), perm.end(), [&](int a, int b) {
                return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)];
            });
            start = permute_mixture(family, start, perm);
        }
        const OptimResult r =
            nelder_mead(neg_log_post, start.v, box, 1e-10, 300 * static_cast<int>(dim));
        if (r.value < best.value) best = r;
    }

    LaplaceProposal prop;
    prop.mode = best.x;
    if (!std::isfinite(best.value)) {
        prop.degenerate = true;
        return prop;
    }

    // Nudge the mode inside the box so central differences stay feasible.
    std::vector<double> h(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        h[i] = std::max(1e-5 * (box[i].second - box[i].first), 1e-7);
        prop.mode[i] = std::clamp(prop.mode[i], box[i].first + 2.0 * h[i], box[i].second - 2.0 * h[i]);
    }

    auto shifted = [&](std::size_t i, double di, std::size_t j, double dj) {
        std::vector<double> x = prop.mode;
        x[i] += di;
        if (j != i) x[j] += dj;
        return neg_log_post(x);
    };
    const double f0 = neg_log_post(prop.mode);
    SquareMatrix hess(dim);
    bool finite = std::isfinite(f0);
    for (std::size_t i = 0; i < dim && finite; ++i) {
        const double fp = shifted(i, h[i], i, 0.0), fm = shifted(i, -h[i], i, 0.0);
        hess(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        finite = std::isfinite(hess(i, i));
        for (std::size_t j = i + 1; j < dim && finite; ++j) {
            const double fpp = shifted(i, h[i], j, h[j]), fpm = shifted(i, h[i], j, -h[j]);
            const double fmp = shifted(i, -h[i], j, h[j]), fmm = shifted(i, -h[i], j, -h[j]);
            hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            finite = std::isfinite(hess(i, j));
        }
    }
    if (!finite) {
        prop.degenerate = true;
        return prop;
    }

    // Axes with no usable curvature (knot coordinates of a piecewise-constant
    // likelihood, exactly flat ridges) get a uniform proposal over their box;
    // the Gaussian covers the rest.
    double max_diag = 0.0;
    for (std::size_t i = 0; i < dim; ++i) max_diag = std::max(max_diag, std::abs(hess(i, i)));
    for (std::size_t i = 0; i < dim; ++i) {
        if (hess(i, i) <= 1e-3 * max_diag) {
            prop.flat_axes.push_back(i);
            prop.flat_box.push_back(box[i]);
            prop.log_flat_volume += std::log(box[i].second - box[i].first);
        } else {
            prop.smooth_axes.push_back(i);
        }
    }
    if (prop.smooth_axes.empty()) {
        prop.degenerate = true;
        return prop;
    }

    const std::size_t sdim = prop.smooth_axes.size();
    SquareMatrix smooth(sdim);
    for (std::size_t a = 0; a < sdim; ++a)
        for (std::size_t b = 0; b < sdim; ++b)
            smooth(a, b) = hess(prop.smooth_axes[a], prop.smooth_axes[b]);

    double trace = 0.0;
    for (std::size_t i = 0; i < sdim; ++i) trace += std::abs(smooth(i, i));
    double ridge = 1e-8 * std::max(1.0, trace / static_cast<double>(sdim));
    std::optional<SquareMatrix> chol_h = cholesky(smooth);
    for (int attempt = 0; attempt < 12 && !chol_h; ++attempt) {
        for (std::size_t i = 0; i < sdim; ++i) smooth(i, i) += ridge;
        ridge *= 10.0;
        chol_h = cholesky(smooth);
    }
    if (!chol_h) {
        prop.degenerate = true;
        return prop;
    }
    prop.chol_precision = *chol_h;
    // covariance = 2 H^{-1} on the smooth subspace
    prop.log_det_cov = static_cast<double>(sdim) * std::log(2.0) - cholesky_log_det(*chol_h);
    return prop;
}

} // namespace

LogEvidence log_evidence_importance(const OrderIndexedFamily& family, const PriorSpec& prior,
                                    int k, const Dataset& data, std::size_t draws,
                                    RandomStream& stream) {
    if (draws < 1000) throw ValidationError("log_evidence_importance: need at least 1000 draws");
    LogEvidence e;
    e.k = k;
    e.method = LogEvidence::Method::importance;
    if (data.size() == 0) {
        e.log_value = 0.0;
        return e;
    }

    const auto loglik = make_loglik(family, data);
    const LaplaceProposal prop = build_proposal(family, prior, k, loglik, stream);
    e.degenerate_proposal = prop.degenerate;

    const double defensive = 0.05; // prior share of the proposal mixture
    const double t_dof = 5.0;      // heavy-tailed inflation of the Laplace shape
    RandomStream draw_stream = stream.substream(0xD2);

    // Mixture posteriors repeat at every component relabeling; the proposal
    // is symmetrized over the k! permutations so all label modes are covered
    // with an exactly known density. Permutation must not validate: proposal
    // draws may sit outside the simplex and only pick up zero weight later.
    const int comp_dim = family.component_dim();
    auto permute_packed = [k, comp_dim](const Theta& theta, const std::vector<int>& perm) {
        std::vector<double> w(static_cast<std::size_t>(k));
        double acc = 0.0;
        for (int j = 0; j + 1 < k; ++j) {
            w[static_cast<std::size_t>(j)] = theta.v[static_cast<std::size_t>(j)];
            acc += w[static_cast<std::size_t>(j)];
        }
        w[static_cast<std::size_t>(k) - 1] = 1.0 - acc;
        Theta out;
        out.k = k;
        out.v.resize(theta.v.size());
        const std::size_t off = static_cast<std::size_t>(k - 1);
        for (int j = 0; j < k; ++j) {
            const int src_index = perm[static_cast<std::size_t>(j)];
            if (j + 1 < k) out.v[static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(src_index)];
            for (int c = 0; c < comp_dim; ++c)
                out.v[off + static_cast<std::size_t>(j) * comp_dim + static_cast<std::size_t>(c)] =
                    theta.v[off + static_cast<std::size_t>(src_index) * comp_dim +
                            static_cast<std::size_t>(c)];
        }
        return out;
    };
    std::vector<std::vector<int>> label_perms;
    if (family.kind == FamilyKind::mixture && k >= 2) {
        std::vector<int> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            label_perms.push_back(perm);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        label_perms.push_back({});
    }

    auto log_laplace = [&](const std::vector<double>& x) {
        // flat axes are uniform over their box inside the proposal
        for (std::size_t f = 0; f < prop.flat_axes.size(); ++f) {
            const double v = x[prop.flat_axes[f]];
            if (v < prop.flat_box[f].first || v > prop.flat_box[f].second)
                return kNegInf;
        }
        // Student-t with the inflated covariance 2 H^{-1} on the smooth axes;
        // the Mahalanobis form is d' (H/2) d
        const std::size_t sdim = prop.smooth_axes.size();
        std::vector<double> d(sdim);
        for (std::size_t i = 0; i < sdim; ++i)
            d[i] = x[prop.smooth_axes[i]] - prop.mode[prop.smooth_axes[i]];
        const double q = 0.5 * precision_quadratic(prop.chol_precision, d);
        const double sd = static_cast<double>(sdim);
        return std::lgamma(0.5 * (t_dof + sd)) - std::lgamma(0.5 * t_dof) -
               0.5 * sd * std::log(t_dof * 3.14159265358979323846) - 0.5 * prop.log_det_cov -
               0.5 * (t_dof + sd) * std::log1p(q / t_dof) - prop.log_flat_volume;
    };

    auto log_proposal_core = [&](const Theta& theta) {
        if (label_perms.size() == 1) return log_laplace(theta.v);
        std::vector<double> terms;
        terms.reserve(label_perms.size());
        for (const auto& perm : label_perms)
            terms.push_back(log_laplace(permute_packed(theta, perm).v));
        return logsumexp(terms) - std::log(static_cast<double>(label_perms.size()));
    };

    std::vector<double> lw(draws);
    for (std::size_t s = 0; s < draws; ++s) {
        Theta theta;
        theta.k = k;
        if (prop.degenerate || draw_stream.uniform01() < defensive) {
            theta = sample_prior(family, prior, k, draw_stream);
        } else {
            const std::size_t sdim = prop.smooth_axes.size();
            std::vector<double> z(sdim);
            for (std::size_t i = 0; i < sdim; ++i) z[i] = draw_stream.normal();
            // y ~ N(0, H^{-1}) via back-substitution, then the t mixing scale
            std::vector<double> y(sdim);
            const SquareMatrix& l = prop.chol_precision;
            for (std::size_t ii = sdim; ii-- > 0;) {
                double acc = z[ii];
                for (std::size_t j = ii + 1; j < sdim; ++j) acc -= l(j, ii) * y[j];
                y[ii] = acc / l(ii, ii);
            }
            double chi_sq = 0.0;
            for (int i = 0; i < static_cast<int>(t_dof); ++i) {
                const double g = draw_stream.normal();
                chi_sq += g * g;
            }
            const double mix_scale = std::sqrt(2.0) * std::sqrt(t_dof / chi_sq);
            theta.v = prop.mode;
            for (std::size_t i = 0; i < sdim; ++i)
                theta.v[prop.smooth_axes[i]] = prop.mode[prop.smooth_axes[i]] + mix_scale * y[i];
            for (std::size_t f = 0; f < prop.flat_axes.size(); ++f)
                theta.v[prop.flat_axes[f]] =
                    draw_stream.uniform(prop.flat_box[f].first, prop.flat_box[f].second);
            if (label_perms.size() > 1) {
                // uniformly random relabeling; weights stay in the simplex
                const std::size_t pick = draw_stream.below(label_perms.size());
                theta = permute_packed(theta, label_perms[pick]);
            }
        }
        const double lp = log_prior_density(family, prior, theta);
        if (lp == kNegInf) {
            lw[s] = kNegInf;
            continue;
        }
        double lq;
        if (prop.degenerate) {
            lq = lp;
        } else {
            const double lg = std::log1p(-defensive) + log_proposal_core(theta);
            const double lpr = std::log(defensive) + lp;
            lq = std::max(lg, lpr) + std::log1p(std::exp(-std::abs(lg - lpr)));
        }
        lw[s] = lp + loglik(theta) - lq;
    }

    const double log_s = std::log(static_cast<double>(draws));
    e.log_value = logsumexp(lw) - log_s;

    // Bootstrap standard error of the log estimate.
    const int boots = 200;
    RandomStream boot_stream = stream.substream(0xB0);
    std::vector<double> boot(boots);
    std::vector<double> resampled(draws);
    for (int b = 0; b < boots; ++b) {
        for (std::size_t s = 0; s < draws; ++s)
            resampled[s] = lw[boot_stream.below(draws)];
        boot[static_cast<std::size_t>(b)] = logsumexp(resampled) - log_s;
    }
    double mean = 0.0;
    for (double v : boot) mean += v;
    mean /= boots;
    double var = 0.0;
    for (double v : boot) var += (v - mean) * (v - mean);
    e.std_error = std::sqrt(var / (boots - 1));
    return e;
}

OrderPosterior order_posterior(const std::vector<LogEvidence>& evidences, const PriorSpec& prior) {
    const int k_max = static_cast<int>(evidences.size());
    std::vector<double> t(evidences.size());
    for (std::size_t i = 0; i < evidences.size(); ++i)
        t[i] = prior.log_order_prior(static_cast<int>(i) + 1, k_max) + evidences[i].log_value;
    const double lse = logsumexp(t);
    OrderPosterior post;
    post.prob.resize(t.size());
    double total = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        post.prob[i] = std::exp(t[i] - lse);
        total += post.prob[i];
    }
    for (double& p : post.prob) p /= total;
    return post;
}

int estimate_global(const OrderPosterior& posterior) {
    int best = 1;
    for (int k = 2; k <= posterior.k_max(); ++k)
        if (posterior.at(k) > posterior.at(best)) best = k;
    return best;
}

int estimate_local(const OrderPosterior& posterior) {
    for (int k = 1; k < posterior.k_max(); ++k)
        if (posterior.at(k) >= posterior.at(k + 1)) return k;
    return posterior.k_max();
}

int estimate_bayes_factor(const std::vector<LogEvidence>& evidences, const PriorSpec&) {
    const int k_max = static_cast<int>(evidences.size());
    for (int k = 1; k < k_max; ++k)
        if (evidences[static_cast<std::size_t>(k)].log_value <
            evidences[static_cast<std::size_t>(k) - 1].log_value)
            return k;
    return k_max;
}

double log_bn(const OrderIndexedFamily& family, const PriorSpec& prior, int k,
              const Dataset& data, const Theta& theta_star, const QuadratureScheme& scheme) {
    const LogEvidence e = log_evidence_quadrature(family, prior, k, data, scheme);
    return prior.log_order_prior(k, family.k_max) + e.log_value -
           log_likelihood(family, theta_star, data);
}

} // namespace orderid
