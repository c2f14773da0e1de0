#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "orderid/errors.hpp"
#include "orderid/optim.hpp"
#include "orderid/theory.hpp"

using namespace orderid;

namespace {

OrderIndexedFamily regression_family(double sigma = 1.0) {
    OrderIndexedFamily f;
    f.kind = FamilyKind::fourier_regression;
    f.sigma = sigma;
    f.gamma_lo = -3.0;
    f.gamma_hi = 3.0;
    f.k_max = 3;
    return f;
}

OrderIndexedFamily mixture_family() {
    OrderIndexedFamily f;
    f.kind = FamilyKind::mixture;
    f.gamma_lo = -4.0;
    f.gamma_hi = 4.0;
    f.k_max = 4;
    return f;
}

const QuadratureScheme kScheme{};

} // namespace

TEST_CASE("kl evaluator matches the generic quadrature route") {
    RandomStream stream(31, 1);
    PriorSpec prior;
    OrderIndexedFamily cp;
    cp.kind = FamilyKind::change_points;
    cp.sigma = 0.7;
    cp.gamma_lo = -2.0;
    cp.gamma_hi = 2.0;
    cp.k_max = 3;
    for (const auto& fam : {regression_family(0.8), cp, mixture_family()}) {
        const Theta star = sample_prior(fam, prior, 2, stream);
        const auto h = make_kl_to_star(fam, star, kScheme);
        const Density f_star = make_density(fam, star);
        for (int rep = 0; rep < 4; ++rep) {
            const Theta theta = sample_prior(fam, prior, 2, stream);
            const double generic = kl_divergence(f_star, make_density(fam, theta), kScheme);
            CHECK(h(theta) == doctest::Approx(generic).epsilon(1e-6));
        }
    }
}

TEST_CASE("kl infimum") {
    SUBCASE("regression with a dropped harmonic") {
        const auto fam = regression_family(1.0);
        const Theta star{2, {1.0, 0.5}};
        const KlInfimum inf1 = kl_infimum(fam, 1, star, kScheme);
        CHECK(inf1.value == doctest::Approx(0.125).epsilon(1e-6));
        CHECK(inf1.argmin.v[0] == doctest::Approx(1.0).epsilon(1e-4));
    }

    SUBCASE("vanishes at and above the true order") {
        const auto fam = mixture_family();
        const Theta star{2, {0.5, -2.0, 2.0}};
        CHECK(kl_infimum(fam, 2, star, kScheme).value < 1e-6);
        CHECK(kl_infimum(fam, 3, star, kScheme).value < 1e-6);
    }

    SUBCASE("mixture order one agrees with a golden-section oracle") {
        const auto fam = mixture_family();
        const Theta star{2, {0.5, -2.0, 2.0}};
        const auto h = make_kl_to_star(fam, star, kScheme);
        const double mu = golden_section(
            [&](double m) { return h(Theta{1, {m}}); }, fam.gamma_lo, fam.gamma_hi, 1e-10);
        const double oracle = h(Theta{1, {mu}});
        const KlInfimum inf1 = kl_infimum(fam, 1, star, kScheme);
        CHECK(inf1.value == doctest::Approx(oracle).epsilon(1e-6));
    }

    SUBCASE("monotone in the order") {
        const auto fam = regression_family(0.6);
        const Theta star{3, {1.0, 0.5, -0.3}};
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 3; ++k) {
            const double value = kl_infimum(fam, k, star, kScheme).value;
            CHECK(value <= prev + 1e-9);
            if (k < star.k) CHECK(value > 1e-4); // strict drop below the true order
            prev = value;
        }
    }
}

TEST_CASE("kl slice membership") {
    const auto fam = regression_family(1.0);
    const Theta star{2, {1.0, 0.5}};
    const KlInfimum hstar = kl_infimum(fam, 2, star, kScheme);
    CHECK(in_kl_slice(fam, hstar.argmin, star, 1e-3, hstar.value, kScheme));
    CHECK(in_kl_slice(fam, star, star, 1e-3, hstar.value, kScheme));
    // H((1.0, 0.8)) = (0.3)^2/2 = 0.045 > delta/2 = 0.005
    CHECK_FALSE(in_kl_slice(fam, Theta{2, {1.0, 0.8}}, star, 0.01, hstar.value, kScheme));
}

TEST_CASE("moment bound estimate") {
    const auto fam = regression_family(1.0);
    const Theta star{1, {1.0}};

    SUBCASE("collapses to zero with the slice") {
        CHECK(moment_bound_estimate(fam, 1, 1e-6, 1.0, star, 9, kScheme) < 1e-4);
    }

    SUBCASE("matches a dense brute-force grid within five percent") {
        const double delta = 0.5;
        const double estimate = moment_bound_estimate(fam, 1, delta, 1.0, star, 17, kScheme);
        // dense independent scan of q over the slice
        const Density f_star = make_density(fam, star);
        const auto h = make_kl_to_star(fam, star, kScheme);
        double brute = 0.0;
        for (int i = 0; i <= 600; ++i) {
            Theta theta{1, {fam.gamma_lo + (fam.gamma_hi - fam.gamma_lo) * i / 600.0}};
            if (h(theta) > 0.5 * delta) continue;
            brute = std::max(brute, q_moment(f_star, make_density(fam, theta), 1.0, kScheme));
        }
        CHECK(estimate == doctest::Approx(brute).epsilon(0.05));
    }

    SUBCASE("monotone in the slice size") {
        const double small = moment_bound_estimate(fam, 1, 0.2, 1.0, star, 13, kScheme);
        const double large = moment_bound_estimate(fam, 1, 0.6, 1.0, star, 13, kScheme);
        CHECK(large >= small - 1e-12);
    }

    SUBCASE("a diverging tilted moment is reported, not swallowed") {
        // variance-mismatched components make the exponential moment blow up
        // once alpha croses the integrability threshold
        OrderIndexedFamily ls;
        ls.kind = FamilyKind::mixture;
        ls.component = MixtureComponent::location_scale;
        ls.gamma_lo = -2.0;
        ls.gamma_hi = 2.0;
        ls.var_lo = 0.25;
        ls.var_hi = 4.0;
        ls.k_max = 3;
        const Theta star2{1, {0.0, 1.0}};
        CHECK_THROWS_AS(moment_bound_estimate(ls, 1, 3.0, 3.0, star2, 9, kScheme),
                        DomainViolation);
    }
}

TEST_CASE("variance envelope constant") {
    CHECK(log_ratio_variance_constant(1.0, 1.0) == doctest::Approx(2.5));
    CHECK(log_ratio_variance_constant(std::exp(1.0), 1.0) == doctest::Approx(5.0));
    // quadratic scaling in 1/alpha
    const double m = 3.7;
    CHECK(log_ratio_variance_constant(m, 2.0) ==
          doctest::Approx(log_ratio_variance_constant(m, 1.0) / 4.0));
    CHECK_THROWS_AS(log_ratio_variance_constant(0.5, 1.0), DomainViolation);
}

TEST_CASE("variance envelope check") {
    const auto fam = mixture_family();
    const Theta star{2, {0.5, -2.0, 2.0}};

    SUBCASE("trivial at the truth") {
        const auto rep = check_variance_envelope(fam, star, star, 2.5, kScheme);
        CHECK(rep.holds);
        CHECK(rep.lhs == doctest::Approx(0.0).epsilon(1e-10));
    }

    SUBCASE("outside the domain") {
        const Theta far{2, {0.5, -3.5, 3.9}};
        CHECK_THROWS_AS(check_variance_envelope(fam, far, star, 2.5, kScheme), DomainViolation);
    }

    SUBCASE("holds across a sampled neighborhood with a calibrated constant") {
        // calibrate (alpha, M) on the slice, then sweep random nearby thetas
        const double alpha = 0.5;
        const double m_est = moment_bound_estimate(fam, 2, 0.3, alpha, star, 7, kScheme);
        const double m = std::max(1.0, 1.2 * m_est);
        const double c1 = log_ratio_variance_constant(m, alpha);
        RandomStream stream(33, 2);
        const auto h = make_kl_to_star(fam, star, kScheme);
        int checked = 0;
        while (checked < 200) {
            Theta theta = star;
            theta.v[0] = std::clamp(star.v[0] + 0.1 * stream.normal(), 0.0, 1.0);
            theta.v[1] = std::clamp(star.v[1] + 0.25 * stream.normal(), fam.gamma_lo, fam.gamma_hi);
            theta.v[2] = std::clamp(star.v[2] + 0.25 * stream.normal(), fam.gamma_lo, fam.gamma_hi);
            if (h(theta) > std::exp(-2.0)) continue;
            ++checked;
            const auto rep = check_variance_envelope(fam, theta, star, c1, kScheme);
            CHECK(rep.holds);
        }
    }
}

TEST_CASE("likelihood ratio test") {
    const Density f_star = normal_density(0.0, 1.0);
    const Density f = normal_density(1.0, 1.0);

    SUBCASE("statistic at the exact threshold accepts (inclusive)") {
        // f = f_star makes the statistic identically n H = 0; rho + log c = 0
        // at c = exp(-n rho) hits the threshold exactly
        Dataset data;
        data.points.push_back({0.3, 0.0});
        const double rho = 0.25;
        const double c = std::exp(-rho);
        CHECK(likelihood_ratio_test(f_star, f_star, data, rho, c, kScheme) == 1);
    }

    SUBCASE("f equal to the truth with a strict threshold rejects") {
        Dataset data;
        data.points.push_back({-0.4, 0.0});
        CHECK(likelihood_ratio_test(f_star, f_star, data, 1.0, 1.0, kScheme) == 0);
    }

    SUBCASE("empirical type-one frequency respects the bound") {
        const double rho = 0.2, c = 1.0;
        const double v = v_max(f_star, f);
        const std::size_t n = 60;
        const auto bounds = test_error_bounds(rho, 0.0, c, kl_divergence(f_star, f, kScheme),
                                              v, v, static_cast<double>(n));
        RandomStream stream(35, 3);
        const int reps = 3000;
        int rejections = 0;
        for (int r = 0; r < reps; ++r) {
            Dataset data;
            for (std::size_t i = 0; i < n; ++i) data.points.push_back(f_star.draw(stream));
            rejections += likelihood_ratio_test(f, f_star, data, rho, c, kScheme);
        }
        const double freq = static_cast<double>(rejections) / reps;
        const double se = std::sqrt(std::max(freq * (1.0 - freq), 1.0 / reps) / reps);
        CHECK(freq <= bounds.type1 + 3.0 * se);
    }
}

TEST_CASE("test error bounds") {
    SUBCASE("variance clamp") {
        // rho/V >= 1 and c = 1 reduce the type-one bound to exp(-n rho / 2)
        const auto b = test_error_bounds(0.5, 0.0, 1.0, 1.0, 0.25, 0.25, 40.0);
        CHECK(b.type1 == doctest::Approx(std::exp(-40.0 * 0.5 / 2.0)));
    }
    SUBCASE("degenerate sample size") {
        const auto b = test_error_bounds(0.5, 0.1, 0.7, 1.0, 2.0, 2.0, 0.0);
        CHECK(b.type1 == doctest::Approx(1.0 / 0.7));
        REQUIRE(b.type2.has_value());
        CHECK(*b.type2 == doctest::Approx(1.0));
    }
    SUBCASE("type two only below the divergence gap") {
        const auto none = test_error_bounds(0.6, 0.5, 1.0, 1.0, 2.0, 2.0, 10.0);
        CHECK_FALSE(none.type2.has_value());
        // extended-precision arithmetic oracle for a Gaussian-pair setting
        const double rho = 0.2, rho_p = 0.1, h = 0.5, vf = 1.25, vg = 1.25, n = 80.0;
        const auto b = test_error_bounds(rho, rho_p, 1.0, h, vf, vg, n);
        const long double gap = 0.5L - 0.3L;
        const long double t2 = expl(-0.5L * 80.0L * gap * (gap / 1.25L));
        REQUIRE(b.type2.has_value());
        CHECK(*b.type2 == doctest::Approx(static_cast<double>(t2)).epsilon(1e-12));
        const long double t1 = expl(-0.5L * 80.0L * 0.2L * (0.2L / 1.25L));
        CHECK(b.type1 == doctest::Approx(static_cast<double>(t1)).epsilon(1e-12));
    }
}

TEST_CASE("evidence lower bound event") {
    const auto fam = regression_family(0.5);
    PriorSpec prior;
    const Theta star{1, {1.0}};
    RandomStream stream(37, 4);
    QuadratureScheme scheme;
    scheme.nodes = 128;
    const double delta = 0.4, m_bound = 1.5;
    const auto out =
        evidence_lower_bound_check(fam, prior, 1, delta, 150, 200, star, m_bound, stream, scheme);
    CHECK(out.frequency >= 0.0);
    CHECK(out.frequency <= 1.0);
    CHECK(out.slice_mass > 0.0);
    const double se = std::sqrt(std::max(out.bound * (1.0 - out.bound), 1.0 / out.reps) / out.reps);
    CHECK(out.frequency >= out.bound - 3.0 * se);
    // the bound itself grows with n
    const double b1 = 1.0 - 2.0 * std::exp(-100.0 * delta * delta / (8.0 * m_bound));
    const double b2 = 1.0 - 2.0 * std::exp(-200.0 * delta * delta / (8.0 * m_bound));
    CHECK(b2 > b1);
}

TEST_CASE("bracket validator") {
    const auto fam = mixture_family();
    const Theta star{2, {0.5, -2.0, 2.0}};
    const Density f_star = make_density(fam, star);

    SUBCASE("the degenerate bracket at the truth validates") {
        Bracket b;
        b.delta = 0.25;
        b.lower = [&](double z) { return f_star.density({z, 0.0}); };
        b.upper = b.lower;
        b.box = f_star.support();
        CHECK(is_delta_bracket(b, f_star, kScheme));
    }

    SUBCASE("a fat multiplicative corridor fails the mass condition") {
        Bracket b;
        b.delta = 0.05;
        b.lower = [&](double z) { return 0.9 * f_star.density({z, 0.0}); };
        b.upper = [&](double z) { return 1.1 * f_star.density({z, 0.0}); };
        b.box = f_star.support();
        CHECK_FALSE(is_delta_bracket(b, f_star, kScheme)); // mu(u - l) = 0.2 > 0.05
    }
}

TEST_CASE("mixture bracket construction") {
    const auto fam = mixture_family();
    const Theta theta{2, {0.5, -2.0, 2.0}};
    const Density f_star = make_density(fam, theta);
    const Density f_theta = f_star;

    SUBCASE("validates and contains the density pointwise") {
        for (double eps : {0.1, 0.05}) {
            const Bracket b = build_mixture_bracket(fam, theta, eps, 4.0, f_star, kScheme);
            CHECK(is_delta_bracket(b, f_star, kScheme));
            const auto [a, z_hi] = b.box.axis[0].window(8.0);
            for (int i = 0; i <= 10000; ++i) {
                const double z = a + (z_hi - a) * i / 10000.0;
                const double f = f_theta.density({z, 0.0});
                CHECK(b.lower(z) <= f + 1e-14);
                CHECK(b.upper(z) >= f - 1e-14);
            }
        }
    }

    SUBCASE("the corridor narrows as eps decreases") {
        const Bracket wide = build_mixture_bracket(fam, theta, 0.2, 4.0, f_star, kScheme);
        const Bracket tight = build_mixture_bracket(fam, theta, 0.05, 4.0, f_star, kScheme);
        auto mass = [&](const Bracket& b) {
            const auto [a, z_hi] = b.box.axis[0].window(8.0);
            const Nodes1D nodes = nodes_on(a, z_hi, kScheme);
            double total = 0.0;
            for (std::size_t i = 0; i < nodes.x.size(); ++i)
                total += nodes.w[i] * (b.upper(nodes.x[i]) - b.lower(nodes.x[i]));
            return total;
        };
        CHECK(mass(tight) < mass(wide));
    }

    SUBCASE("an infeasible slack constant fails the radius search") {
        // at tau = 1 the multiplicative corridor alone already exceeds the
        // bracket mass budget, whatever the radius
        CHECK_THROWS_AS(build_mixture_bracket(fam, theta, 0.1, 1.0, f_star, kScheme),
                        EtaSearchFailed);
    }

    SUBCASE("location-scale components bracket as well") {
        OrderIndexedFamily ls = fam;
        ls.component = MixtureComponent::location_scale;
        const Theta theta2{2, {0.5, -2.0, 1.0, 2.0, 1.5}};
        const Density star2 = make_density(ls, theta2);
        const Bracket b = build_mixture_bracket(ls, theta2, 0.1, 4.0, star2, kScheme);
        CHECK(is_delta_bracket(b, star2, kScheme));
        const auto [a, z_hi] = b.box.axis[0].window(8.0);
        for (int i = 0; i <= 2000; ++i) {
            const double z = a + (z_hi - a) * i / 2000.0;
            const double f = star2.density({z, 0.0});
            CHECK(b.lower(z) <= f + 1e-14);
            CHECK(b.upper(z) >= f - 1e-14);
        }
    }
}

TEST_CASE("bracketing entropy estimate") {
    const auto fam = mixture_family();
    const Theta star{2, {0.5, -2.0, 2.0}};
    const Density f_star = make_density(fam, star);
    EntropyRegion region;
    region.weight_lo = 0.05;
    region.gamma_lo = fam.gamma_lo;
    region.gamma_hi = fam.gamma_hi;

    SUBCASE("one bracket suffices for a huge delta") {
        EntropyRegion tiny;
        tiny.weight_lo = 0.45;
        tiny.gamma_lo = -0.01;
        tiny.gamma_hi = 0.01;
        CHECK(bracketing_entropy_estimate(fam, 1, tiny, 0.3, f_star, kScheme) ==
              doctest::Approx(0.0));
    }

    SUBCASE("halving delta raises the count at the dimensional rate") {
        const double e1 = bracketing_entropy_estimate(fam, 2, region, 0.1, f_star, kScheme);
        const double e2 = bracketing_entropy_estimate(fam, 2, region, 0.05, f_star, kScheme);
        const double predicted = (1 + 1) * 2 * std::log(2.0); // (d+1) k log 2
        CHECK(e2 > e1);
        CHECK(e2 - e1 == doctest::Approx(predicted).epsilon(0.5));
    }

    SUBCASE("affine in -log delta with positive slope") {
        const double deltas[5] = {0.2, 0.1, 0.05, 0.025, 0.0125};
        double xs[5], ys[5];
        for (int i = 0; i < 5; ++i) {
            xs[i] = -std::log(deltas[i]);
            ys[i] = bracketing_entropy_estimate(fam, 2, region, deltas[i], f_star, kScheme);
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (int i = 0; i < 5; ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
            syy += ys[i] * ys[i];
        }
        const double slope = (5 * sxy - sx * sy) / (5 * sxx - sx * sx);
        const double corr = (5 * sxy - sx * sy) /
                            std::sqrt((5 * sxx - sx * sx) * (5 * syy - sy * sy));
        CHECK(slope > 0.0);
        CHECK(corr * corr > 0.9);
    }

    SUBCASE("dimension guard") {
        CHECK_THROWS_AS(bracketing_entropy_estimate(fam, 3, region, 0.1, f_star, kScheme),
                        DimensionTooHigh);
    }
}

TEST_CASE("locally conic coordinates") {
    const auto fam = mixture_family();
    const Theta star{2, {0.5, -2.0, 2.0}};

    SUBCASE("rho sums to minus one and the round trip is exact") {
        PriorSpec prior;
        RandomStream stream(41, 5);
        for (int rep = 0; rep < 100; ++rep) {
            const Theta theta = sample_prior(fam, prior, 3, stream);
            const ConicCoords coords = conic_coords(fam, theta, star, kScheme);
            double rho_sum = 0.0;
            for (double r : coords.rho) rho_sum += r;
            CHECK(std::abs(rho_sum + 1.0) < 1e-10);
            const Theta back = conic_reconstruct(fam, coords, star, kScheme);
            for (std::size_t i = 0; i < theta.v.size(); ++i)
                CHECK(std::abs(back.v[i] - theta.v[i]) < 1e-10);
            // the matching permutation is a bijection
            std::vector<bool> seen(static_cast<std::size_t>(star.k) + 1, false);
            for (int p : coords.perm) {
                CHECK(!seen[static_cast<std::size_t>(p)]);
                seen[static_cast<std::size_t>(p)] = true;
            }
        }
    }

    SUBCASE("order-one truth reduces the scale to a plain L1 distance") {
        const Theta star1{1, {0.5}};
        // matched component sits exactly on the truth; excess at 2.0
        const Theta theta{2, {0.6, 0.5, 2.0}};
        const ConicCoords coords = conic_coords(fam, theta, star1, kScheme);
        CHECK(coords.rho.size() == 1);
        CHECK(coords.rho[0] == doctest::Approx(-1.0));
        const double l1 = l1_distance(make_density(fam, Theta{1, {2.0}}),
                                      make_density(fam, Theta{1, {0.5}}), kScheme);
        const double p_extra = 1.0 - 0.6;
        CHECK(coords.t == doctest::Approx(p_extra * l1).epsilon(1e-8));
    }

    SUBCASE("the scale respects its gradient bound") {
        PriorSpec prior;
        RandomStream stream(43, 6);
        for (int rep = 0; rep < 60; ++rep) {
            const Theta theta = sample_prior(fam, prior, 3, stream);
            const ConicCoords coords = conic_coords(fam, theta, star, kScheme);
            CHECK(coords.t <= conic_scale_bound(fam, theta, star, kScheme) + 1e-9);
        }
    }

    SUBCASE("zero excess weight is degenerate") {
        Theta theta{3, {0.5, 0.5, -2.0, 2.0, 0.0}};
        CHECK_THROWS_AS(conic_coords(fam, theta, star, kScheme), DegenerateWeight);
    }
}

TEST_CASE("regression rate-constant bound") {
    SUBCASE("worked example") {
        const Theta star{2, {1.0, 0.5}};
        const double bound = regression_underestimation_rate_bound(star, 1.0);
        CHECK(bound == doctest::Approx(0.0470).epsilon(2e-3));
        // direct arithmetic: max term is 1/2 + 0 + (4/pi) * 1
        const double term = 0.5 + 4.0 / M_PI;
        CHECK(bound == doctest::Approx(1.0 / (12.0 * term)).epsilon(1e-12));
    }
    SUBCASE("zero coefficient is rejected") {
        CHECK_THROWS_AS(regression_underestimation_rate_bound(Theta{2, {1.0, 0.0}}, 1.0),
                        ZeroCoefficient);
    }
    SUBCASE("deeper true orders weaken the bound") {
        const double b2 = regression_underestimation_rate_bound(Theta{2, {1.0, 0.5}}, 1.0);
        const double b3 = regression_underestimation_rate_bound(Theta{3, {1.0, 0.5, 0.5}}, 1.0);
        CHECK(b3 < b2);
    }
}

TEST_CASE("overestimation thresholds") {
    SUBCASE("log-over-n tail against a brute-force scan") {
        const auto out = overestimation_thresholds(1.0, 0.0, 3.0, 2.0, 1.0, 2.5);
        // oracle: smallest n with 4 max_{m >= n} log(m)/m <= e^-2/2, scanning to 1e7
        long long n0 = -1;
        const double limit = std::exp(-2.0) / 2.0;
        double running_max = 0.0;
        for (long long m = 10'000'000; m >= 2; --m) {
            running_max = std::max(running_max, std::log(static_cast<double>(m)) / m);
            if (4.0 * running_max > limit) {
                n0 = m + 1;
                break;
            }
        }
        CHECK(out.n0 == n0);
        CHECK(out.delta0 <= limit);
        CHECK(out.delta0 == doctest::Approx(4.0 * std::log(static_cast<double>(n0)) / n0));
    }
    SUBCASE("slice floor is monotone in the constants") {
        const auto base = overestimation_thresholds(1.0, 0.0, 3.0, 2.0, 1.0, 2.5);
        const auto more_c1 = overestimation_thresholds(1.0, 0.0, 3.0, 2.0, 1.0, 5.0);
        const auto more_gap = overestimation_thresholds(1.0, 0.0, 4.0, 2.0, 1.0, 2.5);
        CHECK(more_c1.delta_k1_min >= base.delta_k1_min);
        CHECK(more_gap.delta_k1_min >= base.delta_k1_min);
    }
    SUBCASE("invalid orderings are rejected") {
        CHECK_THROWS_AS(overestimation_thresholds(1.0, 0.0, 2.0, 3.0, 1.0, 2.5), DomainViolation);
    }
}
