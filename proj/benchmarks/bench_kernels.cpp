// Timing comparison of the serial reference reductions against the OpenMP
// kernels, plus one end-to-end evidence benchmark. Run manually; not part of
// the test suite.

#include <chrono>
#include <cstdio>
#include <string>

#include "orderid/density.hpp"
#include "orderid/families.hpp"
#include "orderid/parallel.hpp"
#include "orderid/posterior.hpp"

using namespace orderid;

namespace {

double now() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double timed(const char* name, double reference, F&& body) {
    const double t0 = now();
    const double value = body();
    const double dt = now() - t0;
    std::printf("%-34s %10.4f s   value %.12g\n", name, dt, value);
    if (reference != 0.0 && value != reference)
        std::printf("  !! mismatch vs serial reference (%.17g vs %.17g)\n", value, reference);
    return value;
}

} // namespace

int main() {
    std::printf("workers available: %d\n\n", par::hardware_workers());

    const std::size_t n = 50'000'000;
    auto term = [](std::size_t i) {
        const double x = 1e-7 * static_cast<double>(i % 1000003);
        return std::exp(-x * x) * (1.0 + 0.25 * x);
    };

    const double sum_ref = timed("blocked_sum (serial reference)", 0.0, [&] {
        return par::blocked_sum_serial(n, term);
    });
    timed("blocked_sum (OpenMP)", sum_ref, [&] { return par::blocked_sum(n, term); });

    auto log_term = [](std::size_t i) {
        const double x = 1e-7 * static_cast<double>(i % 1000003);
        return -x * x * 40.0;
    };
    const double lse_ref = timed("blocked_logsumexp (serial)", 0.0, [&] {
        return par::blocked_logsumexp_serial(n, log_term);
    });
    timed("blocked_logsumexp (OpenMP)", lse_ref, [&] { return par::blocked_logsumexp(n, log_term); });

    // evidence of a two-component mixture, the dominant inner loop of the
    // experiment harness
    OrderIndexedFamily family;
    family.kind = FamilyKind::mixture;
    family.gamma_lo = -4.0;
    family.gamma_hi = 4.0;
    family.k_max = 3;
    PriorSpec prior;
    Theta theta_star{2, {0.5, -2.0, 2.0}};
    RandomStream stream(7, 1);
    const Dataset data = sample(family, theta_star, 400, stream);
    QuadratureScheme scheme;
    scheme.nodes = 48;

    par::set_max_workers(1);
    const double ev_ref = timed("evidence k=2 grid (1 worker)", 0.0, [&] {
        return log_evidence_quadrature(family, prior, 2, data, scheme).log_value;
    });
    par::set_max_workers(0);
    timed("evidence k=2 grid (all workers)", ev_ref, [&] {
        return log_evidence_quadrature(family, prior, 2, data, scheme).log_value;
    });
    return 0;
}
