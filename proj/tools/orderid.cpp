// Command-line front door: subcommands wrapping the library operations,
// reading the sectioned key = value config format and writing report.json,
// CSV data and SVG rate plots.

#include <chrono>
#include <functional>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "orderid/config.hpp"
#include "orderid/density.hpp"
#include "orderid/errors.hpp"
#include "orderid/experiment.hpp"
#include "orderid/parallel.hpp"
#include "orderid/posterior.hpp"
#include "orderid/report.hpp"
#include "orderid/theory.hpp"

namespace {

using nlohmann::json;
using namespace orderid;

struct CliOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed = -1;
    int workers = -1;
};

RunConfig load_config(const CliOptions& cli) {
    RunConfig config = parse_config_file(cli.config_path);
    // seed precedence: flag > environment > config > fixed default 42
    if (cli.seed >= 0) {
        config.seed = static_cast<std::uint64_t>(cli.seed);
        config.seed_from_config = true;
    } else if (const char* env = std::getenv("ORDERID_SEED")) {
        config.seed = static_cast<std::uint64_t>(std::stoll(env));
        config.seed_from_config = true;
    }
    if (cli.workers >= 0)
        config.workers = cli.workers;
    else if (const char* env = std::getenv("ORDERID_WORKERS"))
        config.workers = std::stoi(env);
    par::set_max_workers(config.workers);
    std::filesystem::create_directories(cli.out_dir);
    return config;
}

void require_family(const RunConfig& config) {
    if (!config.has_family || !config.has_theta_star)
        throw ValidationError("this subcommand needs a [family] section with theta_star");
}

Dataset obtain_data(const RunConfig& config) {
    require_family(config);
    const int dim = config.family.kind == FamilyKind::mixture ? 1 : 2;
    if (!config.data_file.empty()) return load_dataset_csv(config.data_file, dim);
    RandomStream stream(config.seed, stream_index(0xDA));
    return sample(config.family, config.theta_star, config.data_n, stream);
}

std::vector<LogEvidence> compute_evidences(const RunConfig& config, const Dataset& data) {
    std::vector<LogEvidence> evidences;
    for (int k = 1; k <= config.family.k_max; ++k) {
        const int dim = model_dimension(config.family, k);
        const bool quad =
            config.evidence == ExperimentConfig::EvidenceMethod::quadrature ||
            (config.evidence == ExperimentConfig::EvidenceMethod::auto_select && dim <= 3);
        if (quad) {
            QuadratureScheme scheme = config.scheme;
            scheme.nodes = config.quadrature_nodes;
            evidences.push_back(log_evidence_quadrature(config.family, config.prior, k, data, scheme));
        } else {
            RandomStream stream(config.seed, stream_index(0xEC, static_cast<std::uint64_t>(k)));
            evidences.push_back(log_evidence_importance(config.family, config.prior, k, data,
                                                        config.importance_draws, stream));
        }
    }
    return evidences;
}

json evidences_json(const std::vector<LogEvidence>& evidences) {
    json out = json::array();
    for (const auto& e : evidences) {
        json j;
        j["k"] = e.k;
        j["log_evidence"] = e.log_value;
        j["method"] = e.method == LogEvidence::Method::quadrature ? "quadrature" : "importance";
        if (e.method == LogEvidence::Method::importance) {
            j["std_error"] = e.std_error;
            j["degenerate_proposal"] = e.degenerate_proposal;
        }
        out.push_back(j);
    }
    return out;
}

int run_divergence(const RunConfig& config, const CliOptions& cli,
                   const std::function<double()>& elapsed) {
    const Density f = parse_density_descriptor(config.divergence_f);
    const Density g = parse_density_descriptor(config.divergence_g);
    json results;
    results["kl"] = kl_divergence(f, g, config.scheme);
    results["kl_reverse"] = kl_divergence(g, f, config.scheme);
    results["v"] = v_divergence(f, g, config.scheme);
    results["v_reverse"] = v_divergence(g, f, config.scheme);
    results["v_max"] = v_max(f, g, config.scheme);
    results["q_moment"] = q_moment(f, g, config.divergence_alpha, config.scheme);
    results["l1"] = l1_distance(f, g, config.scheme);
    write_report(cli.out_dir + "/report.json", "divergence", config, results, elapsed());
    return 0;
}

int run_posterior(const RunConfig& config, const CliOptions& cli,
                  const std::function<double()>& elapsed, bool with_estimates) {
    const Dataset data = obtain_data(config);
    const auto evidences = compute_evidences(config, data);
    const OrderPosterior posterior = order_posterior(evidences, config.prior);
    json results;
    results["n"] = data.size();
    results["evidences"] = evidences_json(evidences);
    results["posterior"] = posterior.prob;
    if (with_estimates) {
        results["estimate_global"] = estimate_global(posterior);
        results["estimate_local"] = estimate_local(posterior);
        results["estimate_bayes_factor"] = estimate_bayes_factor(evidences, config.prior);
    }
    write_report(cli.out_dir + "/report.json", with_estimates ? "estimate" : "posterior", config,
                 results, elapsed());
    return 0;
}

int run_experiment(const RunConfig& config, const CliOptions& cli,
                   const std::function<double()>& elapsed) {
    require_family(config);
    if (config.n_grid.empty())
        throw ValidationError("experiment needs an [experiment] section with n_grid");
    const ErrorCurve curve = run_error_experiment(config.experiment_config());
    write_error_curve_csv(cli.out_dir + "/curve.csv", curve);

    json results;
    results["fingerprint"] = curve.config_fingerprint;
    json rows = json::array();
    for (const auto& row : curve.rows) {
        json j;
        j["n"] = row.n;
        j["replications"] = row.replications;
        j["under"] = row.under;
        j["over"] = row.over;
        j["correct"] = row.correct;
        j["excluded"] = row.excluded;
        rows.push_back(j);
    }
    results["curve"] = rows;

    std::vector<std::pair<ErrorKind, RateFit>> fits;
    const EffectiveDims dims = effective_dimensions(config.family, config.k_star, config.tau);
    try {
        RateFit fit = fit_exponential_rate(curve, ErrorKind::under);
        fits.emplace_back(ErrorKind::under, fit);
        results["under_fit"] = {{"model", "exponential"},
                                {"intercept", fit.intercept},
                                {"rate", fit.rate},
                                {"r_squared", fit.r_squared}};
    } catch (const InsufficientData& e) {
        results["under_fit"] = {{"error", e.what()}};
    }
    try {
        RateFit fit = fit_polylog_rate(curve, ErrorKind::over, dims.d1, dims.d2, dims.beta2);
        fits.emplace_back(ErrorKind::over, fit);
        results["over_fit"] = {{"model", "poly-log"},
                               {"intercept", fit.intercept},
                               {"exponent", fit.rate},
                               {"loglog_coeff", fit.loglog_coeff},
                               {"r_squared", fit.r_squared},
                               {"predicted_exponent", fit.predicted_exponent}};
    } catch (const InsufficientData& e) {
        results["over_fit"] = {{"error", e.what()}};
    }
    emit_plot(curve, fits, cli.out_dir + "/plot.svg");
    write_report(cli.out_dir + "/report.json", "experiment", config, results, elapsed());
    return 0;
}

int run_theory(const RunConfig& config, const CliOptions& cli,
               const std::function<double()>& elapsed) {
    json results;
    std::vector<std::string> checks = config.checks;
    if (checks.empty()) checks = {"constants"};
    for (const std::string& check : checks) {
        if (check == "constants") {
            json j;
            j["c1"] = log_ratio_variance_constant(config.moment_bound, config.alpha);
            if (config.has_family) {
                const EffectiveDims dims =
                    effective_dimensions(config.family, config.k_star, config.tau);
                j["d1"] = dims.d1;
                j["d2"] = dims.d2;
                j["beta2"] = dims.beta2;
                const OverestimationThresholds thresholds = overestimation_thresholds(
                    config.beta1, config.beta2, dims.d1, dims.d2, config.s_margin,
                    log_ratio_variance_constant(config.moment_bound, config.alpha));
                j["n0"] = thresholds.n0;
                j["delta0"] = thresholds.delta0;
                j["delta_k1_min"] = thresholds.delta_k1_min;
                if (config.family.kind == FamilyKind::fourier_regression && config.k_star >= 2)
                    j["underestimation_rate_bound"] =
                        regression_underestimation_rate_bound(config.theta_star, config.family.sigma);
            }
            results["constants"] = j;
        } else if (check == "evidence-bound") {
            require_family(config);
            RandomStream stream(config.seed, stream_index(0x1E));
            const EvidenceBoundCheck out = evidence_lower_bound_check(
                config.family, config.prior, config.k_star, config.delta, config.theory_n,
                config.reps, config.theta_star, config.moment_bound, stream, config.scheme);
            results["evidence_bound"] = {{"frequency", out.frequency},
                                         {"bound", out.bound},
                                         {"slice_mass", out.slice_mass},
                                         {"reps", out.reps}};
        } else if (check == "variance-envelope") {
            require_family(config);
            const double c1 = log_ratio_variance_constant(config.moment_bound, config.alpha);
            RandomStream stream(config.seed, stream_index(0x8F));
            int tried = 0, held = 0, in_domain = 0;
            const auto h = make_kl_to_star(config.family, config.theta_star, config.scheme);
            while (tried < config.reps) {
                ++tried;
                const Theta theta =
                    sample_prior(config.family, config.prior, config.k_star, stream);
                if (h(theta) > std::exp(-2.0)) continue;
                ++in_domain;
                const VarianceEnvelopeReport rep = check_variance_envelope(
                    config.family, theta, config.theta_star, c1, config.scheme);
                if (rep.holds) ++held;
            }
            results["variance_envelope"] = {
                {"sampled", tried}, {"in_domain", in_domain}, {"held", held}, {"c1", c1}};
        } else if (check == "bracket") {
            require_family(config);
            if (config.family.kind != FamilyKind::mixture)
                throw ValidationError("bracket check needs the mixture family");
            const Density f_star = make_density(config.family, config.theta_star);
            const Bracket bracket = build_mixture_bracket(config.family, config.theta_star,
                                                          config.delta, 4.0, f_star, config.scheme);
            results["bracket"] = {
                {"eta", bracket.eta},
                {"delta", bracket.delta},
                {"valid", is_delta_bracket(bracket, f_star, config.scheme)}};
        } else if (check == "conic") {
            require_family(config);
            RandomStream stream(config.seed, stream_index(0xC0));
            double worst_rho = 0.0, worst_round = 0.0;
            int bound_ok = 0;
            const int reps = std::min(config.reps, 200);
            for (int r = 0; r < reps; ++r) {
                Theta theta =
                    sample_prior(config.family, config.prior, config.k_star + 1, stream);
                const ConicCoords coords =
                    conic_coords(config.family, theta, config.theta_star, config.scheme);
                double rho_sum = 0.0;
                for (double v : coords.rho) rho_sum += v;
                worst_rho = std::max(worst_rho, std::abs(rho_sum + 1.0));
                const Theta back =
                    conic_reconstruct(config.family, coords, config.theta_star, config.scheme);
                for (std::size_t i = 0; i < back.v.size(); ++i)
                    worst_round = std::max(worst_round, std::abs(back.v[i] - theta.v[i]));
                if (coords.t <=
                    conic_scale_bound(config.family, theta, config.theta_star, config.scheme) + 1e-9)
                    ++bound_ok;
            }
            results["conic"] = {{"reps", reps},
                                {"max_rho_sum_error", worst_rho},
                                {"max_round_trip_error", worst_round},
                                {"scale_bound_held", bound_ok}};
        } else {
            throw ValidationError("unknown theory check: " + check);
        }
    }
    write_report(cli.out_dir + "/report.json", "theory-check", config, results, elapsed());
    return 0;
}

int run_entropy(const RunConfig& config, const CliOptions& cli,
                const std::function<double()>& elapsed) {
    require_family(config);
    if (config.family.kind != FamilyKind::mixture)
        throw ValidationError("entropy subcommand needs the mixture family");
    const Density f_star = make_density(config.family, config.theta_star);
    EntropyRegion region;
    region.weight_lo = config.weight_lo;
    region.gamma_lo = config.family.gamma_lo;
    region.gamma_hi = config.family.gamma_hi;

    json rows = json::array();
    std::vector<double> xs, ys;
    std::ofstream csv(cli.out_dir + "/entropy.csv");
    csv << "delta,entropy\n";
    for (double delta : config.entropy_deltas) {
        const double entropy = bracketing_entropy_estimate(config.family, config.entropy_k, region,
                                                           delta, f_star, config.scheme);
        rows.push_back({{"delta", delta}, {"entropy", entropy}});
        csv << format_double(delta) << "," << format_double(entropy) << "\n";
        xs.push_back(-std::log(delta));
        ys.push_back(entropy);
    }
    // affine fit entropy ~ a + b (-log delta)
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;

    json results;
    results["points"] = rows;
    results["fit"] = {{"slope", slope}, {"intercept", intercept}};
    write_report(cli.out_dir + "/report.json", "entropy", config, results, elapsed());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian order estimation toolkit"};
    app.require_subcommand(1);

    CliOptions cli;
    std::string command;
    for (const char* name :
         {"divergence", "posterior", "estimate", "experiment", "theory-check", "entropy"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", cli.config_path, "config file path")->required();
        sub->add_option("--seed", cli.seed, "master seed override");
        sub->add_option("--workers", cli.workers, "worker threads (0 = all cores)");
        sub->add_option("--out", cli.out_dir, "output directory");
        sub->callback([&command, name]() { command = name; });
    }

    CLI11_PARSE(app, argc, argv);

    const auto t0 = std::chrono::steady_clock::now();
    try {
        const RunConfig config = load_config(cli);
        const std::function<double()> elapsed = [&t0]() {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        };
        if (command == "divergence") return run_divergence(config, cli, elapsed);
        if (command == "posterior") return run_posterior(config, cli, elapsed, false);
        if (command == "estimate") return run_posterior(config, cli, elapsed, true);
        if (command == "experiment") return run_experiment(config, cli, elapsed);
        if (command == "theory-check") return run_theory(config, cli, elapsed);
        if (command == "entropy") return run_entropy(config, cli, elapsed);
        std::cerr << "unknown subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
