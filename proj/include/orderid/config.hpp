#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orderid/experiment.hpp"
#include "orderid/families.hpp"
#include "orderid/quadrature.hpp"

namespace orderid {

inline constexpr const char* kVersion = "0.1.0";

/// Parsed run configuration: flat [section] blocks of key = value lines.
/// Unknown sections or keys are rejected at parse time, and every numeric
/// field is range-checked with a diagnostic naming line, key and constraint.
struct RunConfig {
    // [family]
    bool has_family = false;
    OrderIndexedFamily family;
    Theta theta_star;
    int k_star = 1;
    bool has_theta_star = false;

    // [prior]
    PriorSpec prior;

    // [experiment]
    ExperimentConfig::Estimator estimator = ExperimentConfig::Estimator::local;
    std::vector<std::size_t> n_grid;
    int replications = 100;
    ExperimentConfig::EvidenceMethod evidence = ExperimentConfig::EvidenceMethod::auto_select;
    int quadrature_nodes = 64;
    std::size_t importance_draws = 2000;

    // [quadrature]
    QuadratureScheme scheme;

    // [divergence]
    std::string divergence_f = "normal 0 1";
    std::string divergence_g = "normal 1 1";
    double divergence_alpha = 1.0;

    // [data]
    std::string data_file;
    std::size_t data_n = 200;

    // [theory]
    std::vector<std::string> checks;
    double delta = 0.4;
    double alpha = 1.0;
    double moment_bound = 1.5;
    double tau = 0.25;
    double s_margin = 1.0;
    double beta1 = 1.0;
    double beta2 = 0.0;
    int reps = 500;
    std::size_t theory_n = 200;

    // [entropy]
    int entropy_k = 2;
    std::vector<double> entropy_deltas = {0.2, 0.1, 0.05, 0.025, 0.0125};
    double weight_lo = 0.05;

    // [run]
    std::uint64_t seed = 42;
    bool seed_from_config = false;
    int workers = 0;

    /// Experiment assembled from the family/prior/experiment sections.
    ExperimentConfig experiment_config() const;
};

RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Canonical text form; parse(serialize(c)) reproduces c.
std::string serialize_config(const RunConfig& config);

/// Density descriptor used by the divergence subcommand:
///   "normal MU SD" or "mixture w1 m1 s1 [w2 m2 s2 ...]".
Density parse_density_descriptor(const std::string& text);

} // namespace orderid
