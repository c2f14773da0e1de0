#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "orderid/config.hpp"
#include "orderid/experiment.hpp"

namespace orderid {

/// Shortest decimal form that round-trips the double (17 significant digits).
std::string format_double(double value);

/// report.json: inputs echo, results, version, seed, workers, wall time.
/// Re-running with the echoed inputs reproduces the results bit for bit.
void write_report(const std::string& path, const std::string& command, const RunConfig& config,
                  const nlohmann::json& results, double wall_time_s);

/// curve.csv with header n,replications,under_count,over_count,correct_count.
void write_error_curve_csv(const std::string& path, const ErrorCurve& curve);
std::string error_curve_csv(const ErrorCurve& curve);

/// Standalone SVG: log-scale n on x, log10 frequency on y, one point series
/// per error kind, fitted-rate overlays, and a legend carrying the fitted
/// exponents (4 significant digits) plus the dimension-index prediction.
void emit_plot(const ErrorCurve& curve, const std::vector<std::pair<ErrorKind, RateFit>>& fits,
               const std::string& path);

Dataset load_dataset_csv(const std::string& path, int dim);
void write_dataset_csv(const std::string& path, const Dataset& data, int dim);

} // namespace orderid
