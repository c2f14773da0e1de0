#include "orderid/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "orderid/errors.hpp"

namespace orderid {

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_report(const std::string& path, const std::string& command, const RunConfig& config,
                  const nlohmann::json& results, double wall_time_s) {
    nlohmann::json report;
    report["command"] = command;
    report["inputs"] = serialize_config(config);
    report["seed"] = config.seed;
    report["workers"] = config.workers;
    report["version"] = kVersion;
    report["results"] = results;
    report["wall_time_s"] = wall_time_s;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << report.dump(2) << "\n";
}

std::string error_curve_csv(const ErrorCurve& curve) {
    std::ostringstream out;
    out << "n,replications,under_count,over_count,correct_count\n";
    for (const auto& row : curve.rows)
        out << row.n << "," << row.replications << "," << row.under << "," << row.over << ","
            << row.correct << "\n";
    return out.str();
}

void write_error_curve_csv(const std::string& path, const ErrorCurve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curve: " + path);
    out << error_curve_csv(curve);
}

namespace {

std::string sig4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Mapper {
    double x_lo, x_hi, y_lo, y_hi; // data ranges (log10 space)
    double left = 70, right = 620, top = 30, bottom = 380;

    double x(double log_n) const {
        return left + (log_n - x_lo) / (x_hi - x_lo) * (right - left);
    }
    double y(double log_f) const {
        return bottom - (log_f - y_lo) / (y_hi - y_lo) * (bottom - top);
    }
};

} // namespace

void emit_plot(const ErrorCurve& curve, const std::vector<std::pair<ErrorKind, RateFit>>& fits,
               const std::string& path) {
    if (curve.rows.empty()) throw IoError("emit_plot: empty curve");

    auto freq = [](const ErrorCurve::Row& row, ErrorKind kind) {
        const int count = kind == ErrorKind::under ? row.under : row.over;
        return (static_cast<double>(count) + 0.5) / (static_cast<double>(row.replications) + 1.0);
    };

    Mapper map{};
    map.x_lo = std::log10(static_cast<double>(curve.rows.front().n)) - 0.05;
    map.x_hi = std::log10(static_cast<double>(curve.rows.back().n)) + 0.05;
    if (map.x_hi - map.x_lo < 0.2) {
        map.x_lo -= 0.2;
        map.x_hi += 0.2;
    }
    map.y_lo = 0.0;
    map.y_hi = -300.0;
    for (const auto& row : curve.rows) {
        for (ErrorKind kind : {ErrorKind::under, ErrorKind::over}) {
            const double lf = std::log10(freq(row, kind));
            map.y_lo = std::min(map.y_lo, lf);
            map.y_hi = std::max(map.y_hi, lf);
        }
    }
    map.y_lo -= 0.3;
    map.y_hi = std::min(map.y_hi + 0.3, 0.3);

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"680\" height=\"430\" "
           "viewBox=\"0 0 680 430\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"680\" height=\"430\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << map.left << "\" y1=\"" << map.bottom << "\" x2=\"" << map.right
        << "\" y2=\"" << map.bottom << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << map.left << "\" y1=\"" << map.top << "\" x2=\"" << map.left
        << "\" y2=\"" << map.bottom << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"340\" y=\"415\" text-anchor=\"middle\" font-size=\"13\">n (log scale)"
        << "</text>\n";
    svg << "<text x=\"18\" y=\"205\" text-anchor=\"middle\" font-size=\"13\" "
           "transform=\"rotate(-90 18 205)\">log10 error frequency</text>\n";

    for (const auto& row : curve.rows) {
        const double px = map.x(std::log10(static_cast<double>(row.n)));
        svg << "<line x1=\"" << px << "\" y1=\"" << map.bottom << "\" x2=\"" << px << "\" y2=\""
            << map.bottom + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << px << "\" y=\"" << map.bottom + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << row.n << "</text>\n";
    }
    for (int tick = static_cast<int>(std::floor(map.y_lo)); tick <= 0; ++tick) {
        const double py = map.y(tick);
        if (py < map.top || py > map.bottom) continue;
        svg << "<line x1=\"" << map.left - 5 << "\" y1=\"" << py << "\" x2=\"" << map.left
            << "\" y2=\"" << py << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << map.left - 9 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << tick << "</text>\n";
    }

    const char* colors[2] = {"#1f77b4", "#d62728"};
    const char* names[2] = {"under", "over"};
    for (int kindex = 0; kindex < 2; ++kindex) {
        const ErrorKind kind = kindex == 0 ? ErrorKind::under : ErrorKind::over;
        for (const auto& row : curve.rows) {
            const double px = map.x(std::log10(static_cast<double>(row.n)));
            const double py = map.y(std::log10(freq(row, kind)));
            svg << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"4\" fill=\""
                << colors[kindex] << "\"/>\n";
        }
    }

    const double ln10 = std::log(10.0);
    for (const auto& [kind, fit] : fits) {
        if (curve.rows.size() < 2) break;
        const int kindex = kind == ErrorKind::under ? 0 : 1;
        svg << "<polyline fill=\"none\" stroke=\"" << colors[kindex]
            << "\" stroke-dasharray=\"5 3\" points=\"";
        const double n_lo = static_cast<double>(curve.rows.front().n);
        const double n_hi = static_cast<double>(curve.rows.back().n);
        for (int i = 0; i <= 60; ++i) {
            const double n = n_lo * std::pow(n_hi / n_lo, i / 60.0);
            double log_f;
            if (fit.model == RateFit::Model::exponential)
                log_f = fit.intercept - fit.rate * n;
            else
                log_f = fit.intercept - fit.rate * std::log(n) +
                        fit.loglog_coeff * std::log(std::log(n));
            svg << map.x(std::log10(n)) << "," << map.y(log_f / ln10) << " ";
        }
        svg << "\"/>\n";
    }

    double legend_y = 48;
    for (const auto& [kind, fit] : fits) {
        const int kindex = kind == ErrorKind::under ? 0 : 1;
        std::ostringstream label;
        if (fit.model == RateFit::Model::exponential)
            label << names[kindex] << " fit: rate=" << sig4(fit.rate)
                  << " R2=" << sig4(fit.r_squared);
        else
            label << names[kindex] << " fit: exponent=" << sig4(fit.rate)
                  << " loglog=" << sig4(fit.loglog_coeff) << " R2=" << sig4(fit.r_squared)
                  << " predicted=" << sig4(fit.predicted_exponent);
        svg << "<text x=\"" << map.right - 4 << "\" y=\"" << legend_y
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << colors[kindex] << "\">"
            << label.str() << "</text>\n";
        legend_y += 16;
    }

    svg << "</svg>\n";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write plot: " + path);
    out << svg.str();
}

Dataset load_dataset_csv(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);
    Dataset data;
    std::string line;
    bool first = true;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.find_first_not_of("xy, \r") == std::string::npos) continue; // header
        }
        std::istringstream row(line);
        SamplePoint z;
        char comma;
        if (dim == 1) {
            if (!(row >> z.x)) throw ParseError("dataset line " + std::to_string(line_no));
        } else {
            if (!(row >> z.x >> comma >> z.y))
                throw ParseError("dataset line " + std::to_string(line_no));
        }
        data.points.push_back(z);
    }
    if (data.points.empty()) throw ValidationError("dataset is empty: " + path);
    return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data, int dim) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset: " + path);
    out << (dim == 1 ? "x" : "x,y") << "\n";
    for (const SamplePoint& z : data.points) {
        out << format_double(z.x);
        if (dim == 2) out << "," << format_double(z.y);
        out << "\n";
    }
}

} // namespace orderid
