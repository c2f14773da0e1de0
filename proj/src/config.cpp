#include "orderid/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "orderid/errors.hpp"

namespace orderid {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"family",
         {"kind", "component", "sigma", "gamma_min", "gamma_max", "var_min", "var_max", "k_max",
          "k_star", "theta_star"}},
        {"prior", {"order", "within", "coeff_sd"}},
        {"experiment",
         {"estimator", "n_grid", "replications", "evidence", "quadrature_nodes",
          "importance_draws"}},
        {"quadrature", {"nodes", "radius", "rule"}},
        {"divergence", {"f", "g", "alpha"}},
        {"data", {"file", "n"}},
        {"theory",
         {"checks", "delta", "alpha", "moment_bound", "tau", "s", "beta1", "beta2", "reps", "n"}},
        {"entropy", {"k", "deltas", "weight_min"}},
        {"run", {"seed", "workers"}},
    };
    return schema;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct Entry {
    std::string value;
    int line = 0;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

Sections tokenize(const std::string& text) {
    Sections sections;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("line " + std::to_string(line_no) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (known_keys().find(section) == known_keys().end())
                throw ValidationError("line " + std::to_string(line_no) + ": unknown section [" +
                                      section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
        if (section.empty())
            throw ParseError("line " + std::to_string(line_no) + ": key outside any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (known_keys().at(section).find(key) == known_keys().at(section).end())
            throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" + key +
                                  "' in [" + section + "]");
        sections[section][key] = Entry{value, line_no};
    }
    return sections;
}

[[noreturn]] void fail(const Entry& e, const std::string& section, const std::string& key,
                       const std::string& constraint) {
    throw ValidationError("line " + std::to_string(e.line) + ": [" + section + "] " + key + ": " +
                          constraint);
}

double to_double(const Entry& e, const std::string& section, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        fail(e, section, key, "expected a number, got '" + e.value + "'");
    }
}

long long to_int(const Entry& e, const std::string& section, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        fail(e, section, key, "expected an integer, got '" + e.value + "'");
    }
}

std::vector<double> to_doubles(const Entry& e, const std::string& section, const std::string& key) {
    std::vector<double> out;
    std::istringstream in(e.value);
    std::string tok;
    while (in >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            fail(e, section, key, "expected numbers, got '" + tok + "'");
        }
    }
    if (out.empty()) fail(e, section, key, "expected at least one number");
    return out;
}

std::vector<std::string> to_words(const Entry& e) {
    std::vector<std::string> out;
    std::istringstream in(e.value);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

} // namespace

ExperimentConfig RunConfig::experiment_config() const {
    ExperimentConfig c;
    c.family = family;
    c.prior = prior;
    c.theta_star = theta_star;
    c.k_star = k_star;
    c.estimator = estimator;
    c.n_grid = n_grid;
    c.replications = replications;
    c.evidence = evidence;
    c.quadrature_nodes = quadrature_nodes;
    c.importance_draws = importance_draws;
    c.master_seed = seed;
    return c;
}

RunConfig parse_config(const std::string& text) {
    const Sections sections = tokenize(text);
    RunConfig c;

    auto entry = [&](const std::string& section, const std::string& key) -> const Entry* {
        const auto s = sections.find(section);
        if (s == sections.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    };

    if (sections.count("family")) {
        c.has_family = true;
        if (const Entry* e = entry("family", "kind")) c.family.kind = family_kind_from_name(e->value);
        if (const Entry* e = entry("family", "component")) {
            if (e->value == "location")
                c.family.component = MixtureComponent::location;
            else if (e->value == "location-scale")
                c.family.component = MixtureComponent::location_scale;
            else
                fail(*e, "family", "component", "must be location or location-scale");
        }
        if (const Entry* e = entry("family", "sigma")) {
            c.family.sigma = to_double(*e, "family", "sigma");
            if (!(c.family.sigma > 0.0)) fail(*e, "family", "sigma", "must be positive");
        }
        if (const Entry* e = entry("family", "gamma_min"))
            c.family.gamma_lo = to_double(*e, "family", "gamma_min");
        if (const Entry* e = entry("family", "gamma_max"))
            c.family.gamma_hi = to_double(*e, "family", "gamma_max");
        if (!(c.family.gamma_lo < c.family.gamma_hi))
            throw ValidationError("[family] gamma_min must be below gamma_max");
        if (const Entry* e = entry("family", "var_min")) {
            c.family.var_lo = to_double(*e, "family", "var_min");
            if (!(c.family.var_lo > 0.0)) fail(*e, "family", "var_min", "must be positive");
        }
        if (const Entry* e = entry("family", "var_max"))
            c.family.var_hi = to_double(*e, "family", "var_max");
        if (const Entry* e = entry("family", "k_max")) {
            c.family.k_max = static_cast<int>(to_int(*e, "family", "k_max"));
            if (c.family.k_max < 2) fail(*e, "family", "k_max", "must be >= 2");
        }
        if (const Entry* e = entry("family", "k_star")) {
            c.k_star = static_cast<int>(to_int(*e, "family", "k_star"));
            if (c.k_star < 1 || c.k_star > c.family.k_max)
                fail(*e, "family", "k_star", "must lie in [1, k_max]");
        }
        if (const Entry* e = entry("family", "theta_star")) {
            c.theta_star.k = c.k_star;
            c.theta_star.v = to_doubles(*e, "family", "theta_star");
            c.has_theta_star = true;
            try {
                validate_theta(c.family, c.theta_star);
            } catch (const InvalidTheta& err) {
                fail(*e, "family", "theta_star", err.what());
            }
        }
    }

    if (sections.count("prior")) {
        if (const Entry* e = entry("prior", "order")) {
            if (e->value != "uniform") {
                c.prior.order_weights = to_doubles(*e, "prior", "order");
                for (double w : c.prior.order_weights)
                    if (!(w > 0.0)) fail(*e, "prior", "order", "weights must be positive");
            }
        }
        if (const Entry* e = entry("prior", "within")) {
            if (e->value == "family-default")
                c.prior.within = PriorSpec::WithinOrder::family_default;
            else if (e->value == "uniform-box")
                c.prior.within = PriorSpec::WithinOrder::uniform_box;
            else if (e->value == "gaussian-coeff")
                c.prior.within = PriorSpec::WithinOrder::gaussian_coeff;
            else
                fail(*e, "prior", "within", "must be family-default, uniform-box or gaussian-coeff");
        }
        if (const Entry* e = entry("prior", "coeff_sd")) {
            c.prior.coeff_sd = to_double(*e, "prior", "coeff_sd");
            if (!(c.prior.coeff_sd > 0.0)) fail(*e, "prior", "coeff_sd", "must be positive");
        }
    }

    if (sections.count("experiment")) {
        if (const Entry* e = entry("experiment", "estimator"))
            c.estimator = estimator_from_name(e->value);
        if (const Entry* e = entry("experiment", "n_grid")) {
            for (double v : to_doubles(*e, "experiment", "n_grid")) {
                if (v < 1.0 || v != std::floor(v))
                    fail(*e, "experiment", "n_grid", "entries must be positive integers");
                c.n_grid.push_back(static_cast<std::size_t>(v));
            }
            for (std::size_t i = 1; i < c.n_grid.size(); ++i)
                if (c.n_grid[i] <= c.n_grid[i - 1])
                    fail(*e, "experiment", "n_grid", "must be strictly increasing");
        }
        if (const Entry* e = entry("experiment", "replications")) {
            c.replications = static_cast<int>(to_int(*e, "experiment", "replications"));
            if (c.replications < 1) fail(*e, "experiment", "replications", "must be >= 1");
        }
        if (const Entry* e = entry("experiment", "evidence")) {
            if (e->value == "quadrature")
                c.evidence = ExperimentConfig::EvidenceMethod::quadrature;
            else if (e->value == "importance")
                c.evidence = ExperimentConfig::EvidenceMethod::importance;
            else if (e->value == "auto")
                c.evidence = ExperimentConfig::EvidenceMethod::auto_select;
            else
                fail(*e, "experiment", "evidence", "must be quadrature, importance or auto");
        }
        if (const Entry* e = entry("experiment", "quadrature_nodes")) {
            c.quadrature_nodes = static_cast<int>(to_int(*e, "experiment", "quadrature_nodes"));
            if (c.quadrature_nodes < 16) fail(*e, "experiment", "quadrature_nodes", "must be >= 16");
        }
        if (const Entry* e = entry("experiment", "importance_draws")) {
            const long long d = to_int(*e, "experiment", "importance_draws");
            if (d < 1000) fail(*e, "experiment", "importance_draws", "must be >= 1000");
            c.importance_draws = static_cast<std::size_t>(d);
        }
    }

    if (sections.count("quadrature")) {
        if (const Entry* e = entry("quadrature", "nodes")) {
            c.scheme.nodes = static_cast<int>(to_int(*e, "quadrature", "nodes"));
            if (c.scheme.nodes < 16) fail(*e, "quadrature", "nodes", "must be >= 16");
        }
        if (const Entry* e = entry("quadrature", "radius")) {
            c.scheme.trunc_radius = to_double(*e, "quadrature", "radius");
            if (!(c.scheme.trunc_radius >= 8.0)) fail(*e, "quadrature", "radius", "must be >= 8");
        }
        if (const Entry* e = entry("quadrature", "rule")) {
            if (e->value == "gauss-legendre")
                c.scheme.rule = QuadratureScheme::Rule::gauss_legendre;
            else if (e->value == "trapezoid")
                c.scheme.rule = QuadratureScheme::Rule::trapezoid;
            else
                fail(*e, "quadrature", "rule", "must be gauss-legendre or trapezoid");
        }
    }

    if (sections.count("divergence")) {
        if (const Entry* e = entry("divergence", "f")) c.divergence_f = e->value;
        if (const Entry* e = entry("divergence", "g")) c.divergence_g = e->value;
        if (const Entry* e = entry("divergence", "alpha")) {
            c.divergence_alpha = to_double(*e, "divergence", "alpha");
            if (!(c.divergence_alpha > 0.0)) fail(*e, "divergence", "alpha", "must be positive");
        }
    }

    if (sections.count("data")) {
        if (const Entry* e = entry("data", "file")) c.data_file = e->value;
        if (const Entry* e = entry("data", "n")) {
            const long long n = to_int(*e, "data", "n");
            if (n < 1) fail(*e, "data", "n", "must be >= 1");
            c.data_n = static_cast<std::size_t>(n);
        }
    }

    if (sections.count("theory")) {
        if (const Entry* e = entry("theory", "checks")) c.checks = to_words(*e);
        if (const Entry* e = entry("theory", "delta")) {
            c.delta = to_double(*e, "theory", "delta");
            if (!(c.delta > 0.0)) fail(*e, "theory", "delta", "must be positive");
        }
        if (const Entry* e = entry("theory", "alpha")) {
            c.alpha = to_double(*e, "theory", "alpha");
            if (!(c.alpha > 0.0)) fail(*e, "theory", "alpha", "must be positive");
        }
        if (const Entry* e = entry("theory", "moment_bound")) {
            c.moment_bound = to_double(*e, "theory", "moment_bound");
            if (!(c.moment_bound >= 1.0)) fail(*e, "theory", "moment_bound", "must be >= 1");
        }
        if (const Entry* e = entry("theory", "tau")) {
            c.tau = to_double(*e, "theory", "tau");
            if (!(c.tau > 0.0 && c.tau < 0.5)) fail(*e, "theory", "tau", "must lie in (0, 1/2)");
        }
        if (const Entry* e = entry("theory", "s")) {
            c.s_margin = to_double(*e, "theory", "s");
            if (!(c.s_margin > 0.0)) fail(*e, "theory", "s", "must be positive");
        }
        if (const Entry* e = entry("theory", "beta1")) {
            c.beta1 = to_double(*e, "theory", "beta1");
            if (!(c.beta1 > 0.0)) fail(*e, "theory", "beta1", "must be positive");
        }
        if (const Entry* e = entry("theory", "beta2")) {
            c.beta2 = to_double(*e, "theory", "beta2");
            if (c.beta2 < 0.0) fail(*e, "theory", "beta2", "must be >= 0");
        }
        if (const Entry* e = entry("theory", "reps")) {
            c.reps = static_cast<int>(to_int(*e, "theory", "reps"));
            if (c.reps < 1) fail(*e, "theory", "reps", "must be >= 1");
        }
        if (const Entry* e = entry("theory", "n")) {
            const long long n = to_int(*e, "theory", "n");
            if (n < 1) fail(*e, "theory", "n", "must be >= 1");
            c.theory_n = static_cast<std::size_t>(n);
        }
    }

    if (sections.count("entropy")) {
        if (const Entry* e = entry("entropy", "k")) {
            c.entropy_k = static_cast<int>(to_int(*e, "entropy", "k"));
            if (c.entropy_k < 1) fail(*e, "entropy", "k", "must be >= 1");
        }
        if (const Entry* e = entry("entropy", "deltas")) {
            c.entropy_deltas = to_doubles(*e, "entropy", "deltas");
            for (double d : c.entropy_deltas)
                if (!(d > 0.0 && d < 1.0)) fail(*e, "entropy", "deltas", "entries must lie in (0, 1)");
        }
        if (const Entry* e = entry("entropy", "weight_min")) {
            c.weight_lo = to_double(*e, "entropy", "weight_min");
            if (!(c.weight_lo > 0.0 && c.weight_lo < 1.0))
                fail(*e, "entropy", "weight_min", "must lie in (0, 1)");
        }
    }

    if (sections.count("run")) {
        if (const Entry* e = entry("run", "seed")) {
            c.seed = static_cast<std::uint64_t>(to_int(*e, "run", "seed"));
            c.seed_from_config = true;
        }
        if (const Entry* e = entry("run", "workers")) {
            c.workers = static_cast<int>(to_int(*e, "run", "workers"));
            if (c.workers < 0) fail(*e, "run", "workers", "must be >= 0");
        }
    }

    if (c.has_family && !c.prior.order_weights.empty() &&
        c.prior.order_weights.size() != static_cast<std::size_t>(c.family.k_max))
        throw ValidationError("[prior] order: expected one weight per order up to k_max = " +
                              std::to_string(c.family.k_max));

    return c;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    if (c.has_family) {
        out << "[family]\n";
        out << "kind = " << family_kind_name(c.family.kind) << "\n";
        if (c.family.kind == FamilyKind::mixture)
            out << "component = "
                << (c.family.component == MixtureComponent::location ? "location" : "location-scale")
                << "\n";
        out << "sigma = " << fmt(c.family.sigma) << "\n";
        out << "gamma_min = " << fmt(c.family.gamma_lo) << "\n";
        out << "gamma_max = " << fmt(c.family.gamma_hi) << "\n";
        out << "var_min = " << fmt(c.family.var_lo) << "\n";
        out << "var_max = " << fmt(c.family.var_hi) << "\n";
        out << "k_max = " << c.family.k_max << "\n";
        out << "k_star = " << c.k_star << "\n";
        if (c.has_theta_star) {
            out << "theta_star =";
            for (double v : c.theta_star.v) out << " " << fmt(v);
            out << "\n";
        }
        out << "\n";
    }
    out << "[prior]\n";
    if (c.prior.order_weights.empty()) {
        out << "order = uniform\n";
    } else {
        out << "order =";
        for (double w : c.prior.order_weights) out << " " << fmt(w);
        out << "\n";
    }
    out << "within = "
        << (c.prior.within == PriorSpec::WithinOrder::family_default    ? "family-default"
            : c.prior.within == PriorSpec::WithinOrder::uniform_box     ? "uniform-box"
                                                                        : "gaussian-coeff")
        << "\n";
    out << "coeff_sd = " << fmt(c.prior.coeff_sd) << "\n\n";

    if (!c.n_grid.empty()) {
        out << "[experiment]\n";
        out << "estimator = " << estimator_name(c.estimator) << "\n";
        out << "n_grid =";
        for (std::size_t n : c.n_grid) out << " " << n;
        out << "\n";
        out << "replications = " << c.replications << "\n";
        out << "evidence = "
            << (c.evidence == ExperimentConfig::EvidenceMethod::quadrature   ? "quadrature"
                : c.evidence == ExperimentConfig::EvidenceMethod::importance ? "importance"
                                                                             : "auto")
            << "\n";
        out << "quadrature_nodes = " << c.quadrature_nodes << "\n";
        out << "importance_draws = " << c.importance_draws << "\n\n";
    }

    out << "[quadrature]\n";
    out << "nodes = " << c.scheme.nodes << "\n";
    out << "radius = " << fmt(c.scheme.trunc_radius) << "\n";
    out << "rule = "
        << (c.scheme.rule == QuadratureScheme::Rule::gauss_legendre ? "gauss-legendre" : "trapezoid")
        << "\n\n";

    out << "[divergence]\n";
    out << "f = " << c.divergence_f << "\n";
    out << "g = " << c.divergence_g << "\n";
    out << "alpha = " << fmt(c.divergence_alpha) << "\n\n";

    if (!c.data_file.empty() || c.data_n != 200) {
        out << "[data]\n";
        if (!c.data_file.empty()) out << "file = " << c.data_file << "\n";
        out << "n = " << c.data_n << "\n\n";
    }

    if (!c.checks.empty()) {
        out << "[theory]\n";
        out << "checks =";
        for (const std::string& check : c.checks) out << " " << check;
        out << "\n";
        out << "delta = " << fmt(c.delta) << "\n";
        out << "alpha = " << fmt(c.alpha) << "\n";
        out << "moment_bound = " << fmt(c.moment_bound) << "\n";
        out << "tau = " << fmt(c.tau) << "\n";
        out << "s = " << fmt(c.s_margin) << "\n";
        out << "beta1 = " << fmt(c.beta1) << "\n";
        out << "beta2 = " << fmt(c.beta2) << "\n";
        out << "reps = " << c.reps << "\n";
        out << "n = " << c.theory_n << "\n\n";
    }

    out << "[entropy]\n";
    out << "k = " << c.entropy_k << "\n";
    out << "deltas =";
    for (double d : c.entropy_deltas) out << " " << fmt(d);
    out << "\n";
    out << "weight_min = " << fmt(c.weight_lo) << "\n\n";

    out << "[run]\n";
    if (c.seed_from_config) out << "seed = " << c.seed << "\n";
    out << "workers = " << c.workers << "\n";
    return out.str();
}

Density parse_density_descriptor(const std::string& text) {
    std::istringstream in(text);
    std::string kind;
    in >> kind;
    std::vector<double> nums;
    double v;
    while (in >> v) nums.push_back(v);
    if (kind == "normal") {
        if (nums.size() != 2 || !(nums[1] > 0.0))
            throw ValidationError("density descriptor: expected 'normal MU SD' with SD > 0");
        return normal_density(nums[0], nums[1]);
    }
    if (kind == "mixture") {
        if (nums.empty() || nums.size() % 3 != 0)
            throw ValidationError("density descriptor: expected 'mixture w m s [w m s ...]'");
        std::vector<double> w, m, s;
        double total = 0.0;
        for (std::size_t i = 0; i < nums.size(); i += 3) {
            if (!(nums[i] > 0.0) || !(nums[i + 2] > 0.0))
                throw ValidationError("density descriptor: weights and sds must be positive");
            w.push_back(nums[i]);
            m.push_back(nums[i + 1]);
            s.push_back(nums[i + 2]);
            total += nums[i];
        }
        for (double& wi : w) wi /= total;
        return gaussian_mixture_density(w, m, s);
    }
    throw ValidationError("density descriptor: unknown kind '" + kind + "'");
}

} // namespace orderid
