#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "orderid/config.hpp"
#include "orderid/errors.hpp"
#include "orderid/report.hpp"

using namespace orderid;

namespace {

const char* kMinimalMixture = R"(
# minimal mixture run
[family]
kind = mixture
k_star = 2
theta_star = 0.5 -2.0 2.0
)";

ErrorCurve tiny_curve() {
    ErrorCurve curve;
    for (std::size_t n : {50u, 100u, 200u}) {
        ErrorCurve::Row row;
        row.n = n;
        row.replications = 100;
        row.under = static_cast<int>(60 / (n / 50));
        row.over = 5;
        row.correct = row.replications - row.under - row.over;
        curve.rows.push_back(row);
    }
    return curve;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("config parsing") {
    SUBCASE("minimal mixture config fills the documented defaults") {
        const RunConfig c = parse_config(kMinimalMixture);
        CHECK(c.has_family);
        CHECK(c.family.kind == FamilyKind::mixture);
        CHECK(c.family.component == MixtureComponent::location);
        CHECK(c.family.k_max == 3);
        CHECK(c.family.gamma_lo == -3.0);
        CHECK(c.family.gamma_hi == 3.0);
        CHECK(c.k_star == 2);
        CHECK(c.theta_star.v.size() == 3);
        CHECK(c.prior.within == PriorSpec::WithinOrder::family_default);
        CHECK(c.scheme.nodes == 256);
        CHECK(c.scheme.trunc_radius == 8.0);
        CHECK(c.seed == 42);
        CHECK(c.replications == 100);
    }

    SUBCASE("violations name the line, key and constraint") {
        const char* bad = "[experiment]\nreplications = 0\n";
        try {
            parse_config(bad);
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            const std::string what = e.what();
            CHECK(what.find("replications") != std::string::npos);
            CHECK(what.find("line 2") != std::string::npos);
            CHECK(what.find(">= 1") != std::string::npos);
        }
    }

    SUBCASE("unknown keys and sections are rejected") {
        CHECK_THROWS_AS(parse_config("[family]\nbogus = 1\n"), ValidationError);
        CHECK_THROWS_AS(parse_config("[nonsense]\nx = 1\n"), ValidationError);
        CHECK_THROWS_AS(parse_config("key_without_section = 1\n"), ParseError);
        CHECK_THROWS_AS(parse_config("[family\nkind = mixture\n"), ParseError);
    }

    SUBCASE("serialize and reparse round-trips") {
        const char* full = R"(
[family]
kind = fourier-regression
sigma = 0.5
gamma_min = -3
gamma_max = 3
k_max = 3
k_star = 2
theta_star = 1.0 0.5

[experiment]
estimator = local
n_grid = 50 100 200
replications = 25
evidence = importance
importance_draws = 1500

[run]
seed = 7
workers = 2
)";
        const RunConfig a = parse_config(full);
        const RunConfig b = parse_config(serialize_config(a));
        CHECK(serialize_config(a) == serialize_config(b));
        CHECK(b.family.sigma == a.family.sigma);
        CHECK(b.n_grid == a.n_grid);
        CHECK(b.replications == 25);
        CHECK(b.importance_draws == 1500);
        CHECK(b.seed == 7);
        CHECK(b.estimator == ExperimentConfig::Estimator::local);
    }

    SUBCASE("theta_star is validated against the family layout") {
        CHECK_THROWS_AS(parse_config("[family]\nkind = mixture\nk_star = 2\ntheta_star = 0.5\n"),
                        ValidationError);
    }

    SUBCASE("explicit order weights must cover every order") {
        const char* text = "[family]\nkind = mixture\nk_max = 3\nk_star = 2\n"
                           "theta_star = 0.5 -2 2\n\n[prior]\norder = 0.5 0.5\n";
        CHECK_THROWS_AS(parse_config(text), ValidationError);
    }
}

TEST_CASE("density descriptors") {
    const Density f = parse_density_descriptor("normal 0 1");
    CHECK(f.density({0.0, 0.0}) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
    const Density mix = parse_density_descriptor("mixture 1 -2 1 1 2 1");
    CHECK(mix.density({-2.0, 0.0}) ==
          doctest::Approx(0.5 / std::sqrt(2.0 * M_PI) * (1.0 + std::exp(-8.0))));
    CHECK_THROWS_AS(parse_density_descriptor("cauchy 0 1"), ValidationError);
    CHECK_THROWS_AS(parse_density_descriptor("normal 0"), ValidationError);
    CHECK_THROWS_AS(parse_density_descriptor("mixture 1 0"), ValidationError);
}

TEST_CASE("error-curve CSV schema") {
    const std::string csv = error_curve_csv(tiny_curve());
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "n,replications,under_count,over_count,correct_count");
    std::string row;
    int rows = 0;
    while (std::getline(lines, row))
        if (!row.empty()) ++rows;
    CHECK(rows == 3);
    CHECK(csv.find("50,100,60,5,35") != std::string::npos);
}

namespace {

// tiny well-formedness scan: every element closes, one root, quoted attributes
bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t pos = text.find('<');
    while (pos != std::string::npos) {
        const std::size_t end = text.find('>', pos);
        if (end == std::string::npos) return false;
        std::string tag = text.substr(pos + 1, end - pos - 1);
        if (!tag.empty() && tag.front() == '?') {
            // declaration
        } else if (!tag.empty() && tag.front() == '/') {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (!tag.empty() && tag.back() == '/') {
            // self-closing
        } else {
            const std::size_t space = tag.find_first_of(" \t\n");
            stack.push_back(space == std::string::npos ? tag : tag.substr(0, space));
        }
        pos = text.find('<', end);
    }
    return stack.empty();
}

} // namespace

TEST_CASE("SVG plots") {
    const ErrorCurve curve = tiny_curve();

    SUBCASE("well-formed with fits and legend values") {
        RateFit under = fit_exponential_rate(curve, ErrorKind::under);
        const std::string path = "/tmp/orderid_test_plot.svg";
        emit_plot(curve, {{ErrorKind::under, under}}, path);
        const std::string svg = slurp(path);
        CHECK(svg.rfind("<?xml", 0) == 0);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(xml_well_formed(svg));
        // legend carries the fitted rate to 4 significant digits
        char expected[32];
        std::snprintf(expected, sizeof(expected), "%.4g", under.rate);
        CHECK(svg.find(expected) != std::string::npos);
        std::remove(path.c_str());
    }

    SUBCASE("single-point curves draw markers without fit lines") {
        ErrorCurve point;
        point.rows.push_back({100, 50, 3, 1, 46, 0});
        const std::string path = "/tmp/orderid_test_point.svg";
        emit_plot(point, {}, path);
        const std::string svg = slurp(path);
        CHECK(svg.find("<circle") != std::string::npos);
        CHECK(svg.find("<polyline") == std::string::npos);
        std::remove(path.c_str());
    }
}

TEST_CASE("dataset round trip") {
    Dataset data;
    RandomStream stream(3, 3);
    for (int i = 0; i < 25; ++i) data.points.push_back({stream.normal(), stream.normal()});
    const std::string path = "/tmp/orderid_test_data.csv";
    write_dataset_csv(path, data, 2);
    const Dataset back = load_dataset_csv(path, 2);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back.points[i].x == data.points[i].x);
        CHECK(back.points[i].y == data.points[i].y);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_dataset_csv("/tmp/orderid_missing.csv", 1), IoError);
}

TEST_CASE("report JSON carries the reproduction inputs") {
    const RunConfig config = parse_config(kMinimalMixture);
    const std::string path = "/tmp/orderid_test_report.json";
    nlohmann::json results;
    results["value"] = 0.5;
    write_report(path, "divergence", config, results, 1.25);
    const std::string text = slurp(path);
    nlohmann::json parsed = nlohmann::json::parse(text);
    CHECK(parsed["command"] == "divergence");
    CHECK(parsed["version"] == kVersion);
    CHECK(parsed["seed"] == 42);
    CHECK(parsed["results"]["value"] == 0.5);
    // the echoed inputs reparse to the same configuration
    const RunConfig echoed = parse_config(parsed["inputs"].get<std::string>());
    CHECK(serialize_config(echoed) == serialize_config(config));
    std::remove(path.c_str());
}
