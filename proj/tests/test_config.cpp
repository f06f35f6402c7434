#include <doctest.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <string>

#include "mrct/config.hpp"

using namespace mrct;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/mrct_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

bool has_fatal(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.fatal) return true;
    return false;
}

std::string messages(const std::vector<Diagnostic>& diags) {
    std::string all;
    for (const auto& d : diags) all += d.message + "\n";
    return all;
}

}  // namespace

TEST_CASE("a complete design config loads") {
    TempFile f("design.json", R"({
      "schema_version": 1,
      "units": {"time": "months"},
      "design": {"alpha": 0.025, "beta": 0.1, "pi": 0.5, "ell": 1.0,
                 "fractions": [0.3333333333, 0.3333333333, 0.3333333334]},
      "effects": {"delta": 0.25, "tau": 0.05},
      "regions": [{"id": "r1", "omega": 2.0}, {"id": "r2", "omega": 2.0},
                  {"id": "r3", "omega": 2.0}]
    })");
    const auto cfg = load_config(f.path);
    REQUIRE(cfg.design.has_value());
    CHECK(cfg.design->beta == 0.1);
    CHECK(cfg.effects->tau2 == doctest::Approx(0.0025));
    CHECK(cfg.regions.size() == 3);
    CHECK(cfg.time_unit == "months");
    const auto diags = validate_config(f.path);
    CHECK_FALSE(has_fatal(diags));
    CHECK(messages(diags).find("ok") != std::string::npos);
}

TEST_CASE("fraction sums are diagnosed") {
    TempFile f("fractions.json", R"({
      "design": {"beta": 0.1, "fractions": [0.5, 0.6]},
      "effects": {"delta": 0.25, "tau2": 0.0025}
    })");
    const auto diags = validate_config(f.path);
    CHECK(has_fatal(diags));
    CHECK(messages(diags).find("sum to 1.1") != std::string::npos);
}

TEST_CASE("feasibility preview names the violated bound") {
    TempFile f("infeasible.json", R"({
      "design": {"beta": 0.1, "fractions": [0.25, 0.25, 0.25, 0.25]},
      "effects": {"delta": 1.0, "tau2": 0.49},
      "regions": [{"omega": 2}, {"omega": 2}, {"omega": 2}, {"omega": 2}]
    })");
    const auto diags = validate_config(f.path);
    CHECK(has_fatal(diags));
    CHECK(messages(diags).find("sqrt(R)/(z_{1-alpha}+z_{1-beta})") != std::string::npos);
}

TEST_CASE("Table 5 config validates with an omega preview") {
    TempFile f("table5.json", R"({
      "design": {"alpha": 0.025, "beta": 0.1, "pi": 0.5, "margin": 0.2623643,
                 "fractions": [0.25, 0.25, 0.25, 0.25]},
      "effects": {"delta": 0.0, "tau2": 0.0077},
      "endpoint": {"kind": "survival_ph", "lambda0": 0.018,
                   "hazard_ratios": [1, 1, 1, 1], "follow_up": 3.8}
    })");
    const auto diags = validate_config(f.path);
    CHECK_FALSE(has_fatal(diags));
    CHECK(messages(diags).find("omega preview") != std::string::npos);
    CHECK(messages(diags).find("30.25") != std::string::npos);
}

TEST_CASE("parse errors carry a line anchor") {
    TempFile f("broken.json", "{\n  \"design\": {\n  \"oops\"\n}");
    try {
        (void)load_config(f.path);
        FAIL("expected schema_error");
    } catch (const schema_error& e) {
        const std::string msg = e.what();
        const auto pos = msg.find(".json:");
        REQUIRE(pos != std::string::npos);
        CHECK(std::isdigit(static_cast<unsigned char>(msg[pos + 6])));
    }
}

TEST_CASE("unsupported schema versions are rejected") {
    TempFile f("version.json", R"({"schema_version": 99})");
    CHECK_THROWS_AS((void)load_config(f.path), schema_error);
}

TEST_CASE("endpoint specs parse for every kind") {
    TempFile f("endpoint.json", R"({
      "design": {"beta": 0.2, "fractions": [0.25, 0.25, 0.25, 0.25]},
      "endpoint": {"kind": "survival_rmst", "horizon": 80,
        "censoring": {"kind": "uniform", "lo": 0, "hi": 240},
        "regions": [
          {"control": {"model": "piecewise", "early": 0.07, "late": 0.03, "change": 10},
           "treatment": {"model": "piecewise", "early": 0.02, "late": 0.03, "change": 10}},
          {"control": {"model": "piecewise", "early": 0.07, "late": 0.04, "change": 10},
           "treatment": {"model": "piecewise", "early": 0.03, "late": 0.04, "change": 10}},
          {"control": {"model": "weibull", "shape": 1.6, "scale": 30},
           "treatment": {"model": "weibull", "shape": 1.0, "scale": 50}},
          {"control": {"model": "exponential", "rate": 0.05},
           "treatment": {"model": "exponential", "rate": 0.035}}
        ]},
      "simulation": {"m_design": 5, "m_verify": 10, "master_seed": 1}
    })");
    const auto cfg = load_config(f.path);
    REQUIRE(cfg.endpoint_specs.size() == 4);
    CHECK(cfg.endpoint_specs[0].kind == EndpointSpec::Kind::survival_rmst);
    CHECK(cfg.endpoint_specs[0].true_effect() == doctest::Approx(11.3).epsilon(0.001));
    CHECK(cfg.has_simulation);
    CHECK(cfg.m_design == 5);
}

TEST_CASE("analysis summaries accept hr+events, estimate+variance, and csv") {
    TempFile subjects("subjects.csv",
                      "time,event,group\n1.0,1,0\n2.0,1,1\n3.5,0,0\n4.0,1,1\n5.0,1,0\n6.0,0,1\n");
    TempFile f("analysis.json", std::string(R"({
      "analysis": {"alpha": 0.05, "pi": 0.5, "margin": 0.2623643, "scale": "log_hr",
        "summaries": [
          {"region": "EU", "hr": 0.82, "events": 459},
          {"region": "NA", "estimate": -0.00995, "variance": 0.009346},
          {"region": "mixed", "subjects_csv": ")") +
                                         subjects.path + R"(", "method": "cox"}
        ]}
    })");
    const auto cfg = load_config(f.path);
    REQUIRE(cfg.analysis.has_value());
    REQUIRE(cfg.analysis->summaries.size() == 3);
    CHECK(cfg.analysis->summaries[0].d_hat == doctest::Approx(-std::log(0.82)));
    CHECK(cfg.analysis->summaries[0].sigma2 == doctest::Approx(4.0 / 459));
    CHECK(cfg.analysis->summaries[2].sigma2 > 0.0);
}

TEST_CASE("subject csv loader rejects malformed rows") {
    TempFile bad("bad.csv", "time,event,group\n1.0,not_a_number,0\n");
    CHECK_THROWS_AS((void)load_subjects_csv(bad.path), schema_error);
    CHECK_THROWS_AS((void)load_subjects_csv("/nonexistent/file.csv"), schema_error);
}
