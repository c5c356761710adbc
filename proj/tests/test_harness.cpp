#include <doctest.h>

#include <cmath>
#include <sstream>

#include "divgof/harness.hpp"
#include "divgof/statistics.hpp"
#include "test_util.hpp"

using namespace divgof;
using doctest::Approx;
using testutil::kind_of;

namespace {

Spectrum parse(const std::string& text) {
    std::istringstream in(text);
    return parse_spectrum(in, "fixture");
}

std::string message_of(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("spectrum ingestion") {
    const Spectrum s = parse("bin_low,bin_high,count\n1.0,1.5,3\n1.5,2.0,0\n2.0,2.5,7\n");
    CHECK(s.grid.size() == 3);
    CHECK(s.grid.low() == 1.0);
    CHECK(s.grid.high() == 2.5);
    CHECK(s.counts.total() == 10);

    CHECK(message_of("bin_low,bin_high,count\n1.0,1.5,3\n1.6,2.1,0\n").find("row 3") != std::string::npos);
    CHECK(message_of("bin_low,bin_high,count\n1.0,1.5,3\n1.5,2.5,0\n").find("unequal") != std::string::npos);
    CHECK(message_of("bin_low,bin_high,count\n1.0,1.5,x\n").find("row 2") != std::string::npos);
    CHECK(message_of("low,high,n\n").find("header") != std::string::npos);
    CHECK(kind_of([] { parse("bin_low,bin_high,count\n1.0,1.5,-2\n"); }) == ErrorKind::validation);
    CHECK(kind_of([] { parse("bin_low,bin_high,count\n"); }) == ErrorKind::ingest);
    CHECK(kind_of([] { ingest_spectrum("/nonexistent/spectrum.csv"); }) == ErrorKind::ingest);

    std::ostringstream out;
    write_spectrum(out, s.grid, s.counts);
    const Spectrum back = parse(out.str());
    CHECK(back.counts.values()[2] == 7);
    CHECK(back.grid.high() == 2.5);
}

TEST_CASE("config parsing and validation") {
    const RunConfig cfg = parse_config(R"({
        "model": {"family": "texp", "theta": [5, 1.5], "K": 50},
        "alternative": {"direction": "gamma_shape", "strength": 2},
        "tests": [{"kernel": "pearson", "estimated": true}, {"kernel": "wlinear", "test": "ks", "estimated": true}],
        "run": {"replicates": 500, "seed": 9, "alpha": 0.1, "serial": true}
    })");
    CHECK(cfg.model == "texp");
    CHECK(cfg.K == 50);
    CHECK(cfg.tests.size() == 2);
    CHECK(cfg.tests[1].test == TestKind::ks);
    CHECK(cfg.parallel.exec == Execution::serial);
    CHECK(cfg.alternative.strength == 2.0);
    CHECK_NOTHROW(cfg.validate());

    const RunConfig round = parse_config(config_to_json(cfg));
    CHECK(config_to_json(round) == config_to_json(cfg));

    RunConfig bad = cfg;
    bad.alpha = 1.5;
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::validation);
    bad = cfg;
    bad.replicates = 50;
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::validation);
    bad = cfg;
    bad.tests[1].calibration = Calibration::gaussian;
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::validation);
    CHECK(kind_of([] { parse_config("{ not json"); }) == ErrorKind::validation);
    CHECK(kind_of([] { parse_config(R"({"tests": [{"test": "cvm"}]})"); }) == ErrorKind::usage);
}

TEST_CASE("size equals level when the alternative is the null") {
    RunConfig cfg;
    cfg.model = "texp";
    cfg.theta = {5.0, 1.5};
    cfg.K = 100;
    cfg.replicates = 20000;
    cfg.seed = 31;
    cfg.tests = {{"pearson known gaussian", "pearson", false, TestKind::single, Calibration::gaussian},
                 {"wlinear mle", "wlinear", true},
                 {"ks star", "", true, TestKind::ks_star, Calibration::limit}};
    const PowerStudy st = power_study(cfg);
    for (const auto& r : st.reports) {
        CAPTURE(r.label);
        // the null and alternative samples are independent draws from the same model
        const double se = std::sqrt(0.05 * 0.95 / 20000);
        if (r.calibration == Calibration::mc) {
            CHECK(std::abs(r.power - 0.05) < 3 * se * std::sqrt(2.0) + 1e-3);
        } else {
            CHECK(r.power > 0.04);
            CHECK(r.power < 0.06);
        }
    }
}

TEST_CASE("power studies do not depend on the worker count") {
    RunConfig cfg;
    cfg.model = "tnorm:0.04";
    cfg.theta = {5.0, 0.5};
    cfg.K = 40;
    cfg.replicates = 400;
    cfg.alternative.direction = "variance_perturbation";
    cfg.tests = {{"pearson", "pearson", true}, {"ks", "wlinear", true, TestKind::ks}};
    cfg.parallel.exec = Execution::serial;
    const PowerStudy a = power_study(cfg);
    cfg.parallel.exec = Execution::parallel;
    cfg.parallel.workers = 4;
    const PowerStudy b = power_study(cfg);
    CHECK(a.null_values == b.null_values);
    CHECK(a.alt_values == b.alt_values);
    for (std::size_t i = 0; i < a.reports.size(); ++i) CHECK(a.reports[i].power == b.reports[i].power);
    std::ostringstream table, csv;
    write_power_table(table, a);
    write_power_csv(csv, a);
    CHECK(table.str().find("pearson") != std::string::npos);
    CHECK(csv.str().rfind("label,kernel", 0) == 0);
}

TEST_CASE("single-spectrum tests") {
    const Spectrum s = synthetic_spectrum(6.947, 3);
    CHECK(s.grid.size() == 750);
    TestSpec spec;
    spec.model = "constant";
    spec.kernel = "pearson";
    const TestReport r = gof_test(s.grid, s.counts, spec);
    const double c = double(s.counts.total()) / 750.0;
    CHECK(r.theta[0] == c);
    // Pearson at c-hat: (1/sqrt(K)) sum ((nu - c)^2/c - 1), variance 2
    double v = 0.0;
    for (int n : s.counts.values()) v += (n - c) * (n - c) / c - 1.0;
    v /= std::sqrt(750.0);
    CHECK(r.statistic == Approx(v).epsilon(1e-12));
    CHECK(r.p_value == Approx(std::erfc(std::abs(v) / std::sqrt(2.0) / std::sqrt(2.0))).epsilon(1e-9));

    TestSpec ks;
    ks.model = "linear";
    ks.kernel = "wlinear";
    ks.test = TestKind::ks;
    ks.calibration = Calibration::mc;
    ks.replicates = 200;
    const TestReport rk = gof_test(s.grid, s.counts, ks);
    CHECK(rk.p_value > 0.0);
    CHECK(rk.p_value <= 1.0);
    CHECK(rk.replicates == 200);

    TestSpec star;
    star.model = "piecewise:15.6";
    star.test = TestKind::ks_star;
    star.calibration = Calibration::limit;
    const auto reports = chandra_analysis(s, {star});
    CHECK(reports.size() == 1);
    CHECK(reports[0].method.find("p=2") != std::string::npos);
}

TEST_CASE("Kolmogorov distances") {
    CHECK(kolmogorov_distance({1, 2, 3, 4}, {1, 2, 3, 4}) == 0.0);
    CHECK(kolmogorov_distance({1, 2}, {3, 4}) == 1.0);
    CHECK(kolmogorov_distance({0.25, 0.75}, [](double x) { return x; }) == Approx(0.25));
}

TEST_CASE("estimation and linearization do not lose power on the variance perturbation") {
    RunConfig cfg;
    cfg.model = "tnorm:0.04";
    cfg.theta = {5.0, 0.5};
    cfg.K = 100;
    cfg.replicates = 20000;
    cfg.seed = 77;
    cfg.alternative.direction = "variance_perturbation";
    cfg.tests = {{"pearson", "pearson", false},        {"wlinear", "wlinear", false},
                 {"pearson mle", "pearson", true},     {"wlinear mle", "wlinear", true},
                 {"spectral", "spectral:1", false},    {"spectral par", "parallel:spectral:1", false},
                 {"spectral mle", "spectral:1", true}, {"spectral par mle", "parallel:spectral:1", true}};
    const PowerStudy st = power_study(cfg);
    auto at_least = [&](std::size_t hi, std::size_t lo) {
        const auto& a = st.reports[hi];
        const auto& b = st.reports[lo];
        CAPTURE(a.label);
        CAPTURE(b.label);
        CHECK(a.power >= b.power - 2.0 * std::hypot(a.se, b.se));
    };
    // estimated parameters versus known parameters
    at_least(2, 0);
    at_least(3, 1);
    // parallel part versus the full kernel
    at_least(1, 0);
    at_least(3, 2);
    at_least(5, 4);
    at_least(7, 6);
}
