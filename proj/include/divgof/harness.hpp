#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "divgof/dfree.hpp"
#include "divgof/estimation.hpp"
#include "divgof/gofprocess.hpp"
#include "divgof/measure.hpp"
#include "divgof/models.hpp"
#include "divgof/replicates.hpp"

namespace divgof {

enum class TestKind { single, ks, ks_star };
enum class Calibration { mc, gaussian, limit };

TestKind parse_test_kind(const std::string& name);
Calibration parse_calibration(const std::string& name);
std::string to_string(TestKind kind);
std::string to_string(Calibration cal);

// One statistic in a power study. ks_star ignores the kernel.
struct StudyTest {
    std::string label;
    std::string kernel = "pearson";
    bool estimated = false;
    TestKind test = TestKind::single;
    Calibration calibration = Calibration::mc;
};

struct AlternativeConfig {
    std::string direction = "null";  // null or a DirectionKind name, e.g. variance_perturbation
    double strength = 1.0;
    bool hhat = false;  // perturb along the estimation-free part of h only
    DirectionParams params;
};

struct RunConfig {
    std::string model = "constant";
    double low = 0.0;
    double high = 1.0;
    std::vector<double> theta{5.0};
    std::size_t K = 100;
    std::string estimator = "mle";
    AlternativeConfig alternative;
    std::vector<StudyTest> tests;
    std::size_t replicates = 10000;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    BootstrapMode bootstrap = BootstrapMode::classical;
    ParallelOptions parallel;

    void validate() const;
    MeanModel mean_model() const;
    Grid grid() const { return Grid(low, high, K); }
};

// JSON document with sections "model", "alternative", "tests", "run".
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

struct PowerReport {
    std::string label;
    std::string kernel;
    bool estimated = false;
    TestKind test = TestKind::single;
    Calibration calibration = Calibration::mc;
    double power = 0.0;
    double se = 0.0;
    double size = 0.0;  // rejection rate on the null sample
    double crit_low = 0.0;
    double crit_high = 0.0;
    double null_mean = 0.0;
    double null_var = 0.0;
    double alt_mean = 0.0;
    double alt_var = 0.0;
    std::size_t null_failures = 0;
    std::size_t alt_failures = 0;
};

struct PowerStudy {
    RunConfig config;
    std::vector<PowerReport> reports;
    // per test, statistic values in replicate order (NaN for failed fits)
    std::vector<std::vector<double>> null_values;
    std::vector<std::vector<double>> alt_values;
    double seconds = 0.0;
};

// Null and alternative replicates share one draw per replicate across all tests.
PowerStudy power_study(const RunConfig& cfg);

// ---- single-data-set tests

struct TestSpec {
    std::string model = "constant";
    std::string kernel = "wlinear";
    TestKind test = TestKind::single;
    Calibration calibration = Calibration::gaussian;  // gaussian | mc (bootstrap) | limit
    Functional functional = Functional::abs;
    BootstrapMode bootstrap = BootstrapMode::classical;
    std::size_t replicates = 1000;
    std::uint64_t seed = 1;
    ParallelOptions parallel;
};

struct TestReport {
    std::string model;
    std::string kernel;
    std::string method;
    std::vector<double> theta;
    double statistic = 0.0;
    double standardized = 0.0;  // statistic / sd for single Gaussian tests
    double p_value = 1.0;
    std::size_t replicates = 0;
    std::size_t failures = 0;
    double seconds = 0.0;
    std::string warning;
};

TestReport gof_test(const Grid& grid, const BinnedCounts& data, const TestSpec& spec);

struct Spectrum {
    Grid grid;
    BinnedCounts counts;
};

// CSV with header bin_low,bin_high,count.
Spectrum ingest_spectrum(const std::string& path);
Spectrum parse_spectrum(std::istream& in, const std::string& source = "<stream>");
void write_spectrum(std::ostream& out, const Grid& grid, const BinnedCounts& counts);

// Runs each test on one spectrum; the model is refitted per test.
std::vector<TestReport> chandra_analysis(const Spectrum& spectrum, const std::vector<TestSpec>& tests);

// Synthetic stand-in on the 14.6-17.4 grid with 750 bins: constant level c.
Spectrum synthetic_spectrum(double c, std::uint64_t seed, std::size_t K = 750);

// ---- output

void write_power_table(std::ostream& out, const PowerStudy& study);
void write_power_csv(std::ostream& out, const PowerStudy& study);
void write_test_table(std::ostream& out, const std::vector<TestReport>& reports);
void write_test_csv(std::ostream& out, const std::vector<TestReport>& reports);

// Two-sample Kolmogorov distance; NaNs are dropped.
double kolmogorov_distance(std::vector<double> a, std::vector<double> b);
// Distance between an empirical sample and a CDF.
double kolmogorov_distance(std::vector<double> a, const std::function<double(double)>& cdf);

}  // namespace divgof
