#include <doctest.h>

#include <cmath>
#include <limits>

#include "divgof/gofprocess.hpp"
#include "divgof/harness.hpp"
#include "divgof/statistics.hpp"
#include "test_util.hpp"

using namespace divgof;
using doctest::Approx;
using testutil::kind_of;

TEST_CASE("scanning family") {
    const auto scan = ScanningFamily::left_to_right(4);
    CHECK(scan.t(2) == 0.5);
    CHECK(scan.mask(3) == std::vector<char>{1, 1, 1, 0});
    const ScanningFamily rev({3, 2, 1, 0});
    CHECK(rev.mask(1) == std::vector<char>{0, 0, 0, 1});
    CHECK(kind_of([] { ScanningFamily({0, 0, 1}); }) == ErrorKind::validation);
}

TEST_CASE("partial sums on a three-bin fixture") {
    const MeasureContext ctx(Grid(0, 1, 3), {2.0, 4.0, 1.0});
    const BinnedCounts data({3, 2, 4});
    const auto S = partial_sums(weighted_linear_kernel(), data, ctx, ScanningFamily::left_to_right(3));
    // (nu - m)/m = 0.5, -0.5, 3
    const double r = 1.0 / std::sqrt(3.0);
    REQUIRE(S.size() == 4);
    CHECK(S[0] == 0.0);
    CHECK(S[1] == Approx(0.5 * r));
    CHECK(S[2] == Approx(0.0).scale(1.0));
    CHECK(S[3] == Approx(3.0 * r));
    CHECK(S[3] == Approx(evaluate_statistic(weighted_linear_kernel(), data, ctx)));
    for (double v : partial_sums(zero_kernel(), data, ctx, ScanningFamily::left_to_right(3))) CHECK(v == 0.0);
}

TEST_CASE("KS is zero when counts equal the fitted constant") {
    const Grid grid(0, 1, 6);
    const BinnedCounts data({4, 4, 4, 4, 4, 4});
    const FitResult f = fit(EstimatorSpec::mle(), data, grid, make_family("constant", 0, 1));
    CHECK(ks_statistic(weighted_linear_kernel(), data, f.model.context(grid), ScanningFamily::left_to_right(6)) < 1e-15);
}

TEST_CASE("KS on the synthetic exponential fixture matches independent recomputation") {
    const Spectrum s = ingest_spectrum(std::string(DIVGOF_TEST_DATA) + "/synthetic_texp.csv");
    const FitResult f = fit(EstimatorSpec::mle(), s.counts, s.grid, make_family("texp", 0, 1));
    const MeasureContext ctx = f.model.context(s.grid);
    const auto scan = ScanningFamily::left_to_right(s.grid.size());
    CHECK(ks_statistic(weighted_linear_kernel(), s.counts, ctx, scan) == Approx(0.13825710529289554032).epsilon(1e-8));
    CHECK(partial_sums(weighted_linear_kernel(), s.counts, ctx, scan).back() ==
          Approx(0.00091409666452036597805).epsilon(1e-5));
}

TEST_CASE("functionals") {
    const std::vector<double> x{0.0, -2.0, 1.0, -0.5};
    CHECK(apply_functional(Functional::ks, x) == 2.0);
    CHECK(apply_functional(Functional::abs, x) == 0.5);
    CHECK(apply_functional(Functional::upper, x) == -0.5);
    CHECK(apply_functional(Functional::lower, x) == 0.5);
    CHECK(kind_of([] { parse_functional("cvm"); }) == ErrorKind::usage);
}

TEST_CASE("bootstrap p-values") {
    const std::vector<double> null{0.1, 0.5, 0.9, 1.3};
    CHECK(bootstrap_p(null, std::numeric_limits<double>::infinity()) == Approx(1.0 / 5.0));
    CHECK(bootstrap_p(null, 0.0) == 1.0);
    double prev = 2.0;
    for (double obs = 0.0; obs < 2.0; obs += 0.05) {
        const double p = bootstrap_p(null, obs);
        CHECK(p <= prev);
        prev = p;
    }
}

namespace {

struct Ex4 {
    MeanModel model{make_family("tnorm:0.04", 0, 1), {5.0, 0.5}};
    Grid grid{0, 1, 100};
    ScanningFamily scan = ScanningFamily::left_to_right(100);
};

}  // namespace

TEST_CASE("bootstrap is reproducible and independent of the schedule") {
    const Ex4 e;
    BootstrapPlan plan;
    plan.replicates = 300;
    plan.seed = 17;
    for (BootstrapMode mode : {BootstrapMode::classical, BootstrapMode::projected}) {
        plan.mode = mode;
        plan.parallel.exec = Execution::serial;
        const auto a = bootstrap_pvalue(plan, 0.5, e.model, e.grid, EstimatorSpec::mle(), weighted_linear_kernel(), e.scan);
        plan.parallel.exec = Execution::parallel;
        plan.parallel.workers = 3;
        const auto b = bootstrap_pvalue(plan, 0.5, e.model, e.grid, EstimatorSpec::mle(), weighted_linear_kernel(), e.scan);
        CHECK(a.null_values == b.null_values);
        CHECK(a.p_value == b.p_value);
        CHECK_FALSE(a.warning.empty());
    }
}

TEST_CASE("projected and classical bootstraps agree") {
    const Ex4 e;
    BootstrapPlan plan;
    plan.replicates = 4000;
    plan.seed = 5;
    plan.mode = BootstrapMode::classical;
    const auto c = bootstrap_pvalue(plan, 1.0, e.model, e.grid, EstimatorSpec::mle(), weighted_linear_kernel(), e.scan);
    plan.mode = BootstrapMode::projected;
    plan.seed = 6;
    const auto p = bootstrap_pvalue(plan, 1.0, e.model, e.grid, EstimatorSpec::mle(), weighted_linear_kernel(), e.scan);
    CHECK(c.failures == 0);
    // two-sample distance at n = 4000 each has a 99.9% point near 0.044
    CHECK(kolmogorov_distance(c.null_values, p.null_values) < 0.045);
}

TEST_CASE("partial sums scale like Brownian motion under the null") {
    const std::size_t K = 1000, R = 20000;
    const MeanModel model(make_family("constant", 0, 1), {5.0});
    const Grid grid(0, 1, K);
    const MeasureContext ctx = model.context(grid);
    const Kernel g = pearson_kernel();
    const double g2 = norm2(g, ctx);
    const auto scan = ScanningFamily::left_to_right(K);
    const auto means = model.bin_means(grid);
    PoissonSampler sampler(means);
    BinnedCounts data;
    const std::vector<std::size_t> probe{250, 500, 1000};
    std::vector<double> s(probe.size(), 0.0), s2(probe.size(), 0.0);
    for (std::size_t i = 0; i < R; ++i) {
        Rng rng = replicate_rng(99, i);
        sampler.draw(rng, data);
        const auto S = partial_sums(g, data, ctx, scan);
        for (std::size_t j = 0; j < probe.size(); ++j) {
            s[j] += S[probe[j]];
            s2[j] += S[probe[j]] * S[probe[j]];
        }
    }
    for (std::size_t j = 0; j < probe.size(); ++j) {
        const double t = double(probe[j]) / K;
        const double mean = s[j] / R;
        const double var = s2[j] / R - mean * mean;
        CAPTURE(t);
        CHECK(var == Approx(t * g2).epsilon(0.05));
    }
}

TEST_CASE("bootstrap plan validation") {
    const Ex4 e;
    BootstrapPlan plan;
    plan.replicates = 0;
    CHECK(kind_of([&] {
              bootstrap_pvalue(plan, 0.0, e.model, e.grid, EstimatorSpec::mle(), pearson_kernel(), e.scan);
          }) == ErrorKind::validation);
    CHECK(kind_of([] { parse_bootstrap_mode("wild"); }) == ErrorKind::usage);
}
