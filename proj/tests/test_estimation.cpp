#include <doctest.h>

#include <cmath>
#include <fstream>

#include "divgof/estimation.hpp"
#include "divgof/harness.hpp"
#include "divgof/statistics.hpp"
#include "test_util.hpp"

using namespace divgof;
using doctest::Approx;
using testutil::kind_of;

namespace {

BinnedCounts draw(const MeanModel& model, const Grid& grid, std::uint64_t seed) {
    Rng rng = replicate_rng(seed, 0);
    const auto m = model.bin_means(grid);
    return sample_counts(m, rng);
}

}  // namespace

TEST_CASE("constant model MLE is the mean count") {
    const Grid grid(0, 1, 7);
    const BinnedCounts data({3, 0, 9, 4, 4, 1, 6});
    const FitResult f = fit(EstimatorSpec::mle(), data, grid, make_family("constant", 0, 1));
    CHECK(f.converged);
    CHECK(f.theta[0] == 27.0 / 7.0);
}

TEST_CASE("truncated exponential MLE on the synthetic fixture") {
    const Spectrum s = ingest_spectrum(std::string(DIVGOF_TEST_DATA) + "/synthetic_texp.csv");
    const FitResult f = fit(EstimatorSpec::mle(), s.counts, s.grid, make_family("texp", 0, 1));
    REQUIRE(f.converged);
    CHECK(f.theta[0] == Approx(6.7).epsilon(1e-12));
    CHECK(f.theta[1] == Approx(1.2633949995867136136).epsilon(1e-9));
    CHECK(f.residual < 1e-10);
}

TEST_CASE("estimating equations vanish at the solution") {
    const Grid grid(0, 1, 80);
    const MeanModel truth(make_family("tnorm:0.04", 0, 1), {5.0, 0.5});
    const BinnedCounts data = draw(truth, grid, 3);
    for (const auto& spec : {EstimatorSpec::mle(), EstimatorSpec::least_squares(),
                             EstimatorSpec::optimal_gamma(spectral_kernel(1)), EstimatorSpec::weighted(linear_stat_kernel())}) {
        CAPTURE(spec.label());
        const FitResult f = solve(spec, data, grid, truth);
        REQUIRE(f.converged);
        const MeasureContext ctx = f.model.context(grid);
        const Eigen::VectorXd v = evaluate_statistics(estimating_kernels(spec, ctx), data, ctx);
        CHECK(v.cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("orthonormal score") {
    const MeanModel model(make_family("texp", 0, 1), {5.0, 1.5});
    const MeasureContext ctx = model.context(Grid(0, 1, 40));
    const Eigen::MatrixXd I = fisher_information(ctx);
    CHECK(I.rows() == 2);
    CHECK((I - I.transpose()).norm() < 1e-12);
    const KernelVector s = orthonormal_score(ctx);
    const Eigen::MatrixXd G = gram(s, s, ctx);
    CHECK((G - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("inverse square root") {
    Eigen::MatrixXd A(2, 2);
    A << 4, 1, 1, 3;
    const Eigen::MatrixXd R = inverse_sqrt(A);
    CHECK((R * A * R - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    Eigen::MatrixXd S(2, 2);
    S << 1, 1, 1, 1;
    CHECK(kind_of([&] { inverse_sqrt(S); }) == ErrorKind::rank);
}

TEST_CASE("degenerate data is flagged") {
    const Grid grid(0, 1, 5);
    CHECK(kind_of([&] { fit(EstimatorSpec::mle(), BinnedCounts({0, 0, 0, 0, 0}), grid, make_family("texp", 0, 1)); }) ==
          ErrorKind::rank);
    // Pearson-based equation for a constant level: s^2 + (mean - c)^2 = c has no root when s^2 > mean + 1/4
    const Grid g4(0, 1, 4);
    const auto gamma = EstimatorSpec::optimal_gamma(pearson_kernel());
    const FitResult over = fit(gamma, BinnedCounts({0, 10, 0, 10}), g4, make_family("constant", 0, 1));
    CHECK_FALSE(over.converged);
    const FitResult under = fit(gamma, BinnedCounts({5, 5, 4, 6}), g4, make_family("constant", 0, 1));
    CHECK(under.converged);
    CHECK(kind_of([] { parse_estimator("bayes"); }) == ErrorKind::usage);
}

TEST_CASE("moment start is close to the MLE") {
    const Grid grid(0, 1, 100);
    const MeanModel truth(make_family("texp", 0, 1), {5.0, 1.5});
    const BinnedCounts data = draw(truth, grid, 8);
    const MeanModel start = moment_start(truth.family_ptr(), grid, data);
    const FitResult f = fit(EstimatorSpec::mle(), data, grid, truth.family_ptr());
    CHECK(start.theta()[1] == Approx(f.theta[1]).epsilon(0.1));
    CHECK(f.iterations < 10);
}

TEST_CASE("optimal weights give the smaller estimator variance for empty boxes") {
    const std::size_t K = 200, R = 5000;
    const Grid grid(0, 1, K);
    const MeanModel truth(make_family("texp", 0, 1), {3.0, 1.5});
    const auto means = truth.bin_means(grid);
    const EstimatorSpec gamma = EstimatorSpec::optimal_gamma(empty_boxes_kernel());
    const EstimatorSpec omega = EstimatorSpec::weighted(empty_boxes_kernel());
    std::vector<double> bg(R, std::nan("")), bo(R, std::nan(""));
    parallel_for(R, {}, [&](std::size_t i, int) {
        Rng rng = replicate_rng(123, i);
        const BinnedCounts data = sample_counts(means, rng);
        try {
            const FitResult a = solve(gamma, data, grid, truth);
            const FitResult b = solve(omega, data, grid, truth);
            if (a.converged && b.converged) {
                bg[i] = a.theta[1];
                bo[i] = b.theta[1];
            }
        } catch (const Error&) {
        }
    });
    std::vector<double> x, y;
    for (std::size_t i = 0; i < R; ++i)
        if (std::isfinite(bg[i])) {
            x.push_back(bg[i]);
            y.push_back(bo[i]);
        }
    const double n = double(x.size());
    CHECK(n > 0.99 * R);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    // paired difference of squared deviations
    std::vector<double> d(x.size());
    double md = 0;
    for (std::size_t i = 0; i < x.size(); ++i) md += d[i] = (y[i] - my) * (y[i] - my) - (x[i] - mx) * (x[i] - mx);
    md /= n;
    double sd = 0;
    for (double v : d) sd += (v - md) * (v - md);
    const double se = std::sqrt(sd / (n - 1) / n);
    MESSAGE("var(omega) - var(gamma) = " << md << " se " << se);
    CHECK(md >= -2.0 * se);
}
