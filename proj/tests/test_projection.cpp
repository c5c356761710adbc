#include <doctest.h>

#include <cmath>

#include "divgof/projection.hpp"
#include "divgof/statistics.hpp"
#include "divgof/estimation.hpp"
#include "divgof/replicates.hpp"
#include "test_util.hpp"

using namespace divgof;
using doctest::Approx;
using testutil::kind_of;

namespace {

struct Setup {
    MeanModel model;
    Grid grid;
    MeasureContext ctx;
};

Setup texp_setup(std::size_t K = 100) {
    MeanModel m(make_family("texp", 0, 1), {5.0, 1.5});
    Grid g(0, 1, K);
    return {m, g, m.context(g)};
}

}  // namespace

TEST_CASE("projector algebra") {
    const Setup s = texp_setup(60);
    for (const auto& spec : {EstimatorSpec::mle(), EstimatorSpec::least_squares()}) {
        const Projector P(spec, s.ctx);
        CAPTURE(spec.label());
        for (const char* k : {"pearson", "spectral:1", "cash", "linear", "empty"}) {
            CAPTURE(k);
            const Kernel g = make_kernel(k);
            const Kernel pg = P.apply(g);
            // <Pi g, psi> = 0
            CHECK(P.score_products(pg).cwiseAbs().maxCoeff() < 1e-9);
            // idempotence
            const Kernel ppg = P.apply(pg);
            CHECK(norm2(combine("d", {{1.0, ppg}, {-1.0, pg}}), s.ctx) < 1e-18);
            CHECK(P.projected_norm2(g) == Approx(norm2(pg, s.ctx)).epsilon(1e-9));
            if (P.orthogonal()) CHECK(P.projected_norm2_orthogonal(g) == Approx(P.projected_norm2(g)).epsilon(1e-9));
        }
        // Pi b = 0
        for (const auto& b : P.b()) CHECK(norm2(P.apply(b), s.ctx) < 1e-18);
    }
}

TEST_CASE("pearson with estimated level has projected variance 2") {
    const MeanModel m(make_family("constant", 0, 1), {5.0});
    const MeasureContext ctx = m.context(Grid(0, 1, 1000));
    CHECK(Projector(EstimatorSpec::mle(), ctx).projected_norm2(pearson_kernel()) == Approx(2.0).epsilon(1e-10));
    CHECK(norm2(pearson_kernel(), ctx) == Approx(2.2).epsilon(1e-10));
}

TEST_CASE("build_projector reports the coefficient row and variance") {
    const Setup s = texp_setup(40);
    const ProjectedKernel pk = build_projector(cash_kernel(), EstimatorSpec::mle(), s.ctx);
    CHECK(pk.A.size() == 2);
    CHECK(pk.variance == Approx(norm2(pk.kernel, s.ctx)).epsilon(1e-9));
}

TEST_CASE("C-homogeneous statistics have no power after estimation") {
    const MeanModel m(make_family("constant", 0, 1), {5.0});
    const MeasureContext ctx = m.context(Grid(0, 1, 100));
    CHECK(no_power_check(pearson_kernel(), EstimatorSpec::mle(), ctx));
    CHECK(no_power_check(cash_kernel(), EstimatorSpec::mle(), ctx));
    const Setup s = texp_setup();
    CHECK_FALSE(no_power_check(weighted_linear_kernel(), EstimatorSpec::mle(), s.ctx));
    CHECK_FALSE(no_power_check(pearson_kernel(), EstimatorSpec::mle(), s.ctx));
}

TEST_CASE("shift and spread after estimation for the truncated exponential examples") {
    const Setup s = texp_setup();
    const Kernel g = pearson_kernel();
    const EstimatorSpec mle = EstimatorSpec::mle();
    const AltSpec h1 = make_direction(DirectionKind::gamma_shape, s.model, s.grid);
    const AltSpec h2 = make_direction(DirectionKind::gaussian_bump, s.model, s.grid);
    const double s1 = shift(g, h1, s.model, s.grid, true, mle);
    const double s2 = shift(g, h2, s.model, s.grid, true, mle);
    CHECK(std::abs(s1 - -0.014) <= 0.002);
    CHECK(std::abs(s2 - -0.019) <= 0.002);
    // C(x; Pi g) against h-bar and C(x; g) against hhat-bar agree
    CHECK(shift(g, h1, s.model, s.grid, true, mle, ShiftPath::hhat) == Approx(s1).epsilon(1e-6));
    CHECK(shift(g, h2, s.model, s.grid, true, mle, ShiftPath::hhat) == Approx(s2).epsilon(1e-6));
    const double sd = std::sqrt(Projector(mle, s.ctx).projected_norm2(g));
    CHECK(std::abs(sd - 1.406) <= 0.01);
    CHECK(std::abs(sd - 1.416) <= 0.01);
    // the shift is small against the spread, hence the lack of power
    CHECK(std::abs(s1) / sd < 0.02);
}

TEST_CASE("gaussian calibration") {
    CHECK(gaussian_test(0.0, 1.0) == Approx(1.0));
    CHECK(gaussian_test(1.959963984540054, 1.0) == Approx(0.05).epsilon(1e-12));
    CHECK(gaussian_test(1.6448536269514722, 1.0, 1) == Approx(0.05).epsilon(1e-12));
    CHECK(kind_of([] { gaussian_test(1.0, 0.0); }) == ErrorKind::degenerate);
}

TEST_CASE("the maximum-likelihood projector is self-adjoint") {
    const Setup s = texp_setup(50);
    const Projector P(EstimatorSpec::mle(), s.ctx);
    const auto specs = catalogue_specs();
    for (const auto& a : specs)
        for (const auto& b : specs) {
            CAPTURE(a);
            CAPTURE(b);
            const Kernel pa = P.apply(make_kernel(a)), pb = P.apply(make_kernel(b));
            CHECK(std::abs(inner_product(pa, pb, s.ctx) - inner_product(make_kernel(a), pb, s.ctx)) < 1e-9);
        }
}

TEST_CASE("variance after estimation matches the projected norm") {
    const std::size_t K = 1000, R = 20000;
    const Grid grid(0, 1, K);
    struct Case {
        const char* family;
        std::vector<double> theta;
        Kernel g;
    };
    const std::vector<Case> cases{{"constant", {5.0}, pearson_kernel()},
                                  {"texp", {5.0, 1.5}, weighted_linear_kernel()}};
    for (const auto& c : cases) {
        const std::string family = c.family;
        CAPTURE(family);
        const MeanModel truth(make_family(c.family, 0, 1), c.theta);
        const auto means = truth.bin_means(grid);
        const double target = Projector(EstimatorSpec::mle(), truth.context(grid)).projected_norm2(c.g);
        std::vector<double> v(R);
        parallel_for(R, {}, [&](std::size_t i, int) {
            Rng rng = replicate_rng(8, i);
            const BinnedCounts data = sample_counts(means, rng);
            const FitResult f = solve(EstimatorSpec::mle(), data, grid, truth);
            v[i] = evaluate_statistic(c.g, data, f.model.context(grid));
        });
        double m = 0, q = 0;
        for (double x : v) m += x;
        m /= R;
        for (double x : v) q += (x - m) * (x - m);
        const double var = q / (R - 1);
        MESSAGE(family << ": variance " << var << " vs " << target);
        CHECK(std::abs(var / target - 1.0) < 0.03);
    }
}
