#include <doctest.h>

#include <cmath>

#include "divgof/models.hpp"
#include "divgof/statistics.hpp"
#include "divgof/projection.hpp"
#include "test_util.hpp"

using namespace divgof;
using doctest::Approx;
using testutil::kind_of;

TEST_CASE("cash kernel moments against high-precision values") {
    CHECK(expected_nu_log_nu(5.0) == Approx(8.570528045360914428541504).epsilon(1e-14));
    CHECK(expected_nu_log_nu(0.3) == Approx(0.05871759984737898600960551).epsilon(1e-14));
    CHECK(expected_nu_log_nu(2.0) == Approx(1.955996281963362232922524).epsilon(1e-14));
    const Kernel cash = cash_kernel();
    CHECK(expect(cash, 0, 5.0, 2) == Approx(0.5666957633369014447444126).epsilon(1e-12));
    CHECK(c_function(cash, 0, 5.0) == Approx(-0.03386159176438007353466335).epsilon(1e-11));
    CHECK(cash(0, 0, 5.0) == Approx(-8.570528045360914 + 5.0 * (1.0 + std::log(5.0))));
}

TEST_CASE("spectral covariance is -m p(q|m)") {
    for (int q : {0, 1, 3}) {
        const Kernel g = spectral_kernel(q);
        for (double m : {0.5, 2.0, 7.0}) {
            CAPTURE(q);
            CAPTURE(m);
            CHECK(c_function_by_sum(g, 0, m) == Approx(-m * poisson_pmf(q, m)).epsilon(1e-12));
        }
    }
    CHECK(kind_of([] { spectral_linear_kernel(0); }) == ErrorKind::usage);
}

TEST_CASE("kernel specs") {
    CHECK(make_kernel("pearson").name == "pearson");
    CHECK(make_kernel("spectral:2")(0, 2, 1.0) == Approx(1.0 - poisson_cdf(2, 1.0)));
    CHECK(make_kernel("custom:-1:linear")(0, 6, 2.0) == Approx(2.0));
    CHECK(make_kernel("parallel:pearson").is_linear());
    CHECK(kind_of([] { make_kernel("chi"); }) == ErrorKind::usage);
    CHECK(kind_of([] { make_kernel("spectral:x"); }) == ErrorKind::usage);
    CHECK(kind_of([] { make_kernel("spectral:-1"); }) == ErrorKind::usage);
}

TEST_CASE("decomposition is orthogonal and exhaustive") {
    const MeanModel model(make_family("tnorm:0.04", 0, 1), {5.0, 0.5});
    const MeasureContext ctx = model.context(Grid(0, 1, 60));
    for (const auto& spec : catalogue_specs()) {
        CAPTURE(spec);
        const Kernel g = make_kernel(spec);
        const Decomposition d = decompose(g, ctx);
        const double total = norm2(g, ctx);
        const double par = norm2(d.parallel, ctx);
        const double perp = norm2(d.perp, ctx);
        CHECK(std::abs(total - par - perp) < 1e-9);
        CHECK(std::abs(inner_product(d.parallel, d.perp, ctx)) < 1e-9);
        for (std::size_t k = 0; k < 60; k += 7) CHECK(std::abs(c_function(d.perp, k, ctx.mean(k))) < 1e-11);
    }
}

TEST_CASE("pearson parallel part is the weighted linear statistic") {
    const Kernel par = decompose(pearson_kernel()).parallel;
    const Kernel w = weighted_linear_kernel();
    for (int z : {0, 3, 11}) CHECK(par(0, z, 4.0) == Approx(w(0, z, 4.0)));
}

TEST_CASE("C-homogeneity") {
    const MeanModel model(make_family("texp", 0, 1), {5.0, 1.5});
    const MeasureContext ctx = model.context(Grid(0, 1, 50));
    CHECK(is_c_homogeneous(pearson_kernel(), ctx));
    CHECK(is_c_homogeneous(weighted_linear_kernel(), ctx));
    CHECK_FALSE(is_c_homogeneous(linear_stat_kernel(), ctx));
    CHECK_FALSE(is_c_homogeneous(spectral_kernel(1), ctx));
    CHECK_FALSE(is_c_homogeneous(cash_kernel(), ctx));
}

TEST_CASE("a kernel and its parallel part have the same shift") {
    const Grid grid(0, 1, 100);
    const MeanModel model(make_family("tnorm:0.04", 0, 1), {5.0, 0.5});
    const AltSpec h = make_direction(DirectionKind::variance_perturbation, model, grid);
    for (const auto& spec : catalogue_specs()) {
        CAPTURE(spec);
        const Kernel g = make_kernel(spec);
        const Kernel par = decompose(g).parallel;
        for (bool estimated : {false, true}) {
            const double a = shift(g, h, model, grid, estimated, EstimatorSpec::mle());
            const double b = shift(par, h, model, grid, estimated, EstimatorSpec::mle());
            CHECK(std::abs(a - b) < 1e-9);
        }
    }
}

TEST_CASE("the parallel part has the smaller norm") {
    for (const char* fam : {"texp", "tnorm:0.04", "constant"}) {
        const MeanModel model(make_family(fam, 0, 1), std::string(fam) == "constant" ? std::vector<double>{3.0}
                                                                                     : std::vector<double>{5.0, 0.5});
        const MeasureContext ctx = model.context(Grid(0, 1, 50));
        for (const auto& spec : catalogue_specs()) {
            CAPTURE(fam);
            CAPTURE(spec);
            const Kernel g = make_kernel(spec);
            const Decomposition d = decompose(g, ctx);
            const double par = norm2(d.parallel, ctx), total = norm2(g, ctx), perp = norm2(d.perp, ctx);
            CHECK(par <= total + 1e-12);
            if (perp < 1e-12) CHECK(par == Approx(total).epsilon(1e-9));
            else CHECK(par < total);
        }
    }
}
