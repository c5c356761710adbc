#include <doctest.h>

#include <cmath>

#include "divgof/error.hpp"
#include "divgof/measure.hpp"
#include "divgof/statistics.hpp"
#include "divgof/harness.hpp"
#include "divgof/models.hpp"
#include "test_util.hpp"

using namespace divgof;
using doctest::Approx;
using testutil::kind_of;

namespace {

MeasureContext flat_context(std::size_t K, double m) { return MeasureContext(Grid(0.0, 1.0, K), std::vector<double>(K, m)); }

}  // namespace

TEST_CASE("grid geometry") {
    const Grid g(2.0, 4.0, 8);
    CHECK(g.size() == 8);
    CHECK(g.volume() == 2.0);
    CHECK(g.delta() == 0.25);
    CHECK(g.edge(0) == 2.0);
    CHECK(g.edge(8) == 4.0);
    CHECK(g.center(1) == Approx(2.375));
    CHECK(g.bin_of(2.3) == 1);
    CHECK(g.bin_of(-10.0) == 0);
    CHECK(g.bin_of(10.0) == 7);
    CHECK(kind_of([] { Grid(1.0, 1.0, 3); }) == ErrorKind::validation);
    CHECK(kind_of([] { Grid(0.0, 1.0, 0); }) == ErrorKind::validation);
}

TEST_CASE("binned counts reject negative values") {
    const BinnedCounts c({1, 0, 4});
    CHECK(c.total() == 5);
    CHECK(kind_of([] { BinnedCounts({1, -1}); }) == ErrorKind::validation);
}

TEST_CASE("means must be positive") {
    CHECK(kind_of([] { MeasureContext(Grid(0, 1, 2), {1.0, 0.0}); }) == ErrorKind::model);
}

TEST_CASE("poisson probabilities against high-precision values") {
    CHECK(poisson_pmf(3, 2.5) == Approx(0.21376301724973644575).epsilon(1e-14));
    CHECK(poisson_cdf(4, 7.3) == Approx(0.14733985104574456166).epsilon(1e-13));
    CHECK(poisson_pmf(1000, 1000.0) == Approx(0.012614611348721499718).epsilon(1e-11));
    CHECK(poisson_pmf(0, 0.0) == 1.0);
    CHECK(poisson_pmf(-1, 2.0) == 0.0);
    CHECK(kind_of([] { poisson_pmf(1, -0.1); }) == ErrorKind::domain);
}

TEST_CASE("poisson sums reproduce moments across regimes") {
    for (double m : {1e-3, 0.1, 1.0, 5.0, 40.0, 750.0, 5000.0}) {
        CAPTURE(m);
        CHECK(poisson_sum(m, [](int) { return 1.0; }) == Approx(1.0).epsilon(1e-12));
        CHECK(poisson_sum(m, [](int z) { return double(z); }) == Approx(m).epsilon(1e-12));
        const double var = poisson_sum(m, [m](int z) { return (z - m) * (z - m); });
        CHECK(var == Approx(m).epsilon(1e-10));
    }
}

TEST_CASE("pearson second moment is 2 + 1/m") {
    const Kernel g = pearson_kernel();
    for (double m : {0.2, 1.0, 5.0, 60.0}) {
        CAPTURE(m);
        CHECK(expect(g, 0, m, 1) == Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(expect(g, 0, m, 2) == Approx(2.0 + 1.0 / m).epsilon(1e-11));
    }
}

TEST_CASE("closed-form C agrees with direct summation") {
    for (const auto& spec : catalogue_specs()) {
        const Kernel g = make_kernel(spec);
        if (!g.known_c) continue;
        for (double m : {0.3, 2.0, 9.0}) {
            CAPTURE(spec);
            CAPTURE(m);
            CHECK(c_function(g, 0, m) == Approx(c_function_by_sum(g, 0, m)).scale(1.0).epsilon(1e-11));
        }
    }
    CHECK(c_function(empty_boxes_kernel(), 0, 2.0) == Approx(-2.0 * std::exp(-2.0)).epsilon(1e-14));
    CHECK(c_function(linear_stat_kernel(), 0, 3.5) == Approx(3.5));
}

TEST_CASE("catalogue kernels are centered") {
    for (const auto& spec : catalogue_specs()) {
        const Kernel g = make_kernel(spec);
        for (double m : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
            CAPTURE(spec);
            CAPTURE(m);
            CHECK(std::abs(expect(g, 0, m, 1)) < 1e-10);
        }
    }
}

TEST_CASE("inner products of linear kernels use the closed form") {
    const MeasureContext ctx(Grid(0, 1, 3), {1.0, 2.0, 4.0});
    const Kernel a = linear_kernel("a", [](std::size_t k, double) { return double(k + 1); });
    const Kernel b = linear_kernel("b", [](std::size_t, double m) { return 1.0 / m; });
    // (1/3)(1*1*1/1 + 2*2/2 + 3*4/4) = 2
    CHECK(inner_product(a, b, ctx) == Approx(2.0).epsilon(1e-15));
    const Kernel a_opaque{"a2", a.eval, {}, {}, true};
    CHECK(inner_product(a_opaque, b, ctx) == Approx(2.0).epsilon(1e-12));
    CHECK(norm2(linear_stat_kernel(), flat_context(10, 5.0)) == Approx(5.0));
}

TEST_CASE("statistic evaluation") {
    const MeasureContext ctx = flat_context(4, 2.0);
    const BinnedCounts data({1, 2, 3, 6});
    // (1/2)(-1 + 0 + 1 + 4) = 2
    CHECK(evaluate_statistic(linear_stat_kernel(), data, ctx) == Approx(2.0));
    const Kernel bad{"bad", [](std::size_t k, int, double) { return k == 2 ? std::nan("") : 0.0; }, {}, {}, true};
    try {
        evaluate_statistic(bad, data, ctx);
        FAIL("expected a numeric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numeric);
        CHECK(std::string(e.what()).find("bin 2") != std::string::npos);
    }
    CHECK(kind_of([&] { evaluate_statistic(pearson_kernel(), BinnedCounts({1, 2}), ctx); }) == ErrorKind::validation);
}

TEST_CASE("combined and restricted kernels") {
    const MeasureContext ctx = flat_context(4, 3.0);
    const Kernel w = weighted_linear_kernel();
    const Kernel s = combine("s", {{2.0, w}, {-1.0, linear_stat_kernel()}});
    CHECK(s.is_linear());
    CHECK(s(0, 5, 3.0) == Approx(2.0 * 2.0 / 3.0 - 2.0));
    const Kernel r = restricted(w, {1, 0, 1, 0});
    CHECK(r(1, 7, 3.0) == 0.0);
    CHECK(norm2(r, ctx) == Approx(0.5 * norm2(w, ctx)));
}

TEST_CASE("norm equals the averaged second moment") {
    const MeanModel model(make_family("texp", 0, 1), {5.0, 1.5});
    const MeasureContext ctx = model.context(Grid(0, 1, 50));
    for (const auto& spec : catalogue_specs()) {
        CAPTURE(spec);
        const Kernel g = make_kernel(spec);
        double s = 0.0;
        for (std::size_t k = 0; k < 50; ++k) s += expect(g, k, ctx.mean(k), 2);
        CHECK(std::abs(norm2(g, ctx) - s / 50.0) < 1e-12);
    }
}

TEST_CASE("looser truncation barely moves the moments") {
    for (const auto& spec : catalogue_specs()) {
        const Kernel g = make_kernel(spec);
        for (double m : {0.1, 0.5, 2.0, 7.0, 20.0, 50.0}) {
            CAPTURE(spec);
            CAPTURE(m);
            const double tight = expect(g, 0, m, 2, 1e-14), loose = expect(g, 0, m, 2, 1e-10);
            CHECK(std::abs(tight - loose) <= 1e-8 * std::abs(tight));
            const double ct = c_function_by_sum(g, 0, m, 1e-14), cl = c_function_by_sum(g, 0, m, 1e-10);
            // C can cancel to nearly zero, so it is compared on the Cauchy-Schwarz scale sqrt(E[g^2] m)
            CHECK(std::abs(ct - cl) <= 1e-8 * std::sqrt(tight * m));
        }
    }
}

TEST_CASE("Cauchy-Schwarz on kernel pairs") {
    const MeanModel model(make_family("tnorm:0.04", 0, 1), {5.0, 0.5});
    const MeasureContext ctx = model.context(Grid(0, 1, 40));
    std::vector<Kernel> ks;
    for (const auto& spec : catalogue_specs()) ks.push_back(make_kernel(spec));
    ks.push_back(make_kernel("custom:-0.5:pearson"));
    ks.push_back(make_kernel("custom:1:spectral:2"));
    for (std::size_t i = 0; i < ks.size(); ++i)
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const double ab = inner_product(ks[i], ks[j], ctx);
            CHECK(ab * ab <= norm2(ks[i], ctx) * norm2(ks[j], ctx) * (1 + 1e-12));
        }
}

TEST_CASE("statistics are close to Gaussian at K = 1000") {
    const std::size_t K = 1000, R = 20000;
    const MeanModel model(make_family("constant", 0, 1), {5.0});
    const Grid grid(0, 1, K);
    const MeasureContext ctx = model.context(grid);
    const auto means = model.bin_means(grid);
    for (const char* spec : {"pearson", "cash", "wlinear"}) {
        CAPTURE(spec);
        const Kernel g = make_kernel(spec);
        const double sd = std::sqrt(norm2(g, ctx));
        std::vector<double> v(R);
        parallel_for(R, {}, [&](std::size_t i, int) {
            Rng rng = replicate_rng(77, i);
            v[i] = evaluate_statistic(g, sample_counts(means, rng), ctx);
        });
        const double d = kolmogorov_distance(v, [sd](double x) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); });
        CHECK(d < 0.02);
    }
}
