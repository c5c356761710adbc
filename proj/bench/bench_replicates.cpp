#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "divgof/harness.hpp"
#include "divgof/statistics.hpp"

using namespace divgof;

namespace {

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunConfig example_config(std::size_t reps) {
    RunConfig cfg;
    cfg.model = "tnorm:0.04";
    cfg.theta = {5.0, 0.5};
    cfg.K = 100;
    cfg.alternative.direction = "variance_perturbation";
    cfg.tests = {{"pearson mle", "pearson", true}, {"wlinear ks", "wlinear", true, TestKind::ks}};
    cfg.replicates = reps;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t reps = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 5000;
    std::printf("workers available: %d\n", worker_count({}));

    RunConfig cfg = example_config(reps);
    PowerStudy serial, parallel;
    cfg.parallel.exec = Execution::serial;
    const double ts = seconds([&] { serial = power_study(cfg); });
    cfg.parallel.exec = Execution::parallel;
    const double tp = seconds([&] { parallel = power_study(cfg); });
    const bool same = serial.null_values == parallel.null_values && serial.alt_values == parallel.alt_values;
    std::printf("power_study     R=%zu  serial %.3f s  parallel %.3f s  speedup %.2f  identical %s\n", reps, ts, tp,
                ts / tp, same ? "yes" : "no");

    const MeanModel model(make_family("tnorm:0.04", 0.0, 1.0), {5.0, 0.5});
    const Grid grid(0.0, 1.0, 100);
    const auto scan = ScanningFamily::left_to_right(100);
    const Kernel g = weighted_linear_kernel();
    for (BootstrapMode mode : {BootstrapMode::classical, BootstrapMode::projected}) {
        BootstrapPlan plan;
        plan.replicates = reps;
        plan.mode = mode;
        plan.seed = 9;
        BootstrapResult rs, rp;
        plan.parallel.exec = Execution::serial;
        const double bs = seconds([&] { rs = bootstrap_pvalue(plan, 1.0, model, grid, EstimatorSpec::mle(), g, scan); });
        plan.parallel.exec = Execution::parallel;
        const double bp = seconds([&] { rp = bootstrap_pvalue(plan, 1.0, model, grid, EstimatorSpec::mle(), g, scan); });
        std::printf("bootstrap %-9s R=%zu  serial %.3f s  parallel %.3f s  speedup %.2f  identical %s\n",
                    mode == BootstrapMode::classical ? "classical" : "projected", reps, bs, bp, bs / bp,
                    rs.null_values == rp.null_values ? "yes" : "no");
    }
    return 0;
}
