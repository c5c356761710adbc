#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "divgof/dfree.hpp"
#include "divgof/error.hpp"
#include "divgof/estimation.hpp"
#include "divgof/harness.hpp"

using namespace divgof;

namespace {

ParallelOptions parallel_options(int workers) {
    ParallelOptions p;
    if (workers == 1) p.exec = Execution::serial;
    p.workers = workers;
    return p;
}

int run_fit(const std::string& data_path, const std::string& model, const std::string& estimator) {
    const Spectrum s = ingest_spectrum(data_path);
    const FitResult f = fit(parse_estimator(estimator), s.counts, s.grid, make_family(model, s.grid.low(), s.grid.high()));
    if (!f.converged) fail(ErrorKind::convergence, "fit did not converge");
    std::cout << "model " << model << "  estimator " << estimator << "  K=" << s.grid.size() << '\n';
    std::cout << "theta";
    std::cout.precision(10);
    for (double t : f.theta) std::cout << ' ' << t;
    std::cout << "\niterations " << f.iterations << "  residual " << f.residual << '\n';
    return 0;
}

void write_csv(const std::string& dir, const std::string& name, const auto& writer) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    if (!out) fail(ErrorKind::run, "cannot write " + path.string());
    writer(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Divisible goodness-of-fit statistics for binned Poisson data"};
    app.require_subcommand(1);

    std::string data, model = "constant", estimator = "mle", kernel = "wlinear", stat = "single",
                calibration = "gaussian", bootstrap = "classical", functional = "abs", config, out_dir, p_arg = "auto";
    std::uint64_t seed = 1;
    std::size_t reps = 0;
    int workers = 0;
    bool ks_star_flag = false;

    auto* fit_cmd = app.add_subcommand("fit", "Fit a mean model to a spectrum");
    fit_cmd->add_option("--data", data, "CSV with bin_low,bin_high,count")->required();
    fit_cmd->add_option("--model", model, "Family spec");
    fit_cmd->add_option("--estimator", estimator, "mle | ls | gamma:<kernel> | weighted:<kernel>");

    auto* gof_cmd = app.add_subcommand("gof", "Goodness-of-fit test on a spectrum");
    gof_cmd->add_option("--data", data)->required();
    gof_cmd->add_option("--model", model);
    gof_cmd->add_option("--kernel", kernel);
    gof_cmd->add_option("--stat", stat, "single | ks")->check(CLI::IsMember({"single", "ks"}));
    gof_cmd->add_option("--calibration", calibration, "gaussian | bootstrap")
        ->check(CLI::IsMember({"gaussian", "bootstrap"}));
    gof_cmd->add_option("--functional", functional, "abs | upper | lower (single statistics)")
        ->check(CLI::IsMember({"abs", "upper", "lower"}));
    gof_cmd->add_option("--bootstrap", bootstrap)->check(CLI::IsMember({"classical", "projected"}));
    gof_cmd->add_option("--reps", reps);
    gof_cmd->add_option("--seed", seed);
    gof_cmd->add_option("--workers", workers);
    gof_cmd->add_option("--out", out_dir, "Directory for CSV output");

    auto* power_cmd = app.add_subcommand("power", "Monte Carlo power study");
    power_cmd->add_option("--config", config)->required()->check(CLI::ExistingFile);
    power_cmd->add_option("--seed", seed);
    power_cmd->add_option("--reps", reps);
    power_cmd->add_option("--workers", workers);
    power_cmd->add_option("--out", out_dir);

    auto* dfree_cmd = app.add_subcommand("dfree", "Distribution-free KS* test");
    dfree_cmd->add_option("--data", data)->required();
    dfree_cmd->add_option("--model", model);
    dfree_cmd->add_option("--p", p_arg, "auto or the number of estimated parameters");
    dfree_cmd->add_flag("--ks-star", ks_star_flag, "Report the KS* statistic (default)");

    auto* ingest_cmd = app.add_subcommand("ingest-check", "Validate a spectrum file");
    ingest_cmd->add_option("--data", data)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*fit_cmd) return run_fit(data, model, estimator);

        if (*gof_cmd) {
            const Spectrum s = ingest_spectrum(data);
            TestSpec spec;
            spec.model = model;
            spec.kernel = kernel;
            spec.test = parse_test_kind(stat);
            spec.calibration = parse_calibration(calibration);
            spec.functional = parse_functional(functional);
            spec.bootstrap = parse_bootstrap_mode(bootstrap);
            if (reps > 0) spec.replicates = reps;
            spec.seed = seed;
            spec.parallel = parallel_options(workers);
            const auto reports = chandra_analysis(s, {spec});
            write_test_table(std::cout, reports);
            write_csv(out_dir, "gof.csv", [&](std::ostream& o) { write_test_csv(o, reports); });
            return 0;
        }

        if (*power_cmd) {
            RunConfig cfg = load_config(config);
            if (power_cmd->count("--seed")) cfg.seed = seed;
            if (reps > 0) cfg.replicates = reps;
            if (power_cmd->count("--workers")) cfg.parallel = parallel_options(workers);
            const PowerStudy study = power_study(cfg);
            write_power_table(std::cout, study);
            write_csv(out_dir, "power.csv", [&](std::ostream& o) { write_power_csv(o, study); });
            return 0;
        }

        if (*dfree_cmd) {
            const Spectrum s = ingest_spectrum(data);
            const FamilyPtr family = make_family(model, s.grid.low(), s.grid.high());
            std::size_t p = 0;
            if (p_arg != "auto") {
                try {
                    p = std::stoul(p_arg);
                } catch (const std::exception&) {
                    fail(ErrorKind::usage, "--p must be 'auto' or a positive integer");
                }
            }
            const KsStarResult r = ks_star_test(s.counts, s.grid, moment_start(family, s.grid, s.counts), p);
            std::cout.precision(8);
            std::cout << "model " << model << "  K=" << s.grid.size() << "  p=" << r.p << '\n'
                      << "ks_star " << r.statistic << "\np_value " << r.p_value << '\n';
            return 0;
        }

        if (*ingest_cmd) {
            const Spectrum s = ingest_spectrum(data);
            std::cout << "ok  K=" << s.grid.size() << "  range [" << s.grid.low() << ", " << s.grid.high()
                      << "]  total " << s.counts.total() << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
