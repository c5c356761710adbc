#include "divgof/gofprocess.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "divgof/error.hpp"
#include "divgof/projection.hpp"

namespace divgof {

ScanningFamily::ScanningFamily(std::vector<std::size_t> order) : order_(std::move(order)) {
    std::vector<char> seen(order_.size(), 0);
    for (std::size_t k : order_) {
        if (k >= order_.size() || seen[k]) fail(ErrorKind::validation, "scan order must be a permutation of the bins");
        seen[k] = 1;
    }
}

ScanningFamily ScanningFamily::left_to_right(std::size_t K) {
    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return ScanningFamily(std::move(order));
}

std::vector<double> ScanningFamily::t_values() const {
    std::vector<double> t(order_.size() + 1);
    for (std::size_t j = 0; j <= order_.size(); ++j) t[j] = this->t(j);
    return t;
}

std::vector<char> ScanningFamily::mask(std::size_t j) const {
    std::vector<char> m(order_.size(), 0);
    for (std::size_t i = 0; i < j && i < order_.size(); ++i) m[order_[i]] = 1;
    return m;
}

std::vector<double> partial_sums(const Kernel& g, const BinnedCounts& data, const MeasureContext& ctx,
                                 const ScanningFamily& scan) {
    const std::size_t K = ctx.size();
    if (data.size() != K || scan.size() != K) fail(ErrorKind::validation, "scan, data and grid sizes differ");
    const double inv = 1.0 / std::sqrt(static_cast<double>(K));
    std::vector<double> S(K + 1, 0.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        const std::size_t k = scan.order()[j];
        const double v = g.eval(k, data[k], ctx.mean(k));
        if (!std::isfinite(v)) fail(ErrorKind::numeric, g.name + " is not finite at bin " + std::to_string(k));
        acc += v;
        S[j + 1] = acc * inv;
    }
    return S;
}

double ks_statistic(const Kernel& g, const BinnedCounts& data, const MeasureContext& ctx, const ScanningFamily& scan) {
    return apply_functional(Functional::ks, partial_sums(g, data, ctx, scan));
}

Functional parse_functional(const std::string& name) {
    if (name == "ks") return Functional::ks;
    if (name == "abs" || name == "single") return Functional::abs;
    if (name == "upper") return Functional::upper;
    if (name == "lower") return Functional::lower;
    fail(ErrorKind::usage, "unknown functional '" + name + "'");
}

double apply_functional(Functional f, std::span<const double> process) {
    if (process.empty()) fail(ErrorKind::validation, "empty process");
    switch (f) {
        case Functional::ks: {
            double mx = 0.0;
            for (double v : process) mx = std::max(mx, std::abs(v));
            return mx;
        }
        case Functional::abs: return std::abs(process.back());
        case Functional::upper: return process.back();
        case Functional::lower: return -process.back();
    }
    return 0.0;
}

BootstrapMode parse_bootstrap_mode(const std::string& name) {
    if (name == "classical") return BootstrapMode::classical;
    if (name == "projected") return BootstrapMode::projected;
    fail(ErrorKind::usage, "unknown bootstrap mode '" + name + "'");
}

double bootstrap_p(std::span<const double> null_values, double observed) {
    std::size_t hits = 0;
    for (double v : null_values) hits += v >= observed;
    return (1.0 + static_cast<double>(hits)) / (1.0 + static_cast<double>(null_values.size()));
}

namespace {

struct ReplicateOutcome {
    double value = 0.0;
    bool ok = false;
};

std::vector<ReplicateOutcome> classical_replicates(const BootstrapPlan& plan, const MeanModel& fitted, const Grid& grid,
                                                   const EstimatorSpec& spec, const Kernel& g,
                                                   const ScanningFamily& scan) {
    const auto means = fitted.bin_means(grid);
    const int workers = worker_count(plan.parallel);
    std::vector<PoissonSampler> samplers(workers, PoissonSampler(means));
    std::vector<BinnedCounts> scratch(workers);
    std::vector<ReplicateOutcome> out(plan.replicates);
    parallel_for(plan.replicates, plan.parallel, [&](std::size_t i, int w) {
        Rng rng = replicate_rng(plan.seed, i);
        samplers[w].draw(rng, scratch[w]);
        try {
            const FitResult f = solve(spec, scratch[w], grid, fitted, plan.solve);
            if (!f.converged) return;
            const MeasureContext ctx = f.model.context(grid);
            out[i].value = apply_functional(plan.statistic, partial_sums(g, scratch[w], ctx, scan));
            out[i].ok = std::isfinite(out[i].value);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::usage || e.kind() == ErrorKind::validation) throw;
        }
    });
    return out;
}

std::vector<ReplicateOutcome> projected_replicates(const BootstrapPlan& plan, const MeanModel& fitted, const Grid& grid,
                                                   const EstimatorSpec& spec, const Kernel& g,
                                                   const ScanningFamily& scan) {
    const std::size_t K = grid.size();
    const MeasureContext ctx = fitted.context(grid);
    const Projector P(spec, ctx);
    const auto p = static_cast<Eigen::Index>(P.b().size());
    // rows[j] = <g 1_{A_{j}}, psi^T> <b,psi^T>^{-1}, accumulated along the scan
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K + 1), p);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(p);
    for (std::size_t j = 0; j < K; ++j) {
        const std::size_t k = scan.order()[j];
        const double m = ctx.mean(k);
        const double c = c_function(g, k, m, ctx.tol());
        for (Eigen::Index l = 0; l < p; ++l) acc(l) += c * P.psi()[l].linear_weight(k, m);
        rows.row(static_cast<Eigen::Index>(j + 1)) = acc / static_cast<double>(K);
    }
    rows = rows * P.b_psi_inv();
    const double inv = 1.0 / std::sqrt(static_cast<double>(K));
    const auto means = std::vector<double>(ctx.means().begin(), ctx.means().end());
    const int workers = worker_count(plan.parallel);
    std::vector<PoissonSampler> samplers(workers, PoissonSampler(means));
    std::vector<BinnedCounts> scratch(workers);
    std::vector<std::vector<double>> proc(workers, std::vector<double>(K + 1));
    std::vector<ReplicateOutcome> out(plan.replicates);
    parallel_for(plan.replicates, plan.parallel, [&](std::size_t i, int w) {
        Rng rng = replicate_rng(plan.seed, i);
        auto& data = scratch[w];
        samplers[w].draw(rng, data);
        Eigen::VectorXd vb(p);
        for (Eigen::Index l = 0; l < p; ++l) vb(l) = evaluate_statistic(P.b()[l], data, ctx);
        auto& X = proc[w];
        X[0] = 0.0;
        double s = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            const std::size_t k = scan.order()[j];
            s += g.eval(k, data[k], ctx.mean(k));
            X[j + 1] = s * inv - rows.row(static_cast<Eigen::Index>(j + 1)).dot(vb);
        }
        out[i].value = apply_functional(plan.statistic, X);
        out[i].ok = std::isfinite(out[i].value);
    });
    return out;
}

}  // namespace

BootstrapResult bootstrap_pvalue(const BootstrapPlan& plan, double observed, const MeanModel& fitted, const Grid& grid,
                                 const EstimatorSpec& spec, const Kernel& g, const ScanningFamily& scan) {
    if (plan.replicates == 0) fail(ErrorKind::validation, "bootstrap needs at least one replicate");
    if (scan.size() != grid.size()) fail(ErrorKind::validation, "scan and grid sizes differ");
    const auto t0 = std::chrono::steady_clock::now();
    const auto outcomes = plan.mode == BootstrapMode::classical
                              ? classical_replicates(plan, fitted, grid, spec, g, scan)
                              : projected_replicates(plan, fitted, grid, spec, g, scan);
    BootstrapResult res;
    res.observed = observed;
    for (const auto& o : outcomes) {
        if (o.ok) {
            res.null_values.push_back(o.value);
        } else {
            ++res.failures;
        }
    }
    if (static_cast<double>(res.failures) > 0.01 * static_cast<double>(plan.replicates))
        fail(ErrorKind::run, std::to_string(res.failures) + " of " + std::to_string(plan.replicates) +
                                 " bootstrap refits failed");
    if (plan.replicates < 1000) res.warning = "fewer than 1000 replicates; p-value is coarse";
    res.p_value = bootstrap_p(res.null_values, observed);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace divgof
