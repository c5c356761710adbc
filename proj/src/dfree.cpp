#include "divgof/dfree.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "divgof/error.hpp"

namespace divgof {

LinearForm to_form(const Kernel& g, const MeasureContext& ctx) {
    if (!g.is_linear()) fail(ErrorKind::usage, g.name + " is not a linear kernel");
    const std::size_t K = ctx.size();
    LinearForm f{Eigen::VectorXd(K)};
    for (std::size_t k = 0; k < K; ++k) {
        const double m = ctx.mean(k);
        f.u(k) = g.linear_weight(k, m) * std::sqrt(m / static_cast<double>(K));
    }
    return f;
}

Kernel to_kernel(const LinearForm& f, const MeasureContext& ctx, std::string name) {
    const double K = static_cast<double>(ctx.size());
    auto w = std::make_shared<std::vector<double>>(ctx.size());
    for (std::size_t k = 0; k < ctx.size(); ++k) (*w)[k] = f.u(k) / std::sqrt(ctx.mean(k) / K);
    return linear_kernel(std::move(name), [w](std::size_t k, double) { return (*w)[k]; });
}

Eigen::VectorXd standardized_residuals(const BinnedCounts& data, const MeasureContext& ctx) {
    if (data.size() != ctx.size()) fail(ErrorKind::validation, "data length differs from grid size");
    Eigen::VectorXd xi(ctx.size());
    for (std::size_t k = 0; k < ctx.size(); ++k) xi(k) = (data[k] - ctx.mean(k)) / std::sqrt(ctx.mean(k));
    return xi;
}

Kernel ell_kernel(std::size_t j, const MeasureContext& ctx, const ScanningFamily& scan) {
    if (j > scan.size()) fail(ErrorKind::validation, "scan index out of range");
    (void)ctx;
    const Kernel base = linear_kernel("l", [](std::size_t, double m) { return 1.0 / std::sqrt(m); });
    return restricted(base, scan.mask(j), "l_" + std::to_string(j));
}

LinearForm ell_form(std::size_t j, const ScanningFamily& scan) {
    const std::size_t K = scan.size();
    LinearForm f{Eigen::VectorXd::Zero(K)};
    const double v = 1.0 / std::sqrt(static_cast<double>(K));
    for (std::size_t i = 0; i < j && i < K; ++i) f.u(scan.order()[i]) = v;
    return f;
}

namespace {
constexpr double identity_tol = 1e-14;
}

Kernel apply_uab(const Kernel& a, const Kernel& b, const Kernel& f, const MeasureContext& ctx) {
    const double ab = inner_product(a, b, ctx);
    if (1.0 - ab < identity_tol) return f;
    const Kernel d = combine("a-b", {{1.0, a}, {-1.0, b}});
    const double coef = inner_product(f, d, ctx) / (1.0 - ab);
    return combine("U:" + f.name, {{1.0, f}, {-coef, d}});
}

Eigen::VectorXd apply_uab(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& f) {
    const double ab = a.dot(b);
    if (1.0 - ab < identity_tol) return f;
    const Eigen::VectorXd d = a - b;
    return f - (f.dot(d) / (1.0 - ab)) * d;
}

RBasis make_r_basis(std::size_t p, const ScanningFamily& scan) {
    const std::size_t K = scan.size();
    if (p == 0 || p > K) fail(ErrorKind::validation, "basis size must lie in [1, K]");
    RBasis r;
    r.p = p;
    std::size_t begin = 0;
    for (std::size_t j = 1; j <= p; ++j) {
        const std::size_t end = j * K / p;
        if (end <= begin) fail(ErrorKind::validation, "empty basis block");
        LinearForm f{Eigen::VectorXd::Zero(K)};
        const double v = 1.0 / std::sqrt(static_cast<double>(end - begin));
        for (std::size_t i = begin; i < end; ++i) f.u(scan.order()[i]) = v;
        r.r.push_back(std::move(f));
        r.block_end.push_back(end);
        begin = end;
    }
    return r;
}

UnitaryChain::UnitaryChain(const std::vector<LinearForm>& r, const std::vector<LinearForm>& s) : s_(s) {
    if (r.size() != s.size()) fail(ErrorKind::validation, "basis and score have different sizes");
    for (std::size_t j = 0; j < r.size(); ++j) {
        // a~_j = U_{j-1} r_j, using the pairs built so far
        a_.push_back(LinearForm{apply(r[j].u)});
    }
}

Eigen::VectorXd UnitaryChain::apply(const Eigen::VectorXd& f) const {
    Eigen::VectorXd out = f;
    for (std::size_t j = 0; j < a_.size(); ++j) out = apply_uab(a_[j].u, s_[j].u, out);
    return out;
}

Eigen::VectorXd UnitaryChain::apply_adjoint(const Eigen::VectorXd& f) const {
    Eigen::VectorXd out = f;
    for (std::size_t j = a_.size(); j-- > 0;) out = apply_uab(a_[j].u, s_[j].u, out);
    return out;
}

Kernel UnitaryChain::apply(const Kernel& f, const MeasureContext& ctx) const {
    Kernel out = f;
    for (std::size_t j = 0; j < a_.size(); ++j)
        out = apply_uab(to_kernel(a_[j], ctx, "a~"), to_kernel(s_[j], ctx, "s"), out, ctx);
    return out;
}

std::vector<LinearForm> score_forms(const MeasureContext& ctx) {
    const Eigen::MatrixXd W = orthonormal_score_weights(ctx);
    const double K = static_cast<double>(ctx.size());
    std::vector<LinearForm> s;
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        LinearForm f{Eigen::VectorXd(ctx.size())};
        for (std::size_t k = 0; k < ctx.size(); ++k) f.u(k) = W(k, j) * std::sqrt(ctx.mean(k) / K);
        s.push_back(std::move(f));
    }
    return s;
}

UnitaryChain build_chain(const RBasis& r, const std::vector<LinearForm>& s) { return UnitaryChain(r.r, s); }

std::vector<double> transformed_process(const BinnedCounts& data, const MeasureContext& ctx, const UnitaryChain& chain,
                                        const RBasis& r, const ScanningFamily& scan) {
    const std::size_t K = ctx.size();
    if (scan.size() != K) fail(ErrorKind::validation, "scan and grid sizes differ");
    const Eigen::VectorXd eta = chain.apply_adjoint(standardized_residuals(data, ctx));
    std::vector<double> reta(r.p);
    for (std::size_t j = 0; j < r.p; ++j) reta[j] = r.r[j].u.dot(eta);
    const double inv = 1.0 / std::sqrt(static_cast<double>(K));
    std::vector<double> X(K + 1, 0.0);
    double acc = 0.0;
    std::size_t block = 0, block_begin = 0;
    for (std::size_t i = 0; i < K; ++i) {
        while (block < r.p && i >= r.block_end[block]) block_begin = r.block_end[block++];
        const std::size_t k = scan.order()[i];
        acc += eta(k);
        // <l_t, r_j> is nonzero for completed blocks and the current one
        double corr = 0.0;
        for (std::size_t j = 0; j < block; ++j) {
            const double len = static_cast<double>(r.block_end[j] - (j == 0 ? 0 : r.block_end[j - 1]));
            corr += std::sqrt(len) * inv * reta[j];
        }
        if (block < r.p) {
            const double len = static_cast<double>(r.block_end[block] - block_begin);
            corr += static_cast<double>(i + 1 - block_begin) / std::sqrt(len) * inv * reta[block];
        }
        X[i + 1] = acc * inv - corr;
    }
    return X;
}

std::vector<double> transformed_variance(const RBasis& r, const ScanningFamily& scan) {
    const std::size_t K = scan.size();
    std::vector<double> v(K + 1, 0.0);
    for (std::size_t j = 1; j <= K; ++j) {
        const LinearForm l = ell_form(j, scan);
        double s = l.u.squaredNorm();
        for (const auto& rj : r.r) {
            const double c = l.u.dot(rj.u);
            s -= c * c;
        }
        v[j] = s;
    }
    return v;
}

double ks_star(std::span<const double> process) { return apply_functional(Functional::ks, process); }

double kolmogorov_cdf(double y) {
    if (!(y > 0.0)) return 0.0;
    if (y < 1.0) {
        // sqrt(2 pi)/y sum_k exp(-(2k-1)^2 pi^2 / (8 y^2))
        const double c = std::numbers::pi * std::numbers::pi / (8.0 * y * y);
        double s = 0.0;
        for (int k = 1; k < 100; ++k) {
            const double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * c);
            s += term;
            if (term < 1e-17 * s) break;
        }
        return std::sqrt(2.0 * std::numbers::pi) / y * s;
    }
    double s = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double term = std::exp(-2.0 * k * k * y * y);
        s += (k % 2 == 1) ? term : -term;
        if (term < 1e-17) break;
    }
    return 1.0 - 2.0 * s;
}

double limit_cdf(double y, int p, std::size_t K) {
    if (p < 1) fail(ErrorKind::validation, "p must be at least 1");
    const double shift = K > 0 ? 0.6 / std::sqrt(static_cast<double>(K)) : 0.0;
    if (y + shift <= 0.0) return 0.0;
    return std::pow(kolmogorov_cdf(std::sqrt(static_cast<double>(p)) * (y + shift)), p);
}

KsStarResult ks_star_test(const BinnedCounts& data, const Grid& grid, const MeanModel& init, std::size_t p,
                          const SolveOptions& opts) {
    KsStarResult res;
    res.fit = solve(EstimatorSpec::mle(), data, grid, init, opts);
    if (!res.fit.converged) fail(ErrorKind::convergence, "maximum-likelihood fit did not converge");
    const MeasureContext ctx = res.fit.model.context(grid, opts.truncation_tol);
    res.p = p == 0 ? ctx.param_dim() : p;
    if (res.p != ctx.param_dim()) fail(ErrorKind::usage, "p must equal the number of estimated parameters");
    const auto scan = ScanningFamily::left_to_right(grid.size());
    const RBasis r = make_r_basis(res.p, scan);
    const UnitaryChain chain = build_chain(r, score_forms(ctx));
    res.process = transformed_process(data, ctx, chain, r, scan);
    res.statistic = ks_star(res.process);
    res.p_value = 1.0 - limit_cdf(res.statistic, static_cast<int>(res.p), grid.size());
    return res;
}

}  // namespace divgof
