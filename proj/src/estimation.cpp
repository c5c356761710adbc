#include "divgof/estimation.hpp"

#include <cmath>
#include <memory>

#include "divgof/error.hpp"
#include "divgof/statistics.hpp"

namespace divgof {

EstimatorSpec EstimatorSpec::mle() { return {}; }

EstimatorSpec EstimatorSpec::least_squares() {
    EstimatorSpec s;
    s.method = EstimationMethod::least_squares;
    return s;
}

EstimatorSpec EstimatorSpec::weighted(Kernel g, std::function<Eigen::MatrixXd(const MeasureContext&)> omega) {
    EstimatorSpec s;
    s.method = EstimationMethod::weighted;
    s.base = std::move(g);
    s.omega = omega ? std::move(omega) : [](const MeasureContext& ctx) { return ctx.gradient(); };
    return s;
}

EstimatorSpec EstimatorSpec::optimal_gamma(Kernel g) {
    EstimatorSpec s;
    s.method = EstimationMethod::optimal_gamma;
    s.base = std::move(g);
    return s;
}

std::string EstimatorSpec::label() const {
    switch (method) {
        case EstimationMethod::mle: return "mle";
        case EstimationMethod::least_squares: return "ls";
        case EstimationMethod::weighted: return "weighted:" + base.name;
        case EstimationMethod::optimal_gamma: return "gamma:" + base.name;
    }
    return "?";
}

EstimatorSpec parse_estimator(const std::string& spec) {
    if (spec == "mle") return EstimatorSpec::mle();
    if (spec == "ls") return EstimatorSpec::least_squares();
    if (spec.rfind("gamma:", 0) == 0) return EstimatorSpec::optimal_gamma(make_kernel(spec.substr(6)));
    if (spec.rfind("weighted:", 0) == 0) return EstimatorSpec::weighted(make_kernel(spec.substr(9)));
    fail(ErrorKind::usage, "unknown estimator '" + spec + "'");
}

namespace {

void require_gradient(const MeasureContext& ctx) {
    if (ctx.param_dim() == 0) fail(ErrorKind::usage, "context carries no mean gradient");
}

KernelVector weighted_copies(const std::string& prefix, const Kernel& g, const Eigen::MatrixXd& w) {
    auto weights = std::make_shared<const Eigen::MatrixXd>(w);
    KernelVector out;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        out.push_back(custom_kernel(prefix + std::to_string(j) + ":" + g.name,
                                    [weights, j](std::size_t k, double) { return (*weights)(k, j); }, g));
    return out;
}

}  // namespace

KernelVector score_kernel(const MeasureContext& ctx) {
    require_gradient(ctx);
    auto grad = std::make_shared<const Eigen::MatrixXd>(ctx.gradient());
    KernelVector psi;
    for (std::size_t j = 0; j < ctx.param_dim(); ++j)
        psi.push_back(linear_kernel("psi" + std::to_string(j),
                                    [grad, j](std::size_t k, double m) { return (*grad)(k, j) / m; }));
    return psi;
}

KernelVector least_squares_kernel(const MeasureContext& ctx) {
    require_gradient(ctx);
    auto grad = std::make_shared<const Eigen::MatrixXd>(ctx.gradient());
    KernelVector b;
    for (std::size_t j = 0; j < ctx.param_dim(); ++j)
        b.push_back(linear_kernel("ls" + std::to_string(j),
                                  [grad, j](std::size_t k, double) { return -2.0 * (*grad)(k, j); }));
    return b;
}

Eigen::MatrixXd optimal_gamma_weights(const Kernel& g, const MeasureContext& ctx) {
    require_gradient(ctx);
    const std::size_t K = ctx.size();
    Eigen::MatrixXd w(K, ctx.param_dim());
    for (std::size_t k = 0; k < K; ++k) {
        const double m = ctx.mean(k);
        const double c = c_function(g, k, m, ctx.tol());
        const double e2 = expect(g, k, m, 2, ctx.tol());
        if (!(e2 > 0.0)) fail(ErrorKind::degenerate, g.name + " has zero variance at bin " + std::to_string(k));
        w.row(k) = ctx.gradient().row(k) * (c / (m * e2));
    }
    return w;
}

KernelVector optimal_gamma(const Kernel& g, const MeasureContext& ctx) {
    return weighted_copies("gamma", g, optimal_gamma_weights(g, ctx));
}

KernelVector estimating_kernels(const EstimatorSpec& spec, const MeasureContext& ctx) {
    switch (spec.method) {
        case EstimationMethod::mle: return score_kernel(ctx);
        case EstimationMethod::least_squares: return least_squares_kernel(ctx);
        case EstimationMethod::weighted: {
            const Eigen::MatrixXd w = spec.omega ? spec.omega(ctx) : ctx.gradient();
            if (static_cast<std::size_t>(w.rows()) != ctx.size() || static_cast<std::size_t>(w.cols()) != ctx.param_dim())
                fail(ErrorKind::usage, "weight matrix has the wrong shape");
            return weighted_copies("omega", spec.base, w);
        }
        case EstimationMethod::optimal_gamma: return optimal_gamma(spec.base, ctx);
    }
    fail(ErrorKind::usage, "unknown estimator");
}

Eigen::MatrixXd fisher_information(const MeasureContext& ctx) {
    require_gradient(ctx);
    const std::size_t K = ctx.size();
    const auto p = static_cast<Eigen::Index>(ctx.param_dim());
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t k = 0; k < K; ++k) {
        const Eigen::RowVectorXd d = ctx.gradient().row(k);
        F += d.transpose() * d / ctx.mean(k);
    }
    return F / static_cast<double>(K);
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (A + A.transpose()));
    if (eig.info() != Eigen::Success) fail(ErrorKind::numeric, "eigendecomposition failed");
    const Eigen::VectorXd ev = eig.eigenvalues();
    if (ev.minCoeff() < 1e-12) fail(ErrorKind::rank, "matrix is singular or not positive definite");
    return eig.eigenvectors() * ev.cwiseInverse().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd orthonormal_score_weights(const MeasureContext& ctx) {
    const Eigen::MatrixXd S = inverse_sqrt(fisher_information(ctx));
    Eigen::MatrixXd W = ctx.gradient() * S;  // S is symmetric
    for (std::size_t k = 0; k < ctx.size(); ++k) W.row(k) /= ctx.mean(k);
    return W;
}

KernelVector orthonormal_score(const MeasureContext& ctx) {
    auto W = std::make_shared<const Eigen::MatrixXd>(orthonormal_score_weights(ctx));
    KernelVector s;
    for (Eigen::Index j = 0; j < W->cols(); ++j)
        s.push_back(linear_kernel("s" + std::to_string(j), [W, j](std::size_t k, double) { return (*W)(k, j); }));
    return s;
}

// ---- solver

MeanModel moment_start(const FamilyPtr& family, const Grid& grid, const BinnedCounts& data) {
    if (data.size() != grid.size()) fail(ErrorKind::validation, "data length differs from grid size");
    const double c0 = std::max(static_cast<double>(data.total()) / static_cast<double>(grid.size()), 1e-6);
    std::vector<double> theta{c0};
    auto beta = family->moment_start(grid, data);
    if (!family->admissible(beta)) beta.assign(family->shape_dim(), 0.0);
    theta.insert(theta.end(), beta.begin(), beta.end());
    return MeanModel(family, theta);
}

namespace {

struct Evaluation {
    Eigen::VectorXd F;
    Eigen::MatrixXd M;
};

class EquationSystem {
public:
    EquationSystem(const EstimatorSpec& spec, const BinnedCounts& data, const Grid& grid, double tol)
        : spec_(spec), data_(data), grid_(grid), tol_(tol) {}

    Evaluation operator()(const MeanModel& model, bool need_jacobian) const {
        const std::size_t K = grid_.size();
        const double rootK = std::sqrt(static_cast<double>(K));
        model.evaluate(grid_, m_, &dm_);
        const auto p = dm_.cols();
        Evaluation e;
        if (spec_.method == EstimationMethod::mle) {
            e.F = Eigen::VectorXd::Zero(p);
            if (need_jacobian) e.M = Eigen::MatrixXd::Zero(p, p);
            for (std::size_t k = 0; k < K; ++k) {
                const double r = (data_[k] - m_[k]) / m_[k];
                for (Eigen::Index i = 0; i < p; ++i) {
                    const double di = dm_(static_cast<Eigen::Index>(k), i);
                    e.F(i) += di * r;
                    if (!need_jacobian) continue;
                    for (Eigen::Index j = 0; j <= i; ++j) e.M(i, j) += di * dm_(static_cast<Eigen::Index>(k), j) / m_[k];
                }
            }
            if (need_jacobian)
                for (Eigen::Index i = 0; i < p; ++i)
                    for (Eigen::Index j = i + 1; j < p; ++j) e.M(i, j) = e.M(j, i);
            e.F /= rootK;
            if (need_jacobian) e.M /= static_cast<double>(K);
            return e;
        }
        const MeasureContext ctx(grid_, m_, dm_, tol_);
        const auto b = estimating_kernels(spec_, ctx);
        e.F = evaluate_statistics(b, data_, ctx);
        if (need_jacobian) e.M = gram(b, score_kernel(ctx), ctx);
        return e;
    }

private:
    const EstimatorSpec& spec_;
    const BinnedCounts& data_;
    const Grid& grid_;
    double tol_;
    mutable std::vector<double> m_;
    mutable Eigen::MatrixXd dm_;
};

bool try_eval(const EquationSystem& sys, const MeanModel& base, const std::vector<double>& theta, bool jac,
              Evaluation& out) {
    if (!base.admissible(theta)) return false;
    try {
        out = sys(base.with_theta(theta), jac);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::model || e.kind() == ErrorKind::numeric) return false;
        throw;
    }
    return out.F.allFinite();
}

void check_invertible(const Eigen::MatrixXd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (!(sv.minCoeff() > 1e-12 * std::max(1.0, sv.maxCoeff()))) fail(ErrorKind::rank, "singular Jacobian <b,psi^T>");
}

// Bisection for one-parameter problems where Newton stalls.
bool bisect_one(const EquationSystem& sys, const MeanModel& base, double start, double tol, std::vector<double>& theta,
                Evaluation& ev) {
    auto F = [&](double c, Evaluation& e) { return try_eval(sys, base, {c}, false, e); };
    Evaluation e_lo, e_hi;
    double lo = start, hi = start;
    if (!F(lo, e_lo)) return false;
    e_hi = e_lo;
    for (int i = 0; i < 80 && e_lo.F(0) * e_hi.F(0) > 0.0; ++i) {
        lo *= 0.5;
        if (!F(lo, e_lo)) return false;
        if (e_lo.F(0) * e_hi.F(0) <= 0.0) break;
        hi *= 2.0;
        if (!F(hi, e_hi)) return false;
    }
    if (e_lo.F(0) * e_hi.F(0) > 0.0) return false;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        Evaluation e_mid;
        if (!F(mid, e_mid)) return false;
        if (std::abs(e_mid.F(0)) < tol || hi - lo < 1e-15 * mid) {
            theta = {mid};
            ev = e_mid;
            return std::abs(e_mid.F(0)) < tol;
        }
        if ((e_mid.F(0) > 0.0) == (e_lo.F(0) > 0.0)) {
            lo = mid;
            e_lo = e_mid;
        } else {
            hi = mid;
        }
    }
    return false;
}

}  // namespace

FitResult solve(const EstimatorSpec& spec, const BinnedCounts& data, const Grid& grid, const MeanModel& init,
                const SolveOptions& opts) {
    if (data.size() != grid.size()) fail(ErrorKind::validation, "data length differs from grid size");
    if (!init.admissible(init.theta())) fail(ErrorKind::validation, "initial parameters are not admissible");
    const EquationSystem sys(spec, data, grid, opts.truncation_tol);
    const double rootK = std::sqrt(static_cast<double>(grid.size()));
    std::vector<double> theta = init.theta();
    Evaluation cur = sys(init, true);
    FitResult res;
    int it = 0;
    bool ok = cur.F.lpNorm<Eigen::Infinity>() < opts.tol;
    while (!ok && it < opts.max_iter) {
        check_invertible(cur.M);
        const Eigen::VectorXd step = (rootK * cur.M).fullPivLu().solve(cur.F);
        const double f0 = cur.F.norm();
        double lambda = 1.0;
        bool accepted = false;
        Evaluation trial;
        std::vector<double> next(theta.size());
        for (int h = 0; h < 40 && !accepted; ++h, lambda *= 0.5) {
            for (std::size_t j = 0; j < theta.size(); ++j) next[j] = theta[j] + lambda * step(j);
            accepted = try_eval(sys, init, next, true, trial) && trial.F.norm() <= f0;
        }
        if (!accepted) break;
        ++it;
        theta = next;
        cur = std::move(trial);
        ok = cur.F.lpNorm<Eigen::Infinity>() < opts.tol;
    }
    if (!ok && theta.size() == 1) {
        Evaluation ev;
        std::vector<double> t1;
        if (bisect_one(sys, init, theta[0], opts.tol, t1, ev)) {
            theta = t1;
            cur = sys(init.with_theta(theta), true);
            ok = cur.F.lpNorm<Eigen::Infinity>() < opts.tol;
        }
    }
    res.model = init.with_theta(theta);
    res.theta = theta;
    res.iterations = it;
    res.converged = ok;
    res.residual = cur.F.lpNorm<Eigen::Infinity>();
    res.b_psi = cur.M;
    if (spec.method == EstimationMethod::mle) {
        res.psi_psi = cur.M;
    } else {
        res.psi_psi = fisher_information(res.model.context(grid, opts.truncation_tol));
    }
    return res;
}

FitResult fit(const EstimatorSpec& spec, const BinnedCounts& data, const Grid& grid, const FamilyPtr& family,
              const SolveOptions& opts) {
    return solve(spec, data, grid, moment_start(family, grid, data), opts);
}

}  // namespace divgof
