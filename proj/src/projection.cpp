#include "divgof/projection.hpp"

#include <cmath>

#include "divgof/error.hpp"

namespace divgof {

Projector::Projector(const EstimatorSpec& spec, const MeasureContext& ctx)
    : ctx_(ctx), mle_(spec.method == EstimationMethod::mle) {
    b_ = estimating_kernels(spec, ctx_);
    psi_ = score_kernel(ctx_);
    b_psi_ = gram(b_, psi_, ctx_);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b_psi_);
    const auto& sv = svd.singularValues();
    if (!(sv.minCoeff() > 1e-12 * std::max(1.0, sv.maxCoeff()))) fail(ErrorKind::rank, "<b,psi^T> is singular");
    b_psi_inv_ = b_psi_.inverse();
    b_b_ = gram(b_, b_, ctx_);
}

Eigen::RowVectorXd Projector::score_products(const Kernel& g) const {
    Eigen::RowVectorXd a(psi_.size());
    for (std::size_t j = 0; j < psi_.size(); ++j) a(j) = inner_product(g, psi_[j], ctx_);
    return a;
}

Eigen::RowVectorXd Projector::coefficients(const Kernel& g) const { return score_products(g) * b_psi_inv_; }

Kernel Projector::apply(const Kernel& g) const {
    const Eigen::RowVectorXd a = coefficients(g);
    std::vector<std::pair<double, Kernel>> terms{{1.0, g}};
    for (std::size_t j = 0; j < b_.size(); ++j) terms.emplace_back(-a(j), b_[j]);
    return combine("Pi:" + g.name, terms);
}

double Projector::projected_norm2(const Kernel& g) const {
    const Eigen::RowVectorXd a = coefficients(g);
    Eigen::VectorXd bg(b_.size());
    for (std::size_t j = 0; j < b_.size(); ++j) bg(j) = inner_product(b_[j], g, ctx_);
    return norm2(g, ctx_) - 2.0 * a.dot(bg) + (a * b_b_ * a.transpose())(0, 0);
}

double Projector::projected_norm2_orthogonal(const Kernel& g) const {
    const auto s = orthonormal_score(ctx_);
    double r = norm2(g, ctx_);
    for (const auto& sj : s) {
        const double c = inner_product(g, sj, ctx_);
        r -= c * c;
    }
    return r;
}

Eigen::VectorXd Projector::projected_c(const Kernel& g) const {
    const Eigen::RowVectorXd a = coefficients(g);
    Eigen::VectorXd out(ctx_.size());
    for (std::size_t k = 0; k < ctx_.size(); ++k) {
        const double m = ctx_.mean(k);
        double c = c_function(g, k, m, ctx_.tol());
        for (std::size_t j = 0; j < b_.size(); ++j) c -= a(j) * c_function(b_[j], k, m, ctx_.tol());
        out(k) = c;
    }
    return out;
}

Projector build_projector(const EstimatorSpec& spec, const MeasureContext& ctx) { return Projector(spec, ctx); }

ProjectedKernel build_projector(const Kernel& g, const EstimatorSpec& spec, const MeasureContext& ctx) {
    const Projector P(spec, ctx);
    ProjectedKernel out;
    out.kernel = P.apply(g);
    out.A = P.score_products(g);
    out.variance = P.projected_norm2(g);
    return out;
}

double gaussian_test(double value, double variance, int sides) {
    if (!(variance > 0.0) || !std::isfinite(variance)) fail(ErrorKind::degenerate, "variance must be positive");
    const double z = value / std::sqrt(variance);
    if (sides == 2) return std::erfc(std::abs(z) / std::sqrt(2.0));
    if (sides == 1) return 0.5 * std::erfc(z / std::sqrt(2.0));
    fail(ErrorKind::usage, "sides must be 1 or 2");
}

double shift(const Kernel& g, const AltSpec& alt, const MeanModel& model, const Grid& grid, bool estimated,
             const EstimatorSpec& spec, ShiftPath path) {
    const MeasureContext ctx = model.context(grid);
    const std::size_t K = grid.size();
    const double T = alt.T > 0.0 ? alt.T : model.c() * static_cast<double>(K);
    const double scale = alt.strength * std::sqrt(static_cast<double>(K) / T) / static_cast<double>(K);
    Eigen::VectorXd C(K);
    std::vector<double> hbar;
    if (estimated && path == ShiftPath::projected_kernel) {
        C = Projector(spec, ctx).projected_c(g);
        hbar = direction_bin_averages(alt, model, grid);
    } else {
        for (std::size_t k = 0; k < K; ++k) C(k) = c_function(g, k, ctx.mean(k), ctx.tol());
        hbar = direction_bin_averages(estimated ? project_hhat(alt, model, grid) : alt, model, grid);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += C(k) * hbar[k];
    return scale * s;
}

bool no_power_check(const Kernel& g, const EstimatorSpec& spec, const MeasureContext& ctx, double tol) {
    return Projector(spec, ctx).projected_c(g).cwiseAbs().maxCoeff() < tol;
}

}  // namespace divgof
