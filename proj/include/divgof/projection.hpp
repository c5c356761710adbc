#pragma once

#include <optional>

#include <Eigen/Dense>

#include "divgof/estimation.hpp"
#include "divgof/measure.hpp"
#include "divgof/models.hpp"

namespace divgof {

// Pi g = g - <g,psi^T><b,psi^T>^{-1} b at a fixed context. The Gram matrices are
// computed once; the projector can then be applied to any kernel.
class Projector {
public:
    Projector(const EstimatorSpec& spec, const MeasureContext& ctx);

    const MeasureContext& context() const { return ctx_; }
    const KernelVector& b() const { return b_; }
    const KernelVector& psi() const { return psi_; }
    const Eigen::MatrixXd& b_psi() const { return b_psi_; }
    const Eigen::MatrixXd& b_psi_inv() const { return b_psi_inv_; }
    bool orthogonal() const { return mle_; }

    // <g,psi^T>
    Eigen::RowVectorXd score_products(const Kernel& g) const;
    // <g,psi^T><b,psi^T>^{-1}
    Eigen::RowVectorXd coefficients(const Kernel& g) const;
    Kernel apply(const Kernel& g) const;
    // ||Pi g||^2 from Gram algebra: ||g||^2 - 2 a<b,g> + a<b,b^T>a^T
    double projected_norm2(const Kernel& g) const;
    // ||g||^2 - sum_j <g,s_j>^2, valid for the maximum-likelihood projector
    double projected_norm2_orthogonal(const Kernel& g) const;
    // C(x_k; Pi g) for every bin
    Eigen::VectorXd projected_c(const Kernel& g) const;

private:
    MeasureContext ctx_;
    bool mle_;
    KernelVector b_;
    KernelVector psi_;
    Eigen::MatrixXd b_psi_;
    Eigen::MatrixXd b_psi_inv_;
    Eigen::MatrixXd b_b_;
};

struct ProjectedKernel {
    Kernel kernel;
    Eigen::RowVectorXd A;
    double variance = 0.0;
};

Projector build_projector(const EstimatorSpec& spec, const MeasureContext& ctx);
ProjectedKernel build_projector(const Kernel& g, const EstimatorSpec& spec, const MeasureContext& ctx);

double gaussian_test(double value, double variance, int sides = 2);

enum class ShiftPath { projected_kernel, hhat };

// (eta sqrt(K/T)) (1/K) sum_k C(x_k; G) hbar_k with G = Pi g when estimated, else g.
// ShiftPath::hhat evaluates C(x; g) against the projected direction instead.
double shift(const Kernel& g, const AltSpec& alt, const MeanModel& model, const Grid& grid, bool estimated,
             const EstimatorSpec& spec, ShiftPath path = ShiftPath::projected_kernel);

bool no_power_check(const Kernel& g, const EstimatorSpec& spec, const MeasureContext& ctx, double tol = 1e-9);

}  // namespace divgof
