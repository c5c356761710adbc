#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divgof/measure.hpp"
#include "divgof/models.hpp"

namespace divgof {

enum class EstimationMethod { mle, least_squares, weighted, optimal_gamma };

// Estimating equations v(b_theta) = 0. For weighted, b_j = omega_j g where omega
// returns a K x p matrix at the current context (default: the mean gradient).
struct EstimatorSpec {
    EstimationMethod method = EstimationMethod::mle;
    Kernel base;
    std::function<Eigen::MatrixXd(const MeasureContext&)> omega;

    static EstimatorSpec mle();
    static EstimatorSpec least_squares();
    static EstimatorSpec weighted(Kernel g, std::function<Eigen::MatrixXd(const MeasureContext&)> omega = {});
    static EstimatorSpec optimal_gamma(Kernel g);
    std::string label() const;
};

// mle | ls | gamma:<kernel> | weighted:<kernel>
EstimatorSpec parse_estimator(const std::string& spec);

// psi_j = (mdot_j/m)(z - m)
KernelVector score_kernel(const MeasureContext& ctx);
// -2 mdot_j (z - m)
KernelVector least_squares_kernel(const MeasureContext& ctx);
// K x p matrix of gamma_j(x_k) = E[g psi_j]/E[g^2]
Eigen::MatrixXd optimal_gamma_weights(const Kernel& g, const MeasureContext& ctx);
// gamma_j g
KernelVector optimal_gamma(const Kernel& g, const MeasureContext& ctx);
KernelVector estimating_kernels(const EstimatorSpec& spec, const MeasureContext& ctx);

Eigen::MatrixXd fisher_information(const MeasureContext& ctx);
// Symmetric inverse square root; eigenvalues below 1e-12 raise a rank error.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& A);
// s = <psi,psi^T>^{-1/2} psi
KernelVector orthonormal_score(const MeasureContext& ctx);
// K x p matrix W with s_j = W_kj (z - m_k).
Eigen::MatrixXd orthonormal_score_weights(const MeasureContext& ctx);

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 50;
    double truncation_tol = default_truncation_tol;
};

struct FitResult {
    MeanModel model;
    std::vector<double> theta;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
    Eigen::MatrixXd b_psi;
    Eigen::MatrixXd psi_psi;
};

// c0 = mean count, beta0 from the family's moment start.
MeanModel moment_start(const FamilyPtr& family, const Grid& grid, const BinnedCounts& data);

FitResult solve(const EstimatorSpec& spec, const BinnedCounts& data, const Grid& grid, const MeanModel& init,
                const SolveOptions& opts = {});
FitResult fit(const EstimatorSpec& spec, const BinnedCounts& data, const Grid& grid, const FamilyPtr& family,
              const SolveOptions& opts = {});

}  // namespace divgof
