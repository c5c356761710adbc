#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "divgof/estimation.hpp"
#include "divgof/gofprocess.hpp"
#include "divgof/measure.hpp"
#include "divgof/models.hpp"

namespace divgof {

// A kernel w_k (z - m_k) in standardized coordinates u_k = w_k sqrt(m_k / K).
// Then <a,b> = u_a . u_b and v(a) = u . xi with xi_k = (nu_k - m_k)/sqrt(m_k).
struct LinearForm {
    Eigen::VectorXd u;
};

LinearForm to_form(const Kernel& g, const MeasureContext& ctx);
Kernel to_kernel(const LinearForm& f, const MeasureContext& ctx, std::string name = "form");
Eigen::VectorXd standardized_residuals(const BinnedCounts& data, const MeasureContext& ctx);

// l_t = 1{x in A_t}(z - m)/sqrt(m) for t = j/K
Kernel ell_kernel(std::size_t j, const MeasureContext& ctx, const ScanningFamily& scan);
LinearForm ell_form(std::size_t j, const ScanningFamily& scan);

// U_{a,b} f = f - <f, a-b>/(1 - <a,b>) (a - b); identity when <a,b> = 1.
Kernel apply_uab(const Kernel& a, const Kernel& b, const Kernel& f, const MeasureContext& ctx);
Eigen::VectorXd apply_uab(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& f);

// p consecutive scan blocks; r_j = 1{x in B_j}(z - m)/sqrt(m |B_j| / K). Block j holds
// scan positions floor((j-1)K/p) .. floor(jK/p) - 1.
struct RBasis {
    std::size_t p = 0;
    std::vector<std::size_t> block_end;  // scan position one past each block
    std::vector<LinearForm> r;
};

RBasis make_r_basis(std::size_t p, const ScanningFamily& scan);

class UnitaryChain {
public:
    UnitaryChain() = default;
    // pairs (a~_j, s_j) with a~_1 = r_1, a~_j = U_{j-1} r_j
    UnitaryChain(const std::vector<LinearForm>& r, const std::vector<LinearForm>& s);

    std::size_t p() const { return a_.size(); }
    const std::vector<LinearForm>& a() const { return a_; }
    const std::vector<LinearForm>& s() const { return s_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& f) const;
    // The same operator on general kernels, through measure inner products.
    Kernel apply(const Kernel& f, const MeasureContext& ctx) const;

private:
    std::vector<LinearForm> a_;
    std::vector<LinearForm> s_;
};

std::vector<LinearForm> score_forms(const MeasureContext& ctx);
UnitaryChain build_chain(const RBasis& r, const std::vector<LinearForm>& s);

// v(U_p Pi_r l_t) for t = 0, 1/K, ..., 1.
std::vector<double> transformed_process(const BinnedCounts& data, const MeasureContext& ctx, const UnitaryChain& chain,
                                        const RBasis& r, const ScanningFamily& scan);
// ||l_t||^2 - sum_j <l_t, r_j>^2
std::vector<double> transformed_variance(const RBasis& r, const ScanningFamily& scan);

double ks_star(std::span<const double> process);
double kolmogorov_cdf(double y);
// [K(sqrt(p)(y + 0.6/sqrt(K)))]^p; K = 0 drops the finite-K correction.
double limit_cdf(double y, int p, std::size_t K);

struct KsStarResult {
    FitResult fit;
    std::size_t p = 0;
    std::vector<double> process;
    double statistic = 0.0;
    double p_value = 1.0;
};

// MLE fit, chain at theta_hat, transformed process, and the limit-law p-value.
KsStarResult ks_star_test(const BinnedCounts& data, const Grid& grid, const MeanModel& init, std::size_t p = 0,
                          const SolveOptions& opts = {});

}  // namespace divgof
