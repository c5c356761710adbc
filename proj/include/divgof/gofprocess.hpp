#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "divgof/estimation.hpp"
#include "divgof/measure.hpp"
#include "divgof/models.hpp"
#include "divgof/replicates.hpp"

namespace divgof {

// Nested sets A_{j/K} = first j bins of `order`.
class ScanningFamily {
public:
    explicit ScanningFamily(std::vector<std::size_t> order);
    static ScanningFamily left_to_right(std::size_t K);

    std::size_t size() const { return order_.size(); }
    const std::vector<std::size_t>& order() const { return order_; }
    double t(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(order_.size()); }
    std::vector<double> t_values() const;
    std::vector<char> mask(std::size_t j) const;

private:
    std::vector<std::size_t> order_;
};

// S(t_j), j = 0..K
std::vector<double> partial_sums(const Kernel& g, const BinnedCounts& data, const MeasureContext& ctx,
                                 const ScanningFamily& scan);
double ks_statistic(const Kernel& g, const BinnedCounts& data, const MeasureContext& ctx, const ScanningFamily& scan);

// ks: max |S|; abs: |S(1)|; upper: S(1); lower: -S(1)
enum class Functional { ks, abs, upper, lower };
Functional parse_functional(const std::string& name);
double apply_functional(Functional f, std::span<const double> process);

enum class BootstrapMode { classical, projected };
BootstrapMode parse_bootstrap_mode(const std::string& name);

struct BootstrapPlan {
    std::size_t replicates = 1000;
    BootstrapMode mode = BootstrapMode::classical;
    std::uint64_t seed = 1;
    Functional statistic = Functional::ks;
    ParallelOptions parallel;
    SolveOptions solve;
};

struct BootstrapResult {
    double p_value = 1.0;
    double observed = 0.0;
    std::vector<double> null_values;  // accepted replicates, replicate order
    std::size_t failures = 0;
    double seconds = 0.0;
    std::string warning;
};

// (1 + #{T* >= observed}) / (1 + R)
double bootstrap_p(std::span<const double> null_values, double observed);

// Null distribution of functional(Pi g 1_A process) at the fitted model.
// classical refits every replicate; projected keeps theta_hat fixed and removes
// the estimation effect with score products computed once.
BootstrapResult bootstrap_pvalue(const BootstrapPlan& plan, double observed, const MeanModel& fitted, const Grid& grid,
                                 const EstimatorSpec& spec, const Kernel& g, const ScanningFamily& scan);

}  // namespace divgof
