#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace divgof {

inline constexpr double default_truncation_tol = 1e-14;

// Equal-width bins on [low, high].
class Grid {
public:
    Grid() = default;
    Grid(double low, double high, std::size_t K);

    double low() const { return low_; }
    double high() const { return high_; }
    std::size_t size() const { return K_; }
    double volume() const { return high_ - low_; }
    double delta() const { return (high_ - low_) / static_cast<double>(K_); }
    double edge(std::size_t i) const;
    double center(std::size_t k) const { return 0.5 * (edge(k) + edge(k + 1)); }
    std::vector<double> edges() const;
    std::vector<double> centers() const;
    // Bin containing x; points outside are clamped to the first/last bin.
    std::size_t bin_of(double x) const;

private:
    double low_ = 0.0;
    double high_ = 1.0;
    std::size_t K_ = 1;
};

class BinnedCounts {
public:
    BinnedCounts() = default;
    explicit BinnedCounts(std::vector<int> counts);

    std::size_t size() const { return counts_.size(); }
    int operator[](std::size_t k) const { return counts_[k]; }
    std::span<const int> values() const { return counts_; }
    std::vector<int>& mutable_values() { return counts_; }
    long long total() const;

private:
    std::vector<int> counts_;
};

using KernelFn = std::function<double(std::size_t bin, int z, double m)>;
using BinFn = std::function<double(std::size_t bin, double m)>;

// g(x_k, z, m). known_c, when set, is the closed form of E[g(nu)(nu - m)];
// linear_weight, when set, says g = w(x, m) (z - m).
struct Kernel {
    std::string name;
    KernelFn eval;
    BinFn known_c;
    BinFn linear_weight;
    bool centered = true;

    double operator()(std::size_t bin, int z, double m) const { return eval(bin, z, m); }
    bool is_linear() const { return static_cast<bool>(linear_weight); }
};

using KernelVector = std::vector<Kernel>;

Kernel linear_kernel(std::string name, BinFn weight);
Kernel zero_kernel();
Kernel scaled(const Kernel& g, double factor, std::string name = {});
// sum_i coef_i * g_i; keeps the linear or known-C structure when every term has it.
Kernel combine(std::string name, const std::vector<std::pair<double, Kernel>>& terms);
// g restricted to the bins with mask[k] true.
Kernel restricted(const Kernel& g, std::vector<char> mask, std::string name = {});

// Per-bin means (and optionally their parameter gradients) on a grid.
class MeasureContext {
public:
    MeasureContext() = default;
    MeasureContext(Grid grid, std::vector<double> means, Eigen::MatrixXd gradient = {},
                   double truncation_tol = default_truncation_tol);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return means_.size(); }
    double mean(std::size_t k) const { return means_[k]; }
    std::span<const double> means() const { return means_; }
    const Eigen::MatrixXd& gradient() const { return gradient_; }
    std::size_t param_dim() const { return static_cast<std::size_t>(gradient_.cols()); }
    double tol() const { return tol_; }

private:
    Grid grid_;
    std::vector<double> means_;
    Eigen::MatrixXd gradient_;
    double tol_ = default_truncation_tol;
};

double poisson_pmf(int z, double t);
double poisson_cdf(int q, double t);

// sum_z f(z) p(z|m), stopping once the omitted Poisson tail is below tol and
// the last term is below tol times the accumulated absolute sum.
double poisson_sum(double m, const std::function<double(int)>& f, double tol = default_truncation_tol);

double expect(const Kernel& g, std::size_t bin, double m, int power, double tol = default_truncation_tol);
double c_function(const Kernel& g, std::size_t bin, double m, double tol = default_truncation_tol);
double c_function_by_sum(const Kernel& g, std::size_t bin, double m, double tol = default_truncation_tol);

double inner_product(const Kernel& a, const Kernel& b, const MeasureContext& ctx);
double norm2(const Kernel& g, const MeasureContext& ctx);
Eigen::MatrixXd gram(const KernelVector& a, const KernelVector& b, const MeasureContext& ctx);

double evaluate_statistic(const Kernel& g, const BinnedCounts& data, const MeasureContext& ctx);
Eigen::VectorXd evaluate_statistics(const KernelVector& g, const BinnedCounts& data, const MeasureContext& ctx);

}  // namespace divgof
