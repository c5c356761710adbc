#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "divgof/measure.hpp"

namespace divgof {

// A shape family lambda_beta on [low, high]. Every shipped family exposes its
// distribution function in closed form, so bin masses are edge differences.
class DensityFamily {
public:
    DensityFamily(double low, double high);
    virtual ~DensityFamily() = default;

    virtual std::string name() const = 0;
    virtual std::string spec() const = 0;
    virtual std::size_t shape_dim() const = 0;
    virtual bool admissible(std::span<const double> beta) const = 0;
    virtual double density(double x, std::span<const double> beta) const = 0;
    // F(x) and dF/dbeta (written to grad, length shape_dim).
    virtual double cdf(double x, std::span<const double> beta, std::span<double> grad) const = 0;
    // F and dF/dbeta at many points; grad is row-major (points x shape_dim).
    virtual void cdf_many(std::span<const double> xs, std::span<const double> beta, std::span<double> F,
                          std::span<double> grad) const;
    virtual std::vector<double> breakpoints() const { return {}; }
    // Variance of the untruncated normal, for the TruncatedNormal family only.
    virtual std::optional<double> normal_variance(std::span<const double>) const { return std::nullopt; }
    // Method-of-moments start from the count-weighted mean (and variance) of bin centers.
    virtual std::vector<double> moment_start(const Grid& grid, const BinnedCounts& data) const;

    double low() const { return low_; }
    double high() const { return high_; }

protected:
    // Bisection on the first moment over [lo, hi]; the mean must be monotone in beta.
    double match_mean(const Grid& grid, double target, double lo, double hi) const;

    double low_;
    double high_;
};

using FamilyPtr = std::shared_ptr<const DensityFamily>;

FamilyPtr constant_family(double low, double high);
FamilyPtr linear_family(double low, double high);
FamilyPtr piecewise_linear_family(double low, double high, double breakpoint);
FamilyPtr truncated_exponential_family(double low, double high);
// sigma2 <= 0 selects the free-variance variant with beta = (mean, variance).
FamilyPtr truncated_normal_family(double low, double high, double sigma2);
FamilyPtr power_law_family(double low, double high);
FamilyPtr broken_power_law_family(double low, double high, double cut);

// constant | linear | piecewise:<xi> | texp | tnorm[:<sigma2>] | powerlaw | bpl:<xi>
FamilyPtr make_family(const std::string& spec, double low, double high);

// theta = (c, beta...); m_k = c K Lambda_beta(bin k).
class MeanModel {
public:
    MeanModel() = default;
    MeanModel(FamilyPtr family, std::vector<double> theta);

    const DensityFamily& family() const { return *family_; }
    const FamilyPtr& family_ptr() const { return family_; }
    const std::vector<double>& theta() const { return theta_; }
    double c() const { return theta_[0]; }
    std::span<const double> beta() const { return std::span<const double>(theta_).subspan(1); }
    std::size_t param_dim() const { return theta_.size(); }
    MeanModel with_theta(std::vector<double> theta) const { return MeanModel(family_, std::move(theta)); }
    bool admissible(std::span<const double> theta) const;
    double density(double x) const { return family_->density(x, beta()); }

    std::vector<double> bin_means(const Grid& grid) const;
    Eigen::MatrixXd dm_dtheta(const Grid& grid) const;
    void evaluate(const Grid& grid, std::vector<double>& means, Eigen::MatrixXd* gradient) const;
    MeasureContext context(const Grid& grid, double tol = default_truncation_tol) const;

private:
    FamilyPtr family_;
    std::vector<double> theta_;
};

// ---- sampling

using Rng = std::mt19937_64;

// Stream for replicate i of a run with the given master seed.
Rng replicate_rng(std::uint64_t master_seed, std::uint64_t replicate);

class PoissonSampler {
public:
    explicit PoissonSampler(std::span<const double> means);
    void draw(Rng& rng, BinnedCounts& out);
    std::size_t size() const { return dists_.size(); }

private:
    std::vector<std::poisson_distribution<int>> dists_;
};

BinnedCounts sample_counts(std::span<const double> means, Rng& rng);

// ---- quadrature over Lambda_beta, split at bin edges and breakpoints

class LambdaQuadrature {
public:
    LambdaQuadrature(const MeanModel& model, const Grid& grid, std::vector<double> extra_breaks = {},
                     int panels_per_bin = 4);

    double integral(const std::function<double(double)>& f) const;
    double bin_integral(std::size_t k, const std::function<double(double)>& f) const;
    std::vector<double> bin_integrals(const std::function<double(double)>& f) const;
    const std::vector<double>& bin_mass() const { return mass_; }
    const Grid& grid() const { return grid_; }

private:
    Grid grid_;
    std::vector<double> x_;
    std::vector<double> w_;
    std::vector<std::size_t> start_;
    std::vector<double> mass_;
};

// ---- alternatives m~ = m (1 + eta h / sqrt(T))

struct AltSpec {
    std::string name = "null";
    std::function<double(double)> h;
    std::vector<double> breakpoints;
    double T = 0.0;  // 0 selects c K
    double strength = 1.0;
    bool mass_preserving = true;
    // h = a f + b for the generating function f, when known.
    double a = 0.0;
    double b = 0.0;
};

enum class DirectionKind { gamma_shape, gaussian_bump, broken_powerlaw, variance_perturbation };

struct DirectionParams {
    double x0 = 0.5;
    double width = 0.05;
    double cut = 1.4;
};

AltSpec null_direction();
AltSpec make_direction(DirectionKind kind, const MeanModel& model, const Grid& grid, DirectionParams params = {});
DirectionKind parse_direction(const std::string& name);

// Bin averages of h under Lambda_beta.
std::vector<double> direction_bin_averages(const AltSpec& alt, const MeanModel& model, const Grid& grid);
std::vector<double> alt_means(const MeanModel& model, const AltSpec& alt, const Grid& grid);
// Removes the part of h spanned by the tangent directions mdot/m.
AltSpec project_hhat(const AltSpec& alt, const MeanModel& model, const Grid& grid);
// Lambda_beta-norm and mean of h.
double direction_norm(const AltSpec& alt, const MeanModel& model, const Grid& grid);
double direction_mean(const AltSpec& alt, const MeanModel& model, const Grid& grid);

}  // namespace divgof
