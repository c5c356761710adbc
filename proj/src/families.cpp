#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "divgof/error.hpp"
#include "divgof/models.hpp"

namespace divgof {

DensityFamily::DensityFamily(double low, double high) : low_(low), high_(high) {
    if (!(high > low) || !std::isfinite(low) || !std::isfinite(high))
        fail(ErrorKind::validation, "family domain must be a finite interval");
}

std::vector<double> DensityFamily::moment_start(const Grid&, const BinnedCounts&) const {
    return std::vector<double>(shape_dim(), 0.0);
}

void DensityFamily::cdf_many(std::span<const double> xs, std::span<const double> beta, std::span<double> F,
                             std::span<double> grad) const {
    const std::size_t q = shape_dim();
    for (std::size_t i = 0; i < xs.size(); ++i)
        F[i] = cdf(xs[i], beta, grad.empty() ? std::span<double>() : grad.subspan(i * q, q));
}

double DensityFamily::match_mean(const Grid& grid, double target, double lo, double hi) const {
    const auto edges = grid.edges();
    auto mean_at = [&](double beta) {
        double prev = cdf(edges[0], std::span<const double>(&beta, 1), {});
        double s = 0.0, mass = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double next = cdf(edges[k + 1], std::span<const double>(&beta, 1), {});
            s += (next - prev) * grid.center(k);
            mass += next - prev;
            prev = next;
        }
        return s / mass;
    };
    double f_lo = mean_at(lo) - target;
    double f_hi = mean_at(hi) - target;
    if (f_lo * f_hi > 0.0) return std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
    for (int it = 0; it < 100 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = mean_at(mid) - target;
        if (f_mid * f_lo <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

struct CountMoments {
    double mean = 0.0;
    double var = 0.0;
};

CountMoments center_moments(const Grid& grid, const BinnedCounts& data) {
    double n = 0.0, s = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid.center(k);
        n += data[k];
        s += data[k] * x;
        s2 += data[k] * x * x;
    }
    if (n <= 0.0) return {0.5 * (grid.low() + grid.high()), grid.volume() * grid.volume() / 12.0};
    const double m = s / n;
    return {m, std::max(s2 / n - m * m, 1e-12)};
}

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// expm1(y)/y and its derivative, with series near y = 0.
double h_ratio(double y) {
    if (std::abs(y) < 1e-2) return 1.0 + y / 2.0 + y * y / 6.0 + y * y * y / 24.0 + y * y * y * y / 120.0;
    return std::expm1(y) / y;
}

double h_ratio_prime(double y) {
    if (std::abs(y) < 1e-2)
        return 0.5 + y / 3.0 + y * y / 8.0 + y * y * y / 30.0 + y * y * y * y / 144.0;
    return (y * std::exp(y) - std::expm1(y)) / (y * y);
}

// int_a^x t^{-beta} dt and its beta-derivative, for 0 < a <= x.
struct PowerIntegral {
    double value;
    double dbeta;
};

PowerIntegral power_integral(double a, double x, double beta) {
    const double ell = std::log(x / a);
    const double g = 1.0 - beta;
    const double scale = std::pow(a, g);
    const double h = h_ratio(g * ell);
    const double value = scale * ell * h;
    const double dgamma = scale * (std::log(a) * ell * h + ell * ell * h_ratio_prime(g * ell));
    return {value, -dgamma};
}

// ---- Constant

class ConstantFamily final : public DensityFamily {
public:
    using DensityFamily::DensityFamily;
    std::string name() const override { return "Constant"; }
    std::string spec() const override { return "constant"; }
    std::size_t shape_dim() const override { return 0; }
    bool admissible(std::span<const double>) const override { return true; }
    double density(double, std::span<const double>) const override { return 1.0 / (high_ - low_); }
    double cdf(double x, std::span<const double>, std::span<double>) const override {
        return (x - low_) / (high_ - low_);
    }
};

// ---- Linear: (1 + beta u)/L with u = 2(x - mid)/L

class LinearFamily final : public DensityFamily {
public:
    using DensityFamily::DensityFamily;
    std::string name() const override { return "Linear"; }
    std::string spec() const override { return "linear"; }
    std::size_t shape_dim() const override { return 1; }
    bool admissible(std::span<const double> b) const override { return std::abs(b[0]) < 1.0; }
    double density(double x, std::span<const double> b) const override {
        const double L = high_ - low_;
        return (1.0 + b[0] * u(x)) / L;
    }
    double cdf(double x, std::span<const double> b, std::span<double> grad) const override {
        const double L = high_ - low_;
        const double uu = u(x);
        const double q = (uu * uu - 1.0) / 4.0;
        if (!grad.empty()) grad[0] = q;
        return (x - low_) / L + b[0] * q;
    }
    std::vector<double> moment_start(const Grid& grid, const BinnedCounts& data) const override {
        const double mid = 0.5 * (low_ + high_);
        const double beta = 6.0 * (center_moments(grid, data).mean - mid) / (high_ - low_);
        return {std::clamp(beta, -0.95, 0.95)};
    }

private:
    double u(double x) const { return (2.0 * x - low_ - high_) / (high_ - low_); }
};

// ---- PiecewiseLinear: proportional to 1 + beta (x - xi)/L below xi, 1 above

class PiecewiseLinearFamily final : public DensityFamily {
public:
    PiecewiseLinearFamily(double low, double high, double xi) : DensityFamily(low, high), xi_(xi) {
        if (!(xi > low && xi < high)) fail(ErrorKind::validation, "piecewise breakpoint must be inside the domain");
    }
    std::string name() const override { return "PiecewiseLinear"; }
    std::string spec() const override { return "piecewise:" + fmt_num(xi_); }
    std::size_t shape_dim() const override { return 1; }
    std::vector<double> breakpoints() const override { return {xi_}; }
    bool admissible(std::span<const double> b) const override {
        const double L = high_ - low_;
        return std::isfinite(b[0]) && 1.0 + b[0] * (low_ - xi_) / L > 0.0;
    }
    double density(double x, std::span<const double> b) const override {
        const double L = high_ - low_;
        const double f = x < xi_ ? 1.0 + b[0] * (x - xi_) / L : 1.0;
        return f / norm(b[0]);
    }
    double cdf(double x, std::span<const double> b, std::span<double> grad) const override {
        const double L = high_ - low_;
        const double d0 = (low_ - xi_) * (low_ - xi_);
        const double y = std::min(x, xi_);
        const double G_beta = ((y - xi_) * (y - xi_) - d0) / (2.0 * L);
        const double G = (x - low_) + b[0] * G_beta;
        const double Z = norm(b[0]);
        const double Z_beta = -d0 / (2.0 * L);
        if (!grad.empty()) grad[0] = (G_beta * Z - G * Z_beta) / (Z * Z);
        return G / Z;
    }
    std::vector<double> moment_start(const Grid& grid, const BinnedCounts& data) const override {
        const double L = high_ - low_;
        const double upper = 0.99 * L / (xi_ - low_);
        return {match_mean(grid, center_moments(grid, data).mean, -50.0, upper)};
    }

private:
    double norm(double beta) const {
        const double L = high_ - low_;
        return L - beta * (xi_ - low_) * (xi_ - low_) / (2.0 * L);
    }
    double xi_;
};

// ---- TruncatedExponential: proportional to exp(-beta x)

class TruncatedExponentialFamily final : public DensityFamily {
public:
    using DensityFamily::DensityFamily;
    std::string name() const override { return "TruncatedExponential"; }
    std::string spec() const override { return "texp"; }
    std::size_t shape_dim() const override { return 1; }
    bool admissible(std::span<const double> b) const override {
        return std::isfinite(b[0]) && std::abs(b[0]) * (high_ - low_) < 700.0;
    }
    double density(double x, std::span<const double> b) const override {
        const double L = high_ - low_;
        const double beta = b[0];
        if (std::abs(beta * L) < 1e-12) return 1.0 / L;
        return -beta * std::exp(-beta * (x - low_)) / std::expm1(-beta * L);
    }
    double cdf(double x, std::span<const double> b, std::span<double> grad) const override {
        const double L = high_ - low_;
        const double s = x - low_;
        const double beta = b[0];
        if (std::abs(beta * L) < 1e-5) {
            const double c2 = s * s / 6.0 - s * L / 4.0 + L * L / 12.0;
            if (!grad.empty()) grad[0] = (s / L) * ((L - s) / 2.0 + 2.0 * beta * c2);
            return (s / L) * (1.0 + beta * (L - s) / 2.0 + beta * beta * c2);
        }
        const double Es = std::expm1(-beta * s);
        const double EL = std::expm1(-beta * L);
        if (!grad.empty()) grad[0] = (-s * std::exp(-beta * s) * EL + Es * L * std::exp(-beta * L)) / (EL * EL);
        return Es / EL;
    }
    std::vector<double> moment_start(const Grid& grid, const BinnedCounts& data) const override {
        const double L = high_ - low_;
        return {match_mean(grid, center_moments(grid, data).mean, -60.0 / L, 60.0 / L)};
    }
};

// ---- TruncatedNormal: beta = (mean) with fixed variance, or (mean, variance)

double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

class TruncatedNormalFamily final : public DensityFamily {
public:
    TruncatedNormalFamily(double low, double high, double sigma2)
        : DensityFamily(low, high), sigma2_(sigma2), free_(!(sigma2 > 0.0)) {}
    std::string name() const override { return free_ ? "TruncatedNormal(free)" : "TruncatedNormal"; }
    std::string spec() const override { return free_ ? "tnorm" : "tnorm:" + fmt_num(sigma2_); }
    std::size_t shape_dim() const override { return free_ ? 2 : 1; }
    bool admissible(std::span<const double> b) const override {
        if (!std::isfinite(b[0])) return false;
        const double s2 = var(b);
        if (!(s2 > 0.0) || !std::isfinite(s2)) return false;
        return mass(b) > 1e-250;
    }
    std::optional<double> normal_variance(std::span<const double> b) const override { return var(b); }
    double density(double x, std::span<const double> b) const override {
        const double sd = std::sqrt(var(b));
        return normal_pdf((x - b[0]) / sd) / sd / mass(b);
    }
    double cdf(double x, std::span<const double> b, std::span<double> grad) const override {
        const double mu = b[0];
        const double s2 = var(b);
        const double sd = std::sqrt(s2);
        const double za = (low_ - mu) / sd, zb = (high_ - mu) / sd, zx = (x - mu) / sd;
        const double N = between(za, zx);
        const double D = between(za, zb);
        if (!grad.empty()) {
            // d Phi(z)/d mu = -phi(z)/sd; d Phi(z)/d var = -phi(z) z / (2 var)
            const double pa = normal_pdf(za), pb = normal_pdf(zb), px = normal_pdf(zx);
            const double N_mu = -(px - pa) / sd, D_mu = -(pb - pa) / sd;
            grad[0] = (N_mu * D - N * D_mu) / (D * D);
            if (free_) {
                const double N_v = -(px * zx - pa * za) / (2.0 * s2);
                const double D_v = -(pb * zb - pa * za) / (2.0 * s2);
                grad[1] = (N_v * D - N * D_v) / (D * D);
            }
        }
        return N / D;
    }
    void cdf_many(std::span<const double> xs, std::span<const double> b, std::span<double> F,
                  std::span<double> grad) const override {
        const double mu = b[0];
        const double s2 = var(b);
        const double sd = std::sqrt(s2);
        const double za = (low_ - mu) / sd, zb = (high_ - mu) / sd;
        const double D = between(za, zb);
        const double pa = normal_pdf(za), pb = normal_pdf(zb);
        const double D_mu = -(pb - pa) / sd;
        const double D_v = -(pb * zb - pa * za) / (2.0 * s2);
        const std::size_t q = shape_dim();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double zx = (xs[i] - mu) / sd;
            const double N = between(za, zx);
            F[i] = N / D;
            if (grad.empty()) continue;
            const double px = normal_pdf(zx);
            grad[i * q] = (-(px - pa) / sd * D - N * D_mu) / (D * D);
            if (free_) grad[i * q + 1] = (-(px * zx - pa * za) / (2.0 * s2) * D - N * D_v) / (D * D);
        }
    }
    std::vector<double> moment_start(const Grid& grid, const BinnedCounts& data) const override {
        const auto mom = center_moments(grid, data);
        if (free_) return {mom.mean, mom.var};
        const double L = high_ - low_;
        return {match_mean(grid, mom.mean, low_ - 2.0 * L, high_ + 2.0 * L)};
    }

private:
    double var(std::span<const double> b) const { return free_ ? b[1] : sigma2_; }
    double mass(std::span<const double> b) const {
        const double sd = std::sqrt(var(b));
        return between((low_ - b[0]) / sd, (high_ - b[0]) / sd);
    }
    // Phi(z2) - Phi(z1) without cancellation in either tail.
    static double between(double z1, double z2) {
        if (z1 >= 0.0) return upper_tail(z1) - upper_tail(z2);
        if (z2 <= 0.0) return upper_tail(-z2) - upper_tail(-z1);
        return 1.0 - upper_tail(z2) - upper_tail(-z1);
    }
    double sigma2_;
    bool free_;
};

// ---- PowerLaw: proportional to x^{-beta}

class PowerLawFamily final : public DensityFamily {
public:
    PowerLawFamily(double low, double high) : DensityFamily(low, high) {
        if (!(low > 0.0)) fail(ErrorKind::validation, "power-law domain must be positive");
    }
    std::string name() const override { return "PowerLaw"; }
    std::string spec() const override { return "powerlaw"; }
    std::size_t shape_dim() const override { return 1; }
    bool admissible(std::span<const double> b) const override {
        return std::isfinite(b[0]) && std::abs(b[0]) < 200.0;
    }
    double density(double x, std::span<const double> b) const override {
        return std::pow(x, -b[0]) / power_integral(low_, high_, b[0]).value;
    }
    double cdf(double x, std::span<const double> b, std::span<double> grad) const override {
        const auto Ix = power_integral(low_, std::max(x, low_), b[0]);
        const auto Ib = power_integral(low_, high_, b[0]);
        if (!grad.empty()) grad[0] = (Ix.dbeta * Ib.value - Ix.value * Ib.dbeta) / (Ib.value * Ib.value);
        return Ix.value / Ib.value;
    }
    std::vector<double> moment_start(const Grid& grid, const BinnedCounts& data) const override {
        return {match_mean(grid, center_moments(grid, data).mean, -50.0, 50.0)};
    }
};

// ---- BrokenPowerLaw: x^{-b1} below xi, continuous x^{-b2} above

class BrokenPowerLawFamily final : public DensityFamily {
public:
    BrokenPowerLawFamily(double low, double high, double xi) : DensityFamily(low, high), xi_(xi) {
        if (!(low > 0.0)) fail(ErrorKind::validation, "power-law domain must be positive");
        if (!(xi > low && xi < high)) fail(ErrorKind::validation, "cutpoint must be inside the domain");
    }
    std::string name() const override { return "BrokenPowerLaw"; }
    std::string spec() const override { return "bpl:" + fmt_num(xi_); }
    std::size_t shape_dim() const override { return 2; }
    std::vector<double> breakpoints() const override { return {xi_}; }
    bool admissible(std::span<const double> b) const override {
        return std::isfinite(b[0]) && std::isfinite(b[1]) && std::abs(b[0]) < 200.0 && std::abs(b[1]) < 200.0;
    }
    double density(double x, std::span<const double> b) const override {
        double g[2];
        const double Z = cumulative(high_, b, g);
        const double f = x < xi_ ? std::pow(x, -b[0]) : std::pow(xi_, b[1] - b[0]) * std::pow(x, -b[1]);
        return f / Z;
    }
    double cdf(double x, std::span<const double> b, std::span<double> grad) const override {
        double gx[2], gz[2];
        const double G = cumulative(std::max(x, low_), b, gx);
        const double Z = cumulative(high_, b, gz);
        if (!grad.empty())
            for (int j = 0; j < 2; ++j) grad[j] = (gx[j] * Z - G * gz[j]) / (Z * Z);
        return G / Z;
    }
    std::vector<double> moment_start(const Grid& grid, const BinnedCounts& data) const override {
        PowerLawFamily pl(low_, high_);
        const double beta = pl.moment_start(grid, data)[0];
        return {beta, beta};
    }

private:
    double cumulative(double x, std::span<const double> b, double* grad) const {
        const auto lower = power_integral(low_, std::min(x, xi_), b[0]);
        double G = lower.value;
        grad[0] = lower.dbeta;
        grad[1] = 0.0;
        if (x > xi_) {
            const double ell = std::log(x / xi_);
            const double g2 = 1.0 - b[1];
            const double scale = std::pow(xi_, 1.0 - b[0]);
            const double J = scale * ell * h_ratio(g2 * ell);
            G += J;
            grad[0] += -std::log(xi_) * J;
            grad[1] += -scale * ell * ell * h_ratio_prime(g2 * ell);
        }
        return G;
    }
    double xi_;
};

double parse_number(const std::string& text, const std::string& spec) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::usage, "bad number in model spec '" + spec + "'");
    }
}

}  // namespace

FamilyPtr constant_family(double low, double high) { return std::make_shared<ConstantFamily>(low, high); }
FamilyPtr linear_family(double low, double high) { return std::make_shared<LinearFamily>(low, high); }
FamilyPtr piecewise_linear_family(double low, double high, double breakpoint) {
    return std::make_shared<PiecewiseLinearFamily>(low, high, breakpoint);
}
FamilyPtr truncated_exponential_family(double low, double high) {
    return std::make_shared<TruncatedExponentialFamily>(low, high);
}
FamilyPtr truncated_normal_family(double low, double high, double sigma2) {
    return std::make_shared<TruncatedNormalFamily>(low, high, sigma2);
}
FamilyPtr power_law_family(double low, double high) { return std::make_shared<PowerLawFamily>(low, high); }
FamilyPtr broken_power_law_family(double low, double high, double cut) {
    return std::make_shared<BrokenPowerLawFamily>(low, high, cut);
}

FamilyPtr make_family(const std::string& spec, double low, double high) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const bool has_arg = colon != std::string::npos;
    const std::string arg = has_arg ? spec.substr(colon + 1) : std::string();
    auto need_arg = [&] {
        if (!has_arg) fail(ErrorKind::usage, "model spec '" + spec + "' needs a parameter");
        return parse_number(arg, spec);
    };
    if (head == "constant" && !has_arg) return constant_family(low, high);
    if (head == "linear" && !has_arg) return linear_family(low, high);
    if (head == "piecewise") return piecewise_linear_family(low, high, need_arg());
    if (head == "texp" && !has_arg) return truncated_exponential_family(low, high);
    if (head == "tnorm") return truncated_normal_family(low, high, has_arg ? parse_number(arg, spec) : 0.0);
    if (head == "powerlaw" && !has_arg) return power_law_family(low, high);
    if (head == "bpl") return broken_power_law_family(low, high, need_arg());
    fail(ErrorKind::usage, "unknown model spec '" + spec + "'");
}

}  // namespace divgof
