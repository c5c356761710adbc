#include "divgof/measure.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "divgof/error.hpp"

namespace divgof {

namespace {

double log_factorial(int z) {
    int sign = 0;
    return ::lgamma_r(static_cast<double>(z) + 1.0, &sign);
}

void require_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "non-finite value in " + what);
}

}  // namespace

// ---- Grid

Grid::Grid(double low, double high, std::size_t K) : low_(low), high_(high), K_(K) {
    if (K == 0) fail(ErrorKind::validation, "grid needs at least one bin");
    if (!(high > low) || !std::isfinite(low) || !std::isfinite(high))
        fail(ErrorKind::validation, "grid domain must be a finite interval with high > low");
}

double Grid::edge(std::size_t i) const {
    if (i == K_) return high_;
    return low_ + (high_ - low_) * (static_cast<double>(i) / static_cast<double>(K_));
}

std::vector<double> Grid::edges() const {
    std::vector<double> e(K_ + 1);
    for (std::size_t i = 0; i <= K_; ++i) e[i] = edge(i);
    return e;
}

std::vector<double> Grid::centers() const {
    std::vector<double> c(K_);
    for (std::size_t k = 0; k < K_; ++k) c[k] = center(k);
    return c;
}

std::size_t Grid::bin_of(double x) const {
    if (x <= low_) return 0;
    if (x >= high_) return K_ - 1;
    auto k = static_cast<std::size_t>((x - low_) / delta());
    if (k >= K_) k = K_ - 1;
    while (k > 0 && x < edge(k)) --k;
    while (k + 1 < K_ && x >= edge(k + 1)) ++k;
    return k;
}

// ---- BinnedCounts

BinnedCounts::BinnedCounts(std::vector<int> counts) : counts_(std::move(counts)) {
    for (std::size_t k = 0; k < counts_.size(); ++k)
        if (counts_[k] < 0) fail(ErrorKind::validation, "negative count at bin " + std::to_string(k));
}

long long BinnedCounts::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), 0LL);
}

// ---- kernels

Kernel linear_kernel(std::string name, BinFn weight) {
    Kernel g;
    g.name = std::move(name);
    g.eval = [weight](std::size_t k, int z, double m) { return weight(k, m) * (z - m); };
    g.known_c = [weight](std::size_t k, double m) { return weight(k, m) * m; };
    g.linear_weight = weight;
    return g;
}

Kernel zero_kernel() {
    return linear_kernel("zero", [](std::size_t, double) { return 0.0; });
}

Kernel scaled(const Kernel& g, double factor, std::string name) {
    return combine(name.empty() ? g.name : std::move(name), {{factor, g}});
}

Kernel combine(std::string name, const std::vector<std::pair<double, Kernel>>& terms) {
    auto parts = std::make_shared<const std::vector<std::pair<double, Kernel>>>(terms);
    Kernel out;
    out.name = std::move(name);
    out.eval = [parts](std::size_t k, int z, double m) {
        double s = 0.0;
        for (const auto& [a, g] : *parts) s += a * g.eval(k, z, m);
        return s;
    };
    bool all_c = true, all_linear = true, all_centered = true;
    for (const auto& t : terms) {
        all_c = all_c && static_cast<bool>(t.second.known_c);
        all_linear = all_linear && t.second.is_linear();
        all_centered = all_centered && t.second.centered;
    }
    out.centered = all_centered;
    if (all_c) {
        out.known_c = [parts](std::size_t k, double m) {
            double s = 0.0;
            for (const auto& [a, g] : *parts) s += a * g.known_c(k, m);
            return s;
        };
    }
    if (all_linear) {
        out.linear_weight = [parts](std::size_t k, double m) {
            double s = 0.0;
            for (const auto& [a, g] : *parts) s += a * g.linear_weight(k, m);
            return s;
        };
    }
    return out;
}

Kernel restricted(const Kernel& g, std::vector<char> mask, std::string name) {
    auto in = std::make_shared<const std::vector<char>>(std::move(mask));
    Kernel out;
    out.name = name.empty() ? g.name + "|A" : std::move(name);
    out.centered = g.centered;
    auto base = std::make_shared<const Kernel>(g);
    out.eval = [in, base](std::size_t k, int z, double m) { return (*in)[k] ? base->eval(k, z, m) : 0.0; };
    if (g.known_c)
        out.known_c = [in, base](std::size_t k, double m) { return (*in)[k] ? base->known_c(k, m) : 0.0; };
    if (g.linear_weight)
        out.linear_weight = [in, base](std::size_t k, double m) {
            return (*in)[k] ? base->linear_weight(k, m) : 0.0;
        };
    return out;
}

// ---- MeasureContext

MeasureContext::MeasureContext(Grid grid, std::vector<double> means, Eigen::MatrixXd gradient,
                               double truncation_tol)
    : grid_(grid), means_(std::move(means)), gradient_(std::move(gradient)), tol_(truncation_tol) {
    if (means_.size() != grid_.size()) fail(ErrorKind::validation, "means length differs from grid size");
    if (gradient_.size() != 0 && static_cast<std::size_t>(gradient_.rows()) != means_.size())
        fail(ErrorKind::validation, "gradient rows differ from grid size");
    for (std::size_t k = 0; k < means_.size(); ++k)
        if (!(means_[k] > 0.0) || !std::isfinite(means_[k]))
            fail(ErrorKind::model, "nonpositive mean at bin " + std::to_string(k));
    if (!(tol_ > 0.0 && tol_ < 1.0)) fail(ErrorKind::validation, "truncation tolerance must lie in (0,1)");
}

// ---- Poisson numerics

double poisson_pmf(int z, double t) {
    if (t < 0.0 || !std::isfinite(t)) fail(ErrorKind::domain, "Poisson rate must be nonnegative");
    if (z < 0) return 0.0;
    if (t == 0.0) return z == 0 ? 1.0 : 0.0;
    if (z == 0) return std::exp(-t);
    return std::exp(z * std::log(t) - t - log_factorial(z));
}

double poisson_cdf(int q, double t) {
    if (t < 0.0 || !std::isfinite(t)) fail(ErrorKind::domain, "Poisson rate must be nonnegative");
    if (q < 0) return 0.0;
    if (t == 0.0) return 1.0;
    double p = std::exp(-t);
    if (p > 0.0) {
        double s = p;
        for (int z = 1; z <= q; ++z) {
            p *= t / z;
            s += p;
        }
        return std::min(s, 1.0);
    }
    double s = 0.0;
    for (int z = 0; z <= q; ++z) s += poisson_pmf(z, t);
    return std::min(s, 1.0);
}

namespace {

// Large means: unnormalized weights recursed outward from the mode, divided by their total.
double poisson_sum_from_mode(double m, const std::function<double(int)>& f, double tol) {
    const int mode = static_cast<int>(std::floor(m));
    double sum = 0.0, abs_sum = 0.0, mass = 0.0;
    auto add = [&](int z, double w) {
        const double v = f(z);
        if (!std::isfinite(v)) require_finite(v, "Poisson sum at z=" + std::to_string(z));
        sum += v * w;
        abs_sum += std::abs(v * w);
        mass += w;
        return std::abs(v * w);
    };
    add(mode, 1.0);
    double w = 1.0;
    for (int z = mode - 1; z >= 0; --z) {
        w *= (z + 1.0) / m;
        const double t = add(z, w);
        if (w < tol * 1e-3 && t <= tol * abs_sum) break;
    }
    w = 1.0;
    const int z_cap = static_cast<int>(m + 60.0 * std::sqrt(m) + 200.0);
    for (int z = mode + 1; z <= z_cap; ++z) {
        w *= m / z;
        const double t = add(z, w);
        if (w < tol * 1e-3 && t <= tol * abs_sum) break;
    }
    return sum / mass;
}

}  // namespace

double poisson_sum(double m, const std::function<double(int)>& f, double tol) {
    if (!(m > 0.0) || !std::isfinite(m)) fail(ErrorKind::domain, "Poisson mean must be positive");
    if (m >= 700.0) return poisson_sum_from_mode(m, f, tol);
    double p = std::exp(-m);
    double sum = 0.0, abs_sum = 0.0;
    const int z_cap = static_cast<int>(m + 60.0 * std::sqrt(m) + 200.0);
    for (int z = 0; z <= z_cap; ++z) {
        if (z > 0) p *= m / z;
        const double v = f(z);
        if (!std::isfinite(v)) require_finite(v, "Poisson sum at z=" + std::to_string(z));
        const double term = v * p;
        sum += term;
        abs_sum += std::abs(term);
        if (z + 2 > m) {
            const double r = m / (z + 2.0);
            const double tail = p * (m / (z + 1.0)) / (1.0 - r);
            if (tail < tol && std::abs(term) <= tol * abs_sum) break;
        }
    }
    return sum;
}

double expect(const Kernel& g, std::size_t bin, double m, int power, double tol) {
    if (power == 1) return poisson_sum(m, [&](int z) { return g.eval(bin, z, m); }, tol);
    if (power == 2)
        return poisson_sum(
            m,
            [&](int z) {
                const double v = g.eval(bin, z, m);
                return v * v;
            },
            tol);
    fail(ErrorKind::usage, "expect supports power 1 or 2");
}

double c_function_by_sum(const Kernel& g, std::size_t bin, double m, double tol) {
    return poisson_sum(m, [&](int z) { return g.eval(bin, z, m) * (z - m); }, tol);
}

double c_function(const Kernel& g, std::size_t bin, double m, double tol) {
    if (g.known_c) {
        const double c = g.known_c(bin, m);
        if (!std::isfinite(c)) require_finite(c, "closed-form C of " + g.name);
        return c;
    }
    return c_function_by_sum(g, bin, m, tol);
}

namespace {

double pair_expectation(const Kernel& a, const Kernel& b, std::size_t k, double m, double tol) {
    if (a.is_linear() && b.is_linear()) return a.linear_weight(k, m) * b.linear_weight(k, m) * m;
    if (a.is_linear()) return a.linear_weight(k, m) * c_function(b, k, m, tol);
    if (b.is_linear()) return b.linear_weight(k, m) * c_function(a, k, m, tol);
    return poisson_sum(m, [&](int z) { return a.eval(k, z, m) * b.eval(k, z, m); }, tol);
}

}  // namespace

double inner_product(const Kernel& a, const Kernel& b, const MeasureContext& ctx) {
    const std::size_t K = ctx.size();
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += pair_expectation(a, b, k, ctx.mean(k), ctx.tol());
    if (!std::isfinite(s)) require_finite(s, "inner product <" + a.name + "," + b.name + ">");
    return s / static_cast<double>(K);
}

double norm2(const Kernel& g, const MeasureContext& ctx) { return inner_product(g, g, ctx); }

Eigen::MatrixXd gram(const KernelVector& a, const KernelVector& b, const MeasureContext& ctx) {
    Eigen::MatrixXd G(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) G(i, j) = inner_product(a[i], b[j], ctx);
    return G;
}

double evaluate_statistic(const Kernel& g, const BinnedCounts& data, const MeasureContext& ctx) {
    const std::size_t K = ctx.size();
    if (data.size() != K) fail(ErrorKind::validation, "data length differs from grid size");
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double v = g.eval(k, data[k], ctx.mean(k));
        if (!std::isfinite(v))
            fail(ErrorKind::numeric, g.name + " is not finite at bin " + std::to_string(k));
        s += v;
    }
    return s / std::sqrt(static_cast<double>(K));
}

Eigen::VectorXd evaluate_statistics(const KernelVector& g, const BinnedCounts& data, const MeasureContext& ctx) {
    Eigen::VectorXd v(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) v(j) = evaluate_statistic(g[j], data, ctx);
    return v;
}

}  // namespace divgof
