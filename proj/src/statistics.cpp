#include "divgof/statistics.hpp"

#include <cmath>
#include <memory>
#include <unordered_map>

#include "divgof/error.hpp"

namespace divgof {

namespace {

double xlogx(int z) { return z > 0 ? z * std::log(static_cast<double>(z)) : 0.0; }

int parse_int(const std::string& text, const std::string& spec) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::usage, "bad integer in kernel spec '" + spec + "'");
    }
}

}  // namespace

double expected_nu_log_nu(double m) {
    thread_local std::unordered_map<double, double> cache;
    if (auto it = cache.find(m); it != cache.end()) return it->second;
    if (cache.size() > 200000) cache.clear();
    const double v = poisson_sum(m, [](int z) { return xlogx(z); });
    cache.emplace(m, v);
    return v;
}

Kernel pearson_kernel() {
    Kernel g;
    g.name = "pearson";
    g.eval = [](std::size_t, int z, double m) { return (z - m) * (z - m) / m - 1.0; };
    g.known_c = [](std::size_t, double) { return 1.0; };
    return g;
}

Kernel cash_kernel() {
    Kernel g;
    g.name = "cash";
    g.eval = [](std::size_t, int z, double m) {
        return xlogx(z) - expected_nu_log_nu(m) - (z - m) * (1.0 + std::log(m));
    };
    return g;
}

Kernel linear_stat_kernel() {
    return linear_kernel("linear", [](std::size_t, double) { return 1.0; });
}

Kernel weighted_linear_kernel() {
    return linear_kernel("wlinear", [](std::size_t, double m) { return 1.0 / m; });
}

Kernel spectral_kernel(int q) {
    if (q < 0) fail(ErrorKind::usage, "spectral threshold must be a nonnegative integer");
    Kernel g;
    g.name = "spectral:" + std::to_string(q);
    g.eval = [q](std::size_t, int z, double m) { return (z <= q ? 1.0 : 0.0) - poisson_cdf(q, m); };
    g.known_c = [q](std::size_t, double m) { return -m * poisson_pmf(q, m); };
    return g;
}

Kernel spectral_linear_kernel(int q) {
    if (q < 1) fail(ErrorKind::usage, "spectral_linear threshold must be at least 1");
    return linear_kernel("spectral_linear:" + std::to_string(q),
                         [q](std::size_t, double m) { return poisson_pmf(q - 1, m); });
}

Kernel empty_boxes_kernel() {
    Kernel g;
    g.name = "empty";
    g.eval = [](std::size_t, int z, double m) { return (z == 0 ? 1.0 : 0.0) - std::exp(-m); };
    g.known_c = [](std::size_t, double m) { return -m * std::exp(-m); };
    return g;
}

Kernel custom_kernel(std::string name, BinFn omega, const Kernel& base) {
    auto g0 = std::make_shared<const Kernel>(base);
    Kernel g;
    g.name = std::move(name);
    g.centered = base.centered;
    g.eval = [omega, g0](std::size_t k, int z, double m) { return omega(k, m) * g0->eval(k, z, m); };
    if (base.known_c) g.known_c = [omega, g0](std::size_t k, double m) { return omega(k, m) * g0->known_c(k, m); };
    if (base.linear_weight)
        g.linear_weight = [omega, g0](std::size_t k, double m) { return omega(k, m) * g0->linear_weight(k, m); };
    return g;
}

Kernel make_kernel(const std::string& spec) {
    if (spec == "pearson") return pearson_kernel();
    if (spec == "cash") return cash_kernel();
    if (spec == "linear") return linear_stat_kernel();
    if (spec == "wlinear") return weighted_linear_kernel();
    if (spec == "empty") return empty_boxes_kernel();
    if (spec.rfind("spectral:", 0) == 0) return spectral_kernel(parse_int(spec.substr(9), spec));
    if (spec.rfind("spectral_linear:", 0) == 0) return spectral_linear_kernel(parse_int(spec.substr(16), spec));
    if (spec.rfind("custom:", 0) == 0) {
        const auto rest = spec.substr(7);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) fail(ErrorKind::usage, "custom kernel needs custom:<power>:<base>");
        double power = 0.0;
        try {
            power = std::stod(rest.substr(0, colon));
        } catch (const std::exception&) {
            fail(ErrorKind::usage, "bad power in kernel spec '" + spec + "'");
        }
        const Kernel base = make_kernel(rest.substr(colon + 1));
        return custom_kernel(spec, [power](std::size_t, double m) { return std::pow(m, power); }, base);
    }
    if (spec.rfind("parallel:", 0) == 0) return decompose(make_kernel(spec.substr(9))).parallel;
    if (spec.rfind("perp:", 0) == 0) return decompose(make_kernel(spec.substr(5))).perp;
    fail(ErrorKind::usage, "unknown kernel '" + spec + "'");
}

std::vector<std::string> catalogue_specs() {
    return {"pearson", "cash", "linear", "wlinear", "spectral:0", "spectral:1", "spectral:3", "empty"};
}

Decomposition decompose(const Kernel& g) {
    auto g0 = std::make_shared<const Kernel>(g);
    BinFn weight = [g0](std::size_t k, double m) { return c_function(*g0, k, m) / m; };
    Decomposition d;
    d.parallel = linear_kernel("parallel:" + g.name, weight);
    d.perp = combine("perp:" + g.name, {{1.0, g}, {-1.0, d.parallel}});
    d.perp.known_c = [](std::size_t, double) { return 0.0; };
    return d;
}

Decomposition decompose(const Kernel& g, const MeasureContext& ctx) {
    for (std::size_t k = 0; k < ctx.size(); ++k) {
        const double c = c_function(g, k, ctx.mean(k), ctx.tol());
        if (!std::isfinite(c)) fail(ErrorKind::numeric, "C(x;g) not finite at bin " + std::to_string(k));
    }
    return decompose(g);
}

bool is_c_homogeneous(const Kernel& g, const MeasureContext& ctx, double tol) {
    const double c0 = c_function(g, 0, ctx.mean(0), ctx.tol());
    for (std::size_t k = 1; k < ctx.size(); ++k)
        if (std::abs(c_function(g, k, ctx.mean(k), ctx.tol()) - c0) >= tol) return false;
    return true;
}

}  // namespace divgof
