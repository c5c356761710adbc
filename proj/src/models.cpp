#include "divgof/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "divgof/error.hpp"

namespace divgof {

// ---- MeanModel

MeanModel::MeanModel(FamilyPtr family, std::vector<double> theta) : family_(std::move(family)), theta_(std::move(theta)) {
    if (!family_) fail(ErrorKind::usage, "mean model needs a family");
    if (theta_.size() != 1 + family_->shape_dim())
        fail(ErrorKind::validation, family_->name() + " expects " + std::to_string(1 + family_->shape_dim()) +
                                        " parameters, got " + std::to_string(theta_.size()));
    if (!admissible(theta_)) fail(ErrorKind::model, "parameters outside the admissible region of " + family_->name());
}

bool MeanModel::admissible(std::span<const double> theta) const {
    if (theta.size() != 1 + family_->shape_dim()) return false;
    if (!(theta[0] > 0.0) || !std::isfinite(theta[0])) return false;
    return family_->admissible(theta.subspan(1));
}

void MeanModel::evaluate(const Grid& grid, std::vector<double>& means, Eigen::MatrixXd* gradient) const {
    const double tol = 1e-12 * (family_->high() - family_->low());
    if (grid.low() < family_->low() - tol || grid.high() > family_->high() + tol)
        fail(ErrorKind::validation, "grid extends outside the model domain");
    const std::size_t K = grid.size();
    const std::size_t q = family_->shape_dim();
    const double scale = c() * static_cast<double>(K);
    means.resize(K);
    if (gradient) gradient->resize(K, static_cast<Eigen::Index>(1 + q));
    const auto edges = grid.edges();
    std::vector<double> F(K + 1), dF(gradient ? (K + 1) * q : 0);
    family_->cdf_many(edges, beta(), F, dF);
    for (std::size_t k = 0; k < K; ++k) {
        const double m = scale * (F[k + 1] - F[k]);
        if (!(m > 0.0) || !std::isfinite(m))
            fail(ErrorKind::model, "nonpositive mean at bin " + std::to_string(k) + " under " + family_->name());
        means[k] = m;
        if (gradient) {
            (*gradient)(k, 0) = m / c();
            for (std::size_t j = 0; j < q; ++j) (*gradient)(k, 1 + j) = scale * (dF[(k + 1) * q + j] - dF[k * q + j]);
        }
    }
}

std::vector<double> MeanModel::bin_means(const Grid& grid) const {
    std::vector<double> m;
    evaluate(grid, m, nullptr);
    return m;
}

Eigen::MatrixXd MeanModel::dm_dtheta(const Grid& grid) const {
    std::vector<double> m;
    Eigen::MatrixXd d;
    evaluate(grid, m, &d);
    return d;
}

MeasureContext MeanModel::context(const Grid& grid, double tol) const {
    std::vector<double> m;
    Eigen::MatrixXd d;
    evaluate(grid, m, &d);
    return MeasureContext(grid, std::move(m), std::move(d), tol);
}

// ---- sampling

Rng replicate_rng(std::uint64_t master_seed, std::uint64_t replicate) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)};
    return Rng(seq);
}

PoissonSampler::PoissonSampler(std::span<const double> means) {
    dists_.reserve(means.size());
    for (double m : means) {
        if (!(m > 0.0) || !std::isfinite(m)) fail(ErrorKind::model, "Poisson sampling needs positive means");
        dists_.emplace_back(m);
    }
}

void PoissonSampler::draw(Rng& rng, BinnedCounts& out) {
    auto& v = out.mutable_values();
    v.resize(dists_.size());
    for (std::size_t k = 0; k < dists_.size(); ++k) {
        dists_[k].reset();
        v[k] = dists_[k](rng);
    }
}

BinnedCounts sample_counts(std::span<const double> means, Rng& rng) {
    PoissonSampler sampler(means);
    BinnedCounts out;
    sampler.draw(rng, out);
    return out;
}

// ---- quadrature

namespace {

constexpr double gl_node[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
constexpr double gl_weight[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};

void add_panel(double a, double b, std::vector<double>& x, std::vector<double>& w) {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < 5; ++i) {
        x.push_back(mid + half * gl_node[i]);
        w.push_back(half * gl_weight[i]);
    }
}

// Panels on [a, b], refined geometrically toward the ends flagged by grade_left/right.
void add_interval(double a, double b, int panels, bool grade_left, bool grade_right, std::vector<double>& x,
                  std::vector<double>& w) {
    constexpr int levels = 40;
    const double step = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * step;
        const double hi = (i + 1 == panels) ? b : a + (i + 1) * step;
        const bool gl = grade_left && i == 0;
        const bool gr = grade_right && i + 1 == panels;
        if (!gl && !gr) {
            add_panel(lo, hi, x, w);
            continue;
        }
        double l = lo, h = hi;
        if (gl) {
            double cut = lo + 0.5 * (hi - lo);
            if (gr) cut = lo + 0.25 * (hi - lo);
            double right = cut;
            for (int j = 0; j < levels; ++j) {
                const double left = lo + 0.5 * (right - lo);
                add_panel(left, right, x, w);
                right = left;
            }
            add_panel(lo, right, x, w);
            l = cut;
        }
        if (gr) {
            double cut = gl ? lo + 0.75 * (hi - lo) : lo + 0.5 * (hi - lo);
            double left = cut;
            for (int j = 0; j < levels; ++j) {
                const double right = hi - 0.5 * (hi - left);
                add_panel(left, right, x, w);
                left = right;
            }
            add_panel(left, hi, x, w);
            h = cut;
        }
        if (h > l) add_panel(l, h, x, w);
    }
}

}  // namespace

LambdaQuadrature::LambdaQuadrature(const MeanModel& model, const Grid& grid, std::vector<double> extra_breaks,
                                   int panels_per_bin)
    : grid_(grid) {
    auto breaks = model.family().breakpoints();
    breaks.insert(breaks.end(), extra_breaks.begin(), extra_breaks.end());
    std::sort(breaks.begin(), breaks.end());
    const std::size_t K = grid.size();
    start_.assign(K + 1, 0);
    mass_.assign(K, 0.0);
    const double snap = 1e-12 * grid.volume();
    for (std::size_t k = 0; k < K; ++k) {
        start_[k] = x_.size();
        const double lo = grid.edge(k), hi = grid.edge(k + 1);
        std::vector<double> cuts{lo};
        for (double b : breaks)
            if (b > lo + snap && b < hi - snap) cuts.push_back(b);
        cuts.push_back(hi);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const bool left = k == 0 && i == 0;
            const bool right = k + 1 == K && i + 2 == cuts.size();
            add_interval(cuts[i], cuts[i + 1], panels_per_bin, left, right, x_, w_);
        }
    }
    start_[K] = x_.size();
    for (std::size_t i = 0; i < x_.size(); ++i) w_[i] *= model.density(x_[i]);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = start_[k]; i < start_[k + 1]; ++i) mass_[k] += w_[i];
}

double LambdaQuadrature::bin_integral(std::size_t k, const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = start_[k]; i < start_[k + 1]; ++i) s += w_[i] * f(x_[i]);
    return s;
}

std::vector<double> LambdaQuadrature::bin_integrals(const std::function<double(double)>& f) const {
    std::vector<double> out(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) out[k] = bin_integral(k, f);
    return out;
}

double LambdaQuadrature::integral(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) s += w_[i] * f(x_[i]);
    return s;
}

// ---- alternatives

AltSpec null_direction() {
    AltSpec a;
    a.name = "null";
    a.h = [](double) { return 0.0; };
    return a;
}

DirectionKind parse_direction(const std::string& name) {
    if (name == "gamma_shape") return DirectionKind::gamma_shape;
    if (name == "gaussian_bump") return DirectionKind::gaussian_bump;
    if (name == "broken_powerlaw") return DirectionKind::broken_powerlaw;
    if (name == "variance_perturbation") return DirectionKind::variance_perturbation;
    fail(ErrorKind::usage, "unknown alternative direction '" + name + "'");
}

AltSpec make_direction(DirectionKind kind, const MeanModel& model, const Grid& grid, DirectionParams params) {
    const std::string fam = model.family().name();
    std::function<double(double)> f;
    std::vector<double> breaks;
    std::string name;
    switch (kind) {
        case DirectionKind::gamma_shape: {
            if (fam != "TruncatedExponential") fail(ErrorKind::usage, "gamma_shape needs the TruncatedExponential family");
            if (!(model.family().low() >= 0.0)) fail(ErrorKind::usage, "gamma_shape needs a nonnegative domain");
            f = [](double x) { return std::log(x); };
            name = "gamma_shape";
            break;
        }
        case DirectionKind::gaussian_bump: {
            if (!(params.width > 0.0)) fail(ErrorKind::usage, "bump width must be positive");
            const double x0 = params.x0, s = params.width;
            const auto bg = std::make_shared<MeanModel>(model);
            f = [bg, x0, s](double x) {
                const double z = (x - x0) / s;
                return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi)) / bg->density(x);
            };
            name = "gaussian_bump";
            break;
        }
        case DirectionKind::broken_powerlaw: {
            if (fam != "PowerLaw") fail(ErrorKind::usage, "broken_powerlaw needs the PowerLaw family");
            const double xi = params.cut;
            if (!(xi > grid.low() && xi < grid.high())) fail(ErrorKind::usage, "cutpoint outside the grid");
            f = [xi](double x) { return x >= xi ? std::log(x / xi) : 0.0; };
            breaks.push_back(xi);
            name = "broken_powerlaw";
            break;
        }
        case DirectionKind::variance_perturbation: {
            if (fam.rfind("TruncatedNormal", 0) != 0)
                fail(ErrorKind::usage, "variance_perturbation needs the TruncatedNormal family");
            const double mu = model.beta()[0];
            const double s2 = *model.family().normal_variance(model.beta());
            f = [mu, s2](double x) { return (x - mu) * (x - mu) / s2; };
            name = "variance_perturbation";
            break;
        }
    }
    LambdaQuadrature quad(model, grid, breaks);
    const double mean = quad.integral(f);
    const double var = quad.integral([&](double x) {
        const double d = f(x) - mean;
        return d * d;
    });
    if (!(var > 0.0)) fail(ErrorKind::degenerate, "direction is constant under the model");
    AltSpec alt;
    alt.name = name;
    alt.a = 1.0 / std::sqrt(var);
    alt.b = -mean * alt.a;
    const double a = alt.a, b = alt.b;
    alt.h = [f, a, b](double x) { return a * f(x) + b; };
    alt.breakpoints = breaks;
    alt.mass_preserving = true;
    return alt;
}

double direction_norm(const AltSpec& alt, const MeanModel& model, const Grid& grid) {
    LambdaQuadrature quad(model, grid, alt.breakpoints);
    return std::sqrt(quad.integral([&](double x) {
        const double v = alt.h(x);
        return v * v;
    }));
}

double direction_mean(const AltSpec& alt, const MeanModel& model, const Grid& grid) {
    LambdaQuadrature quad(model, grid, alt.breakpoints);
    return quad.integral(alt.h);
}

std::vector<double> direction_bin_averages(const AltSpec& alt, const MeanModel& model, const Grid& grid) {
    LambdaQuadrature quad(model, grid, alt.breakpoints);
    auto out = quad.bin_integrals(alt.h);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] /= quad.bin_mass()[k];
    return out;
}

std::vector<double> alt_means(const MeanModel& model, const AltSpec& alt, const Grid& grid) {
    auto m = model.bin_means(grid);
    const double T = alt.T > 0.0 ? alt.T : model.c() * static_cast<double>(grid.size());
    const double scale = alt.strength / std::sqrt(T);
    const auto hbar = direction_bin_averages(alt, model, grid);
    for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] *= 1.0 + scale * hbar[k];
        if (!(m[k] > 0.0))
            fail(ErrorKind::alternative, "perturbed mean is nonpositive at bin " + std::to_string(k));
    }
    return m;
}

AltSpec project_hhat(const AltSpec& alt, const MeanModel& model, const Grid& grid) {
    std::vector<double> m;
    Eigen::MatrixXd dm;
    model.evaluate(grid, m, &dm);
    const std::size_t K = grid.size();
    const auto p = dm.cols();
    auto tangent = std::make_shared<Eigen::MatrixXd>(K, p);
    for (std::size_t k = 0; k < K; ++k) tangent->row(k) = dm.row(k) / m[k];
    LambdaQuadrature quad(model, grid, alt.breakpoints);
    const auto hint = quad.bin_integrals(alt.h);
    Eigen::MatrixXd Gamma = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (std::size_t k = 0; k < K; ++k) {
        const Eigen::VectorXd t = tangent->row(k).transpose();
        Gamma += t * t.transpose() * quad.bin_mass()[k];
        rhs += t * hint[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Gamma);
    if (eig.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff()))
        fail(ErrorKind::rank, "tangent Gram matrix is singular");
    const Eigen::VectorXd coef = Gamma.ldlt().solve(rhs);
    AltSpec out = alt;
    out.name = alt.name + "_hat";
    const auto h = alt.h;
    const Grid g = grid;
    out.h = [h, tangent, coef, g](double x) { return h(x) - tangent->row(g.bin_of(x)).dot(coef); };
    out.mass_preserving = true;
    out.a = 0.0;
    out.b = 0.0;
    return out;
}

}  // namespace divgof
