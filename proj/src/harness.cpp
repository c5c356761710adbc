#include "divgof/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "divgof/error.hpp"
#include "divgof/projection.hpp"
#include "divgof/statistics.hpp"

namespace divgof {

using json = nlohmann::json;

TestKind parse_test_kind(const std::string& name) {
    if (name == "single") return TestKind::single;
    if (name == "ks") return TestKind::ks;
    if (name == "ks_star") return TestKind::ks_star;
    fail(ErrorKind::usage, "unknown test '" + name + "'");
}

Calibration parse_calibration(const std::string& name) {
    if (name == "mc" || name == "bootstrap") return Calibration::mc;
    if (name == "gaussian") return Calibration::gaussian;
    if (name == "limit") return Calibration::limit;
    fail(ErrorKind::usage, "unknown calibration '" + name + "'");
}

std::string to_string(TestKind kind) {
    switch (kind) {
        case TestKind::single: return "single";
        case TestKind::ks: return "ks";
        case TestKind::ks_star: return "ks_star";
    }
    return "?";
}

std::string to_string(Calibration cal) {
    switch (cal) {
        case Calibration::mc: return "mc";
        case Calibration::gaussian: return "gaussian";
        case Calibration::limit: return "limit";
    }
    return "?";
}

// ---- configuration

void RunConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::validation, "alpha must lie in (0, 1)");
    if (replicates < 100) fail(ErrorKind::validation, "replicates must be at least 100");
    if (K == 0) fail(ErrorKind::validation, "K must be positive");
    if (!(low < high)) fail(ErrorKind::validation, "domain must satisfy low < high");
    if (tests.empty()) fail(ErrorKind::validation, "no tests configured");
    for (const auto& t : tests) {
        if (t.test == TestKind::ks && t.calibration == Calibration::gaussian)
            fail(ErrorKind::validation, t.label + ": KS statistics have no Gaussian calibration");
        if (t.calibration == Calibration::limit && t.test != TestKind::ks_star)
            fail(ErrorKind::validation, t.label + ": the limit law applies to ks_star only");
        if (t.test == TestKind::ks_star && (!t.estimated || estimator != "mle"))
            fail(ErrorKind::validation, t.label + ": ks_star needs maximum-likelihood estimation");
    }
}

MeanModel RunConfig::mean_model() const { return MeanModel(make_family(model, low, high), theta); }

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    try {
        const json doc = json::parse(text);
        if (doc.contains("model")) {
            const json& m = doc.at("model");
            read(m, "family", cfg.model);
            read(m, "low", cfg.low);
            read(m, "high", cfg.high);
            read(m, "theta", cfg.theta);
            read(m, "K", cfg.K);
            read(m, "estimator", cfg.estimator);
        }
        if (doc.contains("alternative")) {
            const json& a = doc.at("alternative");
            read(a, "direction", cfg.alternative.direction);
            read(a, "strength", cfg.alternative.strength);
            read(a, "hhat", cfg.alternative.hhat);
            read(a, "x0", cfg.alternative.params.x0);
            read(a, "width", cfg.alternative.params.width);
            read(a, "cut", cfg.alternative.params.cut);
        }
        if (doc.contains("tests")) {
            for (const json& t : doc.at("tests")) {
                StudyTest st;
                read(t, "kernel", st.kernel);
                read(t, "estimated", st.estimated);
                std::string kind = "single", cal = "mc";
                read(t, "test", kind);
                read(t, "calibration", cal);
                st.test = parse_test_kind(kind);
                st.calibration = parse_calibration(cal);
                st.label = st.kernel + (st.estimated ? " est" : " known") + (kind == "single" ? "" : " " + kind);
                read(t, "label", st.label);
                cfg.tests.push_back(st);
            }
        }
        if (doc.contains("run")) {
            const json& r = doc.at("run");
            read(r, "replicates", cfg.replicates);
            read(r, "seed", cfg.seed);
            read(r, "alpha", cfg.alpha);
            read(r, "workers", cfg.parallel.workers);
            if (r.contains("bootstrap")) cfg.bootstrap = parse_bootstrap_mode(r.at("bootstrap").get<std::string>());
            if (r.contains("serial") && r.at("serial").get<bool>()) cfg.parallel.exec = Execution::serial;
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::validation, std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::ingest, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
    json doc;
    doc["model"] = {{"family", cfg.model}, {"low", cfg.low},     {"high", cfg.high},
                    {"theta", cfg.theta},  {"K", cfg.K},         {"estimator", cfg.estimator}};
    doc["alternative"] = {{"direction", cfg.alternative.direction}, {"strength", cfg.alternative.strength},
                          {"hhat", cfg.alternative.hhat},           {"x0", cfg.alternative.params.x0},
                          {"width", cfg.alternative.params.width},  {"cut", cfg.alternative.params.cut}};
    json tests = json::array();
    for (const auto& t : cfg.tests)
        tests.push_back({{"label", t.label},
                         {"kernel", t.kernel},
                         {"estimated", t.estimated},
                         {"test", to_string(t.test)},
                         {"calibration", to_string(t.calibration)}});
    doc["tests"] = tests;
    doc["run"] = {{"replicates", cfg.replicates},
                  {"seed", cfg.seed},
                  {"alpha", cfg.alpha},
                  {"workers", cfg.parallel.workers},
                  {"serial", cfg.parallel.exec == Execution::serial},
                  {"bootstrap", cfg.bootstrap == BootstrapMode::classical ? "classical" : "projected"}};
    return doc.dump(2);
}

// ---- power study

namespace {

double normal_quantile(double p) {
    // bisection on erfc; only used for critical values
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> finite_sorted(const std::vector<double>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (double x : v)
        if (std::isfinite(x)) out.push_back(x);
    std::sort(out.begin(), out.end());
    return out;
}

// Order statistic with rank ceil(q n).
double upper_quantile(const std::vector<double>& sorted, double q) {
    const auto n = static_cast<double>(sorted.size());
    auto idx = static_cast<std::size_t>(std::ceil(q * n));
    idx = std::clamp<std::size_t>(idx, 1, sorted.size());
    return sorted[idx - 1];
}

std::pair<double, double> mean_var(const std::vector<double>& v) {
    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
    for (double x : v) {
        if (!std::isfinite(x)) continue;
        s += x;
        ++n;
    }
    if (n == 0) return {std::nan(""), std::nan("")};
    const double mean = s / static_cast<double>(n);
    for (double x : v)
        if (std::isfinite(x)) s2 += (x - mean) * (x - mean);
    return {mean, n > 1 ? s2 / static_cast<double>(n - 1) : 0.0};
}

struct PreparedTest {
    StudyTest spec;
    Kernel g;
    double sd = 0.0;  // Gaussian calibration
};

struct RejectionRule {
    double low = -std::numeric_limits<double>::infinity();
    double high = std::numeric_limits<double>::infinity();
    // lattice-valued statistics tie with the critical value up to rounding
    bool rejects(double v) const {
        return v < low - 1e-9 * std::max(1.0, std::abs(low)) || v > high + 1e-9 * std::max(1.0, std::abs(high));
    }
};

RejectionRule make_rule(const PreparedTest& t, const std::vector<double>& null_sorted, double alpha, std::size_t K,
                        int p) {
    RejectionRule rule;
    switch (t.spec.calibration) {
        case Calibration::gaussian: {
            const double z = normal_quantile(1.0 - alpha / 2.0) * t.sd;
            rule.low = -z;
            rule.high = z;
            break;
        }
        case Calibration::limit: {
            // smallest y with 1 - F(y) < alpha, by bisection on the monotone limit CDF
            double lo = 0.0, hi = 10.0;
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                (1.0 - limit_cdf(mid, p, K) < alpha ? hi : lo) = mid;
            }
            rule.high = hi;
            break;
        }
        case Calibration::mc: {
            if (null_sorted.empty()) fail(ErrorKind::run, t.spec.label + ": no usable null replicates");
            if (null_sorted.front() == null_sorted.back())
                fail(ErrorKind::run, t.spec.label + ": degenerate null distribution");
            if (t.spec.test == TestKind::single) {
                rule.low = upper_quantile(null_sorted, alpha / 2.0);
                rule.high = upper_quantile(null_sorted, 1.0 - alpha / 2.0);
            } else {
                rule.high = upper_quantile(null_sorted, 1.0 - alpha);
            }
            break;
        }
    }
    return rule;
}

struct Workspace {
    PoissonSampler sampler;
    BinnedCounts data;
};

}  // namespace

PowerStudy power_study(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Grid grid = cfg.grid();
    const MeanModel model = cfg.mean_model();
    const MeasureContext truth = model.context(grid);
    const EstimatorSpec est = parse_estimator(cfg.estimator);
    const std::size_t K = grid.size();
    const auto scan = ScanningFamily::left_to_right(K);

    AltSpec alt = null_direction();
    if (cfg.alternative.direction != "null") {
        alt = make_direction(parse_direction(cfg.alternative.direction), model, grid, cfg.alternative.params);
        if (cfg.alternative.hhat) alt = project_hhat(alt, model, grid);
    }
    alt.strength = cfg.alternative.strength;
    const std::vector<double> alt_m = alt_means(model, alt, grid);

    std::vector<PreparedTest> tests;
    bool need_fit = false;
    std::size_t p_star = 0;
    for (const auto& st : cfg.tests) {
        PreparedTest pt{st, st.test == TestKind::ks_star ? zero_kernel() : make_kernel(st.kernel), 0.0};
        if (st.calibration == Calibration::gaussian) {
            const double var = st.estimated ? Projector(est, truth).projected_norm2(pt.g) : norm2(pt.g, truth);
            if (!(var > 0.0)) fail(ErrorKind::degenerate, st.label + ": statistic has zero variance");
            pt.sd = std::sqrt(var);
        }
        need_fit = need_fit || st.estimated;
        if (st.test == TestKind::ks_star) p_star = model.param_dim();
        tests.push_back(std::move(pt));
    }
    const RBasis rbasis = p_star > 0 ? make_r_basis(p_star, scan) : RBasis{};

    const std::size_t R = cfg.replicates;
    const std::size_t T = tests.size();
    PowerStudy study;
    study.config = cfg;
    study.null_values.assign(T, std::vector<double>(R, std::nan("")));
    study.alt_values.assign(T, std::vector<double>(R, std::nan("")));

    const SolveOptions solve_opts;
    const auto run_phase = [&](const std::vector<double>& means, std::uint64_t stream,
                               std::vector<std::vector<double>>& values) {
        const int workers = worker_count(cfg.parallel);
        std::vector<Workspace> ws(workers, Workspace{PoissonSampler(means), BinnedCounts{}});
        parallel_for(R, cfg.parallel, [&](std::size_t i, int w) {
            Rng rng = replicate_rng(cfg.seed, 2 * i + stream);
            auto& data = ws[w].data;
            ws[w].sampler.draw(rng, data);
            std::optional<MeasureContext> fitted;
            if (need_fit) {
                try {
                    const FitResult f = solve(est, data, grid, model, solve_opts);
                    if (f.converged) fitted.emplace(f.model.context(grid));
                } catch (const Error& e) {
                    if (e.kind() == ErrorKind::usage || e.kind() == ErrorKind::validation) throw;
                }
            }
            for (std::size_t t = 0; t < T; ++t) {
                const PreparedTest& pt = tests[t];
                if (pt.spec.estimated && !fitted) continue;
                const MeasureContext& ctx = pt.spec.estimated ? *fitted : truth;
                double v = 0.0;
                switch (pt.spec.test) {
                    case TestKind::single: v = evaluate_statistic(pt.g, data, ctx); break;
                    case TestKind::ks: v = ks_statistic(pt.g, data, ctx, scan); break;
                    case TestKind::ks_star: {
                        const UnitaryChain chain = build_chain(rbasis, score_forms(ctx));
                        v = ks_star(transformed_process(data, ctx, chain, rbasis, scan));
                        break;
                    }
                }
                values[t][i] = v;
            }
        });
    };
    run_phase(std::vector<double>(truth.means().begin(), truth.means().end()), 0, study.null_values);
    run_phase(alt_m, 1, study.alt_values);

    for (std::size_t t = 0; t < T; ++t) {
        const PreparedTest& pt = tests[t];
        PowerReport rep;
        rep.label = pt.spec.label;
        rep.kernel = pt.spec.test == TestKind::ks_star ? "l_t" : pt.spec.kernel;
        rep.estimated = pt.spec.estimated;
        rep.test = pt.spec.test;
        rep.calibration = pt.spec.calibration;
        const auto null_sorted = finite_sorted(study.null_values[t]);
        const auto alt_sorted = finite_sorted(study.alt_values[t]);
        rep.null_failures = R - null_sorted.size();
        rep.alt_failures = R - alt_sorted.size();
        if (static_cast<double>(std::max(rep.null_failures, rep.alt_failures)) > 0.01 * static_cast<double>(R))
            fail(ErrorKind::run, pt.spec.label + ": more than 1% of replicate fits failed");
        const RejectionRule rule = make_rule(pt, null_sorted, cfg.alpha, K, static_cast<int>(model.param_dim()));
        rep.crit_low = rule.low;
        rep.crit_high = rule.high;
        const auto rate = [&](const std::vector<double>& s) {
            std::size_t hits = 0;
            for (double v : s) hits += rule.rejects(v);
            return static_cast<double>(hits) / static_cast<double>(s.size());
        };
        rep.power = rate(alt_sorted);
        rep.size = rate(null_sorted);
        rep.se = std::sqrt(rep.power * (1.0 - rep.power) / static_cast<double>(alt_sorted.size()));
        std::tie(rep.null_mean, rep.null_var) = mean_var(null_sorted);
        std::tie(rep.alt_mean, rep.alt_var) = mean_var(alt_sorted);
        study.reports.push_back(rep);
    }
    study.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return study;
}

// ---- single data set

TestReport gof_test(const Grid& grid, const BinnedCounts& data, const TestSpec& spec) {
    if (data.size() != grid.size()) fail(ErrorKind::validation, "data length differs from grid size");
    const auto t0 = std::chrono::steady_clock::now();
    const FamilyPtr family = make_family(spec.model, grid.low(), grid.high());
    TestReport rep;
    rep.model = spec.model;
    rep.kernel = spec.test == TestKind::ks_star ? "l_t" : spec.kernel;
    const auto scan = ScanningFamily::left_to_right(grid.size());

    if (spec.test == TestKind::ks_star) {
        if (spec.calibration != Calibration::limit) fail(ErrorKind::usage, "ks_star uses the limit calibration");
        const MeanModel init = moment_start(family, grid, data);
        const KsStarResult r = ks_star_test(data, grid, init);
        rep.theta = r.fit.theta;
        rep.statistic = r.statistic;
        rep.p_value = r.p_value;
        rep.method = "ks_star limit law p=" + std::to_string(r.p);
    } else {
        const EstimatorSpec est = EstimatorSpec::mle();
        const FitResult f = fit(est, data, grid, family);
        if (!f.converged) fail(ErrorKind::convergence, "maximum-likelihood fit did not converge");
        rep.theta = f.theta;
        const MeasureContext ctx = f.model.context(grid);
        const Kernel g = make_kernel(spec.kernel);
        const auto S = partial_sums(g, data, ctx, scan);
        const Functional functional = spec.test == TestKind::ks ? Functional::ks : spec.functional;
        rep.statistic = apply_functional(functional, S);
        if (spec.calibration == Calibration::gaussian) {
            if (spec.test != TestKind::single) fail(ErrorKind::usage, "KS statistics need bootstrap calibration");
            const double var = Projector(est, ctx).projected_norm2(g);
            rep.statistic = S.back();
            rep.standardized = S.back() / std::sqrt(var);
            rep.p_value = gaussian_test(S.back(), var, spec.functional == Functional::abs ? 2 : 1);
            if (spec.functional == Functional::lower) rep.p_value = 1.0 - rep.p_value;
            rep.method = "gaussian";
        } else if (spec.calibration == Calibration::mc) {
            BootstrapPlan plan;
            plan.replicates = spec.replicates;
            plan.mode = spec.bootstrap;
            plan.seed = spec.seed;
            plan.statistic = functional;
            plan.parallel = spec.parallel;
            const BootstrapResult b = bootstrap_pvalue(plan, rep.statistic, f.model, grid, est, g, scan);
            rep.p_value = b.p_value;
            rep.replicates = spec.replicates;
            rep.failures = b.failures;
            rep.warning = b.warning;
            rep.method = std::string(spec.bootstrap == BootstrapMode::classical ? "classical" : "projected") +
                         " bootstrap";
        } else {
            fail(ErrorKind::usage, "the limit calibration applies to ks_star only");
        }
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---- spectra

Spectrum parse_spectrum(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::ingest, source + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "bin_low,bin_high,count")
        fail(ErrorKind::ingest, source + ": header must be 'bin_low,bin_high,count'");
    std::vector<double> lows, highs;
    std::vector<int> counts;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = source + " row " + std::to_string(row);
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') || ss.rdbuf()->in_avail())
            fail(ErrorKind::ingest, where + ": expected three fields");
        double lo = 0.0, hi = 0.0;
        long long n = 0;
        try {
            std::size_t pa = 0, pb = 0, pc = 0;
            lo = std::stod(a, &pa);
            hi = std::stod(b, &pb);
            n = std::stoll(c, &pc);
            if (pa != a.size() || pb != b.size() || pc != c.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(ErrorKind::ingest, where + ": malformed number");
        }
        if (n < 0) fail(ErrorKind::validation, where + ": negative count");
        if (n > std::numeric_limits<int>::max()) fail(ErrorKind::validation, where + ": count too large");
        if (!(hi > lo)) fail(ErrorKind::ingest, where + ": bin_high must exceed bin_low");
        if (!highs.empty() && std::abs(highs.back() - lo) > 1e-9)
            fail(ErrorKind::ingest, where + ": bin is not contiguous with the previous row");
        if (!lows.empty()) {
            const double w0 = highs.front() - lows.front();
            if (std::abs((hi - lo) - w0) > 1e-6 * w0) fail(ErrorKind::ingest, where + ": unequal bin width");
        }
        lows.push_back(lo);
        highs.push_back(hi);
        counts.push_back(static_cast<int>(n));
    }
    if (counts.empty()) fail(ErrorKind::ingest, source + ": no data rows");
    return Spectrum{Grid(lows.front(), highs.back(), counts.size()), BinnedCounts(std::move(counts))};
}

Spectrum ingest_spectrum(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::ingest, "cannot open '" + path + "'");
    return parse_spectrum(in, path);
}

void write_spectrum(std::ostream& out, const Grid& grid, const BinnedCounts& counts) {
    out << "bin_low,bin_high,count\n" << std::setprecision(17);
    for (std::size_t k = 0; k < grid.size(); ++k) out << grid.edge(k) << ',' << grid.edge(k + 1) << ',' << counts[k] << '\n';
}

std::vector<TestReport> chandra_analysis(const Spectrum& spectrum, const std::vector<TestSpec>& tests) {
    std::vector<TestReport> out;
    for (const auto& t : tests) out.push_back(gof_test(spectrum.grid, spectrum.counts, t));
    return out;
}

Spectrum synthetic_spectrum(double c, std::uint64_t seed, std::size_t K) {
    const Grid grid(14.6, 17.4, K);
    const std::vector<double> means(K, c);
    Rng rng = replicate_rng(seed, 0);
    return Spectrum{grid, sample_counts(means, rng)};
}

// ---- output

void write_power_table(std::ostream& out, const PowerStudy& study) {
    const RunConfig& c = study.config;
    out << "model " << c.model << "  K=" << c.K << "  alternative=" << c.alternative.direction
        << "  R=" << c.replicates << "  alpha=" << c.alpha << "  seed=" << c.seed << '\n';
    out << std::left << std::setw(28) << "test" << std::right << std::setw(10) << "power%" << std::setw(8) << "se%"
        << std::setw(9) << "size%" << std::setw(11) << "null_var" << std::setw(11) << "alt_mean" << std::setw(8)
        << "fails" << '\n';
    out << std::fixed;
    for (const auto& r : study.reports) {
        out << std::left << std::setw(28) << r.label << std::right << std::setprecision(2) << std::setw(10)
            << 100 * r.power << std::setw(8) << 100 * r.se << std::setw(9) << 100 * r.size << std::setprecision(4)
            << std::setw(11) << r.null_var << std::setw(11) << r.alt_mean << std::setw(8)
            << r.null_failures + r.alt_failures << '\n';
    }
    out << std::defaultfloat;
}

void write_power_csv(std::ostream& out, const PowerStudy& study) {
    out << "label,kernel,estimated,test,calibration,power,se,size,crit_low,crit_high,null_mean,null_var,alt_mean,"
           "alt_var,null_failures,alt_failures\n"
        << std::setprecision(10);
    for (const auto& r : study.reports)
        out << r.label << ',' << r.kernel << ',' << r.estimated << ',' << to_string(r.test) << ','
            << to_string(r.calibration) << ',' << r.power << ',' << r.se << ',' << r.size << ',' << r.crit_low << ','
            << r.crit_high << ',' << r.null_mean << ',' << r.null_var << ',' << r.alt_mean << ',' << r.alt_var << ','
            << r.null_failures << ',' << r.alt_failures << '\n';
}

void write_test_table(std::ostream& out, const std::vector<TestReport>& reports) {
    out << std::left << std::setw(14) << "model" << std::setw(18) << "kernel" << std::setw(22) << "method"
        << std::right << std::setw(12) << "statistic" << std::setw(10) << "p" << "  theta\n";
    for (const auto& r : reports) {
        out << std::left << std::setw(14) << r.model << std::setw(18) << r.kernel << std::setw(22) << r.method
            << std::right << std::fixed << std::setprecision(4) << std::setw(12) << r.statistic << std::setw(10)
            << r.p_value << std::defaultfloat << std::setprecision(6) << " ";
        for (double t : r.theta) out << ' ' << t;
        out << '\n';
        if (!r.warning.empty()) out << "  warning: " << r.warning << '\n';
    }
}

void write_test_csv(std::ostream& out, const std::vector<TestReport>& reports) {
    out << "model,kernel,method,statistic,standardized,p_value,replicates,failures,seconds,theta\n"
        << std::setprecision(10);
    for (const auto& r : reports) {
        out << r.model << ',' << r.kernel << ',' << r.method << ',' << r.statistic << ',' << r.standardized << ','
            << r.p_value << ',' << r.replicates << ',' << r.failures << ',' << r.seconds << ',';
        for (std::size_t i = 0; i < r.theta.size(); ++i) out << (i ? ";" : "") << r.theta[i];
        out << '\n';
    }
}

double kolmogorov_distance(std::vector<double> a, std::vector<double> b) {
    a = finite_sorted(a);
    b = finite_sorted(b);
    if (a.empty() || b.empty()) fail(ErrorKind::validation, "empty sample");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double kolmogorov_distance(std::vector<double> a, const std::function<double(double)>& cdf) {
    a = finite_sorted(a);
    if (a.empty()) fail(ErrorKind::validation, "empty sample");
    const double n = static_cast<double>(a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double F = cdf(a[i]);
        d = std::max({d, std::abs(F - static_cast<double>(i + 1) / n), std::abs(F - static_cast<double>(i) / n)});
    }
    return d;
}

}  // namespace divgof
