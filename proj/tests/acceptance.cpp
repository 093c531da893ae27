// Copyright 2026 The ddmm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance checks, one per criterion. Prints one PASS/FAIL line per
// criterion followed by indented detail lines; exits nonzero on any FAIL.

#include "ddmm/adjustment.hpp"
#include "ddmm/alpha_opt.hpp"
#include "ddmm/confidence.hpp"
#include "ddmm/cp_als.hpp"
#include "ddmm/evaluation.hpp"
#include "ddmm/log.hpp"
#include "ddmm/mfmc.hpp"
#include "ddmm/parallel.hpp"
#include "ddmm/sampling.hpp"
#include "oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace ddmm;

namespace {

const ModelEnsemble kBifi{{1.0, 0.1}, 100.0};
constexpr double kAlpha = 0.253;

struct Settings {
    std::string cache_dir;
    unsigned threads = 0;
};

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;

    void note(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
        char buf[512];
        va_list args;
        va_start(args, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, args);
        va_end(args);
        details.emplace_back(buf);
    }
    // Records a gate and its verdict.
    void gate(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
        char buf[512];
        va_list args;
        va_start(args, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, args);
        va_end(args);
        details.emplace_back(std::string(ok ? "[ok]   " : "[FAIL] ") + buf);
        pass = pass && ok;
    }
};

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
    void reset() { start_ = Clock::now(); }

private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point start_ = Clock::now();
};

struct RandomInstance {
    CovarianceSpec cov;
    ModelEnsemble ensemble;
};

RandomInstance random_instance(std::mt19937_64& rng, std::size_t m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> rho(m - 1), sigma(m), costs(m);
    for (auto& r : rho) r = 0.99 * u(rng) * (u(rng) < 0.2 ? -1.0 : 1.0);
    std::sort(rho.begin(), rho.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    for (auto& s : sigma) s = 0.2 + 3.0 * u(rng);
    costs[0] = 1.0;
    for (std::size_t i = 1; i < m; ++i) costs[i] = std::pow(10.0, -3.0 * u(rng));
    return {CovarianceSpec::from_correlation(sigma, rho), ModelEnsemble{costs, 10.0 + 1000.0 * u(rng)}};
}

ExpectedDiscrepancyGrid grid_for(const Settings& s, int n) {
    return cached_grid(s.cache_dir, n, kBifi, [&] {
        GridBuildOptions o;
        o.threads = s.threads;
        return o;
    }());
}

CiSurrogate surrogate_for(const Settings& s, int n) {
    CiSurrogateOptions o;
    o.threads = s.threads;
    return cached_ci_surrogate(s.cache_dir, n, o);
}

// ---------------------------------------------------------------------------

Outcome closed_form(const Settings&) {
    Outcome out;
    Stopwatch t;
    const auto cov = CovarianceSpec::unit_bivariate(0.9);
    const auto p = optimal_hyperparams(cov, kBifi);
    const double v = estimator_variance(p, cov, kBifi);
    const auto g = oracle::bifidelity_grid_search(0.9, 1, 1, 1, 0.1, 100);
    const double seconds = t.seconds();
    const auto literal = [] {
        MfmcHyperparams q;
        q.n = {19.0, 810.0};
        q.beta = {0.9};
        q.order = {0, 1};
        return q;
    }();
    const double v_literal = estimator_variance(literal, cov, kBifi);
    out.gate(std::abs(p.n[0] - 19.0) < 0.05 && std::abs(p.n[1] - 810.0) < 0.05 && std::abs(p.beta[0] - 0.9) < 1e-12,
             "allocation (n0, n1, beta) = (%.4f, %.4f, %.4f); target (19.0, 810.0, 0.9)", p.n[0], p.n[1],
             p.beta[0]);
    out.gate(std::abs(v - g.objective) / g.objective < 1e-4,
             "objective %.8g vs grid-search oracle %.8g (oracle at n0=%.3f, beta=%.4f), rel diff %.2e", v,
             g.objective, g.n0, g.beta, std::abs(v - g.objective) / g.objective);
    out.note("objective at the target allocation (19, 810, 0.9): %.8g, %.2fx the oracle minimum", v_literal,
             v_literal / g.objective);
    out.note("the target ratio n1/n0 = 42.63 equals c0 rho^2 / (c1 (1 - rho^2)) without the square root;"
             " the minimizer has n1/n0 = %.4f = its square root", p.n[1] / p.n[0]);
    out.gate(seconds < 1.0, "runtime %.3f s (< 1 s)", seconds);
    return out;
}

Outcome pava(const Settings&) {
    Outcome out;
    Stopwatch t;
    std::mt19937_64 rng(2024);
    double worst = 0.0, worst_closed = 0.0;
    int closed_cases = 0;
    for (int k = 0; k < 100; ++k) {
        const auto inst = random_instance(rng, 4);
        const auto p = pava_allocation(inst.cov, inst.ensemble);
        const auto s = variance_contributions(inst.cov.rho0);
        double obj = 0.0;
        for (std::size_t i = 0; i < 4; ++i) obj += std::max(s[i], 1e-14) / p.n[i];
        const double ref = oracle::nested_allocation_optimum(s, inst.ensemble.costs, inst.ensemble.budget);
        worst = std::max(worst, std::abs(obj - ref) / ref);
        if (closed_form_conditions_hold(inst.cov, inst.ensemble)) {
            ++closed_cases;
            const auto q = closed_form_allocation(inst.cov, inst.ensemble);
            for (std::size_t i = 0; i < 4; ++i)
                worst_closed = std::max(worst_closed, std::abs(q.n[i] - p.n[i]) / p.n[i]);
        }
    }
    out.gate(worst <= 1e-8, "100 random 4-model instances: max relative objective gap to the oracle %.2e (<= 1e-8)",
             worst);
    out.gate(closed_cases > 0 && worst_closed <= 1e-8,
             "%d instances meet the closed-form conditions; max relative n difference %.2e", closed_cases,
             worst_closed);
    const ModelEnsemble pooled_e{{1.0, 0.9}, 100.0};
    const auto pooled = optimal_hyperparams(CovarianceSpec::unit_bivariate(0.2), pooled_e);
    out.gate(std::abs(pooled.n[0] - 100.0 / 1.9) < 1e-10 && std::abs(pooled.n[1] - 100.0 / 1.9) < 1e-10,
             "M=2 pooled: n = (%.6f, %.6f), C/(c0+c1) = %.6f", pooled.n[0], pooled.n[1], 100.0 / 1.9);
    out.note("oracle: exact enumeration of all contiguous pooling patterns with per-block KKT solutions");
    out.gate(t.seconds() < 10.0, "runtime %.3f s (< 10 s)", t.seconds());
    return out;
}

Outcome discrepancy_identity(const Settings&) {
    Outcome out;
    Stopwatch t;
    std::mt19937_64 rng(99);
    double worst_self = 0.0, worst_budget = 0.0;
    for (int k = 0; k < 50; ++k) {
        const auto a = random_instance(rng, 3);
        auto b = random_instance(rng, 3);
        b.cov.sigma = a.cov.sigma;
        worst_self = std::max(worst_self, std::abs(discrepancy(a.cov, a.cov, a.ensemble)));
        std::vector<double> d;
        for (double c : {50.0, 100.0, 1000.0}) {
            auto e = a.ensemble;
            e.budget = c;
            d.push_back(discrepancy(a.cov, b.cov, e));
        }
        worst_budget = std::max({worst_budget, std::abs(d[1] - d[0]), std::abs(d[2] - d[0])});
    }
    out.gate(worst_self <= 1e-10, "max |delta(S, S)| over 50 covariances: %.2e (<= 1e-10)", worst_self);
    out.gate(worst_budget <= 1e-10, "max spread of delta over C in {50, 100, 1000}, 50 pairs: %.2e (<= 1e-10)",
             worst_budget);
    out.gate(t.seconds() < 5.0, "runtime %.3f s (< 5 s)", t.seconds());
    return out;
}

double ks_distance(std::vector<double> draws, const CorrelationDensityParams& p) {
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = corr_lower_tail(draws[i], p);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return d;
}

Outcome hotelling(const Settings&) {
    Outcome out;
    Stopwatch t;
    const auto rule = correlation_rule(200);
    double worst = 0.0;
    for (double rho : {0.0, 0.5, -0.5, 0.9, -0.9})
        for (int n : {5, 10, 25}) {
            const double total = expect_over_sample_corr([](double) { return 1.0; }, {rho, n}, rule);
            worst = std::max(worst, std::abs(total - 1.0));
        }
    out.gate(worst < 1e-6, "max normalization error over rho in {0, +-0.5, +-0.9}, N in {5, 10, 25}: %.2e", worst);
    for (auto [rho, n] : {std::pair{0.3, 5}, std::pair{0.9, 15}}) {
        const auto draws = sample_corr_from_wishart(CovarianceSpec::unit_bivariate(rho), n, 100000, 42);
        const double d = ks_distance(draws, {rho, n});
        out.gate(d < 0.01, "KS distance, 1e5 Wishart draws at (rho, N) = (%.1f, %d): %.5f (< 0.01)", rho, n, d);
    }
    out.gate(t.seconds() < 60.0, "runtime %.1f s (< 60 s)", t.seconds());
    return out;
}

Outcome ci_coverage(const Settings& s) {
    Outcome out;
    Stopwatch t;
    double worst_margin = 1.0;
    std::uint64_t stream = 0;
    for (int n : {5, 10})
        for (double alpha : {0.1, 0.3}) {
            double lowest = 1.0, at = 0.0;
            for (int i = 1; i <= 9; ++i) {
                const double rho = 0.1 * i;
                const auto draws =
                    sample_corr_from_wishart(CovarianceSpec::unit_bivariate(rho), n, 10000, substream_seed(7, stream++));
                std::vector<char> hit(draws.size());
                parallel_for(draws.size(), s.threads, [&](std::size_t k) {
                    const auto ci = ci_exact(draws[k], alpha, n);
                    hit[k] = ci.lower <= rho && rho <= ci.upper;
                });
                const double coverage = static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / 1e4;
                worst_margin = std::min(worst_margin, coverage - (1.0 - alpha - 0.02));
                if (coverage < lowest) lowest = coverage, at = rho;
            }
            out.gate(lowest >= 1.0 - alpha - 0.02, "N=%d alpha=%.1f: lowest coverage %.4f at rho=%.1f (>= %.2f)", n,
                     alpha, lowest, at, 1.0 - alpha - 0.02);
        }
    out.gate(t.seconds() < 300.0, "runtime %.1f s (< 300 s)", t.seconds());
    return out;
}

Outcome surrogate_fidelity(const Settings& s) {
    Outcome out;
    Stopwatch total;
    for (int n : {5, 10}) {
        Stopwatch t;
        CiSurrogateOptions o;
        o.threads = s.threads;
        const CiSurrogate sur = build_ci_surrogate(n, o);
        const double build = t.seconds();
        std::mt19937_64 rng(substream_seed(11, static_cast<std::uint64_t>(n)));
        std::uniform_real_distribution<double> ua(o.alpha_lo, o.alpha_hi), ur(o.r_lo, o.r_hi);
        std::vector<std::pair<double, double>> queries(1000);
        for (auto& q : queries) q = {ua(rng), ur(rng)};
        std::vector<CorrelationCI> exact(queries.size()), fast(queries.size());
        t.reset();
        for (std::size_t k = 0; k < queries.size(); ++k) exact[k] = ci_exact(queries[k].second, queries[k].first, n);
        const double exact_time = t.seconds();
        constexpr int kRepeat = 200;
        double sink = 0.0;
        t.reset();
        for (int rep = 0; rep < kRepeat; ++rep)
            for (std::size_t k = 0; k < queries.size(); ++k) {
                fast[k] = ci_fast(sur, queries[k].second, queries[k].first);
                sink += fast[k].lower;
            }
        const double fast_time = t.seconds() / kRepeat;
        double worst = 0.0;
        for (std::size_t k = 0; k < queries.size(); ++k)
            worst = std::max({worst, std::abs(exact[k].lower - fast[k].lower), std::abs(exact[k].upper - fast[k].upper)});
        out.gate(worst < 0.02, "N=%d: max endpoint error on 1000 held-out (alpha, r) queries %.5f (< 0.02)", n,
                 worst);
        out.gate(exact_time / fast_time >= 100.0,
                 "N=%d: per-query %.2f us exact vs %.3f us surrogate, speedup %.0fx (>= 100x); build %.1f s", n,
                 1e6 * exact_time / 1000.0, 1e6 * fast_time / 1000.0, exact_time / fast_time, build);
        if (sink == 12345.678) out.note(" ");
    }
    out.gate(total.seconds() < 300.0, "runtime %.1f s including builds (< 300 s)", total.seconds());
    return out;
}

Outcome cp_reconstruction(const Settings& s) {
    Outcome out;
    Stopwatch t;
    GridBuildOptions defaults;
    const auto g = brute_force_grid(GridAxes::uniform(defaults.box, defaults.rho_lo, defaults.rho_hi, {20, 20, 50}), 5,
                                    kBifi, defaults.quadrature_order, s.threads);
    CpOptions o;
    o.rank = defaults.cp_rank;
    o.max_iterations = defaults.cp_max_iterations;
    o.tolerance = defaults.cp_tolerance;
    const auto sweep = cp_rank_sweep(g.values(), defaults.cp_rank + 4, o);
    bool monotone = true;
    std::string errors;
    for (std::size_t r = 0; r < sweep.size(); ++r) {
        if (r > 0 && sweep[r].relative_error > sweep[r - 1].relative_error) monotone = false;
        char buf[48];
        std::snprintf(buf, sizeof buf, "%s%zu:%.2e", r ? " " : "", r + 1, sweep[r].relative_error);
        errors += buf;
    }
    const double e = sweep[static_cast<std::size_t>(defaults.cp_rank - 1)].relative_error;
    out.gate(e <= 5e-3, "20x20x50 brute-force tensor (N=5): e(%d) = %.3e (<= 5e-3)", defaults.cp_rank, e);
    out.gate(monotone, "e(R) nonincreasing in R over ranks 1..%d", defaults.cp_rank + 4);
    out.note("e(R): %s", errors.c_str());
    out.gate(t.seconds() < 600.0, "runtime %.1f s (< 600 s)", t.seconds());
    return out;
}

EddCurve curve_at(const Settings& s, int n, Stopwatch* timed) {
    const auto grid = grid_for(s, n);
    const auto sur = surrogate_for(s, n);
    if (timed) timed->reset();
    return edd_curve_gaussian(kAlpha, n, kBifi, grid, CiSource(sur), benchmark_rho_axis(50));
}

Outcome domination(const Settings& s) {
    Outcome out;
    double timed_total = 0.0;
    for (int n : {5, 10, 15}) {
        Stopwatch t;
        const auto c = curve_at(s, n, &t);
        timed_total += t.seconds();
        std::size_t positive = 0, arg = 0;
        for (std::size_t i = 0; i < c.edd.size(); ++i) {
            positive += c.edd[i] >= 0.0;
            if (c.edd[i] > c.edd[arg]) arg = i;
        }
        out.gate(positive == 0, "N=%d: EDD < 0 at %zu/50 rho points; max EDD %.5f at rho=%.3f, mean %.5f", n,
                 50 - positive, c.edd[arg], c.rho_axis[arg], c.mean_edd());
        if (positive) {
            std::string where;
            for (std::size_t i = 0; i < c.edd.size(); ++i)
                if (c.edd[i] >= 0.0) {
                    char buf[48];
                    std::snprintf(buf, sizeof buf, "%s%.3f(%+.5f)", where.empty() ? "" : " ", c.rho_axis[i], c.edd[i]);
                    where += buf;
                }
            out.note("N=%d: nonnegative EDD at rho: %s", n, where.c_str());
        }
    }
    out.note("grid: direct quadrature on 200x200x1000, theta0 in [0, 25], theta1 in [-12, 12], alpha = %.3f", kAlpha);
    out.gate(timed_total < 900.0, "runtime with cached grids %.1f s (< 900 s)", timed_total);
    return out;
}

Outcome diminishing(const Settings& s) {
    Outcome out;
    const std::vector<int> sizes{5, 10, 15, 25, 50};
    std::vector<double> pct;
    double timed_total = 0.0;
    bool all_negative = true;
    for (int n : sizes) {
        Stopwatch t;
        const auto c = curve_at(s, n, &t);
        timed_total += t.seconds();
        pct.push_back(c.mean_pct_edd());
        all_negative = all_negative && pct.back() < 0.0;
        out.note("N=%d: mean %%EDD %+.3f, mean EDD %+.5f, max EDD %+.5f", n, pct.back(), c.mean_edd(), c.max_edd());
    }
    int inversions = 0;
    for (std::size_t i = 1; i < pct.size(); ++i) inversions += pct[i] < pct[i - 1];
    out.gate(all_negative, "mean %%EDD negative for every N in {5, 10, 15, 25, 50}");
    out.gate(inversions <= 1, "mean %%EDD increases with N: %d inversions (<= 1)", inversions);
    out.gate(timed_total < 1200.0, "runtime with cached grids %.1f s (< 1200 s)", timed_total);
    return out;
}

Outcome alpha_optimization(const Settings& s) {
    Outcome out;
    Stopwatch t;
    const auto grid = grid_for(s, 5);
    const auto sur = surrogate_for(s, 5);
    const CiSource ci(sur);
    const AlphaBox box;
    t.reset();
    const auto design = build_design(350, 75, box, 5, grid, ci, 2024, s.threads);
    out.note("design: D=350 LHS points, R=75 repetitions, built in %.1f s", t.seconds());
    std::vector<double> alphas;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GpOptions o;
        o.seed = seed;
        o.threads = s.threads;
        const auto gp = fit_gp(design, o);
        const auto opt = optimal_alpha(gp, box);
        alphas.push_back(opt.alpha);
        out.note("GP restart seed %llu: alpha* = %.4f, worst-case EDD %.5f, length scales (%.3f, %.3f)",
                 static_cast<unsigned long long>(seed), opt.alpha, opt.worst_case, gp.length_scales[0],
                 gp.length_scales[1]);
    }
    const auto [lo, hi] = std::minmax_element(alphas.begin(), alphas.end());
    out.gate(*lo >= 0.20 && *hi <= 0.31, "alpha* in [0.20, 0.31]: range [%.4f, %.4f]", *lo, *hi);
    out.gate(*hi - *lo <= 0.04, "stable within +-0.02 over 5 GP restart seeds: spread %.4f", *hi - *lo);
    out.gate(t.seconds() < 900.0, "runtime %.1f s (< 900 s)", t.seconds());
    return out;
}

Outcome shapley(const Settings& s) {
    Outcome out;
    Stopwatch t;
    const auto results = shapley_gsa(benchmark_rho_axis(100), 5, kBifi, 10000, 2024, 0, s.threads);
    std::array<double, 3> mean{};
    double worst_sum = 0.0;
    for (const auto& r : results) {
        for (std::size_t d = 0; d < 3; ++d) mean[d] += r.phi[d] / static_cast<double>(results.size());
        worst_sum = std::max(worst_sum, std::abs(r.phi[0] + r.phi[1] + r.phi[2] - 1.0));
    }
    out.note("N=5, 100 rho values in (0.05, 0.95), 1e4 Wishart draws each, k = %zu neighbours",
             shapley_neighbours(10000));
    out.gate(mean[0] >= 0.64 && mean[0] <= 0.84, "mean phi_rho = %.4f in [0.64, 0.84]", mean[0]);
    out.gate(mean[1] >= 0.07 && mean[1] <= 0.27, "mean phi_sigma0 = %.4f in [0.07, 0.27]", mean[1]);
    out.gate(mean[2] >= 0.0 && mean[2] <= 0.19, "mean phi_sigma1 = %.4f in [0.00, 0.19]", mean[2]);
    out.gate(worst_sum <= 0.03, "efficiency: max |sum phi - 1| = %.2e (<= 0.03); exact here since delta is a"
             " deterministic function of the three inputs", worst_sum);

    // Synthetic checks: Y = X1 + X2 (symmetry, X3 dummy) and Y = X1 + 2 X2.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    std::vector<std::array<double, 3>> x(10000);
    std::vector<double> sym(x.size()), weighted(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = {z(rng), z(rng), z(rng)};
        sym[i] = x[i][0] + x[i][1];
        weighted[i] = x[i][0] + 2.0 * x[i][1];
    }
    const auto a = shapley_effects(x, sym);
    const auto b = shapley_effects(x, weighted);
    out.gate(std::abs(a.phi[0] - a.phi[1]) <= 0.05, "symmetry: Y = X1 + X2 gives (%.4f, %.4f)", a.phi[0], a.phi[1]);
    out.gate(std::abs(a.phi[2]) <= 0.05 && std::abs(b.phi[2]) <= 0.05, "dummy: phi_3 = %.4f and %.4f", a.phi[2],
             b.phi[2]);
    out.gate(std::abs(b.phi[0] - 0.2) <= 0.05 && std::abs(b.phi[1] - 0.8) <= 0.05,
             "Y = X1 + 2 X2 gives (%.4f, %.4f) vs (0.2, 0.8)", b.phi[0], b.phi[1]);
    out.gate(t.seconds() < 1200.0, "runtime %.1f s (< 1200 s)", t.seconds());
    return out;
}

Outcome empirical_agreement(const Settings& s) {
    Outcome out;
    Stopwatch t;
    const auto grid = grid_for(s, 5);
    const auto sur = surrogate_for(s, 5);
    const CiSource ci(sur);
    t.reset();
    PairedOutputs data;
    data.qoi_name = "synthetic";
    data.ensemble = kBifi;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z;
    for (int i = 0; i < 20000; ++i) {
        const double a = z(rng), b = z(rng);
        data.hifi.push_back(a);
        data.lofi.push_back(0.8 * a + 0.6 * b);
    }
    const auto emp = empirical_eval(data, kAlpha, grid, ci, 2000, 7);
    const auto theory = edd_curve_gaussian(kAlpha, 5, kBifi, grid, ci, {emp.truth_rho});
    const double zscore = (emp.edd.mean - theory.edd[0]) / emp.edd.se;
    out.note("synthetic bivariate Gaussian, rho = 0.8, 20000 rows (sample rho %.4f), N = 5, 2000 trials",
             emp.truth_rho);
    out.gate(std::abs(zscore) <= 3.0, "empirical EDD %.5f (se %.5f) vs theoretical %.5f: z = %+.2f (|z| <= 3)",
             emp.edd.mean, emp.edd.se, theory.edd[0], zscore);
    const auto known = empirical_eval(data, kAlpha, grid, ci, 2000, 7, PilotVariances::Truth);
    out.note("diagnostic, full-data standard deviations in each trial: EDD %.5f (se %.5f), z = %+.2f",
             known.edd.mean, known.edd.se, (known.edd.mean - theory.edd[0]) / known.edd.se);
    out.note("the theoretical EDD holds the variances fixed; subsample standard deviations enter beta and shift the"
             " empirical value");
    out.gate(t.seconds() < 600.0, "runtime %.1f s (< 600 s)", t.seconds());
    return out;
}

struct Criterion {
    const char* title;
    std::function<Outcome(const Settings&)> run;
};

const std::map<int, Criterion>& criteria() {
    static const std::map<int, Criterion> all{
        {1, {"closed-form MFMC allocation", closed_form}},
        {2, {"PAVA exactness", pava}},
        {3, {"discrepancy identity and budget invariance", discrepancy_identity}},
        {4, {"Hotelling density", hotelling}},
        {5, {"confidence interval coverage", ci_coverage}},
        {6, {"confidence interval surrogate fidelity", surrogate_fidelity}},
        {7, {"CP grid reconstruction", cp_reconstruction}},
        {8, {"DDMM domination for N in {5, 10, 15}", domination}},
        {9, {"diminishing improvement with N", diminishing}},
        {10, {"alpha optimization", alpha_optimization}},
        {11, {"Shapley sensitivity", shapley}},
        {12, {"empirical and theoretical EDD agree", empirical_agreement}},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::vector<int> ids;
    Settings settings;
    settings.cache_dir = "acceptance_cache";
    app.add_option("criteria", ids, "Criterion numbers (default: all)");
    app.add_option("--cache-dir", settings.cache_dir, "Grid and surrogate cache")->capture_default_str();
    app.add_option("--threads", settings.threads, "Worker threads (0 = all cores)");
    CLI11_PARSE(app, argc, argv);
    if (ids.empty())
        for (const auto& [id, c] : criteria()) ids.push_back(id);

    set_log_sink(
        [](LogLevel level, const char* message, void*) {
            std::fprintf(stderr, "%s: %s\n", level == LogLevel::Warning ? "warning" : "info", message);
        },
        nullptr);

    int failed = 0;
    for (int id : ids) {
        const auto it = criteria().find(id);
        if (it == criteria().end()) {
            std::fprintf(stderr, "unknown criterion %d\n", id);
            return 2;
        }
        Outcome o;
        try {
            o = it->second.run(settings);
        } catch (const std::exception& e) {
            o.gate(false, "error: %s", e.what());
        }
        std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", it->second.title);
        for (const auto& line : o.details) std::printf("    %s\n", line.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
