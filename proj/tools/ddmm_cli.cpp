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

// Command-line front end. Everything goes through the C interface.

#include "ddmm/ddmm.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using json = nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kData = 3, kNumerical = 4 };

class Failure : public std::runtime_error {
public:
    Failure(ddmm_status status, const std::string& what) : std::runtime_error(what), status_(status) {}
    ddmm_status status() const { return status_; }

private:
    ddmm_status status_;
};

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(ddmm_status s) {
    if (s != DDMM_OK) throw Failure(s, ddmm_last_error());
}

int exit_code(ddmm_status s) {
    switch (s) {
        case DDMM_SERIES_DIVERGED:
        case DDMM_NON_FINITE_INTEGRAND:
        case DDMM_ROOT_BRACKET_FAILURE:
        case DDMM_CP_NON_CONVERGENCE:
        case DDMM_GP_FIT_FAILURE:
        case DDMM_RISK_FIT_FAILURE:
        case DDMM_EXTRAPOLATION_REFUSED:
        case DDMM_EMPTY_CONFIDENCE_WINDOW:
            return kNumerical;
        case DDMM_INTERNAL_ERROR:
        case DDMM_NULL_ARGUMENT:
            return kOther;
        default:
            return kData;
    }
}

struct GridDeleter {
    void operator()(ddmm_grid* g) const { ddmm_grid_destroy(g); }
};
struct CiDeleter {
    void operator()(ddmm_ci_surrogate* s) const { ddmm_ci_surrogate_destroy(s); }
};
struct PairedDeleter {
    void operator()(ddmm_paired* p) const { ddmm_paired_destroy(p); }
};
using GridPtr = std::unique_ptr<ddmm_grid, GridDeleter>;
using CiPtr = std::unique_ptr<ddmm_ci_surrogate, CiDeleter>;
using PairedPtr = std::unique_ptr<ddmm_paired, PairedDeleter>;

struct Config {
    std::string alpha = "0.253";
    int pilot_size = 5;
    std::vector<double> costs;
    double budget = 100.0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string cache_dir = ".ddmm-cache";
    std::string out;
    bool no_cache = false;
    bool quiet = false;

    std::vector<double> theta0_range{0.0, 25.0};
    std::vector<double> theta1_range{-12.0, 12.0};
    std::vector<std::size_t> fine_dims{200, 200, 1000};
    std::vector<std::size_t> coarse_dims{25, 25, 60};
    int cp_rank = 12;
    bool accept_unconverged_cp = false;
    int quadrature_order = 200;

    // alpha selection
    std::size_t design_points = 350;
    int repetitions = 75;
    int gp_restarts = 8;
    std::vector<double> alpha_range{0.05, 0.6};
    std::vector<double> design_rho_range{0.5, 0.95};
};

struct Context {
    Config cfg;
    std::string config_echo;
    std::string command;
};

ddmm_ensemble ensemble_of(const Config& c) {
    if (c.costs.size() < 2) throw UsageError("--costs needs at least two values (hifi first)");
    return {c.costs.size(), c.costs.data(), c.budget};
}

void log_to_stderr(int level, const char* message, void* user) {
    const bool quiet = *static_cast<bool*>(user);
    if (level == 0 && quiet) return;
    std::fprintf(stderr, "%s: %s\n", level == 0 ? "info" : "warning", message);
}

void progress(const Config& c, const std::string& message) {
    if (!c.quiet) std::fprintf(stderr, "info: %s\n", message.c_str());
}

const char* cache_of(const Config& c) { return c.cache_dir.empty() ? nullptr : c.cache_dir.c_str(); }

GridPtr make_grid(const Config& c, int n_pilot) {
    if (c.costs.size() != 2) throw UsageError("grids need exactly two costs");
    if (c.fine_dims.size() != 3 || c.coarse_dims.size() != 3) throw UsageError("grid dims need three values");
    ddmm_grid_options o;
    ddmm_grid_options_init(&o);
    o.theta0_range[0] = c.theta0_range[0];
    o.theta0_range[1] = c.theta0_range[1];
    o.theta1_range[0] = c.theta1_range[0];
    o.theta1_range[1] = c.theta1_range[1];
    for (int i = 0; i < 3; ++i) {
        o.fine_dims[i] = c.fine_dims[static_cast<std::size_t>(i)];
        o.coarse_dims[i] = c.coarse_dims[static_cast<std::size_t>(i)];
    }
    o.cp_rank = c.cp_rank;
    o.accept_unconverged_cp = c.accept_unconverged_cp ? 1 : 0;
    o.quadrature_order = c.quadrature_order;
    o.seed = c.seed;
    o.threads = c.threads;
    progress(c, "expected discrepancy grid for N = " + std::to_string(n_pilot) +
                    (c.cache_dir.empty() ? "" : " (cache " + c.cache_dir + ")"));
    const ddmm_ensemble e = ensemble_of(c);
    ddmm_grid* g = nullptr;
    check(ddmm_grid_create(n_pilot, &e, &o, cache_of(c), c.no_cache ? 1 : 0, &g));
    return GridPtr(g);
}

CiPtr make_ci(const Config& c, int n_pilot) {
    progress(c, "confidence interval surrogate for N = " + std::to_string(n_pilot));
    ddmm_ci_surrogate* s = nullptr;
    check(ddmm_ci_surrogate_create(n_pilot, cache_of(c), c.no_cache ? 1 : 0, c.threads, &s));
    return CiPtr(s);
}

ddmm_alpha_options alpha_options(const Config& c) {
    ddmm_alpha_options o;
    ddmm_alpha_options_init(&o);
    o.alpha_range[0] = c.alpha_range[0];
    o.alpha_range[1] = c.alpha_range[1];
    o.rho_range[0] = c.design_rho_range[0];
    o.rho_range[1] = c.design_rho_range[1];
    o.design_points = c.design_points;
    o.repetitions = c.repetitions;
    o.seed = c.seed;
    o.gp_restarts = c.gp_restarts;
    o.gp_seed = c.seed;
    o.threads = c.threads;
    return o;
}

// Numeric alpha, or the optimized one for "auto".
double resolve_alpha(const Config& c, const ddmm_grid* grid, const ddmm_ci_surrogate* ci, json& report) {
    if (c.alpha == "auto") {
        progress(c, "optimizing alpha");
        const ddmm_alpha_options o = alpha_options(c);
        ddmm_alpha_result r;
        check(ddmm_optimize_alpha(grid, ci, &o, &r));
        report["alpha_source"] = "auto";
        report["alpha_worst_case_edd"] = r.worst_case;
        return r.alpha;
    }
    std::size_t used = 0;
    double a = 0.0;
    try {
        a = std::stod(c.alpha, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != c.alpha.size() || !(a > 0.0 && a < 1.0)) throw UsageError("--alpha must be in (0, 1) or \"auto\"");
    report["alpha_source"] = "fixed";
    return a;
}

std::filesystem::path out_path(const Context& ctx, const std::string& name) {
    std::filesystem::create_directories(ctx.cfg.out);
    return std::filesystem::path(ctx.cfg.out) / name;
}

// CSV with the configuration echoed as comment lines.
class CsvWriter {
public:
    CsvWriter(const Context& ctx, const std::string& name, const std::string& header) {
        if (ctx.cfg.out.empty()) return;
        const auto path = out_path(ctx, name);
        file_.open(path);
        if (!file_) throw Failure(DDMM_IO_ERROR, "cannot write " + path.string());
        file_ << "# ddmm " << ctx.command << "\n";
        std::istringstream echo(ctx.config_echo);
        for (std::string line; std::getline(echo, line);)
            if (!line.empty()) file_ << "# " << line << "\n";
        file_ << header << "\n";
    }

    template <typename... T>
    void row(const T&... values) {
        if (!file_.is_open()) return;
        bool first = true;
        ((file_ << (first ? "" : ",") << format(values), first = false), ...);
        file_ << "\n";
    }

private:
    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    static std::string format(const std::string& v) { return v; }
    static std::string format(const char* v) { return v; }
    template <typename I, typename = std::enable_if_t<std::is_integral_v<I>>>
    static std::string format(I v) {
        return std::to_string(v);
    }

    std::ofstream file_;
};

void write_summary(const Context& ctx, const json& report) {
    std::cout << report.dump(2) << std::endl;
    if (ctx.cfg.out.empty()) return;
    std::ofstream f(out_path(ctx, ctx.command + "_summary.json"));
    if (!f) throw Failure(DDMM_IO_ERROR, "cannot write summary");
    f << report.dump(2) << "\n";
}

json allocation_json(std::size_t models, const ddmm_covariance& cov, const ddmm_ensemble& e) {
    std::vector<double> n(models), beta(models - 1);
    std::vector<std::size_t> order(models);
    ddmm_allocation a{n.data(), beta.data(), order.data(), 0, 0, 0.0, 0.0, 0.0};
    check(ddmm_allocate(&cov, &e, &a));
    json j;
    j["n"] = n;
    j["beta"] = beta;
    j["order"] = order;
    j["pooled"] = a.pooled != 0;
    j["closed_form_conditions"] = a.closed_form != 0;
    j["variance"] = a.variance;
    j["hifi_mc_variance"] = a.hifi_mc_variance;
    j["variance_reduction_ratio"] = a.variance_reduction_ratio;
    return j;
}

struct Pilot {
    PairedPtr data;
    std::size_t group = 0;
    const double* hifi = nullptr;
    const double* lofi = nullptr;
    std::size_t rows = 0;
    std::string name;
};

Pilot read_pilot(const std::string& path, const std::string& qoi) {
    Pilot p;
    ddmm_paired* raw = nullptr;
    check(ddmm_paired_read(path.c_str(), &raw));
    p.data.reset(raw);
    const std::size_t groups = ddmm_paired_groups(raw);
    p.group = groups;
    for (std::size_t g = 0; g < groups; ++g)
        if (qoi.empty() || qoi == ddmm_paired_name(raw, g)) {
            p.group = g;
            break;
        }
    if (p.group == groups) throw Failure(DDMM_INVALID_ARGUMENT, "no output group named " + qoi + " in " + path);
    check(ddmm_paired_columns(raw, p.group, &p.hifi, &p.lofi, &p.rows));
    p.name = ddmm_paired_name(raw, p.group);
    return p;
}

// ---- subcommands ----------------------------------------------------------

struct AllocateArgs {
    std::vector<double> rho, sigma;
    std::string pilot, qoi;
};

void cmd_allocate(const Context& ctx, const AllocateArgs& a) {
    const Config& c = ctx.cfg;
    const ddmm_ensemble e = ensemble_of(c);
    json report;
    report["command"] = "allocate";
    std::vector<double> sigma, rho0;
    if (!a.pilot.empty()) {
        if (c.costs.size() != 2) throw UsageError("a pilot file gives two models; pass two costs");
        const Pilot p = read_pilot(a.pilot, a.qoi);
        double s0 = 0, s1 = 0, r = 0;
        check(ddmm_sample_moments(p.hifi, p.lofi, p.rows, &s0, &s1, &r));
        sigma = {s0, s1};
        rho0 = {r};
        report["pilot_rows"] = p.rows;
    } else {
        if (a.rho.size() + 1 != c.costs.size()) throw UsageError("--rho needs one value per low-fidelity model");
        rho0 = a.rho;
        sigma = a.sigma.empty() ? std::vector<double>(c.costs.size(), 1.0) : a.sigma;
        if (sigma.size() != c.costs.size()) throw UsageError("--sigma needs one value per model");
    }
    const ddmm_covariance cov{sigma.size(), sigma.data(), rho0.data(), nullptr};
    report["sigma"] = sigma;
    report["rho"] = rho0;
    report["costs"] = c.costs;
    report["budget"] = c.budget;
    report["allocation"] = allocation_json(sigma.size(), cov, e);
    CsvWriter csv(ctx, "allocation.csv", "position,model,n,beta");
    const auto& al = report["allocation"];
    for (std::size_t i = 0; i < sigma.size(); ++i)
        csv.row(i, al["order"][i].get<std::size_t>(), al["n"][i].get<double>(),
                i == 0 ? std::nan("") : al["beta"][i - 1].get<double>());
    write_summary(ctx, report);
}

struct AdjustArgs {
    std::string pilot, qoi;
};

void cmd_adjust(const Context& ctx, const AdjustArgs& a) {
    const Config& c = ctx.cfg;
    const Pilot p = read_pilot(a.pilot, a.qoi);
    if (p.rows < 3) throw Failure(DDMM_INVALID_ARGUMENT, "the pilot file needs at least 3 rows (N >= 3)");
    const int n = static_cast<int>(p.rows);
    json report;
    report["command"] = "adjust";
    report["pilot"] = a.pilot;
    report["qoi"] = p.name;
    report["n_pilot"] = n;
    const GridPtr grid = make_grid(c, n);
    const CiPtr ci = make_ci(c, n);
    const double alpha = resolve_alpha(c, grid.get(), ci.get(), report);
    ddmm_solution s;
    check(ddmm_adjust_pairs(grid.get(), ci.get(), p.hifi, p.lofi, p.rows, alpha, &s));
    report["alpha"] = s.alpha;
    report["observed_r"] = s.observed_r;
    report["adjusted_rho"] = s.adjusted_rho;
    report["theta"] = {s.theta0, s.theta1};
    report["ci"] = {s.ci_lower, s.ci_upper};
    report["worst_case_expected_discrepancy"] = s.worst_case_expected_discrepancy;
    report["snapped_to_nearest_column"] = s.snapped != 0;

    double s0 = 0, s1 = 0;
    check(ddmm_sample_moments(p.hifi, p.lofi, p.rows, &s0, &s1, nullptr));
    const std::vector<double> sigma{s0, s1};
    const ddmm_ensemble e = ensemble_of(c);
    const double raw = std::max(s.observed_r, 1e-4);
    const ddmm_covariance adjusted{2, sigma.data(), &s.adjusted_rho, nullptr};
    const ddmm_covariance unadjusted{2, sigma.data(), &raw, nullptr};
    report["allocation_adjusted"] = allocation_json(2, adjusted, e);
    report["allocation_unadjusted"] = allocation_json(2, unadjusted, e);
    write_summary(ctx, report);
}

struct CiArgs {
    double r = 0.0;
    std::string method = "exact";
};

void cmd_ci(const Context& ctx, const CiArgs& a) {
    const Config& c = ctx.cfg;
    json report;
    report["command"] = "ci";
    report["observed_r"] = a.r;
    report["n_pilot"] = c.pilot_size;
    const double alpha = resolve_alpha(c, nullptr, nullptr, report);
    double lo = 0, hi = 0;
    if (a.method == "exact") {
        check(ddmm_ci_exact(a.r, alpha, c.pilot_size, &lo, &hi));
    } else {
        const CiPtr ci = make_ci(c, c.pilot_size);
        check(ddmm_ci_surrogate_query(ci.get(), a.r, alpha, &lo, &hi));
    }
    report["alpha"] = alpha;
    report["method"] = a.method;
    report["ci"] = {lo, hi};
    write_summary(ctx, report);
}

struct GridArgs {
    std::vector<int> pilot_sizes;
};

void cmd_grid_build(const Context& ctx, const GridArgs& a) {
    const Config& c = ctx.cfg;
    const std::vector<int> sizes = a.pilot_sizes.empty() ? std::vector<int>{c.pilot_size} : a.pilot_sizes;
    json report;
    report["command"] = "grid-build";
    report["cache_dir"] = c.cache_dir;
    CsvWriter csv(ctx, "grids.csv", "n_pilot,d_theta0,d_theta1,d_rho,cp_rank,cp_iterations,reconstruction_error");
    for (int n : sizes) {
        const GridPtr grid = make_grid(c, n);
        const CiPtr ci = make_ci(c, n);
        ddmm_grid_info info;
        check(ddmm_grid_get_info(grid.get(), &info));
        report["grids"].push_back({{"n_pilot", info.n_pilot},
                                   {"dims", {info.dims[0], info.dims[1], info.dims[2]}},
                                   {"cp_rank", info.cp_rank},
                                   {"cp_iterations", info.cp_iterations},
                                   {"reconstruction_error", info.reconstruction_error}});
        csv.row(info.n_pilot, info.dims[0], info.dims[1], info.dims[2], info.cp_rank, info.cp_iterations,
                info.reconstruction_error);
    }
    write_summary(ctx, report);
}

struct AlphaArgs {
    bool risk = false;
    double time_budget = 900.0;
    std::size_t front_points = 20;
    std::size_t resamples = 100;
    std::string design_out, surface_out;
};

void cmd_alpha_opt(const Context& ctx, const AlphaArgs& a) {
    const Config& c = ctx.cfg;
    const GridPtr grid = make_grid(c, c.pilot_size);
    const CiPtr ci = make_ci(c, c.pilot_size);
    ddmm_alpha_options o = alpha_options(c);
    if (!a.design_out.empty()) o.design_path = a.design_out.c_str();
    if (!a.surface_out.empty()) o.surface_path = a.surface_out.c_str();
    json report;
    report["command"] = "alpha-opt";
    report["n_pilot"] = c.pilot_size;
    report["design_points"] = c.design_points;
    report["repetitions"] = c.repetitions;
    progress(c, "building the alpha design");
    ddmm_alpha_result r;
    check(ddmm_optimize_alpha(grid.get(), ci.get(), &o, &r));
    report["alpha_star"] = r.alpha;
    report["worst_case_edd"] = r.worst_case;
    report["gp_length_scales"] = {r.length_scales[0], r.length_scales[1]};
    report["gp_signal_variance"] = r.signal_variance;
    if (a.risk) {
        progress(c, "estimating the risk along the design/repetition front");
        std::vector<ddmm_risk_row> rows(a.front_points);
        std::size_t written = 0;
        ddmm_risk_fit fit;
        o.design_path = nullptr;
        o.surface_path = nullptr;
        check(ddmm_alpha_risk(grid.get(), ci.get(), &o, a.time_budget, a.front_points, a.resamples, rows.data(),
                              &written, &fit));
        report["risk"] = {{"time_budget", a.time_budget},
                          {"seconds_per_sample", fit.seconds_per_sample},
                          {"alpha_reference", fit.alpha_reference},
                          {"b1", fit.b1},
                          {"c1", fit.c1},
                          {"c2", fit.c2}};
        CsvWriter csv(ctx, "alpha_risk.csv", "design_points,repetitions,risk,std_error,fitted_risk");
        for (std::size_t i = 0; i < written; ++i)
            csv.row(rows[i].design_points, rows[i].repetitions, rows[i].risk, rows[i].std_error, rows[i].fitted);
    }
    write_summary(ctx, report);
}

struct GaussianArgs {
    std::vector<int> pilot_sizes;
    std::size_t rho_points = 50;
    std::vector<double> rho_range{0.05, 0.95};
};

void cmd_benchmark_gaussian(const Context& ctx, const GaussianArgs& a) {
    const Config& c = ctx.cfg;
    const std::vector<int> sizes = a.pilot_sizes.empty() ? std::vector<int>{c.pilot_size} : a.pilot_sizes;
    if (a.rho_range.size() != 2) throw UsageError("--rho-range needs two values");
    std::vector<double> rho(a.rho_points);
    check(ddmm_rho_axis(a.rho_points, a.rho_range[0], a.rho_range[1], rho.data()));
    const ddmm_ensemble e = ensemble_of(c);
    json report;
    report["command"] = "benchmark-gaussian";
    CsvWriter summary(ctx, "edd_vs_n.csv", "n_pilot,alpha,mean_edd,mean_pct_edd,max_edd");
    for (int n : sizes) {
        const GridPtr grid = make_grid(c, n);
        const CiPtr ci = make_ci(c, n);
        json row;
        const double alpha = resolve_alpha(c, grid.get(), ci.get(), row);
        std::vector<double> edd(rho.size()), base(rho.size()), pct(rho.size());
        check(ddmm_edd_curve(grid.get(), ci.get(), alpha, &e, rho.data(), rho.size(), edd.data(), base.data(),
                             pct.data()));
        CsvWriter csv(ctx, "edd_N" + std::to_string(n) + ".csv", "rho,edd,unadjusted,pct_edd");
        double sum = 0.0, sum_pct = 0.0, max_edd = -INFINITY;
        std::size_t finite = 0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            csv.row(rho[i], edd[i], base[i], pct[i]);
            sum += edd[i];
            max_edd = std::max(max_edd, edd[i]);
            if (std::isfinite(pct[i])) {
                sum_pct += pct[i];
                ++finite;
            }
        }
        const double mean_edd = sum / static_cast<double>(rho.size());
        const double mean_pct = finite ? sum_pct / static_cast<double>(finite) : std::nan("");
        summary.row(n, alpha, mean_edd, mean_pct, max_edd);
        row["n_pilot"] = n;
        row["alpha"] = alpha;
        row["mean_edd"] = mean_edd;
        row["mean_pct_edd"] = mean_pct;
        row["max_edd"] = max_edd;
        row["edd_negative_everywhere"] = max_edd < 0.0;
        report["pilot_sizes"].push_back(row);
    }
    write_summary(ctx, report);
}

struct EmpiricalArgs {
    std::string data;
    std::size_t trials = 2000;
    bool known_variances = false;
};

void cmd_benchmark_empirical(const Context& ctx, const EmpiricalArgs& a) {
    const Config& c = ctx.cfg;
    ddmm_paired* raw = nullptr;
    check(ddmm_paired_read(a.data.c_str(), &raw));
    const PairedPtr data(raw);
    const ddmm_ensemble e = ensemble_of(c);
    const GridPtr grid = make_grid(c, c.pilot_size);
    const CiPtr ci = make_ci(c, c.pilot_size);
    json report;
    report["command"] = "benchmark-empirical";
    report["data"] = a.data;
    report["n_pilot"] = c.pilot_size;
    report["trials"] = a.trials;
    const double alpha = resolve_alpha(c, grid.get(), ci.get(), report);
    report["alpha"] = alpha;
    CsvWriter csv(ctx, "empirical.csv",
                  "qoi,rows,truth_rho,vrr_unadjusted,vrr_adjusted,vrr_improvement_pct,edd,edd_se,pct_edd,"
                  "mse_unadjusted,mse_adjusted,mse_pct_change,clamped,resampled");
    double vrr_imp = 0, edd = 0, pct = 0, mse = 0;
    const std::size_t groups = ddmm_paired_groups(raw);
    for (std::size_t g = 0; g < groups; ++g) {
        ddmm_empirical_summary s;
        check(ddmm_empirical_eval(raw, g, &e, grid.get(), ci.get(), alpha, a.trials, c.seed, a.known_variances,
                                  &s));
        const double imp = 100.0 * (s.vrr_adjusted.mean - s.vrr_unadjusted.mean) / s.vrr_unadjusted.mean;
        const std::string name = ddmm_paired_name(raw, g);
        csv.row(name, ddmm_paired_rows(raw, g), s.truth_rho, s.vrr_unadjusted.mean, s.vrr_adjusted.mean, imp,
                s.edd.mean, s.edd.se, s.pct_edd, s.mse_unadjusted.mean, s.mse_adjusted.mean, s.mse_pct_change,
                s.clamped, s.resampled);
        report["qoi"].push_back({{"name", name},
                                 {"truth_rho", s.truth_rho},
                                 {"vrr_improvement_pct", imp},
                                 {"edd", s.edd.mean},
                                 {"edd_se", s.edd.se},
                                 {"pct_edd", s.pct_edd},
                                 {"mse_pct_change", s.mse_pct_change}});
        vrr_imp += imp;
        edd += s.edd.mean;
        pct += s.pct_edd;
        mse += s.mse_pct_change;
    }
    const double k = static_cast<double>(groups);
    report["average"] = {{"vrr_improvement_pct", vrr_imp / k},
                         {"edd", edd / k},
                         {"pct_edd", pct / k},
                         {"mse_pct_change", mse / k}};
    write_summary(ctx, report);
}

struct ShapleyArgs {
    std::size_t rho_points = 100;
    std::vector<double> rho_range{0.05, 0.95};
    std::size_t mc = 10000;
    std::size_t neighbours = 0;
};

void cmd_shapley(const Context& ctx, const ShapleyArgs& a) {
    const Config& c = ctx.cfg;
    if (a.rho_range.size() != 2) throw UsageError("--rho-range needs two values");
    std::vector<double> rho(a.rho_points);
    check(ddmm_rho_axis(a.rho_points, a.rho_range[0], a.rho_range[1], rho.data()));
    const ddmm_ensemble e = ensemble_of(c);
    std::vector<double> phi(3 * rho.size()), total(rho.size());
    check(ddmm_shapley(rho.data(), rho.size(), c.pilot_size, &e, a.mc, c.seed, a.neighbours, c.threads, phi.data(),
                       total.data()));
    CsvWriter csv(ctx, "shapley.csv", "rho,phi_rho,phi_sigma0,phi_sigma1,total_variance");
    double m[3] = {0, 0, 0};
    for (std::size_t i = 0; i < rho.size(); ++i) {
        csv.row(rho[i], phi[3 * i], phi[3 * i + 1], phi[3 * i + 2], total[i]);
        for (int d = 0; d < 3; ++d) m[d] += phi[3 * i + static_cast<std::size_t>(d)] / static_cast<double>(rho.size());
    }
    json report;
    report["command"] = "shapley";
    report["n_pilot"] = c.pilot_size;
    report["mc_samples"] = a.mc;
    report["mean_phi"] = {{"rho", m[0]}, {"sigma0", m[1]}, {"sigma1", m[2]}};
    write_summary(ctx, report);
}

struct RobustnessArgs {
    std::vector<int> pilot_sizes{5, 10, 20, 50, 100};
    std::size_t scenarios = 8;
    std::size_t models = 4;
    std::size_t trials = 1000;
};

void cmd_robustness(const Context& ctx, const RobustnessArgs& a) {
    const Config& c = ctx.cfg;
    std::vector<ddmm_robustness_row> rows(a.pilot_sizes.size());
    check(ddmm_robustness(a.pilot_sizes.data(), a.pilot_sizes.size(), a.scenarios, a.models, a.trials, c.seed,
                          rows.data()));
    CsvWriter csv(ctx, "robustness.csv",
                  "n_pilot,true_variance,true_variance_se,discrepancy,discrepancy_se,projected_ratio,"
                  "projected_ratio_se");
    json report;
    report["command"] = "robustness";
    for (const auto& r : rows) {
        csv.row(r.n_pilot, r.true_variance.mean, r.true_variance.se, r.discrepancy.mean, r.discrepancy.se,
                r.projected_ratio.mean, r.projected_ratio.se);
        report["rows"].push_back({{"n_pilot", r.n_pilot},
                                  {"discrepancy", r.discrepancy.mean},
                                  {"discrepancy_se", r.discrepancy.se},
                                  {"projected_ratio", r.projected_ratio.mean}});
    }
    write_summary(ctx, report);
}

// Effective configuration of the global options and the active subcommand.
// The output location is left out so reruns into other directories match.
std::string config_echo(const CLI::App& app) {
    std::string active;
    for (const auto* sub : app.get_subcommands()) active = sub->get_name();
    std::istringstream all(app.config_to_str(true, false));
    std::string kept;
    for (std::string line; std::getline(all, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const auto dot = key.find('.');
        if (key == "out" || key == "quiet" || key == "threads") continue;
        if (dot != std::string::npos && key.substr(0, dot) != active) continue;
        kept += line + "\n";
    }
    return kept;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven minimax adjustment of pilot correlations for multi-fidelity Monte Carlo"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value configuration file; flags override it");
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    Context ctx;
    Config& c = ctx.cfg;
    app.add_option("--alpha", c.alpha, "Miscoverage level in (0, 1), or auto")->capture_default_str();
    app.add_option("--pilot-size", c.pilot_size, "Pilot sample size N")->capture_default_str()->check(CLI::Range(3, 100000));
    app.add_option("--costs", c.costs, "Model costs, high fidelity first")->delimiter(',');
    app.add_option("--budget", c.budget, "Computational budget")->capture_default_str();
    app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
    app.add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
    app.add_option("--cache-dir", c.cache_dir, "Cache directory for grids and surrogates (empty disables)")
        ->capture_default_str();
    app.add_option("--out", c.out, "Directory for CSV and summary files");
    app.add_flag("--no-cache", c.no_cache, "Recompute cached grids and surrogates");
    app.add_flag("--quiet", c.quiet, "Only warnings on stderr");
    auto grid_group = "Grid";
    app.add_option("--theta0-range", c.theta0_range, "theta0 range")->expected(2)->delimiter(',')->capture_default_str()->group(grid_group);
    app.add_option("--theta1-range", c.theta1_range, "theta1 range")->expected(2)->delimiter(',')->capture_default_str()->group(grid_group);
    app.add_option("--fine-dims", c.fine_dims, "Fine grid dims")->expected(3)->delimiter(',')->capture_default_str()->group(grid_group);
    app.add_option("--coarse-dims", c.coarse_dims, "Coarse grid dims")->expected(3)->delimiter(',')->capture_default_str()->group(grid_group);
    app.add_option("--cp-rank", c.cp_rank, "CP rank")->capture_default_str()->group(grid_group);
    app.add_flag("--accept-unconverged-cp", c.accept_unconverged_cp,
                 "Keep the CP reconstruction when ALS hits its iteration cap")
        ->group(grid_group);
    app.add_option("--quadrature-order", c.quadrature_order, "Quadrature nodes over the sample correlation")
        ->capture_default_str()
        ->group(grid_group);
    auto alpha_group = "Alpha selection";
    app.add_option("--design-points", c.design_points, "Design points D")->capture_default_str()->group(alpha_group);
    app.add_option("--repetitions", c.repetitions, "Repetitions R per design point")
        ->capture_default_str()
        ->group(alpha_group);
    app.add_option("--gp-restarts", c.gp_restarts, "GP likelihood restarts")->capture_default_str()->group(alpha_group);
    app.add_option("--alpha-range", c.alpha_range, "alpha search range")->expected(2)->delimiter(',')->capture_default_str()->group(alpha_group);
    app.add_option("--design-rho-range", c.design_rho_range, "rho range of the alpha design")
        ->expected(2)
        ->delimiter(',')
        ->capture_default_str()
        ->group(alpha_group);

    AllocateArgs alloc;
    auto* s_alloc = app.add_subcommand("allocate", "Optimal MFMC allocation from correlations or a pilot file");
    s_alloc->add_option("--rho", alloc.rho, "corr(hifi, model i) for each low-fidelity model")->delimiter(',');
    s_alloc->add_option("--sigma", alloc.sigma, "Output standard deviations (default 1)")->delimiter(',');
    s_alloc->add_option("--pilot", alloc.pilot, "Paired pilot outputs CSV")->check(CLI::ExistingFile);
    s_alloc->add_option("--qoi", alloc.qoi, "Output group in the pilot file");
    s_alloc->get_option("--rho")->excludes(s_alloc->get_option("--pilot"));

    AdjustArgs adj;
    auto* s_adj = app.add_subcommand("adjust", "Adjust the pilot correlation and allocate");
    s_adj->add_option("--pilot", adj.pilot, "Paired pilot outputs CSV")->required();
    s_adj->add_option("--qoi", adj.qoi, "Output group in the pilot file");

    CiArgs cia;
    auto* s_ci = app.add_subcommand("ci", "Confidence interval for a correlation");
    s_ci->add_option("--r", cia.r, "Observed sample correlation")->required();
    s_ci->add_option("--method", cia.method, "exact or surrogate")
        ->check(CLI::IsMember({"exact", "surrogate"}))
        ->capture_default_str();

    GridArgs ga;
    auto* s_grid = app.add_subcommand("grid-build", "Build and cache expected discrepancy grids");
    s_grid->add_option("--pilot-sizes", ga.pilot_sizes, "Pilot sizes (default --pilot-size)")->delimiter(',');

    AlphaArgs aa;
    auto* s_alpha = app.add_subcommand("alpha-opt", "Choose alpha by minimax over a GP surface");
    s_alpha->add_flag("--risk", aa.risk, "Also estimate the design/repetition risk curve");
    s_alpha->add_option("--time-budget", aa.time_budget, "Seconds for the front D R r = t")->capture_default_str();
    s_alpha->add_option("--front-points", aa.front_points, "Settings along the front")->capture_default_str();
    s_alpha->add_option("--resamples", aa.resamples, "Subsamples per front setting")->capture_default_str();
    s_alpha->add_option("--design-out", aa.design_out, "Write the design here");
    s_alpha->add_option("--surface-out", aa.surface_out, "Write the fitted surface here");

    GaussianArgs gb;
    auto* s_gauss = app.add_subcommand("benchmark-gaussian", "EDD curves under bivariate Gaussian outputs");
    s_gauss->add_option("--pilot-sizes", gb.pilot_sizes, "Pilot sizes (default --pilot-size)")->delimiter(',');
    s_gauss->add_option("--rho-points", gb.rho_points, "Points on the rho axis")->capture_default_str();
    s_gauss->add_option("--rho-range", gb.rho_range, "rho axis range")->expected(2)->delimiter(',')->capture_default_str();

    EmpiricalArgs eb;
    auto* s_emp = app.add_subcommand("benchmark-empirical", "Subsampling evaluation on paired outputs");
    s_emp->add_option("--data", eb.data, "Paired outputs CSV")->required();
    s_emp->add_option("--trials", eb.trials, "Subsampling trials per output")->capture_default_str();
    s_emp->add_flag("--known-variances", eb.known_variances, "Use full-data standard deviations in each trial");

    ShapleyArgs sa;
    auto* s_shap = app.add_subcommand("shapley", "Shapley effects of (rho, sigma0, sigma1) on the discrepancy");
    s_shap->add_option("--rho-points", sa.rho_points, "Truth values")->capture_default_str();
    s_shap->add_option("--rho-range", sa.rho_range, "Truth range")->expected(2)->delimiter(',')->capture_default_str();
    s_shap->add_option("--mc", sa.mc, "Monte Carlo samples per truth")->capture_default_str();
    s_shap->add_option("--neighbours", sa.neighbours, "Neighbours for conditioning (0 = default)");

    RobustnessArgs ra;
    auto* s_rob = app.add_subcommand("robustness", "MFMC under sampled covariances of ordered ensembles");
    s_rob->add_option("--pilot-sizes", ra.pilot_sizes, "Pilot sizes")->delimiter(',')->capture_default_str();
    s_rob->add_option("--scenarios", ra.scenarios, "Scenario count")->capture_default_str();
    s_rob->add_option("--models", ra.models, "Models per scenario")->capture_default_str();
    s_rob->add_option("--trials", ra.trials, "Covariance draws per scenario and size")->capture_default_str();

    for (auto* sub : {s_alloc, s_gauss, s_emp, s_adj, s_alpha}) sub->fallthrough();
    for (auto* sub : {s_ci, s_grid, s_shap, s_rob}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    ddmm_set_log_callback(log_to_stderr, &c.quiet);
    ctx.config_echo = config_echo(app);
    try {
        if (c.costs.empty() && !s_ci->parsed() && !s_rob->parsed())
            throw UsageError("--costs is required for this command");
        if (*s_alloc) ctx.command = "allocate", cmd_allocate(ctx, alloc);
        else if (*s_adj) ctx.command = "adjust", cmd_adjust(ctx, adj);
        else if (*s_ci) ctx.command = "ci", cmd_ci(ctx, cia);
        else if (*s_grid) ctx.command = "grid-build", cmd_grid_build(ctx, ga);
        else if (*s_alpha) ctx.command = "alpha-opt", cmd_alpha_opt(ctx, aa);
        else if (*s_gauss) ctx.command = "benchmark-gaussian", cmd_benchmark_gaussian(ctx, gb);
        else if (*s_emp) ctx.command = "benchmark-empirical", cmd_benchmark_empirical(ctx, eb);
        else if (*s_shap) ctx.command = "shapley", cmd_shapley(ctx, sa);
        else if (*s_rob) ctx.command = "robustness", cmd_robustness(ctx, ra);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kUsage;
    } catch (const Failure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.status());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOther;
    }
    return kOk;
}
