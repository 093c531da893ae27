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

#include "ddmm/ddmm.h"

#include "ddmm/alpha_opt.hpp"
#include "ddmm/error.hpp"
#include "ddmm/evaluation.hpp"
#include "ddmm/log.hpp"
#include "ddmm/sampling.hpp"

#include <algorithm>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

struct ddmm_ci_surrogate {
    ddmm::CiSurrogate surrogate;
};

struct ddmm_grid {
    ddmm::ExpectedDiscrepancyGrid grid;
};

struct ddmm_paired {
    std::vector<ddmm::PairedOutputs> groups;
};

namespace {

thread_local std::string t_last_error;

ddmm_status set_error(ddmm_status status, const std::string& message) {
    t_last_error = message;
    return status;
}

// Runs f, translating exceptions into status codes.
template <typename F>
ddmm_status guarded(F&& f) {
    try {
        f();
        t_last_error.clear();
        return DDMM_OK;
    } catch (const ddmm::Error& e) {
        return set_error(static_cast<ddmm_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(DDMM_INTERNAL_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return set_error(DDMM_INTERNAL_ERROR, e.what());
    } catch (...) {
        return set_error(DDMM_INTERNAL_ERROR, "unknown exception");
    }
}

#define DDMM_REQUIRE_PTR(p)                                                         \
    do {                                                                            \
        if ((p) == nullptr) return set_error(DDMM_NULL_ARGUMENT, #p " is NULL");    \
    } while (0)

ddmm::CovarianceSpec to_covariance(const ddmm_covariance& c) {
    ddmm::require(c.models >= 1, ddmm::ErrorCode::InvalidArgument, "covariance needs at least one model");
    if (c.full) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(c.models), static_cast<Eigen::Index>(c.models));
        for (std::size_t i = 0; i < c.models; ++i)
            for (std::size_t j = 0; j < c.models; ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.full[i * c.models + j];
        return ddmm::CovarianceSpec::from_matrix(m);
    }
    ddmm::require(c.sigma != nullptr && (c.models == 1 || c.rho0 != nullptr), ddmm::ErrorCode::InvalidArgument,
                  "covariance needs sigma and rho0, or a full matrix");
    return ddmm::CovarianceSpec::from_correlation({c.sigma, c.sigma + c.models},
                                                  {c.rho0, c.rho0 + (c.models - 1)});
}

ddmm::ModelEnsemble to_ensemble(const ddmm_ensemble& e) {
    ddmm::require(e.costs != nullptr && e.models >= 1, ddmm::ErrorCode::InvalidArgument, "ensemble has no costs");
    ddmm::ModelEnsemble out{{e.costs, e.costs + e.models}, e.budget};
    out.validate();
    return out;
}

ddmm::CiSource source(const ddmm_grid* grid, const ddmm_ci_surrogate* ci) {
    return ci ? ddmm::CiSource(ci->surrogate) : ddmm::CiSource(grid->grid.n_pilot());
}

ddmm::AlphaBox to_box(const ddmm_alpha_options& o) {
    ddmm::AlphaBox box{o.alpha_range[0], o.alpha_range[1], o.rho_range[0], o.rho_range[1]};
    box.validate();
    return box;
}

ddmm::GpOptions to_gp(const ddmm_alpha_options& o) {
    ddmm::GpOptions gp;
    gp.restarts = o.gp_restarts;
    gp.seed = o.gp_seed;
    gp.threads = o.threads;
    return gp;
}

ddmm_mean_se to_c(const ddmm::MeanSe& m) { return {m.mean, m.se}; }

void fill_solution(const ddmm::DdmmSolution& s, ddmm_solution* out) {
    out->observed_r = s.observed_r;
    out->adjusted_rho = s.adjusted_rho;
    out->theta0 = s.theta_hat.theta0;
    out->theta1 = s.theta_hat.theta1;
    out->ci_lower = s.ci.lower;
    out->ci_upper = s.ci.upper;
    out->worst_case_expected_discrepancy = s.worst_case_expected_discrepancy;
    out->alpha = s.alpha;
    out->snapped = s.window.snapped ? 1 : 0;
}

struct LogBridge {
    ddmm_log_fn fn = nullptr;
    void* user = nullptr;
};
LogBridge g_log;

void bridge_sink(ddmm::LogLevel level, const char* message, void*) {
    if (g_log.fn) g_log.fn(static_cast<int>(level), message, g_log.user);
}

}  // namespace

extern "C" {

int ddmm_abi_version(void) { return DDMM_ABI_VERSION; }

const char* ddmm_status_name(ddmm_status status) {
    switch (status) {
        case DDMM_OK: return "Ok";
        case DDMM_NULL_ARGUMENT: return "NullArgument";
        case DDMM_INTERNAL_ERROR: return "InternalError";
        default: break;
    }
    if (status >= DDMM_INVALID_ARGUMENT && status <= DDMM_FORMAT_ERROR)
        return ddmm::error_code_name(static_cast<ddmm::ErrorCode>(status));
    return "Unknown";
}

const char* ddmm_last_error(void) { return t_last_error.c_str(); }

void ddmm_set_log_callback(ddmm_log_fn fn, void* user) {
    g_log.fn = fn;
    g_log.user = user;
    ddmm::set_log_sink(fn ? bridge_sink : nullptr, nullptr);
}

ddmm_status ddmm_allocate(const ddmm_covariance* cov, const ddmm_ensemble* ensemble, ddmm_allocation* out) {
    DDMM_REQUIRE_PTR(cov);
    DDMM_REQUIRE_PTR(ensemble);
    DDMM_REQUIRE_PTR(out);
    DDMM_REQUIRE_PTR(out->n);
    DDMM_REQUIRE_PTR(out->beta);
    return guarded([&] {
        const auto covariance = to_covariance(*cov);
        const auto ens = to_ensemble(*ensemble);
        ddmm::require(covariance.size() == ens.size(), ddmm::ErrorCode::InvalidArgument,
                      "covariance and ensemble sizes differ");
        const auto p = ddmm::optimal_hyperparams(covariance, ens);
        for (std::size_t i = 0; i < p.n.size(); ++i) out->n[i] = p.n[i];
        for (std::size_t i = 0; i < p.beta.size(); ++i) out->beta[i] = p.beta[i];
        if (out->order)
            for (std::size_t i = 0; i < covariance.size(); ++i) out->order[i] = p.order.empty() ? i : p.order[i];
        out->pooled = p.pooled ? 1 : 0;
        out->closed_form = ddmm::closed_form_conditions_hold(covariance, ens) ? 1 : 0;
        out->variance = ddmm::estimator_variance(p, covariance, ens);
        out->hifi_mc_variance = ddmm::hifi_mc_variance(covariance, ens);
        out->variance_reduction_ratio = ddmm::variance_reduction_ratio(p, covariance, ens);
    });
}

ddmm_status ddmm_discrepancy(const ddmm_covariance* used, const ddmm_covariance* truth,
                             const ddmm_ensemble* ensemble, double* out) {
    DDMM_REQUIRE_PTR(used);
    DDMM_REQUIRE_PTR(truth);
    DDMM_REQUIRE_PTR(ensemble);
    DDMM_REQUIRE_PTR(out);
    return guarded([&] { *out = ddmm::discrepancy(to_covariance(*used), to_covariance(*truth), to_ensemble(*ensemble)); });
}

ddmm_status ddmm_sample_moments(const double* x, const double* y, size_t n, double* sigma0, double* sigma1,
                                double* rho) {
    DDMM_REQUIRE_PTR(x);
    DDMM_REQUIRE_PTR(y);
    return guarded([&] {
        const auto m = ddmm::sample_moments({x, n}, {y, n});
        if (sigma0) *sigma0 = m.sigma0;
        if (sigma1) *sigma1 = m.sigma1;
        if (rho) *rho = m.rho;
    });
}

ddmm_status ddmm_ci_exact(double r, double alpha, int n_pilot, double* lower, double* upper) {
    DDMM_REQUIRE_PTR(lower);
    DDMM_REQUIRE_PTR(upper);
    return guarded([&] {
        const auto ci = ddmm::ci_exact(r, alpha, n_pilot);
        *lower = ci.lower;
        *upper = ci.upper;
    });
}

ddmm_status ddmm_ci_surrogate_create(int n_pilot, const char* cache_dir, int rebuild, unsigned threads,
                                     ddmm_ci_surrogate** out) {
    DDMM_REQUIRE_PTR(out);
    *out = nullptr;
    return guarded([&] {
        ddmm::CiSurrogateOptions options;
        options.threads = threads;
        auto h = std::make_unique<ddmm_ci_surrogate>();
        h->surrogate = ddmm::cached_ci_surrogate(cache_dir ? cache_dir : "", n_pilot, options, rebuild != 0);
        *out = h.release();
    });
}

ddmm_status ddmm_ci_surrogate_query(const ddmm_ci_surrogate* s, double r, double alpha, double* lower,
                                    double* upper) {
    DDMM_REQUIRE_PTR(s);
    DDMM_REQUIRE_PTR(lower);
    DDMM_REQUIRE_PTR(upper);
    return guarded([&] {
        const auto ci = ddmm::ci_fast(s->surrogate, r, alpha);
        *lower = ci.lower;
        *upper = ci.upper;
    });
}

void ddmm_ci_surrogate_destroy(ddmm_ci_surrogate* s) { delete s; }

void ddmm_grid_options_init(ddmm_grid_options* options) {
    if (!options) return;
    const ddmm::GridBuildOptions d;
    options->theta0_range[0] = d.box.theta0_lo;
    options->theta0_range[1] = d.box.theta0_hi;
    options->theta1_range[0] = d.box.theta1_lo;
    options->theta1_range[1] = d.box.theta1_hi;
    options->rho_range[0] = d.rho_lo;
    options->rho_range[1] = d.rho_hi;
    for (int i = 0; i < 3; ++i) {
        options->coarse_dims[i] = d.coarse_dims[static_cast<std::size_t>(i)];
        options->fine_dims[i] = d.fine_dims[static_cast<std::size_t>(i)];
    }
    options->cp_rank = d.cp_rank;
    options->cp_max_iterations = d.cp_max_iterations;
    options->cp_tolerance = d.cp_tolerance;
    options->accept_unconverged_cp = d.accept_unconverged_cp ? 1 : 0;
    options->quadrature_order = d.quadrature_order;
    options->seed = d.seed;
    options->threads = d.threads;
}

ddmm_status ddmm_grid_create(int n_pilot, const ddmm_ensemble* ensemble, const ddmm_grid_options* options,
                             const char* cache_dir, int rebuild, ddmm_grid** out) {
    DDMM_REQUIRE_PTR(ensemble);
    DDMM_REQUIRE_PTR(out);
    *out = nullptr;
    return guarded([&] {
        ddmm::GridBuildOptions o;
        if (options) {
            o.box = {options->theta0_range[0], options->theta0_range[1], options->theta1_range[0],
                     options->theta1_range[1]};
            o.rho_lo = options->rho_range[0];
            o.rho_hi = options->rho_range[1];
            for (std::size_t i = 0; i < 3; ++i) {
                o.coarse_dims[i] = options->coarse_dims[i];
                o.fine_dims[i] = options->fine_dims[i];
            }
            o.cp_rank = options->cp_rank;
            o.cp_max_iterations = options->cp_max_iterations;
            o.cp_tolerance = options->cp_tolerance;
            o.accept_unconverged_cp = options->accept_unconverged_cp != 0;
            o.quadrature_order = options->quadrature_order;
            o.seed = options->seed;
            o.threads = options->threads;
        }
        auto h = std::make_unique<ddmm_grid>();
        h->grid = ddmm::cached_grid(cache_dir ? cache_dir : "", n_pilot, to_ensemble(*ensemble), o, rebuild != 0);
        *out = h.release();
    });
}

ddmm_status ddmm_grid_load(const char* path, ddmm_grid** out) {
    DDMM_REQUIRE_PTR(path);
    DDMM_REQUIRE_PTR(out);
    *out = nullptr;
    return guarded([&] {
        auto h = std::make_unique<ddmm_grid>();
        h->grid = ddmm::ExpectedDiscrepancyGrid::load(path);
        *out = h.release();
    });
}

ddmm_status ddmm_grid_save(const ddmm_grid* grid, const char* path) {
    DDMM_REQUIRE_PTR(grid);
    DDMM_REQUIRE_PTR(path);
    return guarded([&] { grid->grid.save(path); });
}

ddmm_status ddmm_grid_get_info(const ddmm_grid* grid, ddmm_grid_info* out) {
    DDMM_REQUIRE_PTR(grid);
    DDMM_REQUIRE_PTR(out);
    return guarded([&] {
        const auto& g = grid->grid;
        out->n_pilot = g.n_pilot();
        const auto d = g.axes().dims();
        for (std::size_t i = 0; i < 3; ++i) out->dims[i] = d[i];
        out->costs[0] = g.costs().first;
        out->costs[1] = g.costs().second;
        out->cp_rank = g.cp_rank;
        out->cp_iterations = g.cp_iterations;
        out->reconstruction_error = g.reconstruction_error;
    });
}

void ddmm_grid_destroy(ddmm_grid* grid) { delete grid; }

ddmm_status ddmm_solve(const ddmm_grid* grid, const ddmm_ci_surrogate* ci, double r, double alpha,
                       ddmm_solution* out) {
    DDMM_REQUIRE_PTR(grid);
    DDMM_REQUIRE_PTR(out);
    return guarded([&] { fill_solution(ddmm::solve_ddmm(r, alpha, grid->grid, source(grid, ci)), out); });
}

ddmm_status ddmm_adjust_pairs(const ddmm_grid* grid, const ddmm_ci_surrogate* ci, const double* hifi,
                              const double* lofi, size_t n, double alpha, ddmm_solution* out) {
    DDMM_REQUIRE_PTR(grid);
    DDMM_REQUIRE_PTR(hifi);
    DDMM_REQUIRE_PTR(lofi);
    DDMM_REQUIRE_PTR(out);
    return guarded([&] {
        std::vector<std::pair<double, double>> pairs(n);
        for (std::size_t i = 0; i < n; ++i) pairs[i] = {hifi[i], lofi[i]};
        fill_solution(ddmm::adjust_correlation(pairs, alpha, grid->grid, source(grid, ci)), out);
    });
}

void ddmm_alpha_options_init(ddmm_alpha_options* options) {
    if (!options) return;
    const ddmm::AlphaBox box;
    const ddmm::GpOptions gp;
    options->alpha_range[0] = box.alpha_lo;
    options->alpha_range[1] = box.alpha_hi;
    options->rho_range[0] = box.rho_lo;
    options->rho_range[1] = box.rho_hi;
    options->design_points = 350;
    options->repetitions = 75;
    options->seed = 0;
    options->gp_restarts = gp.restarts;
    options->gp_seed = gp.seed;
    options->threads = 0;
    options->design_path = nullptr;
    options->surface_path = nullptr;
}

ddmm_status ddmm_optimize_alpha(const ddmm_grid* grid, const ddmm_ci_surrogate* ci,
                                const ddmm_alpha_options* options, ddmm_alpha_result* out) {
    DDMM_REQUIRE_PTR(grid);
    DDMM_REQUIRE_PTR(options);
    DDMM_REQUIRE_PTR(out);
    return guarded([&] {
        const auto box = to_box(*options);
        const auto design = ddmm::build_design(options->design_points, options->repetitions, box,
                                               grid->grid.n_pilot(), grid->grid, source(grid, ci), options->seed,
                                               options->threads);
        if (options->design_path) design.save(options->design_path);
        const auto gp = ddmm::fit_gp(design, to_gp(*options));
        if (options->surface_path) gp.save(options->surface_path);
        const auto opt = ddmm::optimal_alpha(gp, box);
        out->alpha = opt.alpha;
        out->worst_case = opt.worst_case;
        out->length_scales[0] = gp.length_scales[0];
        out->length_scales[1] = gp.length_scales[1];
        out->signal_variance = gp.signal_variance;
    });
}

ddmm_status ddmm_alpha_risk(const ddmm_grid* grid, const ddmm_ci_surrogate* ci, const ddmm_alpha_options* options,
                            double time_budget, size_t front_points, size_t resamples, ddmm_risk_row* rows,
                            size_t* rows_written, ddmm_risk_fit* fit) {
    DDMM_REQUIRE_PTR(grid);
    DDMM_REQUIRE_PTR(options);
    DDMM_REQUIRE_PTR(rows);
    DDMM_REQUIRE_PTR(rows_written);
    DDMM_REQUIRE_PTR(fit);
    return guarded([&] {
        const auto box = to_box(*options);
        const auto src = source(grid, ci);
        const double per_sample = ddmm::calibrate_sample_seconds(grid->grid, src, box, 100, options->seed);
        const auto front = ddmm::pareto_front(time_budget, per_sample, options->design_points, options->repetitions,
                                              front_points);
        ddmm::require(front.size() >= 5, ddmm::ErrorCode::InvalidArgument,
                      "fewer than 5 front settings fit inside the reference design");
        const auto reference = ddmm::build_design(options->design_points, options->repetitions, box,
                                                  grid->grid.n_pilot(), grid->grid, src, options->seed,
                                                  options->threads);
        double alpha_ref = 0.0;
        const auto samples =
            ddmm::pareto_risk_samples(reference, front, resamples, to_gp(*options), options->seed, &alpha_ref);
        const auto model = ddmm::pareto_risk_fit(samples);
        for (std::size_t i = 0; i < samples.size(); ++i)
            rows[i] = {samples[i].design_points, samples[i].repetitions, samples[i].risk, samples[i].std_error,
                       model(static_cast<double>(samples[i].design_points), samples[i].repetitions)};
        *rows_written = samples.size();
        *fit = {model.b1, model.c1, model.c2, alpha_ref, per_sample};
    });
}

ddmm_status ddmm_rho_axis(size_t n, double lo, double hi, double* out) {
    DDMM_REQUIRE_PTR(out);
    return guarded([&] {
        const auto axis = ddmm::benchmark_rho_axis(n, lo, hi);
        std::copy(axis.begin(), axis.end(), out);
    });
}

ddmm_status ddmm_edd_curve(const ddmm_grid* grid, const ddmm_ci_surrogate* ci, double alpha,
                           const ddmm_ensemble* ensemble, const double* rho, size_t n, double* edd,
                           double* unadjusted, double* pct_edd) {
    DDMM_REQUIRE_PTR(grid);
    DDMM_REQUIRE_PTR(ensemble);
    DDMM_REQUIRE_PTR(rho);
    DDMM_REQUIRE_PTR(edd);
    return guarded([&] {
        const auto c = ddmm::edd_curve_gaussian(alpha, grid->grid.n_pilot(), to_ensemble(*ensemble), grid->grid,
                                                source(grid, ci), {rho, rho + n});
        for (std::size_t i = 0; i < n; ++i) {
            edd[i] = c.edd[i];
            if (unadjusted) unadjusted[i] = c.unadjusted[i];
            if (pct_edd) pct_edd[i] = c.pct_edd[i];
        }
    });
}

ddmm_status ddmm_paired_read(const char* path, ddmm_paired** out) {
    DDMM_REQUIRE_PTR(path);
    DDMM_REQUIRE_PTR(out);
    *out = nullptr;
    return guarded([&] {
        auto h = std::make_unique<ddmm_paired>();
        h->groups = ddmm::read_paired_outputs(path);
        *out = h.release();
    });
}

size_t ddmm_paired_groups(const ddmm_paired* data) { return data ? data->groups.size() : 0; }

const char* ddmm_paired_name(const ddmm_paired* data, size_t group) {
    if (!data || group >= data->groups.size()) return nullptr;
    return data->groups[group].qoi_name.c_str();
}

size_t ddmm_paired_rows(const ddmm_paired* data, size_t group) {
    if (!data || group >= data->groups.size()) return 0;
    return data->groups[group].hifi.size();
}

ddmm_status ddmm_paired_columns(const ddmm_paired* data, size_t group, const double** hifi, const double** lofi,
                                size_t* rows) {
    DDMM_REQUIRE_PTR(data);
    DDMM_REQUIRE_PTR(hifi);
    DDMM_REQUIRE_PTR(lofi);
    DDMM_REQUIRE_PTR(rows);
    if (group >= data->groups.size()) return set_error(DDMM_INVALID_ARGUMENT, "no such output group");
    const auto& g = data->groups[group];
    *hifi = g.hifi.data();
    *lofi = g.lofi.data();
    *rows = g.hifi.size();
    t_last_error.clear();
    return DDMM_OK;
}

void ddmm_paired_destroy(ddmm_paired* data) { delete data; }

ddmm_status ddmm_empirical_eval(const ddmm_paired* data, size_t group, const ddmm_ensemble* ensemble,
                                const ddmm_grid* grid, const ddmm_ci_surrogate* ci, double alpha, size_t trials,
                                uint64_t seed, int known_variances, ddmm_empirical_summary* out) {
    DDMM_REQUIRE_PTR(data);
    DDMM_REQUIRE_PTR(ensemble);
    DDMM_REQUIRE_PTR(grid);
    DDMM_REQUIRE_PTR(out);
    return guarded([&] {
        ddmm::require(group < data->groups.size(), ddmm::ErrorCode::InvalidArgument, "no such output group");
        ddmm::PairedOutputs d = data->groups[group];
        d.ensemble = to_ensemble(*ensemble);
        const auto s = ddmm::empirical_eval(
            d, alpha, grid->grid, source(grid, ci), trials, seed,
            known_variances ? ddmm::PilotVariances::Truth : ddmm::PilotVariances::Subsample);
        out->truth_rho = s.truth_rho;
        out->truth_sigma0 = s.truth_sigma0;
        out->truth_sigma1 = s.truth_sigma1;
        out->trials = s.trials;
        out->resampled = s.resampled;
        out->clamped = s.clamped;
        out->hifi_mc_variance = s.hifi_mc_variance;
        out->optimal_variance = s.optimal_variance;
        out->mse_unadjusted = to_c(s.mse_unadjusted);
        out->mse_adjusted = to_c(s.mse_adjusted);
        out->vrr_unadjusted = to_c(s.vrr_unadjusted);
        out->vrr_adjusted = to_c(s.vrr_adjusted);
        out->discrepancy_unadjusted = to_c(s.discrepancy_unadjusted);
        out->discrepancy_adjusted = to_c(s.discrepancy_adjusted);
        out->edd = to_c(s.edd);
        out->pct_edd = s.pct_edd;
        out->mse_pct_change = s.mse_pct_change;
    });
}

ddmm_status ddmm_shapley(const double* rho, size_t n, int n_pilot, const ddmm_ensemble* ensemble,
                         size_t mc_samples, uint64_t seed, size_t k, unsigned threads, double* phi,
                         double* total_variance) {
    DDMM_REQUIRE_PTR(rho);
    DDMM_REQUIRE_PTR(ensemble);
    DDMM_REQUIRE_PTR(phi);
    return guarded([&] {
        const auto res =
            ddmm::shapley_gsa({rho, rho + n}, n_pilot, to_ensemble(*ensemble), mc_samples, seed, k, threads);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < 3; ++d) phi[3 * i + d] = res[i].phi[d];
            if (total_variance) total_variance[i] = res[i].total_variance;
        }
    });
}

ddmm_status ddmm_robustness(const int* pilot_sizes, size_t n_sizes, size_t scenarios, size_t models, size_t trials,
                            uint64_t seed, ddmm_robustness_row* rows) {
    DDMM_REQUIRE_PTR(pilot_sizes);
    DDMM_REQUIRE_PTR(rows);
    return guarded([&] {
        const auto res = ddmm::robustness_mfmc({pilot_sizes, pilot_sizes + n_sizes},
                                               ddmm::ordered_scenarios(scenarios, models), trials, seed);
        for (std::size_t i = 0; i < res.size(); ++i)
            rows[i] = {res[i].n_pilot, to_c(res[i].true_variance), to_c(res[i].discrepancy),
                       to_c(res[i].projected_ratio)};
    });
}

}  // extern "C"
