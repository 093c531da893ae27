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

// Benchmarks for the correlation adjustment: expected discrepancy difference
// (EDD) curves under bivariate Gaussian outputs, subsampling evaluation on
// paired model outputs, Shapley sensitivity of the discrepancy and the
// pilot-size robustness study for MFMC.

#pragma once

#include "ddmm/adjustment.hpp"
#include "ddmm/confidence.hpp"
#include "ddmm/mfmc.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ddmm {

/// Monte Carlo mean with its standard error.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;

    static MeanSe of(const std::vector<double>& values);
};

/// Maps an observed sample correlation to the correlation used for allocation.
using Adjuster = std::function<double(double observed_r)>;

/// max(r, kRhoClampEps): the raw sample correlation as the baseline uses it.
double clamp_correlation(double r);

struct EddCurve {
    std::vector<double> rho_axis;
    std::vector<double> edd;
    std::vector<double> unadjusted;  // E[delta(clamp(rho_hat), rho)]
    std::vector<double> pct_edd;     // 100 * edd / unadjusted; NaN where unadjusted <= 1e-12
    int n_pilot = 0;
    double alpha = 0.0;

    double mean_edd() const;
    double mean_pct_edd() const;  // over finite entries
    double max_edd() const;
};

/// n cell midpoints of [lo, hi].
std::vector<double> benchmark_rho_axis(std::size_t n = 50, double lo = 0.05, double hi = 0.95);

/// EDD(rho) = E[delta(h(rho_hat), rho) - delta(clamp(rho_hat), rho)] by
/// quadrature against the sample-correlation density. h is evaluated once per
/// quadrature node; delta uses the full ensemble (costs and budget).
EddCurve edd_curve(const Adjuster& h, int n_pilot, const ModelEnsemble& ensemble, const std::vector<double>& rho_axis,
                   int quadrature_order = 200);

/// edd_curve with h the DDMM solve at level alpha.
EddCurve edd_curve_gaussian(double alpha, int n_pilot, const ModelEnsemble& ensemble,
                            const ExpectedDiscrepancyGrid& grid, const CiSource& ci,
                            const std::vector<double>& rho_axis, int quadrature_order = 200);

struct PilotSizeRow {
    int n_pilot = 0;
    double mean_edd = 0.0;
    double mean_pct_edd = 0.0;
    double max_edd = 0.0;
    EddCurve curve;
};

/// Supplies the grid and CI surrogate for one pilot size. Called once per
/// size, in order, so only one grid is alive at a time.
using GridFactory = std::function<std::pair<ExpectedDiscrepancyGrid, CiSurrogate>(int n_pilot)>;

std::vector<PilotSizeRow> edd_vs_pilot_size(double alpha, const std::vector<int>& pilot_sizes,
                                            const ModelEnsemble& ensemble, const std::vector<double>& rho_axis,
                                            const GridFactory& factory);

/// Paired high/low-fidelity outputs at shared inputs.
struct PairedOutputs {
    std::vector<double> hifi;
    std::vector<double> lofi;
    std::string qoi_name;
    ModelEnsemble ensemble;  // costs (c_hifi, c_lofi) and budget

    void validate() const;  // equal lengths >= 10, neither column constant
};

/// Reads `input_id,hifi,lofi[,qoi]` CSV. Rows are grouped by the qoi column
/// (one group, named after the file stem, when it is absent). Costs and budget
/// are left for the caller to fill in.
std::vector<PairedOutputs> read_paired_outputs(const std::string& path);

struct EmpiricalSummary {
    double truth_sigma0 = 0.0, truth_sigma1 = 0.0, truth_rho = 0.0;
    std::size_t trials = 0;
    std::size_t resampled = 0;  // degenerate subsamples drawn again
    std::size_t clamped = 0;    // trials where the raw correlation was floored
    double hifi_mc_variance = 0.0;
    double optimal_variance = 0.0;
    MeanSe mse_unadjusted, mse_adjusted;
    MeanSe vrr_unadjusted, vrr_adjusted;
    MeanSe discrepancy_unadjusted, discrepancy_adjusted;
    MeanSe edd;                  // paired difference adjusted - unadjusted
    double pct_edd = 0.0;        // 100 * edd / mean unadjusted discrepancy
    double mse_pct_change = 0.0; // 100 * (mean adjusted - mean unadjusted) / mean unadjusted
    std::vector<double> trial_mse_unadjusted, trial_mse_adjusted;
};

/// Standard deviations used for the pilot covariance. Truth replaces the
/// subsample values with the full-data ones, matching the known-variance
/// assumption of edd_curve_gaussian; it is a diagnostic, not the default.
enum class PilotVariances { Subsample, Truth };

/// Subsampling study with the full-data covariance as truth. Each trial draws
/// n_pilot rows without replacement, keeps the subsample standard deviations,
/// and compares allocations from clamp(r) and from h(r) under the truth.
EmpiricalSummary empirical_eval(const PairedOutputs& data, const Adjuster& h, int n_pilot, std::size_t n_trials,
                                std::uint64_t seed, PilotVariances variances = PilotVariances::Subsample);

/// empirical_eval with h the DDMM solve at level alpha.
EmpiricalSummary empirical_eval(const PairedOutputs& data, double alpha, const ExpectedDiscrepancyGrid& grid,
                                const CiSource& ci, std::size_t n_trials, std::uint64_t seed,
                                PilotVariances variances = PilotVariances::Subsample);

struct ShapleyResult {
    std::array<double, 3> phi{};  // normalised so that the effects sum to 1
    double total_variance = 0.0;
    double rho = 0.0;             // truth the sample was drawn at (shapley_gsa only)
};

/// Default neighbour count max(3, ceil(0.02 n)).
std::size_t shapley_neighbours(std::size_t n);

/// Shapley effects of three (possibly dependent) inputs. Var(E[Y | x_S]) is
/// Var(Y) minus the mean k-nearest-neighbour variance of Y in the standardised
/// x_S coordinates. Throws ZeroOutputVariance for a constant output.
ShapleyResult shapley_effects(const std::vector<std::array<double, 3>>& x, const std::vector<double>& y,
                              std::size_t k = 0);

/// Inputs (rho_hat, sigma0_hat, sigma1_hat) from Wishart draws at each unit
/// variance truth rho, output delta(Sigma_hat, Sigma).
std::vector<ShapleyResult> shapley_gsa(const std::vector<double>& rho_axis, int n_pilot,
                                       const ModelEnsemble& ensemble, std::size_t mc_samples, std::uint64_t seed,
                                       std::size_t k = 0, unsigned threads = 0);

struct RobustnessScenario {
    CovarianceSpec cov;
    ModelEnsemble ensemble;
};

/// Ordered model ensembles: corr(0, i) = rho01 * degradation^(i-1) with a
/// chain structure among the low-fidelity models (corr(i, j) =
/// degradation^|i-j|), unit variances, costs cost_factor^-i.
std::vector<RobustnessScenario> ordered_scenarios(std::size_t count = 8, std::size_t models = 4,
                                                  double rho01_lo = 0.5, double rho01_hi = 0.95,
                                                  double degradation = 0.7, double cost_factor = 10.0,
                                                  double budget = 100.0);

struct RobustnessRow {
    int n_pilot = 0;
    MeanSe true_variance;
    MeanSe discrepancy;
    MeanSe projected_ratio;  // v(p_hat; Sigma) / v(p_hat; Sigma_hat)
};

/// MFMC under sampled covariances, pooled over scenarios and trials.
std::vector<RobustnessRow> robustness_mfmc(const std::vector<int>& pilot_sizes,
                                           const std::vector<RobustnessScenario>& scenarios, std::size_t n_trials,
                                           std::uint64_t seed);

}  // namespace ddmm
