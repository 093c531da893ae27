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

// Choice of the miscoverage level alpha before any pilot data is drawn: a
// Latin hypercube design of simulated discrepancy differences, a Gaussian
// process fit of their mean surface, and the minimax over that surface. Also
// the design-points/repetitions trade-off along a fixed time budget.

#pragma once

#include "ddmm/adjustment.hpp"
#include "ddmm/confidence.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ddmm {

struct AlphaBox {
    double alpha_lo = 0.05;
    double alpha_hi = 0.6;
    double rho_lo = 0.5;
    double rho_hi = 0.95;

    void validate() const;
};

/// Realized Delta = delta(h_alpha(r), rho) - delta(clamp(r), rho) for an
/// observed sample correlation r, with unit variances and the grid's costs.
double delta_at(double alpha, double rho, double observed_r, const ExpectedDiscrepancyGrid& grid, const CiSource& ci);

/// delta_at for one sample correlation drawn at rho from n_pilot Gaussian pairs.
double sample_delta(double alpha, double rho, int n_pilot, const ExpectedDiscrepancyGrid& grid, const CiSource& ci,
                    std::uint64_t seed);

/// n stratified points in [0, 1)^2, one per row and column stratum.
std::vector<std::array<double, 2>> latin_hypercube(std::size_t n, std::uint64_t seed);

struct AlphaDesign {
    AlphaBox box;
    int n_pilot = 0;
    int repetitions = 0;
    std::vector<std::array<double, 2>> points;  // (alpha, rho)
    std::vector<double> means;
    std::vector<double> variances;  // variance of the mean, 1/(R(R-1)) sum (Delta - mean)^2
    std::vector<double> samples;    // points.size() x repetitions, row-major

    /// Means and variances from raw samples.
    static AlphaDesign from_samples(AlphaBox box, int n_pilot, std::vector<std::array<double, 2>> points,
                                    int repetitions, std::vector<double> samples);
    /// The given points, each keeping the given repetition columns.
    AlphaDesign subset(const std::vector<std::size_t>& point_indices,
                       const std::vector<std::size_t>& repetition_indices) const;

    void validate() const;
    void save(const std::string& path) const;
    static AlphaDesign load(const std::string& path);
};

/// D Latin hypercube points in the box, R draws of Delta each. Point i uses
/// the substream (seed, i), so the result does not depend on the thread count.
AlphaDesign build_design(std::size_t design_points, int repetitions, const AlphaBox& box, int n_pilot,
                         const ExpectedDiscrepancyGrid& grid, const CiSource& ci, std::uint64_t seed,
                         unsigned threads = 0);

struct GpOptions {
    int restarts = 8;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    int max_evaluations = 600;  // per Nelder-Mead run
};

/// Gaussian process with constant mean, anisotropic squared-exponential
/// kernel s^2 exp(-0.5 sum (dx_d / l_d)^2) on box-scaled inputs, and a fixed
/// per-point nugget. Hyperparameters maximize the marginal likelihood with
/// the mean profiled out.
class GpSurface {
public:
    GpSurface() = default;

    double operator()(double alpha, double rho) const;

    AlphaBox box;
    double signal_variance = 0.0;
    std::array<double, 2> length_scales{};  // in box-scaled units
    double mean = 0.0;
    double jitter = 0.0;                    // added to the diagonal after escalation
    double log_likelihood = 0.0;
    std::vector<std::array<double, 2>> inputs;  // box-scaled
    std::vector<double> targets;
    std::vector<double> noise;
    std::vector<double> weights;            // K^-1 (y - mean)

    void save(const std::string& path) const;
    static GpSurface load(const std::string& path);
};

/// Fits on raw (alpha, rho) points with targets y and noise variances.
/// Throws GpFitFailure when the covariance stays indefinite after jitter
/// escalation for every start.
GpSurface fit_gp(const AlphaBox& box, const std::vector<std::array<double, 2>>& points, const std::vector<double>& y,
                 const std::vector<double>& noise, const GpOptions& options = {});
GpSurface fit_gp(const AlphaDesign& design, const GpOptions& options = {});

struct AlphaOptimum {
    double alpha = 0.0;
    double worst_case = 0.0;
    std::vector<double> alpha_axis;
    std::vector<double> max_over_rho;
};

/// Minimax of the posterior mean over an alpha_points x rho_points grid
/// spanning the closed box. Ties go to the smaller alpha.
AlphaOptimum optimal_alpha(const GpSurface& surface, const AlphaBox& box, std::size_t alpha_points = 201,
                           std::size_t rho_points = 201);

/// Wall-clock seconds per Delta sample, averaged over `samples` draws.
double calibrate_sample_seconds(const ExpectedDiscrepancyGrid& grid, const CiSource& ci, const AlphaBox& box,
                                std::size_t samples = 100, std::uint64_t seed = 0);

/// (D, R) pairs with D R seconds_per_sample ~= t, D log-spaced, D <= d_max,
/// 2 <= R <= r_max and D >= 10. Ordered by increasing D.
std::vector<std::pair<std::size_t, int>> pareto_front(double time_budget, double seconds_per_sample,
                                                      std::size_t d_max, int r_max, std::size_t count = 20);

struct RiskSample {
    std::size_t design_points = 0;
    int repetitions = 0;
    double risk = 0.0;
    double std_error = 0.0;
};

/// Risk E[(alpha_K - alpha_ref)^2] for each front setting K, estimated by
/// subsampling points and repetitions of the reference design `resamples`
/// times. alpha_ref is the optimum on the whole reference design.
std::vector<RiskSample> pareto_risk_samples(const AlphaDesign& reference,
                                            const std::vector<std::pair<std::size_t, int>>& front,
                                            std::size_t resamples, const GpOptions& gp, std::uint64_t seed,
                                            double* alpha_reference = nullptr);

struct ParetoRiskModel {
    double b1 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    std::vector<std::pair<std::size_t, int>> front;

    double operator()(double design_points, double repetitions) const;
    double squared_bias(double repetitions) const;
    double variance(double design_points, double repetitions) const;
};

/// Weighted least squares of (b1/R)^2 + c1/D + c2/(DR) with weights 1/std and
/// c1, c2 >= 0. Linear in (b1^2, c1, c2), solved exactly over the active sets.
ParetoRiskModel pareto_risk_fit(const std::vector<RiskSample>& samples);

}  // namespace ddmm
