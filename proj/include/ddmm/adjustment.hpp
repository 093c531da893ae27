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

// Data-driven minimax (DDMM) correction of a small-sample correlation:
// the sigmoid adjustment family, the expected-discrepancy grid M(theta, rho)
// and the discrete minimax solve over a confidence window.

#pragma once

#include "ddmm/confidence.hpp"
#include "ddmm/cp_als.hpp"
#include "ddmm/mfmc.hpp"
#include "ddmm/sampling.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ddmm {

/// Floor applied to the unadjusted sample correlation before it is used to
/// allocate samples (negative estimates would otherwise flip the allocation).
inline constexpr double kRhoClampEps = 1e-4;

struct AdjustmentParams {
    double theta0 = 0.0;
    double theta1 = 0.0;

    void validate() const;  // finite, theta0 >= 0
};

/// exp(theta0 r + theta1) / (1 + exp(theta0 r + theta1)), kept strictly inside (0, 1).
double sigmoid_adjust(const AdjustmentParams& theta, double r);

/// Search box for theta.
struct ThetaBox {
    double theta0_lo = 0.0;
    double theta0_hi = 25.0;
    double theta1_lo = -12.0;
    double theta1_hi = 12.0;

    void validate() const;
};

/// M(theta, rho) = E[delta(g(theta; rho_hat), rho)] over the sample correlation
/// of n_pilot draws. delta is the bifidelity discrepancy under the ensemble's
/// costs; the budget cancels.
double expected_discrepancy_at(const AdjustmentParams& theta, double rho, int n_pilot, const ModelEnsemble& ensemble,
                               const QuadratureRule& rule = correlation_rule());

/// E[delta(max(rho_hat, eps), rho)]: the same expectation for the raw estimate.
double unadjusted_expected_discrepancy(double rho, int n_pilot, const ModelEnsemble& ensemble,
                                       const QuadratureRule& rule = correlation_rule());

struct GridAxes {
    std::vector<double> theta0;
    std::vector<double> theta1;
    std::vector<double> rho;

    /// Equally spaced axes over the box and [rho_lo, rho_hi].
    static GridAxes uniform(const ThetaBox& box, double rho_lo, double rho_hi, std::array<std::size_t, 3> dims);
    std::array<std::size_t, 3> dims() const { return {theta0.size(), theta1.size(), rho.size()}; }
    void validate() const;
    std::uint64_t hash() const;
};

struct GridBuildOptions {
    ThetaBox box;
    double rho_lo = 0.001;
    double rho_hi = 0.999;
    std::array<std::size_t, 3> coarse_dims{25, 25, 60};
    std::array<std::size_t, 3> fine_dims{200, 200, 1000};
    int cp_rank = 12;
    int cp_max_iterations = 500;
    double cp_tolerance = 1e-8;
    // Use the CP reconstruction even when ALS stops at its iteration cap
    // (otherwise the fine grid is computed directly).
    bool accept_unconverged_cp = false;
    std::uint64_t seed = 0;
    int quadrature_order = 200;
    unsigned threads = 0;

    void validate() const;
    std::uint64_t hash() const;
};

/// Tensor M(theta0_i, theta1_j, rho_k), row-major with rho fastest. A "row"
/// is one theta grid point (i, j).
class ExpectedDiscrepancyGrid {
public:
    static constexpr std::size_t kBlock = 32;

    ExpectedDiscrepancyGrid() = default;
    ExpectedDiscrepancyGrid(GridAxes axes, Tensor3 values, int n_pilot, std::pair<double, double> costs);

    const GridAxes& axes() const { return axes_; }
    const Tensor3& values() const { return values_; }
    int n_pilot() const { return n_pilot_; }
    std::pair<double, double> costs() const { return costs_; }

    std::size_t rows() const { return axes_.theta0.size() * axes_.theta1.size(); }
    std::size_t columns() const { return axes_.rho.size(); }
    const double* row(std::size_t index) const { return values_.values.data() + index * columns(); }
    AdjustmentParams row_theta(std::size_t index) const;

    /// max over columns [k_lo, k_hi] of one row, using per-block maxima. Stops
    /// early once the running max reaches stop_at.
    double row_max(std::size_t row_index, std::size_t k_lo, std::size_t k_hi,
                   double stop_at = std::numeric_limits<double>::infinity()) const;

    // Set when the grid came from a CP reconstruction; rank 0 means direct.
    int cp_rank = 0;
    double reconstruction_error = 0.0;  // e(R) on the coarse tensor
    int cp_iterations = 0;
    CpModel coarse_model;               // factors on the coarse axes
    GridAxes coarse_axes;

    void save(const std::string& path) const;
    static ExpectedDiscrepancyGrid load(const std::string& path);

private:
    void index_blocks();

    GridAxes axes_;
    Tensor3 values_;
    int n_pilot_ = 0;
    std::pair<double, double> costs_{1.0, 1.0};
    std::vector<double> block_max_;  // rows() x ceil(columns / kBlock)
};

/// Every cell by direct quadrature.
ExpectedDiscrepancyGrid brute_force_grid(const GridAxes& axes, int n_pilot, const ModelEnsemble& ensemble,
                                         int quadrature_order = 200, unsigned threads = 0);

/// Coarse tensor by quadrature, CP-ALS, natural cubic splines through each
/// factor column, recomposition on the fine axes. Coarse rho nodes are equally
/// spaced in asin(rho) and the rho factors are splined in that coordinate. If ALS hits its iteration
/// cap the fine grid is computed directly instead (with a warning). Negative
/// reconstructed cells are set to zero.
ExpectedDiscrepancyGrid build_grid(int n_pilot, const ModelEnsemble& ensemble, const GridBuildOptions& options = {});

/// build_grid with an on-disk cache keyed by N, the costs and the options.
/// The file keeps the coarse tensor and factors; the fine tensor is recomposed
/// on load. An empty cache_dir disables caching.
ExpectedDiscrepancyGrid cached_grid(const std::string& cache_dir, int n_pilot, const ModelEnsemble& ensemble,
                                    const GridBuildOptions& options = {}, bool rebuild = false);

/// Grid columns kept for a confidence interval.
struct ColumnWindow {
    std::size_t k_lo = 0;
    std::size_t k_hi = 0;  // inclusive
    bool snapped = false;  // no column inside the interval; nearest one used
};
ColumnWindow ci_columns(const ExpectedDiscrepancyGrid& grid, const CorrelationCI& ci);

struct DdmmSolution {
    AdjustmentParams theta_hat;
    double observed_r = 0.0;
    double adjusted_rho = 0.0;
    CorrelationCI ci;
    double worst_case_expected_discrepancy = 0.0;
    double alpha = 0.0;
    std::size_t theta0_index = 0;
    std::size_t theta1_index = 0;
    ColumnWindow window;
};

/// argmin over grid rows of the max over the window's columns. Ties go to the
/// smaller theta0, then the smaller theta1. Returns (row, value).
std::pair<std::size_t, double> minimax_row(const ExpectedDiscrepancyGrid& grid, const ColumnWindow& window);

DdmmSolution solve_ddmm(double observed_r, double alpha, const ExpectedDiscrepancyGrid& grid, const CiSource& ci);

/// sample_correlation, then solve_ddmm.
DdmmSolution adjust_correlation(std::span<const std::pair<double, double>> pilot_pairs, double alpha,
                                const ExpectedDiscrepancyGrid& grid, const CiSource& ci);

}  // namespace ddmm
