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

// Multi-fidelity Monte Carlo (MFMC) variance model and optimal
// hyperparameters. Model 0 is always the high-fidelity model; every sample
// allocation here is the continuous relaxation (no integer rounding) unless it
// goes through round_allocation().

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace ddmm {

/// Per-model evaluation costs and the total budget, in the same units.
struct ModelEnsemble {
    std::vector<double> costs;
    double budget = 0.0;

    std::size_t size() const { return costs.size(); }
    void validate() const;
};

/// Output covariance of the model ensemble, stored as standard deviations and
/// the correlations of each low-fidelity model with model 0. The full matrix is
/// optional; it is required only where lofi-lofi correlations matter (Wishart
/// sampling of more than two models).
struct CovarianceSpec {
    std::vector<double> sigma;
    std::vector<double> rho0;  // rho0[i-1] = corr(model 0, model i)
    std::optional<Eigen::MatrixXd> full_matrix;

    static CovarianceSpec from_correlation(std::vector<double> sigma, std::vector<double> rho0);
    static CovarianceSpec from_matrix(const Eigen::MatrixXd& cov);
    /// Two models with unit variances and correlation rho.
    static CovarianceSpec unit_bivariate(double rho);

    std::size_t size() const { return sigma.size(); }
    /// Full covariance matrix; for two models it is built from sigma/rho0.
    Eigen::MatrixXd matrix() const;
    void validate() const;
};

/// Sample counts n_0..n_{M-1} and control-variate weights beta_1..beta_{M-1}.
/// `order` lists the original model index occupying each position (order[0]
/// is always 0); empty means the identity ordering.
struct MfmcHyperparams {
    std::vector<double> n;
    std::vector<double> beta;
    std::vector<std::size_t> order;
    bool pooled = false;  // true when PAVA merged at least one block
};

/// Variance-reduction contributions S_i for correlations already ordered by
/// decreasing magnitude.
std::vector<double> variance_contributions(const std::vector<double>& rho0);

double estimator_variance(const MfmcHyperparams& params, const CovarianceSpec& cov,
                          const ModelEnsemble& ensemble);

/// beta_i = rho_{0,i} sigma_0 / sigma_i.
std::vector<double> optimal_weights(const CovarianceSpec& cov);

/// True when the closed-form optimality conditions c_{i-1}/c_i > S_{i-1}/S_i
/// hold for every i. Equality counts as a violation.
bool closed_form_conditions_hold(const CovarianceSpec& cov, const ModelEnsemble& ensemble);

MfmcHyperparams closed_form_allocation(const CovarianceSpec& cov, const ModelEnsemble& ensemble);

/// Exact minimizer of sum S_i/n_i under nestedness and sum c_i n_i = C.
MfmcHyperparams pava_allocation(const CovarianceSpec& cov, const ModelEnsemble& ensemble);

/// Orders the low-fidelity models by decreasing |rho_{0,i}| (cost ascending on
/// ties), solves the allocation with PAVA and sets the optimal weights.
MfmcHyperparams optimal_hyperparams(const CovarianceSpec& cov, const ModelEnsemble& ensemble);

/// log(v(p_1; sigma2) / v(p_2; sigma2)) where p_k is optimal under sigma_k.
double discrepancy(const CovarianceSpec& sigma1, const CovarianceSpec& sigma2,
                   const ModelEnsemble& ensemble);

/// High-fidelity-only MC variance at full budget, sigma_0^2 c_0 / C.
double hifi_mc_variance(const CovarianceSpec& cov, const ModelEnsemble& ensemble);

double variance_reduction_ratio(const MfmcHyperparams& params, const CovarianceSpec& cov,
                                const ModelEnsemble& ensemble);

/// v(p_hat; true) / v(p_hat; sample) with p_hat optimal under the sample covariance.
double projected_vs_true_ratio(const CovarianceSpec& sample_cov, const CovarianceSpec& true_cov,
                               const ModelEnsemble& ensemble);

/// Integer allocation for an actual run: floors every n_i, keeps n_0 >= 2 and
/// nestedness, and checks the budget again.
struct RoundedAllocation {
    std::vector<long long> n;
    double cost = 0.0;
};
RoundedAllocation round_allocation(const MfmcHyperparams& params, const ModelEnsemble& ensemble);

/// Two-model, unit-variance specialisation used in the inner loops of the
/// expected-discrepancy computations. Budget-free (C = 1) by budget invariance.
class BifidelityModel {
public:
    BifidelityModel(double c0, double c1);

    /// Optimal variance at correlation rho (rho in (-1, 1)).
    double optimal_variance(double rho) const;
    /// Coefficients (a, b) of v(p(rho_used); rho_true) = a - b * rho_true.
    std::pair<double, double> variance_line(double rho_used) const;
    double discrepancy(double rho_used, double rho_true) const;

    double c0() const { return c0_; }
    double c1() const { return c1_; }

private:
    double c0_, c1_;
};

}  // namespace ddmm
