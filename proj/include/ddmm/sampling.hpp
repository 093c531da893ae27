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

// Sampling distribution of the Pearson sample correlation under bivariate
// Gaussian outputs, quadrature over (-1, 1), and Wishart simulation.

#pragma once

#include "ddmm/error.hpp"
#include "ddmm/mfmc.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ddmm {

/// Gauss hypergeometric function 2F1(a, b; c; x) for |x| < 1 by its power
/// series. For x > 0.9 with c - a - b not an integer the series is evaluated
/// at 1 - x through the standard connection formula. Throws SeriesDiverged
/// when 10000 terms do not reach a relative term size of 1e-15.
double gauss_2f1(double a, double b, double c, double x);

/// Nodes strictly increasing in (-1, 1), positive weights summing to 2.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;
};

/// Plain Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int order);

/// Gauss-Legendre in the angle phi with r = sin(phi). Integrates
/// the (1 - r^2)^{-1/2} endpoint behaviour of the N = 3 density exactly and
/// clusters nodes where large-N densities concentrate.
QuadratureRule correlation_rule(int order = 200);

struct CorrelationDensityParams {
    double rho = 0.0;
    int n_pilot = 3;

    int nu() const { return n_pilot - 2; }
    void validate() const;
};

/// Exact density of the sample correlation of n_pilot bivariate Gaussian
/// draws (Hotelling's form):
///   f(r) = (N-2) Gamma(N-1) (1-rho^2)^{(N-1)/2} (1-r^2)^{(N-4)/2}
///          / (sqrt(2 pi) Gamma(N-1/2) (1-rho r)^{N-3/2})
///          * 2F1(1/2, 1/2; N-1/2; (1+rho r)/2)
/// The prefactor is evaluated in log space.
double corr_density(double r, const CorrelationDensityParams& params);

/// The same density with the N-dependent constants computed once. The
/// Fisher-z form f(tanh z) sech^2 z is what the tail integrals use; it needs
/// no special handling as |r| -> 1.
class CorrelationDensity {
public:
    explicit CorrelationDensity(const CorrelationDensityParams& params);

    double operator()(double r) const;
    double in_fisher_z(double z) const;
    const CorrelationDensityParams& params() const { return params_; }

private:
    // 1 - r^2 and 1 - rho r are passed in separately so callers can supply
    // them without cancellation.
    double evaluate(double r, double one_minus_r2, double one_minus_rho_r) const;

    CorrelationDensityParams params_;
    double log_const_ = 0.0;
};

/// P(rho_hat > r | rho, N) and P(rho_hat < r | rho, N) by composite
/// Gauss-Legendre quadrature over z = atanh(r). Absolute error is below 1e-9
/// for every N >= 3 and |rho| <= 1 - 1e-6.
double corr_upper_tail(double r, const CorrelationDensityParams& params);
double corr_lower_tail(double r, const CorrelationDensityParams& params);

/// w_i * f(node_i | rho, N) for every node of the rule.
std::vector<double> density_weights(const CorrelationDensityParams& params, const QuadratureRule& rule);

/// sum_i w_i f(node_i) density(node_i).
template <typename F>
double expect_over_sample_corr(F&& f, const CorrelationDensityParams& params, const QuadratureRule& rule) {
    const CorrelationDensity density(params);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double value = f(rule.nodes[i]);
        require(std::isfinite(value), ErrorCode::NonFiniteIntegrand,
                "integrand is not finite at r = " + std::to_string(rule.nodes[i]));
        total += rule.weights[i] * value * density(rule.nodes[i]);
    }
    return total;
}

/// Seeded stream of independent draws; (seed, stream) pairs give reproducible
/// substreams for parallel work.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// count sample covariances W / (N-1) with W ~ Wishart(N-1, Sigma), drawn by the
/// Bartlett decomposition.
std::vector<Eigen::MatrixXd> sample_wishart(const CovarianceSpec& cov, int n_pilot, std::size_t count,
                                            std::uint64_t seed);

/// Sample correlations rho_hat = S01 / sqrt(S00 S11) of Wishart draws (2x2 only).
std::vector<double> sample_corr_from_wishart(const CovarianceSpec& cov, int n_pilot, std::size_t count,
                                             std::uint64_t seed);

/// Pearson sample correlation of paired observations.
double sample_correlation(std::span<const double> x, std::span<const double> y);
double sample_correlation(std::span<const std::pair<double, double>> pairs);

/// Sample standard deviations (N-1 denominator) and correlation.
struct SampleMoments {
    double sigma0 = 0.0;
    double sigma1 = 0.0;
    double rho = 0.0;
};
SampleMoments sample_moments(std::span<const double> x, std::span<const double> y);

}  // namespace ddmm
