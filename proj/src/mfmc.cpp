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

#include "ddmm/mfmc.hpp"

#include "ddmm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ddmm {

namespace {

constexpr double kSpectrumFloor = 1e-14;
constexpr double kNestedSlack = 1e-12;

std::vector<std::size_t> identity_order(std::size_t m) {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    return order;
}

void check_sizes(const CovarianceSpec& cov, const ModelEnsemble& ensemble) {
    require(cov.size() == ensemble.size(), ErrorCode::InvalidArgument,
            "covariance describes " + std::to_string(cov.size()) + " models but the ensemble has " +
                std::to_string(ensemble.size()));
}

void check_ordered(const std::vector<double>& rho0) {
    for (std::size_t i = 1; i < rho0.size(); ++i) {
        if (std::abs(rho0[i]) > std::abs(rho0[i - 1])) {
            std::ostringstream msg;
            msg << "|rho_0," << i + 1 << "| = " << std::abs(rho0[i]) << " exceeds |rho_0," << i
                << "| = " << std::abs(rho0[i - 1]);
            fail(ErrorCode::ModelOrderViolation, msg.str());
        }
    }
}

CovarianceSpec permuted(const CovarianceSpec& cov, const std::vector<std::size_t>& order) {
    CovarianceSpec out;
    out.sigma.resize(order.size());
    out.rho0.resize(order.size() - 1);
    for (std::size_t k = 0; k < order.size(); ++k) {
        out.sigma[k] = cov.sigma[order[k]];
        if (k > 0) out.rho0[k - 1] = cov.rho0[order[k] - 1];
    }
    return out;
}

ModelEnsemble permuted(const ModelEnsemble& ensemble, const std::vector<std::size_t>& order) {
    ModelEnsemble out;
    out.budget = ensemble.budget;
    out.costs.resize(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) out.costs[k] = ensemble.costs[order[k]];
    return out;
}

bool is_identity(const std::vector<std::size_t>& order) {
    for (std::size_t k = 0; k < order.size(); ++k)
        if (order[k] != k) return false;
    return true;
}

}  // namespace

void ModelEnsemble::validate() const {
    require(costs.size() >= 2, ErrorCode::InvalidArgument, "an ensemble needs at least two models");
    for (double c : costs)
        require(std::isfinite(c) && c > 0.0, ErrorCode::InvalidArgument, "model costs must be positive");
    require(std::isfinite(budget) && budget > 0.0, ErrorCode::InvalidArgument, "budget must be positive");
}

CovarianceSpec CovarianceSpec::from_correlation(std::vector<double> sigma, std::vector<double> rho0) {
    CovarianceSpec cov;
    cov.sigma = std::move(sigma);
    cov.rho0 = std::move(rho0);
    cov.validate();
    return cov;
}

CovarianceSpec CovarianceSpec::from_matrix(const Eigen::MatrixXd& m) {
    require(m.rows() == m.cols() && m.rows() >= 2, ErrorCode::InvalidArgument,
            "covariance matrix must be square with at least two models");
    CovarianceSpec cov;
    const auto size = static_cast<std::size_t>(m.rows());
    cov.sigma.resize(size);
    for (std::size_t i = 0; i < size; ++i) {
        const double d = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        require(d > 0.0, ErrorCode::NotPositiveDefinite, "covariance diagonal must be positive");
        cov.sigma[i] = std::sqrt(d);
    }
    cov.rho0.resize(size - 1);
    for (std::size_t i = 1; i < size; ++i)
        cov.rho0[i - 1] = m(0, static_cast<Eigen::Index>(i)) / (cov.sigma[0] * cov.sigma[i]);
    cov.full_matrix = m;
    cov.validate();
    return cov;
}

CovarianceSpec CovarianceSpec::unit_bivariate(double rho) {
    return from_correlation({1.0, 1.0}, {rho});
}

Eigen::MatrixXd CovarianceSpec::matrix() const {
    if (full_matrix) return *full_matrix;
    require(size() == 2, ErrorCode::InvalidArgument,
            "a full covariance matrix is required for more than two models");
    Eigen::MatrixXd m(2, 2);
    const double off = rho0[0] * sigma[0] * sigma[1];
    m << sigma[0] * sigma[0], off, off, sigma[1] * sigma[1];
    return m;
}

void CovarianceSpec::validate() const {
    require(sigma.size() >= 2, ErrorCode::InvalidArgument, "covariance needs at least two models");
    require(rho0.size() + 1 == sigma.size(), ErrorCode::InvalidArgument,
            "expected one correlation per low-fidelity model");
    for (double s : sigma)
        require(std::isfinite(s) && s > 0.0, ErrorCode::InvalidArgument, "standard deviations must be positive");
    for (double r : rho0)
        require(std::isfinite(r) && std::abs(r) < 1.0, ErrorCode::InvalidArgument,
                "correlations must lie strictly inside (-1, 1)");
    if (!full_matrix) return;
    const Eigen::MatrixXd& m = *full_matrix;
    const auto size = static_cast<Eigen::Index>(sigma.size());
    require(m.rows() == size && m.cols() == size, ErrorCode::InvalidArgument,
            "full covariance matrix has the wrong dimension");
    require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()),
            ErrorCode::InvalidArgument, "covariance matrix must be symmetric");
    require(Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success, ErrorCode::NotPositiveDefinite,
            "covariance matrix is not positive definite");
    for (Eigen::Index i = 0; i < size; ++i) {
        const double var = sigma[static_cast<std::size_t>(i)] * sigma[static_cast<std::size_t>(i)];
        require(std::abs(m(i, i) - var) <= 1e-12 * std::max(1.0, var), ErrorCode::InvalidArgument,
                "covariance matrix disagrees with sigma");
        if (i == 0) continue;
        const double off = rho0[static_cast<std::size_t>(i) - 1] * sigma[0] * sigma[static_cast<std::size_t>(i)];
        require(std::abs(m(0, i) - off) <= 1e-12 * std::max(1.0, std::abs(off)), ErrorCode::InvalidArgument,
                "covariance matrix disagrees with rho0");
    }
}

std::vector<double> variance_contributions(const std::vector<double>& rho0) {
    const std::size_t m = rho0.size() + 1;
    std::vector<double> s(m);
    s[0] = 1.0 - rho0[0] * rho0[0];
    for (std::size_t i = 1; i + 1 < m; ++i) s[i] = rho0[i - 1] * rho0[i - 1] - rho0[i] * rho0[i];
    s[m - 1] = rho0[m - 2] * rho0[m - 2];
    return s;
}

double estimator_variance(const MfmcHyperparams& params, const CovarianceSpec& cov,
                          const ModelEnsemble& ensemble) {
    check_sizes(cov, ensemble);
    const std::size_t m = cov.size();
    require(params.n.size() == m && params.beta.size() + 1 == m, ErrorCode::InvalidArgument,
            "hyperparameter sizes do not match the model count");
    require(params.n[0] > 0.0, ErrorCode::InvalidAllocation, "n_0 must be positive");
    for (std::size_t i = 1; i < m; ++i) {
        if (params.n[i - 1] > params.n[i] * (1.0 + kNestedSlack)) {
            std::ostringstream msg;
            msg << "n_" << i - 1 << " = " << params.n[i - 1] << " > n_" << i << " = " << params.n[i];
            fail(ErrorCode::NestednessViolation, msg.str());
        }
    }

    const CovarianceSpec& c = (params.order.empty() || is_identity(params.order)) ? cov : permuted(cov, params.order);
    const double s0 = c.sigma[0];
    double v = s0 * s0 / params.n[0];
    for (std::size_t i = 1; i < m; ++i) {
        const double b = params.beta[i - 1];
        const double si = c.sigma[i];
        const double gap = 1.0 / params.n[i - 1] - 1.0 / params.n[i];
        v += gap * (b * b * si * si - 2.0 * b * c.rho0[i - 1] * s0 * si);
    }
    return v;
}

std::vector<double> optimal_weights(const CovarianceSpec& cov) {
    std::vector<double> beta(cov.rho0.size());
    for (std::size_t i = 0; i < beta.size(); ++i) beta[i] = cov.rho0[i] * cov.sigma[0] / cov.sigma[i + 1];
    return beta;
}

bool closed_form_conditions_hold(const CovarianceSpec& cov, const ModelEnsemble& ensemble) {
    const auto s = variance_contributions(cov.rho0);
    for (std::size_t i = 1; i < s.size(); ++i) {
        // c_{i-1}/c_i > S_{i-1}/S_i, written without divisions.
        if (!(ensemble.costs[i - 1] * s[i] > ensemble.costs[i] * s[i - 1])) return false;
    }
    return true;
}

MfmcHyperparams closed_form_allocation(const CovarianceSpec& cov, const ModelEnsemble& ensemble) {
    cov.validate();
    ensemble.validate();
    check_sizes(cov, ensemble);
    check_ordered(cov.rho0);
    if (!closed_form_conditions_hold(cov, ensemble))
        fail(ErrorCode::ConditionsNotMet, "c_{i-1}/c_i > S_{i-1}/S_i does not hold; use the PAVA allocation");

    const auto s = variance_contributions(cov.rho0);
    const auto& c = ensemble.costs;
    const std::size_t m = s.size();
    std::vector<double> ratio(m);
    double spend = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        ratio[i] = std::sqrt(c[0] * s[i] / (c[i] * s[0]));
        spend += c[i] * ratio[i];
    }
    MfmcHyperparams p;
    const double n0 = ensemble.budget / spend;
    p.n.resize(m);
    for (std::size_t i = 0; i < m; ++i) p.n[i] = n0 * ratio[i];
    p.n[0] = n0;
    p.beta = optimal_weights(cov);
    p.order = identity_order(m);
    return p;
}

MfmcHyperparams pava_allocation(const CovarianceSpec& cov, const ModelEnsemble& ensemble) {
    cov.validate();
    ensemble.validate();
    check_sizes(cov, ensemble);
    check_ordered(cov.rho0);
    const auto s = variance_contributions(cov.rho0);
    for (double si : s)
        require(si >= 0.0, ErrorCode::InvalidSpectrum, "negative variance-reduction contribution");

    struct Block {
        double s, c;
        std::size_t first, last;
        double ratio() const { return s / c; }
    };
    std::vector<Block> stack;
    stack.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        stack.push_back({std::max(s[i], kSpectrumFloor), ensemble.costs[i], i, i});
        while (stack.size() >= 2 && stack[stack.size() - 2].ratio() >= stack.back().ratio()) {
            Block top = stack.back();
            stack.pop_back();
            Block& prev = stack.back();
            prev.s += top.s;
            prev.c += top.c;
            prev.last = top.last;
        }
    }

    double spend = 0.0;
    for (const auto& b : stack) spend += b.c * std::sqrt(b.ratio());
    const double scale = ensemble.budget / spend;

    MfmcHyperparams p;
    p.n.resize(s.size());
    for (const auto& b : stack) {
        const double nb = scale * std::sqrt(b.ratio());
        for (std::size_t i = b.first; i <= b.last; ++i) p.n[i] = nb;
    }
    p.pooled = stack.size() < s.size();
    p.beta = optimal_weights(cov);
    p.order = identity_order(s.size());
    return p;
}

MfmcHyperparams optimal_hyperparams(const CovarianceSpec& cov, const ModelEnsemble& ensemble) {
    cov.validate();
    ensemble.validate();
    check_sizes(cov, ensemble);
    std::vector<std::size_t> order = identity_order(cov.size());
    std::stable_sort(order.begin() + 1, order.end(), [&](std::size_t a, std::size_t b) {
        const double ra = std::abs(cov.rho0[a - 1]);
        const double rb = std::abs(cov.rho0[b - 1]);
        if (ra != rb) return ra > rb;
        return ensemble.costs[a] < ensemble.costs[b];
    });
    if (is_identity(order)) return pava_allocation(cov, ensemble);
    auto p = pava_allocation(permuted(cov, order), permuted(ensemble, order));
    p.order = order;
    return p;
}

double discrepancy(const CovarianceSpec& sigma1, const CovarianceSpec& sigma2, const ModelEnsemble& ensemble) {
    const auto p1 = optimal_hyperparams(sigma1, ensemble);
    const auto p2 = optimal_hyperparams(sigma2, ensemble);
    return std::log(estimator_variance(p1, sigma2, ensemble) / estimator_variance(p2, sigma2, ensemble));
}

double hifi_mc_variance(const CovarianceSpec& cov, const ModelEnsemble& ensemble) {
    return cov.sigma[0] * cov.sigma[0] * ensemble.costs[0] / ensemble.budget;
}

double variance_reduction_ratio(const MfmcHyperparams& params, const CovarianceSpec& cov,
                                const ModelEnsemble& ensemble) {
    const double v = estimator_variance(params, cov, ensemble);
    require(v > 0.0 && std::isfinite(v), ErrorCode::DegenerateVariance, "estimator variance is not positive");
    return hifi_mc_variance(cov, ensemble) / v;
}

double projected_vs_true_ratio(const CovarianceSpec& sample_cov, const CovarianceSpec& true_cov,
                               const ModelEnsemble& ensemble) {
    const auto p = optimal_hyperparams(sample_cov, ensemble);
    return estimator_variance(p, true_cov, ensemble) / estimator_variance(p, sample_cov, ensemble);
}

RoundedAllocation round_allocation(const MfmcHyperparams& params, const ModelEnsemble& ensemble) {
    ensemble.validate();
    require(params.n.size() == ensemble.size(), ErrorCode::InvalidArgument, "allocation size mismatch");
    const auto order = params.order.empty() ? identity_order(params.n.size()) : params.order;
    RoundedAllocation out;
    out.n.resize(params.n.size());
    long long floor_prev = 2;
    for (std::size_t i = 0; i < params.n.size(); ++i) {
        long long ni = static_cast<long long>(std::floor(params.n[i] + 1e-9));
        ni = std::max(ni, floor_prev);
        out.n[i] = ni;
        floor_prev = ni;
        out.cost += ensemble.costs[order[i]] * static_cast<double>(ni);
    }
    require(out.cost <= ensemble.budget * (1.0 + 1e-9), ErrorCode::InvalidAllocation,
            "rounded allocation exceeds the budget (n_0 >= 2 is not affordable)");
    return out;
}

BifidelityModel::BifidelityModel(double c0, double c1) : c0_(c0), c1_(c1) {
    require(c0 > 0.0 && c1 > 0.0, ErrorCode::InvalidArgument, "model costs must be positive");
}

namespace {

// Unit-budget optimal (n0, n1) at correlation rho for two models.
inline std::pair<double, double> bifi_allocation(double c0, double c1, double rho) {
    const double r2 = rho * rho;
    const double s1 = std::max(r2, kSpectrumFloor);
    const double s0 = 1.0 - r2;
    if (c0 * s1 > c1 * s0) {
        const double ratio = std::sqrt(c0 * s1 / (c1 * s0));
        const double n0 = 1.0 / (c0 + c1 * ratio);
        return {n0, n0 * ratio};
    }
    const double n = 1.0 / (c0 + c1);
    return {n, n};
}

}  // namespace

double BifidelityModel::optimal_variance(double rho) const {
    const auto [n0, n1] = bifi_allocation(c0_, c1_, rho);
    const double r2 = rho * rho;
    return (1.0 - r2) / n0 + r2 / n1;
}

std::pair<double, double> BifidelityModel::variance_line(double rho_used) const {
    const auto [n0, n1] = bifi_allocation(c0_, c1_, rho_used);
    const double gap = 1.0 / n0 - 1.0 / n1;
    return {1.0 / n0 + gap * rho_used * rho_used, 2.0 * gap * rho_used};
}

double BifidelityModel::discrepancy(double rho_used, double rho_true) const {
    const auto [a, b] = variance_line(rho_used);
    return std::log((a - b * rho_true) / optimal_variance(rho_true));
}

}  // namespace ddmm
