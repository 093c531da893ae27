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

#include "ddmm/sampling.hpp"

#include <doctest.h>

#include <algorithm>
#include <numbers>

using namespace ddmm;

namespace {

// Kolmogorov-Smirnov distance between draws and the density-implied CDF,
// evaluated exactly at every order statistic.
double ks_distance(std::vector<double> draws, const CorrelationDensityParams& p) {
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = corr_lower_tail(draws[i], p);
        d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return d;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("2F1 series values") {
    CHECK(gauss_2f1(0.5, 0.5, 2.0, 0.0) == 1.0);
    CHECK(gauss_2f1(0.5, 0.5, 2.0, 0.5) == doctest::Approx(1.0787052023767587).epsilon(1e-14));
    CHECK(gauss_2f1(0.5, 1.5, 1.5, 0.3) == doctest::Approx(std::pow(0.7, -0.5)).epsilon(1e-14));
    // High-precision reference values, including the connection-formula branch.
    CHECK(gauss_2f1(0.5, 0.5, 4.5, 0.95) == doctest::Approx(1.0685957792773067).epsilon(1e-13));
    CHECK(gauss_2f1(0.5, 0.5, 74.5, 0.99) == doctest::Approx(1.0033725306098340).epsilon(1e-13));
    CHECK(gauss_2f1(0.5, 0.5, 2.5, 0.999) == doctest::Approx(1.1775385427093631).epsilon(1e-13));
    CHECK(gauss_2f1(0.5, 0.5, 199.5, 0.97) == doctest::Approx(1.0012222219331340).epsilon(1e-13));
}

TEST_CASE("2F1 rejects arguments outside the series domain") {
    CHECK_THROWS_AS(gauss_2f1(0.5, 0.5, 2.0, 1.0), Error);
    CHECK_THROWS_AS(gauss_2f1(0.5, 0.5, -2.0, 0.3), Error);
}

TEST_CASE("Gauss-Legendre rules") {
    for (int order : {1, 2, 7, 200, 400}) {
        const auto rule = gauss_legendre(order);
        double sum = 0.0, x4 = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            sum += rule.weights[i];
            x4 += rule.weights[i] * std::pow(rule.nodes[i], 4);
            if (i > 0) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
        }
        CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
        if (order >= 3) CHECK(x4 == doctest::Approx(0.4).epsilon(1e-12));
    }
    const auto rule = correlation_rule(200);
    double sum = 0.0;
    for (double w : rule.weights) sum += w;
    CHECK(sum == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rule.nodes.front() > -1.0);
    CHECK(rule.nodes.back() < 1.0);
}

TEST_CASE("density values and symmetry") {
    CHECK(corr_density(0.0, {0.0, 5}) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-13));
    for (double r : {0.1, 0.5, 0.93})
        CHECK(corr_density(r, {0.0, 7}) == doctest::Approx(corr_density(-r, {0.0, 7})).epsilon(1e-14));
    for (double rho : {0.3, 0.9, 0.99})
        for (int n : {3, 4, 5, 30})
            for (double r : {-0.8, 0.2, 0.95}) {
                const double a = corr_density(r, {rho, n}), b = corr_density(-r, {-rho, n});
                CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, a));
            }
    CHECK_THROWS_AS(corr_density(1.0, {0.5, 5}), Error);
    CHECK_THROWS_AS(corr_density(0.0, {0.5, 2}), Error);
}

TEST_CASE("density normalises") {
    const auto rule = correlation_rule(200);
    for (double rho : {0.0, 0.5, -0.5, 0.9, -0.9, 0.99, -0.99})
        for (int n : {3, 5, 10, 25, 75}) {
            const CorrelationDensityParams p{rho, n};
            const double total = expect_over_sample_corr([](double) { return 1.0; }, p, rule);
            CHECK(std::abs(total - 1.0) < 1e-6);
            CHECK(std::abs(corr_lower_tail(0.1, p) + corr_upper_tail(0.1, p) - 1.0) < 1e-9);
        }
}

TEST_CASE("tail probabilities against high-precision quadrature") {
    struct Ref {
        double r, rho;
        int n;
        double cdf;
    };
    const Ref refs[] = {{0.8, 0.6, 5, 0.686682028360679666},   {0.2, 0.9, 5, 0.0137819877935399207},
                        {-0.5, 0.3, 3, 0.214537360661921245},  {0.95, 0.99, 15, 0.00162565385806463817},
                        {0.5, 0.5, 75, 0.488322170940511697},  {0.999, 0.9, 10, 0.999999625539993689}};
    for (const auto& ref : refs) {
        CHECK(std::abs(corr_lower_tail(ref.r, {ref.rho, ref.n}) - ref.cdf) < 1e-11);
        CHECK(std::abs(corr_upper_tail(ref.r, {ref.rho, ref.n}) - (1.0 - ref.cdf)) < 1e-11);
    }
}

TEST_CASE("quadrature orders 200 and 400 agree") {
    const auto r200 = correlation_rule(200), r400 = correlation_rule(400);
    for (double rho : {0.3, 0.9})
        for (int n : {5, 25}) {
            auto f = [](double r) { return std::exp(r) * std::cos(2 * r); };
            const double a = expect_over_sample_corr(f, {rho, n}, r200);
            const double b = expect_over_sample_corr(f, {rho, n}, r400);
            CHECK(std::abs(a - b) < 1e-9);
        }
}

TEST_CASE("expectations") {
    const auto rule = correlation_rule(200);
    CHECK(std::abs(expect_over_sample_corr([](double r) { return r; }, {0.0, 8}, rule)) < 1e-10);
    CHECK_THROWS_AS(expect_over_sample_corr([](double) { return NAN; }, {0.0, 8}, rule), Error);

    const auto draws = sample_corr_from_wishart(CovarianceSpec::unit_bivariate(0.9), 5, 1000000, 3);
    double mean = 0.0, m2 = 0.0;
    for (double r : draws) mean += r;
    mean /= draws.size();
    for (double r : draws) m2 += (r - mean) * (r - mean);
    const double se = std::sqrt(m2 / (draws.size() - 1) / draws.size());
    const double e = expect_over_sample_corr([](double r) { return r; }, {0.9, 5}, rule);
    CHECK(std::abs(e - mean) < 3.0 * se);
}

TEST_CASE("Wishart draws") {
    const auto cov = CovarianceSpec::from_matrix((Eigen::MatrixXd(3, 3) << 2.0, 0.6, 0.3, 0.6, 1.0, 0.2, 0.3, 0.2, 0.5).finished());
    const auto draws = sample_wishart(cov, 6, 100000, 5);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3), m2 = Eigen::MatrixXd::Zero(3, 3);
    for (const auto& d : draws) {
        mean += d;
        m2 += d.cwiseProduct(d);
    }
    mean /= draws.size();
    m2 /= draws.size();
    const Eigen::MatrixXd se = ((m2 - mean.cwiseProduct(mean)) / draws.size()).cwiseSqrt();
    CHECK(((mean - cov.matrix()).cwiseAbs().array() <= 4.0 * se.array()).all());

    const auto small = sample_wishart(CovarianceSpec::unit_bivariate(0.0), 3, 100000, 9);
    double diag = 0.0;
    for (const auto& d : small) diag += 2.0 * d(0, 0);
    CHECK(diag / small.size() == doctest::Approx(2.0).epsilon(0.02));

    const auto again = sample_wishart(cov, 6, 100, 5);
    for (std::size_t k = 0; k < 100; ++k) CHECK((again[k].array() == draws[k].array()).all());

    Eigen::MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;
    CovarianceSpec invalid;
    invalid.sigma = {1, 1};
    invalid.rho0 = {0.99};
    invalid.full_matrix = bad;
    CHECK_THROWS_AS(sample_wishart(invalid, 5, 1, 1), Error);
}

TEST_CASE("Wishart correlations follow the density") {
    for (double rho : {0.3, 0.9})
        for (int n : {5, 15}) {
            const auto draws = sample_corr_from_wishart(CovarianceSpec::unit_bivariate(rho), n, 100000, 42);
            const double d = ks_distance(draws, {rho, n});
            CHECK(d < 0.01);
        }
    const auto zero = sample_corr_from_wishart(CovarianceSpec::unit_bivariate(0.0), 5, 100000, 1);
    double mean = 0.0, m2 = 0.0;
    for (double r : zero) {
        mean += r;
        m2 += r * r;
    }
    mean /= zero.size();
    CHECK(std::abs(mean) < 4.0 * std::sqrt(m2 / zero.size() / zero.size()));

    const auto big = sample_corr_from_wishart(CovarianceSpec::unit_bivariate(0.5), 500, 20000, 2);
    double bm = 0.0, bv = 0.0;
    for (double r : big) bm += r;
    bm /= big.size();
    for (double r : big) bv += (r - bm) * (r - bm);
    const double sd = std::sqrt(bv / (big.size() - 1));
    CHECK(sd == doctest::Approx(0.75 / std::sqrt(500.0)).epsilon(0.1));
}

TEST_CASE("sample correlation") {
    const std::vector<double> x{0, 1, 2}, y{0, -1, -2};
    CHECK(sample_correlation(x, x) == doctest::Approx(1.0));
    CHECK(sample_correlation(x, y) == doctest::Approx(-1.0));
    // Hand computation: x = 1..5, y = (2, 1, 4, 3, 5): sxy = 8, sxx = syy = 10.
    const std::vector<std::pair<double, double>> pairs{{1, 2}, {2, 1}, {3, 4}, {4, 3}, {5, 5}};
    CHECK(sample_correlation(pairs) == doctest::Approx(0.8).epsilon(1e-15));
    const std::vector<double> c{1, 1, 1};
    try {
        sample_correlation(x, c);
        FAIL("expected ZeroVariance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroVariance);
    }
}

}
