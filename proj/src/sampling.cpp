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

#include <algorithm>
#include <limits>
#include <numbers>

namespace ddmm {

namespace {

constexpr int kSeriesCap = 10000;
constexpr double kSeriesTol = 1e-15;
constexpr double kConnectionThreshold = 0.9;

double series_2f1(double a, double b, double c, double x) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < kSeriesCap; ++k) {
        const double kd = k;
        term *= (a + kd) * (b + kd) / ((c + kd) * (kd + 1.0)) * x;
        sum += term;
        if (term == 0.0 || std::abs(term) < kSeriesTol * std::abs(sum)) return sum;
    }
    fail(ErrorCode::SeriesDiverged, "2F1 series did not converge in " + std::to_string(kSeriesCap) + " terms");
}

bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::floor(v); }

bool is_integer(double v) { return v == std::floor(v); }

// log|Gamma(v)| and the sign of Gamma(v) for v not a nonpositive integer.
std::pair<double, double> signed_lgamma(double v) {
    const double lg = std::lgamma(v);
    double sign = 1.0;
    if (v < 0.0 && static_cast<long long>(std::floor(v)) % 2 != 0) sign = -1.0;
    return {lg, sign};
}

// Gamma(p1) Gamma(p2) / (Gamma(q1) Gamma(q2)); zero when a denominator
// argument is a pole.
double gamma_quotient(double p1, double p2, double q1, double q2) {
    if (is_nonpositive_integer(q1) || is_nonpositive_integer(q2)) return 0.0;
    const auto [l1, s1] = signed_lgamma(p1);
    const auto [l2, s2] = signed_lgamma(p2);
    const auto [l3, s3] = signed_lgamma(q1);
    const auto [l4, s4] = signed_lgamma(q2);
    return s1 * s2 * s3 * s4 * std::exp(l1 + l2 - l3 - l4);
}

// 2F1 with 1 - x supplied by the caller so that x close to 1 keeps full
// relative accuracy in the connection formula.
double hyp2f1(double a, double b, double c, double x, double one_minus_x) {
    if (x == 0.0) return 1.0;
    const double s = c - a - b;
    if (x <= kConnectionThreshold || is_integer(s)) return series_2f1(a, b, c, x);
    const double w = one_minus_x;
    const double t1 = gamma_quotient(c, s, c - a, c - b) * series_2f1(a, b, 1.0 - s, w);
    const double t2 = gamma_quotient(c, -s, a, b) * std::pow(w, s) * series_2f1(c - a, c - b, s + 1.0, w);
    return t1 + t2;
}

}  // namespace

double gauss_2f1(double a, double b, double c, double x) {
    require(std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(x), ErrorCode::InvalidArgument,
            "2F1 arguments must be finite");
    require(!is_nonpositive_integer(c), ErrorCode::InvalidArgument, "2F1 needs c that is not a nonpositive integer");
    require(std::abs(x) < 1.0, ErrorCode::InvalidArgument, "2F1 series needs |x| < 1");
    return hyp2f1(a, b, c, x, 1.0 - x);
}

QuadratureRule gauss_legendre(int order) {
    require(order >= 1, ErrorCode::InvalidArgument, "quadrature order must be positive");
    QuadratureRule rule;
    rule.order = order;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi's initial guess, refined by Newton on the three-term recurrence.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= order; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(order - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (order % 2 == 1) rule.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
    return rule;
}

QuadratureRule correlation_rule(int order) {
    QuadratureRule base = gauss_legendre(order);
    QuadratureRule rule = base;
    const double half_pi = 0.5 * std::numbers::pi;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
        const double phi = half_pi * base.nodes[i];
        rule.nodes[i] = std::sin(phi);
        rule.weights[i] = half_pi * base.weights[i] * std::cos(phi);
    }
    return rule;
}

void CorrelationDensityParams::validate() const {
    require(n_pilot >= 3, ErrorCode::InvalidArgument, "pilot size must be at least 3");
    require(std::isfinite(rho) && std::abs(rho) < 1.0, ErrorCode::InvalidArgument,
            "true correlation must lie strictly inside (-1, 1)");
}

CorrelationDensity::CorrelationDensity(const CorrelationDensityParams& params) : params_(params) {
    params.validate();
    const double n = params.n_pilot;
    const double rho = params.rho;
    log_const_ = std::log(n - 2.0) + std::lgamma(n - 1.0) - 0.5 * std::log(2.0 * std::numbers::pi) -
                 std::lgamma(n - 0.5) + 0.5 * (n - 1.0) * std::log((1.0 - rho) * (1.0 + rho));
}

double CorrelationDensity::evaluate(double r, double one_minus_r2, double one_minus_rho_r) const {
    const double n = params_.n_pilot;
    if (one_minus_r2 <= 0.0) {
        if (params_.n_pilot > 4) return 0.0;
        if (params_.n_pilot == 3) return std::numeric_limits<double>::infinity();
    }
    double log_f = log_const_ - (n - 1.5) * std::log(one_minus_rho_r);
    if (params_.n_pilot != 4) log_f += 0.5 * (n - 4.0) * std::log(one_minus_r2);
    const double x = 0.5 * (1.0 + params_.rho * r);
    const double f = hyp2f1(0.5, 0.5, n - 0.5, x, 0.5 * one_minus_rho_r);
    return std::exp(log_f) * f;
}

double CorrelationDensity::operator()(double r) const {
    require(std::isfinite(r) && std::abs(r) < 1.0, ErrorCode::OutOfSupport, "sample correlation outside (-1, 1)");
    const double rho = params_.rho;
    double one_minus_rho_r = 1.0 - rho * r;
    if (rho * r > 0.5) {
        const double ar = std::abs(r), arho = std::abs(rho);
        one_minus_rho_r = (1.0 - arho) + arho * (1.0 - ar);
    }
    return evaluate(r, (1.0 - r) * (1.0 + r), one_minus_rho_r);
}

double CorrelationDensity::in_fisher_z(double z) const {
    const double az = std::abs(z);
    const double e = std::exp(-2.0 * az);
    // 1 - |r| = 2 e / (1 + e), 1 - r^2 = sech^2 z = 4 e / (1 + e)^2.
    const double one_minus_ar = 2.0 * e / (1.0 + e);
    const double one_minus_r2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    const double r = std::copysign(1.0 - one_minus_ar, z);
    const double rho = params_.rho;
    double one_minus_rho_r = 1.0 - rho * r;
    if (rho * r > 0.5) {
        const double arho = std::abs(rho);
        one_minus_rho_r = (1.0 - arho) + arho * one_minus_ar;
    }
    if (one_minus_r2 == 0.0) return 0.0;
    return evaluate(r, one_minus_r2, one_minus_rho_r) * one_minus_r2;
}

double corr_density(double r, const CorrelationDensityParams& params) { return CorrelationDensity(params)(r); }

namespace {

// Composite 20-point Gauss-Legendre over z = atanh(r). In z the density is
// close to normal around atanh(rho) with spread 1/sqrt(N-3), so panels are cut
// at fixed multiples of that spread; the far tails decay like
// exp(-(N-2)|z|), which bounds how far out the integration has to reach.
struct FisherZFrame {
    double mode;
    double spread;
    double reach;
};

FisherZFrame fisher_z_frame(const CorrelationDensityParams& p) {
    const double spread = 1.0 / std::sqrt(std::max(1.0, p.n_pilot - 3.0));
    return {std::atanh(p.rho), spread, 8.0 * spread + 40.0 / (p.n_pilot - 2.0)};
}

double fisher_z_mass(const CorrelationDensity& density, const FisherZFrame& frame, double z_lo, double z_hi) {
    if (!(z_hi > z_lo)) return 0.0;
    static const QuadratureRule panel = gauss_legendre(20);
    std::vector<double> cuts{z_lo};
    for (double k : {-16.0, -8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0, 16.0}) {
        const double c = frame.mode + k * frame.spread;
        if (c > z_lo && c < z_hi) cuts.push_back(c);
    }
    cuts.push_back(z_hi);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double half = 0.5 * (cuts[i + 1] - cuts[i]);
        const double mid = 0.5 * (cuts[i + 1] + cuts[i]);
        double piece = 0.0;
        for (std::size_t j = 0; j < panel.nodes.size(); ++j)
            piece += panel.weights[j] * density.in_fisher_z(mid + half * panel.nodes[j]);
        total += half * piece;
    }
    return total;
}

double z_of(double r) {
    if (r >= 1.0) return std::numeric_limits<double>::infinity();
    if (r <= -1.0) return -std::numeric_limits<double>::infinity();
    return std::atanh(r);
}

}  // namespace

double corr_upper_tail(double r, const CorrelationDensityParams& params) {
    const CorrelationDensity density(params);
    const auto frame = fisher_z_frame(params);
    const double top = std::max(frame.mode, 0.0) + frame.reach;
    const double bottom = std::min(frame.mode, 0.0) - frame.reach;
    const double z = z_of(r);
    if (z >= top) return 0.0;
    return std::clamp(fisher_z_mass(density, frame, std::max(z, bottom), top), 0.0, 1.0);
}

double corr_lower_tail(double r, const CorrelationDensityParams& params) {
    const CorrelationDensity density(params);
    const auto frame = fisher_z_frame(params);
    const double top = std::max(frame.mode, 0.0) + frame.reach;
    const double bottom = std::min(frame.mode, 0.0) - frame.reach;
    const double z = z_of(r);
    if (z <= bottom) return 0.0;
    return std::clamp(fisher_z_mass(density, frame, bottom, std::min(z, top)), 0.0, 1.0);
}

std::vector<double> density_weights(const CorrelationDensityParams& params, const QuadratureRule& rule) {
    const CorrelationDensity density(params);
    std::vector<double> w(rule.nodes.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rule.weights[i] * density(rule.nodes[i]);
    return w;
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finaliser over a mix of both words.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(substream_seed(seed, stream));
}

std::vector<Eigen::MatrixXd> sample_wishart(const CovarianceSpec& cov, int n_pilot, std::size_t count,
                                            std::uint64_t seed) {
    cov.validate();
    require(n_pilot >= 3, ErrorCode::InvalidArgument, "pilot size must be at least 3");
    const Eigen::MatrixXd sigma = cov.matrix();
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    require(llt.info() == Eigen::Success, ErrorCode::NotPositiveDefinite, "covariance is not positive definite");
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::Index p = sigma.rows();
    const int df = n_pilot - 1;

    std::mt19937_64 rng = make_stream(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::chi_squared_distribution<double>> chi;
    for (Eigen::Index i = 0; i < p; ++i) chi.emplace_back(static_cast<double>(df - i));

    std::vector<Eigen::MatrixXd> out;
    out.reserve(count);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t k = 0; k < count; ++k) {
        Eigen::MatrixXd w;
        if (df >= p) {
            for (Eigen::Index i = 0; i < p; ++i) {
                a(i, i) = std::sqrt(chi[static_cast<std::size_t>(i)](rng));
                for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal(rng);
            }
            const Eigen::MatrixXd la = l * a;
            w = la * la.transpose();
        } else {
            // Fewer degrees of freedom than dimensions: the Bartlett factor is
            // undefined, so sum df Gaussian outer products instead.
            Eigen::MatrixXd x(p, df);
            for (Eigen::Index j = 0; j < df; ++j)
                for (Eigen::Index i = 0; i < p; ++i) x(i, j) = normal(rng);
            const Eigen::MatrixXd lx = l * x;
            w = lx * lx.transpose();
        }
        out.push_back(w / static_cast<double>(df));
    }
    return out;
}

std::vector<double> sample_corr_from_wishart(const CovarianceSpec& cov, int n_pilot, std::size_t count,
                                             std::uint64_t seed) {
    require(cov.size() == 2, ErrorCode::InvalidArgument, "sample correlations need a 2x2 covariance");
    const auto draws = sample_wishart(cov, n_pilot, count, seed);
    std::vector<double> out(draws.size());
    for (std::size_t k = 0; k < draws.size(); ++k) {
        const auto& s = draws[k];
        out[k] = s(0, 1) / std::sqrt(s(0, 0) * s(1, 1));
    }
    return out;
}

SampleMoments sample_moments(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorCode::InvalidArgument, "paired samples differ in length");
    require(x.size() >= 3, ErrorCode::InvalidArgument, "at least three pairs are needed");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    require(sxx > 0.0 && syy > 0.0, ErrorCode::ZeroVariance, "a sample column is constant");
    SampleMoments m;
    m.sigma0 = std::sqrt(sxx / (n - 1.0));
    m.sigma1 = std::sqrt(syy / (n - 1.0));
    m.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return m;
}

double sample_correlation(std::span<const double> x, std::span<const double> y) { return sample_moments(x, y).rho; }

double sample_correlation(std::span<const std::pair<double, double>> pairs) {
    std::vector<double> x(pairs.size()), y(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        x[i] = pairs[i].first;
        y[i] = pairs[i].second;
    }
    return sample_correlation(x, y);
}

}  // namespace ddmm
