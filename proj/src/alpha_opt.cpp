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

#include "ddmm/alpha_opt.hpp"

#include "ddmm/error.hpp"
#include "ddmm/parallel.hpp"
#include "ddmm/sampling.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace ddmm {

namespace {

constexpr int kFileVersion = 1;

double clamp_rho(double r) { return std::max(r, kRhoClampEps); }

std::array<double, 2> to_unit(const AlphaBox& box, const std::array<double, 2>& p) {
    return {(p[0] - box.alpha_lo) / (box.alpha_hi - box.alpha_lo), (p[1] - box.rho_lo) / (box.rho_hi - box.rho_lo)};
}

double sq_exp(const std::array<double, 2>& a, const std::array<double, 2>& b, double s2,
              const std::array<double, 2>& ell) {
    const double d0 = (a[0] - b[0]) / ell[0];
    const double d1 = (a[1] - b[1]) / ell[1];
    return s2 * std::exp(-0.5 * (d0 * d0 + d1 * d1));
}

// Log hyperparameters (log s^2, log l_0, log l_1) and their bounds.
using Theta = std::array<double, 3>;

struct GpProblem {
    std::vector<std::array<double, 2>> x;
    Eigen::VectorXd y;
    Eigen::VectorXd noise;
    Theta lo, hi;
};

struct Factorized {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    bool ok = false;
};

Factorized factorize(const GpProblem& p, const Theta& t) {
    const std::size_t n = p.x.size();
    const double s2 = std::exp(t[0]);
    const std::array<double, 2> ell{std::exp(t[1]), std::exp(t[2])};
    Eigen::MatrixXd k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = s2 + p.noise[i];
        for (std::size_t j = 0; j < i; ++j) k(i, j) = k(j, i) = sq_exp(p.x[i], p.x[j], s2, ell);
    }
    Factorized f;
    for (double rel = 1e-10; rel <= 1e-4 * (1 + 1e-9); rel *= 10.0) {
        f.jitter = rel * s2;
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += f.jitter;
        f.llt.compute(kj);
        if (f.llt.info() == Eigen::Success) {
            f.ok = true;
            return f;
        }
    }
    return f;
}

struct Profile {
    double nll = std::numeric_limits<double>::infinity();
    double mean = 0.0;
    Eigen::VectorXd weights;
    double jitter = 0.0;
};

Profile profile(const GpProblem& p, const Theta& t) {
    Profile out;
    const Factorized f = factorize(p, t);
    if (!f.ok) return out;
    const Eigen::Index n = p.y.size();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd ki1 = f.llt.solve(ones);
    const Eigen::VectorXd kiy = f.llt.solve(p.y);
    out.mean = ones.dot(kiy) / ones.dot(ki1);
    const Eigen::VectorXd resid = p.y - out.mean * ones;
    out.weights = f.llt.solve(resid);
    const Eigen::VectorXd diag = f.llt.matrixLLT().diagonal();
    const double logdet = 2.0 * diag.array().log().sum();
    out.nll = 0.5 * resid.dot(out.weights) + 0.5 * logdet + 0.5 * static_cast<double>(n) * std::log(2 * std::numbers::pi);
    if (!std::isfinite(out.nll)) out.nll = std::numeric_limits<double>::infinity();
    out.jitter = f.jitter;
    return out;
}

Theta project(const GpProblem& p, Theta t) {
    for (int d = 0; d < 3; ++d) t[d] = std::clamp(t[d], p.lo[d], p.hi[d]);
    return t;
}

// Nelder-Mead with standard coefficients; points are projected onto the box.
std::pair<Theta, double> nelder_mead(const GpProblem& p, Theta start, int max_evaluations) {
    auto f = [&](const Theta& t) { return profile(p, t).nll; };
    std::array<Theta, 4> s;
    std::array<double, 4> fs;
    s[0] = project(p, start);
    for (int d = 0; d < 3; ++d) {
        s[d + 1] = s[0];
        const double step = 0.1 * (p.hi[d] - p.lo[d]);
        s[d + 1][d] += (s[0][d] + step <= p.hi[d]) ? step : -step;
    }
    int evals = 0;
    for (int i = 0; i < 4; ++i, ++evals) fs[i] = f(s[i]);
    auto point = [&](const Theta& c, const Theta& w, double coef) {
        Theta r;
        for (int d = 0; d < 3; ++d) r[d] = c[d] + coef * (w[d] - c[d]);
        return project(p, r);
    };
    while (evals < max_evaluations) {
        std::array<int, 4> order{0, 1, 2, 3};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::array<Theta, 4> s2;
        std::array<double, 4> f2;
        for (int i = 0; i < 4; ++i) {
            s2[i] = s[order[i]];
            f2[i] = fs[order[i]];
        }
        s = s2;
        fs = f2;
        double size = 0.0;
        for (int i = 1; i < 4; ++i)
            for (int d = 0; d < 3; ++d) size = std::max(size, std::abs(s[i][d] - s[0][d]));
        if (std::isfinite(fs[3]) && fs[3] - fs[0] < 1e-9 * (1.0 + std::abs(fs[0])) && size < 1e-6) break;

        Theta c{};
        for (int i = 0; i < 3; ++i)
            for (int d = 0; d < 3; ++d) c[d] += s[i][d] / 3.0;
        const Theta xr = point(c, s[3], -1.0);
        const double fr = f(xr);
        ++evals;
        if (fr < fs[0]) {
            const Theta xe = point(c, s[3], -2.0);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) {
                s[3] = xe;
                fs[3] = fe;
            } else {
                s[3] = xr;
                fs[3] = fr;
            }
        } else if (fr < fs[2]) {
            s[3] = xr;
            fs[3] = fr;
        } else {
            const bool outside = fr < fs[3];
            const Theta xc = outside ? point(c, s[3], -0.5) : point(c, s[3], 0.5);
            const double fc = f(xc);
            ++evals;
            if (fc < std::min(fr, fs[3])) {
                s[3] = xc;
                fs[3] = fc;
            } else {
                for (int i = 1; i < 4; ++i) {
                    s[i] = point(s[0], s[i], 0.5);
                    fs[i] = f(s[i]);
                    ++evals;
                }
            }
        }
    }
    const auto best = std::min_element(fs.begin(), fs.end()) - fs.begin();
    return {s[static_cast<std::size_t>(best)], fs[static_cast<std::size_t>(best)]};
}

}  // namespace

void AlphaBox::validate() const {
    require(0.0 < alpha_lo && alpha_lo < alpha_hi && alpha_hi < 1.0, ErrorCode::InvalidArgument,
            "alpha range must satisfy 0 < lo < hi < 1");
    require(0.0 < rho_lo && rho_lo < rho_hi && rho_hi < 1.0, ErrorCode::InvalidArgument,
            "rho range must satisfy 0 < lo < hi < 1");
}

double delta_at(double alpha, double rho, double observed_r, const ExpectedDiscrepancyGrid& grid, const CiSource& ci) {
    const auto [c0, c1] = grid.costs();
    const BifidelityModel model(c0, c1);
    const double r = std::clamp(observed_r, -1.0 + 1e-12, 1.0 - 1e-12);
    const double adjusted = solve_ddmm(r, alpha, grid, ci).adjusted_rho;
    return model.discrepancy(adjusted, rho) - model.discrepancy(clamp_rho(r), rho);
}

double sample_delta(double alpha, double rho, int n_pilot, const ExpectedDiscrepancyGrid& grid, const CiSource& ci,
                    std::uint64_t seed) {
    require(n_pilot == grid.n_pilot(), ErrorCode::InvalidArgument, "pilot size differs from the grid's");
    const double r = sample_corr_from_wishart(CovarianceSpec::unit_bivariate(rho), n_pilot, 1, seed).front();
    return delta_at(alpha, rho, r, grid, ci);
}

std::vector<std::array<double, 2>> latin_hypercube(std::size_t n, std::uint64_t seed) {
    require(n >= 1, ErrorCode::InvalidArgument, "need at least one point");
    std::mt19937_64 rng = make_stream(seed, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::array<double, 2>> pts(n);
    for (int d = 0; d < 2; ++d) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < n; ++i)
            pts[i][d] = (static_cast<double>(perm[i]) + u(rng)) / static_cast<double>(n);
    }
    return pts;
}

AlphaDesign AlphaDesign::from_samples(AlphaBox box, int n_pilot, std::vector<std::array<double, 2>> points,
                                      int repetitions, std::vector<double> samples) {
    require(repetitions >= 2, ErrorCode::InvalidArgument, "at least two repetitions are needed");
    require(samples.size() == points.size() * static_cast<std::size_t>(repetitions), ErrorCode::InvalidArgument,
            "sample count does not match points x repetitions");
    AlphaDesign d;
    d.box = box;
    d.n_pilot = n_pilot;
    d.repetitions = repetitions;
    d.points = std::move(points);
    d.samples = std::move(samples);
    const auto r = static_cast<std::size_t>(repetitions);
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        const double* row = d.samples.data() + i * r;
        const double mean = std::accumulate(row, row + r, 0.0) / static_cast<double>(r);
        double ss = 0.0;
        for (std::size_t j = 0; j < r; ++j) ss += (row[j] - mean) * (row[j] - mean);
        d.means.push_back(mean);
        d.variances.push_back(ss / (static_cast<double>(r) * static_cast<double>(r - 1)));
    }
    d.validate();
    return d;
}

AlphaDesign AlphaDesign::subset(const std::vector<std::size_t>& point_indices,
                                const std::vector<std::size_t>& repetition_indices) const {
    std::vector<std::array<double, 2>> pts;
    std::vector<double> s;
    const auto r = static_cast<std::size_t>(repetitions);
    for (std::size_t i : point_indices) {
        require(i < points.size(), ErrorCode::InvalidArgument, "point index out of range");
        pts.push_back(points[i]);
        for (std::size_t j : repetition_indices) {
            require(j < r, ErrorCode::InvalidArgument, "repetition index out of range");
            s.push_back(samples[i * r + j]);
        }
    }
    return from_samples(box, n_pilot, std::move(pts), static_cast<int>(repetition_indices.size()), std::move(s));
}

void AlphaDesign::validate() const {
    box.validate();
    require(points.size() == means.size() && means.size() == variances.size(), ErrorCode::InvalidArgument,
            "design points, means and variances differ in length");
    for (std::size_t i = 0; i < means.size(); ++i) {
        require(std::isfinite(means[i]), ErrorCode::NonFiniteIntegrand, "design mean is not finite");
        require(variances[i] >= 0.0 && std::isfinite(variances[i]), ErrorCode::InvalidArgument,
                "design variance must be finite and nonnegative");
    }
}

void AlphaDesign::save(const std::string& path) const {
    nlohmann::json j;
    j["format"] = "ddmm-alpha-design";
    j["version"] = kFileVersion;
    j["box"] = {box.alpha_lo, box.alpha_hi, box.rho_lo, box.rho_hi};
    j["n_pilot"] = n_pilot;
    j["repetitions"] = repetitions;
    j["points"] = points;
    j["samples"] = samples;
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path);
    out << j.dump();
    require(out.good(), ErrorCode::IoError, "write failed for " + path);
}

AlphaDesign AlphaDesign::load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path);
    try {
        const auto j = nlohmann::json::parse(in);
        require(j.at("format") == "ddmm-alpha-design" && j.at("version") == kFileVersion, ErrorCode::FormatError,
                path + " is not a version 1 alpha design");
        const auto b = j.at("box").get<std::vector<double>>();
        require(b.size() == 4, ErrorCode::FormatError, "design box needs four numbers");
        return from_samples({b[0], b[1], b[2], b[3]}, j.at("n_pilot").get<int>(),
                            j.at("points").get<std::vector<std::array<double, 2>>>(), j.at("repetitions").get<int>(),
                            j.at("samples").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::FormatError, path + ": " + e.what());
    }
}

AlphaDesign build_design(std::size_t design_points, int repetitions, const AlphaBox& box, int n_pilot,
                         const ExpectedDiscrepancyGrid& grid, const CiSource& ci, std::uint64_t seed,
                         unsigned threads) {
    box.validate();
    require(design_points >= 10, ErrorCode::DesignTooSmall, "at least 10 design points are needed");
    require(repetitions >= 2, ErrorCode::DesignTooSmall, "at least 2 repetitions are needed");
    require(n_pilot == grid.n_pilot() && ci.n_pilot() == n_pilot, ErrorCode::InvalidArgument,
            "grid, intervals and pilot size disagree");
    auto pts = latin_hypercube(design_points, substream_seed(seed, 0xD5));
    for (auto& p : pts) {
        p[0] = box.alpha_lo + p[0] * (box.alpha_hi - box.alpha_lo);
        p[1] = box.rho_lo + p[1] * (box.rho_hi - box.rho_lo);
    }
    const auto r = static_cast<std::size_t>(repetitions);
    std::vector<double> samples(design_points * r);
    parallel_for(design_points, threads, [&](std::size_t i) {
        const auto draws = sample_corr_from_wishart(CovarianceSpec::unit_bivariate(pts[i][1]), n_pilot, r,
                                                    substream_seed(seed, i));
        for (std::size_t j = 0; j < r; ++j) samples[i * r + j] = delta_at(pts[i][0], pts[i][1], draws[j], grid, ci);
    });
    return AlphaDesign::from_samples(box, n_pilot, std::move(pts), repetitions, std::move(samples));
}

double GpSurface::operator()(double alpha, double rho) const {
    const auto u = to_unit(box, {alpha, rho});
    double f = mean;
    for (std::size_t i = 0; i < inputs.size(); ++i) f += weights[i] * sq_exp(u, inputs[i], signal_variance, length_scales);
    return f;
}

GpSurface fit_gp(const AlphaBox& box, const std::vector<std::array<double, 2>>& points, const std::vector<double>& y,
                 const std::vector<double>& noise, const GpOptions& options) {
    box.validate();
    require(points.size() >= 10, ErrorCode::DesignTooSmall, "at least 10 design points are needed");
    require(y.size() == points.size() && noise.size() == points.size(), ErrorCode::InvalidArgument,
            "points, targets and noise differ in length");
    require(options.restarts >= 1 && options.max_evaluations >= 10, ErrorCode::InvalidArgument,
            "need at least one restart and 10 evaluations");
    GpProblem p;
    const auto n = static_cast<Eigen::Index>(points.size());
    p.y.resize(n);
    p.noise.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        require(std::isfinite(y[k]), ErrorCode::NonFiniteIntegrand, "GP target is not finite");
        require(noise[k] >= 0.0 && std::isfinite(noise[k]), ErrorCode::InvalidArgument,
                "noise variances must be finite and nonnegative");
        p.x.push_back(to_unit(box, points[k]));
        p.y[i] = y[k];
        p.noise[i] = noise[k];
    }
    const double var_y = (p.y.array() - p.y.mean()).square().mean();
    const double scale = std::max({var_y, p.noise.maxCoeff(), 1e-300});
    p.lo = {std::log(scale * 1e-8), std::log(0.01), std::log(0.01)};
    p.hi = {std::log(scale * 1e2), std::log(10.0), std::log(10.0)};

    const auto restarts = static_cast<std::size_t>(options.restarts);
    std::vector<std::pair<Theta, double>> found(restarts);
    parallel_for(restarts, options.threads, [&](std::size_t k) {
        Theta start{std::log(scale), std::log(0.3), std::log(0.3)};
        if (k > 0) {
            std::mt19937_64 rng = make_stream(options.seed, k);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (int d = 0; d < 3; ++d) start[d] = p.lo[d] + u(rng) * (p.hi[d] - p.lo[d]);
        }
        found[k] = nelder_mead(p, start, options.max_evaluations);
    });
    std::size_t best = 0;
    for (std::size_t k = 1; k < restarts; ++k)
        if (found[k].second < found[best].second) best = k;
    require(std::isfinite(found[best].second), ErrorCode::GpFitFailure,
            "GP covariance is not positive definite after jitter escalation");

    const Theta& t = found[best].first;
    const Profile pr = profile(p, t);
    GpSurface s;
    s.box = box;
    s.signal_variance = std::exp(t[0]);
    s.length_scales = {std::exp(t[1]), std::exp(t[2])};
    s.mean = pr.mean;
    s.jitter = pr.jitter;
    s.log_likelihood = -pr.nll;
    s.inputs = p.x;
    s.targets = y;
    s.noise = noise;
    s.weights.assign(pr.weights.data(), pr.weights.data() + pr.weights.size());
    return s;
}

GpSurface fit_gp(const AlphaDesign& design, const GpOptions& options) {
    design.validate();
    return fit_gp(design.box, design.points, design.means, design.variances, options);
}

void GpSurface::save(const std::string& path) const {
    nlohmann::json j;
    j["format"] = "ddmm-gp-surface";
    j["version"] = kFileVersion;
    j["box"] = {box.alpha_lo, box.alpha_hi, box.rho_lo, box.rho_hi};
    j["signal_variance"] = signal_variance;
    j["length_scales"] = length_scales;
    j["mean"] = mean;
    j["jitter"] = jitter;
    j["log_likelihood"] = log_likelihood;
    j["inputs"] = inputs;
    j["targets"] = targets;
    j["noise"] = noise;
    j["weights"] = weights;
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path);
    out << j.dump();
    require(out.good(), ErrorCode::IoError, "write failed for " + path);
}

GpSurface GpSurface::load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path);
    try {
        const auto j = nlohmann::json::parse(in);
        require(j.at("format") == "ddmm-gp-surface" && j.at("version") == kFileVersion, ErrorCode::FormatError,
                path + " is not a version 1 GP surface");
        GpSurface s;
        const auto b = j.at("box").get<std::vector<double>>();
        require(b.size() == 4, ErrorCode::FormatError, "surface box needs four numbers");
        s.box = {b[0], b[1], b[2], b[3]};
        s.signal_variance = j.at("signal_variance").get<double>();
        s.length_scales = j.at("length_scales").get<std::array<double, 2>>();
        s.mean = j.at("mean").get<double>();
        s.jitter = j.at("jitter").get<double>();
        s.log_likelihood = j.at("log_likelihood").get<double>();
        s.inputs = j.at("inputs").get<std::vector<std::array<double, 2>>>();
        s.targets = j.at("targets").get<std::vector<double>>();
        s.noise = j.at("noise").get<std::vector<double>>();
        s.weights = j.at("weights").get<std::vector<double>>();
        require(s.weights.size() == s.inputs.size() && s.length_scales[0] > 0 && s.length_scales[1] > 0,
                ErrorCode::FormatError, path + " is inconsistent");
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::FormatError, path + ": " + e.what());
    }
}

AlphaOptimum optimal_alpha(const GpSurface& surface, const AlphaBox& box, std::size_t alpha_points,
                           std::size_t rho_points) {
    box.validate();
    require(alpha_points >= 2 && rho_points >= 2, ErrorCode::InvalidArgument, "grid needs two points per axis");
    AlphaOptimum out;
    std::size_t best = 0;
    for (std::size_t i = 0; i < alpha_points; ++i) {
        const double a =
            box.alpha_lo + (box.alpha_hi - box.alpha_lo) * static_cast<double>(i) / static_cast<double>(alpha_points - 1);
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < rho_points; ++k) {
            const double r =
                box.rho_lo + (box.rho_hi - box.rho_lo) * static_cast<double>(k) / static_cast<double>(rho_points - 1);
            worst = std::max(worst, surface(a, r));
        }
        out.alpha_axis.push_back(a);
        out.max_over_rho.push_back(worst);
        if (worst < out.max_over_rho[best]) best = i;
    }
    out.alpha = out.alpha_axis[best];
    out.worst_case = out.max_over_rho[best];
    return out;
}

double calibrate_sample_seconds(const ExpectedDiscrepancyGrid& grid, const CiSource& ci, const AlphaBox& box,
                                std::size_t samples, std::uint64_t seed) {
    require(samples >= 1, ErrorCode::InvalidArgument, "need at least one calibration sample");
    const auto pts = latin_hypercube(samples, seed);
    volatile double sink = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < samples; ++i) {
        const double a = box.alpha_lo + pts[i][0] * (box.alpha_hi - box.alpha_lo);
        const double r = box.rho_lo + pts[i][1] * (box.rho_hi - box.rho_lo);
        sink = sink + sample_delta(a, r, grid.n_pilot(), grid, ci, substream_seed(seed, i));
    }
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    return took.count() / static_cast<double>(samples);
}

std::vector<std::pair<std::size_t, int>> pareto_front(double time_budget, double seconds_per_sample,
                                                      std::size_t d_max, int r_max, std::size_t count) {
    require(time_budget > 0.0 && seconds_per_sample > 0.0, ErrorCode::InvalidArgument,
            "time budget and sample time must be positive");
    require(d_max >= 10 && r_max >= 2 && count >= 1, ErrorCode::InvalidArgument, "front limits are too small");
    const double samples = time_budget / seconds_per_sample;
    // D R = samples with 10 <= D <= d_max and 2 <= R <= r_max.
    const double d_lo = std::max(10.0, samples / r_max);
    const double d_hi = std::min(static_cast<double>(d_max), samples / 2.0);
    std::vector<std::pair<std::size_t, int>> front;
    if (d_lo > d_hi) return front;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        const auto d = static_cast<std::size_t>(std::llround(std::exp(std::log(d_lo) + t * std::log(d_hi / d_lo))));
        const int r = std::clamp(static_cast<int>(std::llround(samples / static_cast<double>(d))), 2, r_max);
        if (d < 10 || d > d_max) continue;
        if (front.empty() || front.back().first != d) front.emplace_back(d, r);
    }
    return front;
}

std::vector<RiskSample> pareto_risk_samples(const AlphaDesign& reference,
                                            const std::vector<std::pair<std::size_t, int>>& front,
                                            std::size_t resamples, const GpOptions& gp, std::uint64_t seed,
                                            double* alpha_reference) {
    reference.validate();
    require(resamples >= 2, ErrorCode::InvalidArgument, "need at least two resamples");
    const double alpha_ref = optimal_alpha(fit_gp(reference, gp), reference.box).alpha;
    if (alpha_reference) *alpha_reference = alpha_ref;
    std::vector<RiskSample> out;
    for (std::size_t f = 0; f < front.size(); ++f) {
        const auto [d, r] = front[f];
        require(d <= reference.points.size() && r <= reference.repetitions, ErrorCode::InvalidArgument,
                "front setting exceeds the reference design");
        std::vector<double> sq(resamples);
        GpOptions inner = gp;
        inner.threads = 1;
        parallel_for(resamples, gp.threads, [&](std::size_t s) {
            std::mt19937_64 rng = make_stream(substream_seed(seed, f), s);
            std::vector<std::size_t> pi(reference.points.size()), ri(static_cast<std::size_t>(reference.repetitions));
            std::iota(pi.begin(), pi.end(), 0);
            std::iota(ri.begin(), ri.end(), 0);
            std::shuffle(pi.begin(), pi.end(), rng);
            std::shuffle(ri.begin(), ri.end(), rng);
            pi.resize(d);
            ri.resize(static_cast<std::size_t>(r));
            inner.seed = substream_seed(gp.seed, s);
            const double a = optimal_alpha(fit_gp(reference.subset(pi, ri), inner), reference.box).alpha;
            sq[s] = (a - alpha_ref) * (a - alpha_ref);
        });
        const double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(resamples);
        double ss = 0.0;
        for (double v : sq) ss += (v - mean) * (v - mean);
        const double se = std::sqrt(ss / static_cast<double>(resamples - 1) / static_cast<double>(resamples));
        out.push_back({d, r, mean, se});
    }
    return out;
}

double ParetoRiskModel::squared_bias(double repetitions) const { return (b1 / repetitions) * (b1 / repetitions); }

double ParetoRiskModel::variance(double design_points, double repetitions) const {
    return c1 / design_points + c2 / (design_points * repetitions);
}

double ParetoRiskModel::operator()(double design_points, double repetitions) const {
    return squared_bias(repetitions) + variance(design_points, repetitions);
}

ParetoRiskModel pareto_risk_fit(const std::vector<RiskSample>& samples) {
    require(samples.size() >= 5, ErrorCode::InvalidArgument, "at least 5 front samples are needed");
    double min_se = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        require(s.design_points >= 1 && s.repetitions >= 1 && std::isfinite(s.risk) && s.risk >= 0.0 &&
                    std::isfinite(s.std_error) && s.std_error >= 0.0,
                ErrorCode::InvalidArgument, "invalid front sample");
        if (s.std_error > 0.0) min_se = std::min(min_se, s.std_error);
    }
    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        const double d = static_cast<double>(s.design_points), r = s.repetitions;
        // Zero standard errors take the smallest positive one; all zero means unit weights.
        const double w = std::isfinite(min_se) ? 1.0 / (s.std_error > 0.0 ? s.std_error : min_se) : 1.0;
        a.row(i) << w / (r * r), w / d, w / (d * r);
        b[i] = w * s.risk;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> full(a);
    require(full.rank() == 3, ErrorCode::RiskFitFailure,
            "front samples do not separate bias, design and repetition terms");

    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best = Eigen::Vector3d::Zero();
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<int> free;
        for (int c = 0; c < 3; ++c)
            if (mask & (1 << c)) free.push_back(c);
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        if (!free.empty()) {
            Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(free.size()));
            for (std::size_t c = 0; c < free.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(free[c]);
            const Eigen::VectorXd xs = sub.colPivHouseholderQr().solve(b);
            for (std::size_t c = 0; c < free.size(); ++c) x[free[c]] = xs[static_cast<Eigen::Index>(c)];
        }
        if ((x.array() < 0.0).any()) continue;
        const double obj = (a * x - b).squaredNorm();
        if (obj < best_obj) {
            best_obj = obj;
            best = x;
        }
    }
    ParetoRiskModel m;
    m.b1 = std::sqrt(best[0]);
    m.c1 = best[1];
    m.c2 = best[2];
    for (const auto& s : samples) m.front.emplace_back(s.design_points, s.repetitions);
    return m;
}

}  // namespace ddmm
