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

#include "ddmm/evaluation.hpp"

#include "ddmm/error.hpp"
#include "ddmm/log.hpp"
#include "ddmm/parallel.hpp"
#include "ddmm/sampling.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace ddmm {

namespace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double variance_of(const double* y, std::size_t n) {
    if (n < 2) return 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += y[i];
    m /= static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (y[i] - m) * (y[i] - m);
    return s / static_cast<double>(n - 1);
}

// Mean over points of the variance of y among each point's k nearest
// neighbours (itself included) along one coordinate.
double knn_local_variance_1d(const std::vector<double>& u, const std::vector<double>& y, std::size_t k) {
    const std::size_t n = u.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
    std::vector<double> buf(k);
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t lo = p, hi = p;  // inclusive window in sorted order
        const double c = u[order[p]];
        while (hi - lo + 1 < k) {
            if (lo == 0) {
                ++hi;
            } else if (hi + 1 == n) {
                --lo;
            } else if (c - u[order[lo - 1]] <= u[order[hi + 1]] - c) {
                --lo;
            } else {
                ++hi;
            }
        }
        for (std::size_t i = lo; i <= hi; ++i) buf[i - lo] = y[order[i]];
        total += variance_of(buf.data(), k);
    }
    return total / static_cast<double>(n);
}

double knn_local_variance_2d(const std::vector<double>& u, const std::vector<double>& v, const std::vector<double>& y,
                             std::size_t k) {
    using Point = bg::model::point<double, 2, bg::cs::cartesian>;
    using Value = std::pair<Point, std::size_t>;
    std::vector<Value> values;
    values.reserve(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) values.emplace_back(Point(u[i], v[i]), i);
    const bgi::rtree<Value, bgi::quadratic<16>> tree(values.begin(), values.end());
    std::vector<Value> found;
    std::vector<double> buf;
    double total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        found.clear();
        tree.query(bgi::nearest(Point(u[i], v[i]), static_cast<unsigned>(k)), std::back_inserter(found));
        buf.clear();
        for (const auto& f : found) buf.push_back(y[f.second]);
        total += variance_of(buf.data(), buf.size());
    }
    return total / static_cast<double>(u.size());
}

std::vector<double> standardised(const std::vector<std::array<double, 3>>& x, int d) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i][static_cast<std::size_t>(d)];
    const double m = mean_of(out);
    const double s = std::sqrt(variance_of(out.data(), out.size()));
    for (double& v : out) v = s > 0.0 ? (v - m) / s : 0.0;
    return out;
}

double delta_unit(double rho_used, double rho_true, const ModelEnsemble& ensemble) {
    return discrepancy(CovarianceSpec::unit_bivariate(rho_used), CovarianceSpec::unit_bivariate(rho_true), ensemble);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

MeanSe MeanSe::of(const std::vector<double>& values) {
    MeanSe r;
    r.count = values.size();
    r.mean = mean_of(values);
    r.se = values.size() > 1 ? std::sqrt(variance_of(values.data(), values.size()) / static_cast<double>(values.size()))
                             : 0.0;
    return r;
}

double clamp_correlation(double r) { return std::max(r, kRhoClampEps); }

double EddCurve::mean_edd() const { return mean_of(edd); }

double EddCurve::mean_pct_edd() const {
    double s = 0.0;
    std::size_t n = 0;
    for (double v : pct_edd)
        if (std::isfinite(v)) {
            s += v;
            ++n;
        }
    return n == 0 ? std::nan("") : s / static_cast<double>(n);
}

double EddCurve::max_edd() const { return edd.empty() ? std::nan("") : *std::max_element(edd.begin(), edd.end()); }

std::vector<double> benchmark_rho_axis(std::size_t n, double lo, double hi) {
    require(n >= 1 && lo > 0.0 && hi < 1.0 && lo < hi, ErrorCode::InvalidArgument, "invalid rho axis");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    return out;
}

EddCurve edd_curve(const Adjuster& h, int n_pilot, const ModelEnsemble& ensemble, const std::vector<double>& rho_axis,
                   int quadrature_order) {
    ensemble.validate();
    require(ensemble.size() == 2, ErrorCode::InvalidArgument, "EDD curves need exactly two models");
    const QuadratureRule rule = correlation_rule(quadrature_order);
    std::vector<double> adjusted(rule.nodes.size()), raw(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        adjusted[i] = h(rule.nodes[i]);
        raw[i] = clamp_correlation(rule.nodes[i]);
        require(adjusted[i] > -1.0 && adjusted[i] < 1.0, ErrorCode::InvalidArgument,
                "adjusted correlation outside (-1, 1)");
    }
    EddCurve c;
    c.rho_axis = rho_axis;
    c.n_pilot = n_pilot;
    for (double rho : rho_axis) {
        require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidArgument, "rho axis must lie in (0, 1)");
        const auto w = density_weights({rho, n_pilot}, rule);
        double diff = 0.0, base = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] == 0.0) continue;
            const double du = delta_unit(raw[i], rho, ensemble);
            const double da = adjusted[i] == raw[i] ? du : delta_unit(adjusted[i], rho, ensemble);
            diff += w[i] * (da - du);
            base += w[i] * du;
        }
        require(std::isfinite(diff) && std::isfinite(base), ErrorCode::NonFiniteIntegrand,
                "EDD integrand is not finite at rho = " + std::to_string(rho));
        c.edd.push_back(diff);
        c.unadjusted.push_back(base);
        c.pct_edd.push_back(base > 1e-12 ? 100.0 * diff / base : std::nan(""));
    }
    return c;
}

EddCurve edd_curve_gaussian(double alpha, int n_pilot, const ModelEnsemble& ensemble,
                            const ExpectedDiscrepancyGrid& grid, const CiSource& ci,
                            const std::vector<double>& rho_axis, int quadrature_order) {
    require(grid.n_pilot() == n_pilot && ci.n_pilot() == n_pilot, ErrorCode::InvalidArgument,
            "grid and confidence intervals must be built for N = " + std::to_string(n_pilot));
    auto c = edd_curve([&](double r) { return solve_ddmm(r, alpha, grid, ci).adjusted_rho; }, n_pilot, ensemble,
                       rho_axis, quadrature_order);
    c.alpha = alpha;
    return c;
}

std::vector<PilotSizeRow> edd_vs_pilot_size(double alpha, const std::vector<int>& pilot_sizes,
                                            const ModelEnsemble& ensemble, const std::vector<double>& rho_axis,
                                            const GridFactory& factory) {
    std::vector<PilotSizeRow> rows;
    for (int n : pilot_sizes) {
        auto [grid, surrogate] = factory(n);
        const CiSource ci(surrogate);
        PilotSizeRow row;
        row.n_pilot = n;
        row.curve = edd_curve_gaussian(alpha, n, ensemble, grid, ci, rho_axis);
        row.mean_edd = row.curve.mean_edd();
        row.mean_pct_edd = row.curve.mean_pct_edd();
        row.max_edd = row.curve.max_edd();
        rows.push_back(std::move(row));
    }
    return rows;
}

void PairedOutputs::validate() const {
    require(hifi.size() == lofi.size(), ErrorCode::DegenerateData, "hifi and lofi columns differ in length");
    require(hifi.size() >= 10, ErrorCode::DegenerateData, "at least 10 paired outputs are needed");
    for (const auto* col : {&hifi, &lofi}) {
        for (double v : *col) require(std::isfinite(v), ErrorCode::DegenerateData, "outputs must be finite");
        const auto [mn, mx] = std::minmax_element(col->begin(), col->end());
        require(*mn < *mx, ErrorCode::DegenerateData, "an output column is constant");
    }
}

std::vector<PairedOutputs> read_paired_outputs(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::FormatError, path + " is empty");
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) -> long {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<long>(it - header.begin());
    };
    const long hi = column("hifi"), lo = column("lofi"), qoi = column("qoi");
    require(column("input_id") >= 0 && hi >= 0 && lo >= 0, ErrorCode::FormatError,
            path + ": header must contain input_id, hifi and lofi");
    std::map<std::string, PairedOutputs> groups;
    std::vector<std::string> order;
    const std::string default_name = std::filesystem::path(path).stem().string();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = split_csv_line(line);
        require(f.size() == header.size(), ErrorCode::FormatError,
                path + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields");
        double h = 0.0, l = 0.0;
        try {
            std::size_t used = 0;
            h = std::stod(f[static_cast<std::size_t>(hi)], &used);
            require(used == f[static_cast<std::size_t>(hi)].size(), ErrorCode::FormatError, "trailing characters");
            l = std::stod(f[static_cast<std::size_t>(lo)], &used);
            require(used == f[static_cast<std::size_t>(lo)].size(), ErrorCode::FormatError, "trailing characters");
        } catch (const std::logic_error&) {
            fail(ErrorCode::FormatError, path + ":" + std::to_string(line_no) + ": not a number");
        } catch (const Error&) {
            fail(ErrorCode::FormatError, path + ":" + std::to_string(line_no) + ": not a number");
        }
        const std::string name = qoi >= 0 ? f[static_cast<std::size_t>(qoi)] : default_name;
        auto [it, inserted] = groups.try_emplace(name);
        if (inserted) {
            order.push_back(name);
            it->second.qoi_name = name;
        }
        it->second.hifi.push_back(h);
        it->second.lofi.push_back(l);
    }
    require(!order.empty(), ErrorCode::FormatError, path + " has no data rows");
    std::vector<PairedOutputs> out;
    for (const auto& name : order) out.push_back(std::move(groups[name]));
    return out;
}

EmpiricalSummary empirical_eval(const PairedOutputs& data, const Adjuster& h, int n_pilot, std::size_t n_trials,
                                std::uint64_t seed, PilotVariances variances) {
    data.validate();
    data.ensemble.validate();
    require(data.ensemble.size() == 2, ErrorCode::InvalidArgument, "paired outputs need two model costs");
    require(n_pilot >= 3 && static_cast<std::size_t>(n_pilot) <= data.hifi.size(), ErrorCode::InvalidArgument,
            "pilot size must be between 3 and the number of rows");
    require(n_trials >= 1, ErrorCode::InvalidArgument, "at least one trial is needed");

    const SampleMoments truth = sample_moments(data.hifi, data.lofi);
    const CovarianceSpec truth_cov = CovarianceSpec::from_correlation({truth.sigma0, truth.sigma1}, {truth.rho});
    const ModelEnsemble& ens = data.ensemble;

    EmpiricalSummary s;
    s.truth_sigma0 = truth.sigma0;
    s.truth_sigma1 = truth.sigma1;
    s.truth_rho = truth.rho;
    s.trials = n_trials;
    s.hifi_mc_variance = hifi_mc_variance(truth_cov, ens);
    s.optimal_variance = estimator_variance(optimal_hyperparams(truth_cov, ens), truth_cov, ens);

    struct Trial {
        double mse_u, mse_a, vrr_u, vrr_a, d_u, d_a;
        std::size_t retries;
        bool clamped;
    };
    std::vector<Trial> trials(n_trials);
    const std::size_t rows = data.hifi.size();
    for (std::size_t t = 0; t < n_trials; ++t) {
        std::mt19937_64 rng = make_stream(seed, t);
        std::vector<std::size_t> idx(rows);
        std::iota(idx.begin(), idx.end(), 0);
        SampleMoments m;
        std::size_t retries = 0;
        for (;;) {
            // Partial Fisher-Yates: the first n_pilot entries are the subsample.
            for (std::size_t i = 0; i < static_cast<std::size_t>(n_pilot); ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, rows - 1);
                std::swap(idx[i], idx[pick(rng)]);
            }
            std::vector<double> x(static_cast<std::size_t>(n_pilot)), y(static_cast<std::size_t>(n_pilot));
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = data.hifi[idx[i]];
                y[i] = data.lofi[idx[i]];
            }
            try {
                m = sample_moments(x, y);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ZeroVariance) throw;
                require(++retries <= 10, ErrorCode::DegenerateData,
                        "10 consecutive subsamples had a constant column");
            }
        }
        const double edge = 1.0 - 1e-12;
        const double r = std::clamp(m.rho, -edge, edge);
        const double rho_u = clamp_correlation(r);
        const double rho_a = h(r);
        if (variances == PilotVariances::Truth) {
            m.sigma0 = truth.sigma0;
            m.sigma1 = truth.sigma1;
        }
        const auto spec_u = CovarianceSpec::from_correlation({m.sigma0, m.sigma1}, {rho_u});
        const auto spec_a = CovarianceSpec::from_correlation({m.sigma0, m.sigma1}, {rho_a});
        const auto p_u = optimal_hyperparams(spec_u, ens);
        const auto p_a = optimal_hyperparams(spec_a, ens);
        Trial& tr = trials[t];
        tr.mse_u = estimator_variance(p_u, truth_cov, ens);
        tr.mse_a = estimator_variance(p_a, truth_cov, ens);
        tr.vrr_u = variance_reduction_ratio(p_u, truth_cov, ens);
        tr.vrr_a = variance_reduction_ratio(p_a, truth_cov, ens);
        tr.d_u = std::log(tr.mse_u / s.optimal_variance);
        tr.d_a = std::log(tr.mse_a / s.optimal_variance);
        tr.retries = retries;
        tr.clamped = r < kRhoClampEps;
    }

    std::vector<double> vu, va, du, da, diff;
    for (const Trial& tr : trials) {
        s.trial_mse_unadjusted.push_back(tr.mse_u);
        s.trial_mse_adjusted.push_back(tr.mse_a);
        vu.push_back(tr.vrr_u);
        va.push_back(tr.vrr_a);
        du.push_back(tr.d_u);
        da.push_back(tr.d_a);
        diff.push_back(tr.d_a - tr.d_u);
        s.resampled += tr.retries;
        s.clamped += tr.clamped;
    }
    s.mse_unadjusted = MeanSe::of(s.trial_mse_unadjusted);
    s.mse_adjusted = MeanSe::of(s.trial_mse_adjusted);
    s.vrr_unadjusted = MeanSe::of(vu);
    s.vrr_adjusted = MeanSe::of(va);
    s.discrepancy_unadjusted = MeanSe::of(du);
    s.discrepancy_adjusted = MeanSe::of(da);
    s.edd = MeanSe::of(diff);
    s.pct_edd = s.discrepancy_unadjusted.mean > 1e-12 ? 100.0 * s.edd.mean / s.discrepancy_unadjusted.mean
                                                      : std::nan("");
    s.mse_pct_change = 100.0 * (s.mse_adjusted.mean - s.mse_unadjusted.mean) / s.mse_unadjusted.mean;
    return s;
}

EmpiricalSummary empirical_eval(const PairedOutputs& data, double alpha, const ExpectedDiscrepancyGrid& grid,
                                const CiSource& ci, std::size_t n_trials, std::uint64_t seed,
                                PilotVariances variances) {
    return empirical_eval(
        data, [&](double r) { return solve_ddmm(r, alpha, grid, ci).adjusted_rho; }, grid.n_pilot(), n_trials, seed,
        variances);
}

std::size_t shapley_neighbours(std::size_t n) {
    return std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(0.02 * static_cast<double>(n))));
}

ShapleyResult shapley_effects(const std::vector<std::array<double, 3>>& x, const std::vector<double>& y,
                              std::size_t k) {
    require(x.size() == y.size() && x.size() >= 10, ErrorCode::InvalidArgument,
            "Shapley estimation needs at least 10 paired samples");
    if (k == 0) k = shapley_neighbours(x.size());
    require(k >= 2 && k <= x.size(), ErrorCode::InvalidArgument, "neighbour count must be in [2, n]");
    for (double v : y) require(std::isfinite(v), ErrorCode::NonFiniteIntegrand, "Shapley output is not finite");
    const double var_y = variance_of(y.data(), y.size());
    const double mean_abs = std::abs(mean_of(y));
    require(var_y > 1e-14 * std::max(1.0, mean_abs * mean_abs), ErrorCode::ZeroOutputVariance,
            "output variance is zero; Shapley effects are undefined");

    const std::array<std::vector<double>, 3> z{standardised(x, 0), standardised(x, 1), standardised(x, 2)};
    // explained[S] = Var(E[Y | x_S]) for subsets encoded as bit masks.
    std::array<double, 8> explained{};
    explained[0] = 0.0;
    explained[7] = var_y;
    for (int d = 0; d < 3; ++d)
        explained[1 << d] = var_y - knn_local_variance_1d(z[static_cast<std::size_t>(d)], y, k);
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            explained[(1 << a) | (1 << b)] =
                var_y - knn_local_variance_2d(z[static_cast<std::size_t>(a)], z[static_cast<std::size_t>(b)], y, k);

    constexpr double weight[4] = {1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0, 0.0};  // |S|! (D-|S|-1)! / D!
    ShapleyResult r;
    r.total_variance = var_y;
    for (int d = 0; d < 3; ++d) {
        double phi = 0.0;
        for (int mask = 0; mask < 8; ++mask) {
            if (mask & (1 << d)) continue;
            const int size = __builtin_popcount(static_cast<unsigned>(mask));
            phi += weight[size] * (explained[mask | (1 << d)] - explained[mask]);
        }
        r.phi[static_cast<std::size_t>(d)] = phi / var_y;
    }
    return r;
}

std::vector<ShapleyResult> shapley_gsa(const std::vector<double>& rho_axis, int n_pilot,
                                       const ModelEnsemble& ensemble, std::size_t mc_samples, std::uint64_t seed,
                                       std::size_t k, unsigned threads) {
    ensemble.validate();
    require(ensemble.size() == 2, ErrorCode::InvalidArgument, "Shapley analysis uses two models");
    require(mc_samples >= 10000, ErrorCode::InvalidArgument, "at least 1e4 Monte Carlo samples are needed");
    std::vector<ShapleyResult> out(rho_axis.size());
    parallel_for(rho_axis.size(), threads, [&](std::size_t j) {
        const double rho = rho_axis[j];
        const CovarianceSpec truth = CovarianceSpec::unit_bivariate(rho);
        const auto draws = sample_wishart(truth, n_pilot, mc_samples, substream_seed(seed, j));
        std::vector<std::array<double, 3>> x(draws.size());
        std::vector<double> y(draws.size());
        for (std::size_t i = 0; i < draws.size(); ++i) {
            const auto& s = draws[i];
            const double s0 = std::sqrt(s(0, 0)), s1 = std::sqrt(s(1, 1));
            const double r = std::clamp(s(0, 1) / (s0 * s1), -1.0 + 1e-15, 1.0 - 1e-15);
            x[i] = {r, s0, s1};
            y[i] = discrepancy(CovarianceSpec::from_correlation({s0, s1}, {r}), truth, ensemble);
        }
        out[j] = shapley_effects(x, y, k);
        out[j].rho = rho;
    });
    return out;
}

std::vector<RobustnessScenario> ordered_scenarios(std::size_t count, std::size_t models, double rho01_lo,
                                                  double rho01_hi, double degradation, double cost_factor,
                                                  double budget) {
    require(count >= 1 && models >= 2, ErrorCode::InvalidArgument, "need at least one scenario of two models");
    require(rho01_lo > 0.0 && rho01_hi < 1.0 && rho01_lo <= rho01_hi, ErrorCode::InvalidArgument,
            "rho01 range must lie in (0, 1)");
    require(degradation > 0.0 && degradation < 1.0 && cost_factor > 1.0, ErrorCode::InvalidArgument,
            "degradation must lie in (0, 1) and the cost factor exceed 1");
    std::vector<RobustnessScenario> out;
    const auto m = static_cast<Eigen::Index>(models);
    for (std::size_t s = 0; s < count; ++s) {
        const double rho01 =
            count == 1 ? rho01_lo : rho01_lo + (rho01_hi - rho01_lo) * static_cast<double>(s) / static_cast<double>(count - 1);
        // Markov chain 0 -> 1 -> 2 -> ...: positive definite by construction.
        Eigen::MatrixXd c = Eigen::MatrixXd::Identity(m, m);
        for (Eigen::Index i = 1; i < m; ++i) {
            c(0, i) = c(i, 0) = rho01 * std::pow(degradation, static_cast<double>(i - 1));
            for (Eigen::Index j = i + 1; j < m; ++j) c(i, j) = c(j, i) = std::pow(degradation, static_cast<double>(j - i));
        }
        RobustnessScenario sc;
        sc.cov = CovarianceSpec::from_matrix(c);
        for (std::size_t i = 0; i < models; ++i) sc.ensemble.costs.push_back(std::pow(cost_factor, -static_cast<double>(i)));
        sc.ensemble.budget = budget;
        out.push_back(std::move(sc));
    }
    return out;
}

std::vector<RobustnessRow> robustness_mfmc(const std::vector<int>& pilot_sizes,
                                           const std::vector<RobustnessScenario>& scenarios, std::size_t n_trials,
                                           std::uint64_t seed) {
    require(!scenarios.empty() && n_trials >= 1, ErrorCode::InvalidArgument, "need scenarios and trials");
    for (const auto& sc : scenarios)
        for (int n : pilot_sizes)
            require(n > static_cast<int>(sc.cov.size()), ErrorCode::InvalidArgument,
                    "pilot size must exceed the number of models for a nonsingular sample covariance");
    std::vector<RobustnessRow> rows;
    for (std::size_t ni = 0; ni < pilot_sizes.size(); ++ni) {
        std::vector<double> var, disc, ratio;
        for (std::size_t s = 0; s < scenarios.size(); ++s) {
            const auto& sc = scenarios[s];
            const auto draws =
                sample_wishart(sc.cov, pilot_sizes[ni], n_trials, substream_seed(substream_seed(seed, s), ni));
            for (const auto& w : draws) {
                const CovarianceSpec sample = CovarianceSpec::from_matrix(w);
                const auto p = optimal_hyperparams(sample, sc.ensemble);
                var.push_back(estimator_variance(p, sc.cov, sc.ensemble));
                disc.push_back(discrepancy(sample, sc.cov, sc.ensemble));
                ratio.push_back(projected_vs_true_ratio(sample, sc.cov, sc.ensemble));
            }
        }
        rows.push_back({pilot_sizes[ni], MeanSe::of(var), MeanSe::of(disc), MeanSe::of(ratio)});
    }
    return rows;
}

}  // namespace ddmm
