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

#include "ddmm/adjustment.hpp"

#include "ddmm/binary_io.hpp"
#include "ddmm/log.hpp"
#include "ddmm/parallel.hpp"
#include "ddmm/spline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace ddmm {

namespace {

constexpr char kGridMagic[9] = "DDMMGRD1";
constexpr std::uint32_t kGridVersion = 1;

BifidelityModel bifidelity(const ModelEnsemble& ensemble) {
    require(ensemble.costs.size() == 2, ErrorCode::InvalidArgument,
            "the correlation adjustment needs exactly two models");
    return BifidelityModel(ensemble.costs[0], ensemble.costs[1]);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

void require_increasing(const std::vector<double>& axis, const char* name) {
    require(!axis.empty(), ErrorCode::InvalidArgument, std::string(name) + " axis is empty");
    for (std::size_t i = 0; i < axis.size(); ++i) {
        require(std::isfinite(axis[i]), ErrorCode::InvalidArgument, std::string(name) + " axis is not finite");
        if (i > 0)
            require(axis[i] > axis[i - 1], ErrorCode::InvalidArgument,
                    std::string(name) + " axis is not strictly increasing");
    }
}

// Per rho column: density-times-quadrature weights and the optimal variance.
struct ColumnTable {
    std::vector<double> nodes;
    std::vector<std::vector<double>> weights;
    std::vector<std::pair<std::size_t, std::size_t>> support;  // nodes with non-negligible weight
    std::vector<double> optimal;
    std::vector<double> rho;
};

ColumnTable column_table(const std::vector<double>& rho_axis, int n_pilot, const BifidelityModel& model,
                         const QuadratureRule& rule) {
    ColumnTable t;
    t.nodes = rule.nodes;
    t.rho = rho_axis;
    for (double rho : rho_axis) {
        t.weights.push_back(density_weights({rho, n_pilot}, rule));
        // Drop the far tails: |log ratio| stays below ~100 on the whole box,
        // so weights under 1e-20 of the total change nothing in double precision.
        const std::vector<double>& w = t.weights.back();
        double total = 0.0;
        for (double v : w) total += v;
        std::size_t lo = 0, hi = w.size();
        while (lo < hi && w[lo] < 1e-20 * total) ++lo;
        while (hi > lo && w[hi - 1] < 1e-20 * total) --hi;
        t.support.emplace_back(lo, hi);
        t.optimal.push_back(model.optimal_variance(rho));
    }
    return t;
}

// M(theta, rho_k) for every column; `lines` is scratch space.
void discrepancy_row(const AdjustmentParams& theta, const ColumnTable& table, const BifidelityModel& model,
                     std::vector<std::pair<double, double>>& lines, double* out) {
    lines.resize(table.nodes.size());
    for (std::size_t i = 0; i < table.nodes.size(); ++i)
        lines[i] = model.variance_line(sigmoid_adjust(theta, table.nodes[i]));
    for (std::size_t k = 0; k < table.rho.size(); ++k) {
        const double rho = table.rho[k];
        const double vstar = table.optimal[k];
        const std::vector<double>& w = table.weights[k];
        double total = 0.0;
        for (std::size_t i = table.support[k].first; i < table.support[k].second; ++i) {
            total += w[i] * std::log((lines[i].first - lines[i].second * rho) / vstar);
        }
        require(std::isfinite(total), ErrorCode::NonFiniteIntegrand,
                "expected discrepancy is not finite at theta = (" + std::to_string(theta.theta0) + ", " +
                    std::to_string(theta.theta1) + "), rho = " + std::to_string(rho));
        out[k] = total;
    }
}

// Natural cubic spline through each column of `factor` (rows on `from`),
// evaluated on `to`.
Eigen::MatrixXd upsample_factor(const Eigen::MatrixXd& factor, const std::vector<double>& from,
                                const std::vector<double>& to) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(to.size()), factor.cols());
    for (Eigen::Index r = 0; r < factor.cols(); ++r) {
        std::vector<double> y(from.size());
        for (std::size_t i = 0; i < from.size(); ++i) y[i] = factor(static_cast<Eigen::Index>(i), r);
        if (from.size() < 3) {
            // Too few knots for a cubic: piecewise-linear (or constant).
            for (std::size_t i = 0; i < to.size(); ++i) {
                double v = y[0];
                if (from.size() == 2) v = y[0] + (y[1] - y[0]) * (to[i] - from[0]) / (from[1] - from[0]);
                out(static_cast<Eigen::Index>(i), r) = v;
            }
            continue;
        }
        const CubicSpline spline(from, y);
        for (std::size_t i = 0; i < to.size(); ++i) out(static_cast<Eigen::Index>(i), r) = spline(to[i]);
    }
    return out;
}

std::vector<double> arcsine(std::vector<double> v) {
    for (double& x : v) x = std::asin(x);
    return v;
}

// The rho factors are splined in phi = asin(rho): M carries sqrt(1 - rho^2)
// terms that are smooth in phi but steep in rho near 1.
Tensor3 recompose(const CpModel& coarse, const GridAxes& coarse_axes, const GridAxes& fine_axes) {
    const CpModel fine{upsample_factor(coarse.a, coarse_axes.theta0, fine_axes.theta0),
                       upsample_factor(coarse.b, coarse_axes.theta1, fine_axes.theta1),
                       upsample_factor(coarse.c, arcsine(coarse_axes.rho), arcsine(fine_axes.rho))};
    Tensor3 t = cp_reconstruct(fine);
    for (double& v : t.values) v = std::max(v, 0.0);
    return t;
}

void put_matrix(BinaryWriter& out, const Eigen::MatrixXd& m) {
    out.put(static_cast<std::int64_t>(m.rows()));
    out.put(static_cast<std::int64_t>(m.cols()));
    out.put_vector(std::vector<double>(m.data(), m.data() + m.size()));
}

Eigen::MatrixXd get_matrix(BinaryReader& in) {
    const auto rows = in.get<std::int64_t>();
    const auto cols = in.get<std::int64_t>();
    const auto data = in.get_vector<double>();
    require(rows >= 0 && cols >= 0 && static_cast<std::size_t>(rows * cols) == data.size(), ErrorCode::FormatError,
            "grid file has an inconsistent factor matrix");
    return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

void put_axes(BinaryWriter& out, const GridAxes& axes) {
    out.put_vector(axes.theta0);
    out.put_vector(axes.theta1);
    out.put_vector(axes.rho);
}

GridAxes get_axes(BinaryReader& in) {
    GridAxes axes;
    axes.theta0 = in.get_vector<double>();
    axes.theta1 = in.get_vector<double>();
    axes.rho = in.get_vector<double>();
    return axes;
}

std::atomic<bool> snap_reported{false};

}  // namespace

void AdjustmentParams::validate() const {
    require(std::isfinite(theta0) && std::isfinite(theta1), ErrorCode::InvalidArgument,
            "adjustment parameters must be finite");
    require(theta0 >= 0.0, ErrorCode::InvalidArgument, "theta0 must be nonnegative");
}

double sigmoid_adjust(const AdjustmentParams& theta, double r) {
    const double x = theta.theta0 * r + theta.theta1;
    double g;
    if (x >= 0.0) {
        g = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        g = e / (1.0 + e);
    }
    // Saturated exponents would round to exactly 0 or 1.
    return std::clamp(g, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

void ThetaBox::validate() const {
    require(std::isfinite(theta0_lo) && std::isfinite(theta0_hi) && std::isfinite(theta1_lo) &&
                std::isfinite(theta1_hi),
            ErrorCode::InvalidArgument, "theta box must be finite");
    require(theta0_lo >= 0.0, ErrorCode::InvalidArgument, "theta0 lower bound must be nonnegative");
    require(theta0_hi > theta0_lo && theta1_hi > theta1_lo, ErrorCode::InvalidArgument, "theta box is empty");
}

double expected_discrepancy_at(const AdjustmentParams& theta, double rho, int n_pilot, const ModelEnsemble& ensemble,
                               const QuadratureRule& rule) {
    theta.validate();
    require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidArgument, "rho must lie in (0, 1)");
    const BifidelityModel model = bifidelity(ensemble);
    const ColumnTable table = column_table({rho}, n_pilot, model, rule);
    std::vector<std::pair<double, double>> lines;
    double out = 0.0;
    discrepancy_row(theta, table, model, lines, &out);
    return out;
}

double unadjusted_expected_discrepancy(double rho, int n_pilot, const ModelEnsemble& ensemble,
                                       const QuadratureRule& rule) {
    require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidArgument, "rho must lie in (0, 1)");
    const BifidelityModel model = bifidelity(ensemble);
    return expect_over_sample_corr([&](double r) { return model.discrepancy(std::max(r, kRhoClampEps), rho); },
                                   {rho, n_pilot}, rule);
}

GridAxes GridAxes::uniform(const ThetaBox& box, double rho_lo, double rho_hi, std::array<std::size_t, 3> dims) {
    box.validate();
    require(rho_lo > 0.0 && rho_hi < 1.0 && rho_lo < rho_hi, ErrorCode::InvalidArgument,
            "rho range must be an interval inside (0, 1)");
    require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, ErrorCode::InvalidArgument, "grid dimensions must be positive");
    return {linspace(box.theta0_lo, box.theta0_hi, dims[0]), linspace(box.theta1_lo, box.theta1_hi, dims[1]),
            linspace(rho_lo, rho_hi, dims[2])};
}

void GridAxes::validate() const {
    require_increasing(theta0, "theta0");
    require_increasing(theta1, "theta1");
    require_increasing(rho, "rho");
    require(theta0.front() >= 0.0, ErrorCode::InvalidArgument, "theta0 axis must be nonnegative");
    require(rho.front() > 0.0 && rho.back() < 1.0, ErrorCode::InvalidArgument, "rho axis must lie in (0, 1)");
}

std::uint64_t GridAxes::hash() const {
    std::uint64_t h = fnv1a(theta0);
    h = fnv1a(theta1, h);
    return fnv1a(rho, h);
}

void GridBuildOptions::validate() const {
    box.validate();
    require(rho_lo > 0.0 && rho_hi < 1.0 && rho_lo < rho_hi, ErrorCode::InvalidArgument,
            "rho range must be an interval inside (0, 1)");
    for (int d = 0; d < 3; ++d) {
        require(coarse_dims[d] >= 1, ErrorCode::InvalidArgument, "grid dimensions must be positive");
        require(coarse_dims[d] <= fine_dims[d], ErrorCode::InvalidArgument, "coarse dims must not exceed fine dims");
    }
    require(cp_rank >= 1, ErrorCode::InvalidArgument, "CP rank must be at least 1");
    require(cp_max_iterations >= 1 && cp_tolerance > 0.0, ErrorCode::InvalidArgument, "invalid ALS settings");
    require(quadrature_order >= 2, ErrorCode::InvalidArgument, "quadrature order must be at least 2");
}

std::uint64_t GridBuildOptions::hash() const {
    const std::vector<double> fields{box.theta0_lo,
                                     box.theta0_hi,
                                     box.theta1_lo,
                                     box.theta1_hi,
                                     rho_lo,
                                     rho_hi,
                                     static_cast<double>(coarse_dims[0]),
                                     static_cast<double>(coarse_dims[1]),
                                     static_cast<double>(coarse_dims[2]),
                                     static_cast<double>(fine_dims[0]),
                                     static_cast<double>(fine_dims[1]),
                                     static_cast<double>(fine_dims[2]),
                                     static_cast<double>(cp_rank),
                                     static_cast<double>(cp_max_iterations),
                                     cp_tolerance,
                                     static_cast<double>(seed),
                                     static_cast<double>(quadrature_order),
                                     accept_unconverged_cp ? 1.0 : 0.0};
    return fnv1a(fields);
}

ExpectedDiscrepancyGrid::ExpectedDiscrepancyGrid(GridAxes axes, Tensor3 values, int n_pilot,
                                                 std::pair<double, double> costs)
    : axes_(std::move(axes)), values_(std::move(values)), n_pilot_(n_pilot), costs_(costs) {
    axes_.validate();
    require(values_.dims == axes_.dims() && values_.values.size() == rows() * columns(), ErrorCode::InvalidArgument,
            "grid tensor does not match its axes");
    for (double v : values_.values)
        require(std::isfinite(v) && v >= -1e-9, ErrorCode::InvalidArgument,
                "expected discrepancies must be finite and nonnegative");
    index_blocks();
}

void ExpectedDiscrepancyGrid::index_blocks() {
    const std::size_t nb = (columns() + kBlock - 1) / kBlock;
    block_max_.assign(rows() * nb, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < rows(); ++i) {
        const double* r = row(i);
        for (std::size_t k = 0; k < columns(); ++k) {
            double& m = block_max_[i * nb + k / kBlock];
            m = std::max(m, r[k]);
        }
    }
}

AdjustmentParams ExpectedDiscrepancyGrid::row_theta(std::size_t index) const {
    const std::size_t n1 = axes_.theta1.size();
    return {axes_.theta0[index / n1], axes_.theta1[index % n1]};
}

double ExpectedDiscrepancyGrid::row_max(std::size_t row_index, std::size_t k_lo, std::size_t k_hi,
                                        double stop_at) const {
    const std::size_t nb = (columns() + kBlock - 1) / kBlock;
    const double* r = row(row_index);
    const double* blocks = block_max_.data() + row_index * nb;
    double m = -std::numeric_limits<double>::infinity();
    std::size_t k = k_lo;
    while (k <= k_hi) {
        if (k % kBlock == 0 && k + kBlock - 1 <= k_hi) {
            m = std::max(m, blocks[k / kBlock]);
            k += kBlock;
        } else {
            m = std::max(m, r[k]);
            ++k;
        }
        if (m >= stop_at) break;
    }
    return m;
}

void ExpectedDiscrepancyGrid::save(const std::string& path) const {
    BinaryWriter out(path, kGridMagic, kGridVersion);
    out.put(static_cast<std::int32_t>(n_pilot_));
    out.put(costs_.first);
    out.put(costs_.second);
    out.put(static_cast<std::int32_t>(cp_rank));
    out.put(reconstruction_error);
    out.put(static_cast<std::int32_t>(cp_iterations));
    put_axes(out, axes_);
    if (cp_rank > 0) {
        put_axes(out, coarse_axes);
        put_matrix(out, coarse_model.a);
        put_matrix(out, coarse_model.b);
        put_matrix(out, coarse_model.c);
    } else {
        out.put_vector(values_.values);
    }
    out.finish();
}

ExpectedDiscrepancyGrid ExpectedDiscrepancyGrid::load(const std::string& path) {
    BinaryReader in(path, kGridMagic, kGridVersion);
    const int n_pilot = in.get<std::int32_t>();
    const double c0 = in.get<double>();
    const double c1 = in.get<double>();
    const int rank = in.get<std::int32_t>();
    const double error = in.get<double>();
    const int iterations = in.get<std::int32_t>();
    GridAxes axes = get_axes(in);
    try {
        axes.validate();
    } catch (const Error& e) {
        fail(ErrorCode::FormatError, path + ": " + e.what());
    }
    if (rank > 0) {
        GridAxes coarse = get_axes(in);
        CpModel model{get_matrix(in), get_matrix(in), get_matrix(in)};
        require(model.a.rows() == static_cast<Eigen::Index>(coarse.theta0.size()) &&
                    model.b.rows() == static_cast<Eigen::Index>(coarse.theta1.size()) &&
                    model.c.rows() == static_cast<Eigen::Index>(coarse.rho.size()) && model.a.cols() == rank &&
                    model.b.cols() == rank && model.c.cols() == rank,
                ErrorCode::FormatError, path + " has inconsistent CP factors");
        ExpectedDiscrepancyGrid grid(axes, recompose(model, coarse, axes), n_pilot, {c0, c1});
        grid.cp_rank = rank;
        grid.reconstruction_error = error;
        grid.cp_iterations = iterations;
        grid.coarse_model = std::move(model);
        grid.coarse_axes = std::move(coarse);
        return grid;
    }
    Tensor3 values;
    values.dims = axes.dims();
    values.values = in.get_vector<double>();
    require(values.values.size() == values.dims[0] * values.dims[1] * values.dims[2], ErrorCode::FormatError,
            path + " has inconsistent grid dimensions");
    return ExpectedDiscrepancyGrid(std::move(axes), std::move(values), n_pilot, {c0, c1});
}

ExpectedDiscrepancyGrid brute_force_grid(const GridAxes& axes, int n_pilot, const ModelEnsemble& ensemble,
                                         int quadrature_order, unsigned threads) {
    axes.validate();
    CorrelationDensityParams{0.5, n_pilot}.validate();
    const BifidelityModel model = bifidelity(ensemble);
    const ColumnTable table = column_table(axes.rho, n_pilot, model, correlation_rule(quadrature_order));
    const auto dims = axes.dims();
    Tensor3 values(dims[0], dims[1], dims[2]);
    const std::size_t rows = dims[0] * dims[1];
    parallel_for(rows, threads, [&](std::size_t row) {
        thread_local std::vector<std::pair<double, double>> lines;
        const AdjustmentParams theta{axes.theta0[row / dims[1]], axes.theta1[row % dims[1]]};
        discrepancy_row(theta, table, model, lines, values.values.data() + row * dims[2]);
    });
    return ExpectedDiscrepancyGrid(axes, std::move(values), n_pilot, {model.c0(), model.c1()});
}

ExpectedDiscrepancyGrid build_grid(int n_pilot, const ModelEnsemble& ensemble, const GridBuildOptions& options) {
    options.validate();
    GridAxes coarse_axes = GridAxes::uniform(options.box, options.rho_lo, options.rho_hi, options.coarse_dims);
    if (options.coarse_dims != options.fine_dims) {
        // Coarse rho nodes equally spaced in asin(rho), matching the spline coordinate.
        const auto phi = linspace(std::asin(options.rho_lo), std::asin(options.rho_hi), options.coarse_dims[2]);
        for (std::size_t k = 0; k < phi.size(); ++k) coarse_axes.rho[k] = std::sin(phi[k]);
        coarse_axes.rho.front() = options.rho_lo;
        coarse_axes.rho.back() = options.rho_hi;
    }
    const GridAxes fine_axes = GridAxes::uniform(options.box, options.rho_lo, options.rho_hi, options.fine_dims);
    const ExpectedDiscrepancyGrid coarse =
        brute_force_grid(coarse_axes, n_pilot, ensemble, options.quadrature_order, options.threads);

    CpOptions cp;
    cp.rank = options.cp_rank;
    cp.max_iterations = options.cp_max_iterations;
    cp.tolerance = options.cp_tolerance;
    cp.seed = options.seed;
    CpResult fit = cp_als(coarse.values(), cp);
    if (!fit.converged && !options.accept_unconverged_cp) {
        warn(Error(ErrorCode::CpNonConvergence, "ALS did not converge in " + std::to_string(cp.max_iterations) +
                                                    " iterations; computing the fine grid directly")
                 .what());
        return brute_force_grid(fine_axes, n_pilot, ensemble, options.quadrature_order, options.threads);
    }
    ExpectedDiscrepancyGrid grid(fine_axes, recompose(fit.model, coarse_axes, fine_axes), n_pilot, coarse.costs());
    grid.cp_rank = options.cp_rank;
    grid.reconstruction_error = fit.relative_error;
    grid.cp_iterations = fit.iterations;
    grid.coarse_model = std::move(fit.model);
    grid.coarse_axes = coarse_axes;
    return grid;
}

ExpectedDiscrepancyGrid cached_grid(const std::string& cache_dir, int n_pilot, const ModelEnsemble& ensemble,
                                    const GridBuildOptions& options, bool rebuild) {
    if (cache_dir.empty()) return build_grid(n_pilot, ensemble, options);
    const BifidelityModel model = bifidelity(ensemble);
    const std::vector<double> key{static_cast<double>(n_pilot), model.c0(), model.c1()};
    std::ostringstream name;
    name << "ddmm_grid_N" << n_pilot << "_" << std::hex << fnv1a(key, options.hash()) << ".bin";
    const std::filesystem::path path = std::filesystem::path(cache_dir) / name.str();
    if (!rebuild && std::filesystem::exists(path)) {
        try {
            return ExpectedDiscrepancyGrid::load(path.string());
        } catch (const Error& e) {
            warn(std::string("ignoring unreadable cache: ") + e.what());
        }
    }
    info("building expected-discrepancy grid for N = " + std::to_string(n_pilot));
    auto grid = build_grid(n_pilot, ensemble, options);
    std::filesystem::create_directories(cache_dir);
    grid.save(path.string());
    return grid;
}

ColumnWindow ci_columns(const ExpectedDiscrepancyGrid& grid, const CorrelationCI& ci) {
    const std::vector<double>& rho = grid.axes().rho;
    const double lo = std::max(ci.lower, 0.0);
    const double hi = std::min(ci.upper, 1.0);
    ColumnWindow w;
    if (lo <= hi) {
        const auto first = std::lower_bound(rho.begin(), rho.end(), lo);
        const auto last = std::upper_bound(rho.begin(), rho.end(), hi);
        if (first < last) {
            w.k_lo = static_cast<std::size_t>(first - rho.begin());
            w.k_hi = static_cast<std::size_t>(last - rho.begin()) - 1;
            return w;
        }
    }
    // Empty window: take the column closest to the interval.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rho.size(); ++k) {
        const double d = std::max({ci.lower - rho[k], rho[k] - ci.upper, 0.0});
        if (d < best) {
            best = d;
            w.k_lo = w.k_hi = k;
        }
    }
    w.snapped = true;
    if (!snap_reported.exchange(true))
        warn(Error(ErrorCode::EmptyConfidenceWindow,
                   "no grid column inside the confidence interval; using the nearest column (reported once)")
                 .what());
    return w;
}

std::pair<std::size_t, double> minimax_row(const ExpectedDiscrepancyGrid& grid, const ColumnWindow& window) {
    require(window.k_lo <= window.k_hi && window.k_hi < grid.columns(), ErrorCode::InvalidArgument,
            "column window outside the grid");
    std::size_t best_row = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        const double m = grid.row_max(i, window.k_lo, window.k_hi, best);
        if (m < best) {
            best = m;
            best_row = i;
        }
    }
    return {best_row, best};
}

DdmmSolution solve_ddmm(double observed_r, double alpha, const ExpectedDiscrepancyGrid& grid, const CiSource& ci) {
    require(observed_r > -1.0 && observed_r < 1.0, ErrorCode::InvalidArgument, "observed correlation must lie in (-1, 1)");
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    require(ci.n_pilot() == grid.n_pilot(), ErrorCode::InvalidArgument,
            "confidence intervals and grid were built for different pilot sizes");
    DdmmSolution s;
    s.observed_r = observed_r;
    s.alpha = alpha;
    s.ci = ci(observed_r, alpha);
    s.window = ci_columns(grid, s.ci);
    const auto [row, value] = minimax_row(grid, s.window);
    s.theta0_index = row / grid.axes().theta1.size();
    s.theta1_index = row % grid.axes().theta1.size();
    s.theta_hat = grid.row_theta(row);
    s.worst_case_expected_discrepancy = value;
    s.adjusted_rho = sigmoid_adjust(s.theta_hat, observed_r);
    return s;
}

DdmmSolution adjust_correlation(std::span<const std::pair<double, double>> pilot_pairs, double alpha,
                                const ExpectedDiscrepancyGrid& grid, const CiSource& ci) {
    require(pilot_pairs.size() >= 3, ErrorCode::InvalidArgument, "at least 3 pilot pairs are needed");
    require(pilot_pairs.size() == static_cast<std::size_t>(grid.n_pilot()), ErrorCode::InvalidArgument,
            "pilot size " + std::to_string(pilot_pairs.size()) + " does not match the grid's N = " +
                std::to_string(grid.n_pilot()));
    // Perfectly (anti)correlated pilots land exactly on +-1.
    const double edge = 1.0 - 1e-12;
    const double r = std::clamp(sample_correlation(pilot_pairs), -edge, edge);
    return solve_ddmm(r, alpha, grid, ci);
}

}  // namespace ddmm
