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

#include "ddmm/spline.hpp"

#include "ddmm/error.hpp"

#include <algorithm>
#include <cmath>

namespace ddmm {

namespace {

void check_knots(const std::vector<double>& x, std::size_t n_values) {
    require(x.size() >= 2, ErrorCode::InvalidArgument, "a spline needs at least two knots");
    require(x.size() == n_values, ErrorCode::InvalidArgument, "knot and value counts differ");
    for (std::size_t i = 1; i < x.size(); ++i)
        require(x[i] > x[i - 1], ErrorCode::InvalidArgument, "spline knots must be strictly increasing");
}

// Second derivatives of the natural cubic spline (Thomas algorithm).
std::vector<double> second_derivatives(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
        const double rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        const double denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m[i] = d[i] - c[i] * m[i + 1];
        if (i == 1) break;
    }
    return m;
}

std::size_t locate(const std::vector<double>& x, double t) {
    if (t <= x.front()) return 0;
    if (t >= x.back()) return x.size() - 2;
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    return static_cast<std::size_t>(it - x.begin()) - 1;
}

}  // namespace

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    check_knots(x_, y_.size());
    m_ = second_derivatives(x_, y_);
}

std::size_t CubicSpline::interval(double t) const { return locate(x_, t); }

double CubicSpline::operator()(double t) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double t) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h + ((3.0 * b * b - 1.0) * m_[i + 1] - (3.0 * a * a - 1.0) * m_[i]) * h / 6.0;
}

std::vector<double> spline_slopes(std::span<const double> x, std::span<const double> y) {
    const auto m = second_derivatives(x, y);
    const std::size_t n = x.size();
    std::vector<double> s(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = x[i + 1] - x[i];
        s[i] = (y[i + 1] - y[i]) / h - (2.0 * m[i] + m[i + 1]) * h / 6.0;
    }
    const double h = x[n - 1] - x[n - 2];
    s[n - 1] = (y[n - 1] - y[n - 2]) / h + (m[n - 2] + 2.0 * m[n - 1]) * h / 6.0;
    return s;
}

BicubicSpline::BicubicSpline(std::vector<double> x, std::vector<double> y, std::vector<double> values)
    : x_(std::move(x)), y_(std::move(y)), f_(std::move(values)) {
    check_knots(x_, x_.size());
    check_knots(y_, y_.size());
    const std::size_t nx = x_.size(), ny = y_.size();
    require(f_.size() == nx * ny, ErrorCode::InvalidArgument, "grid values do not match the axes");
    fx_.assign(nx * ny, 0.0);
    fy_.assign(nx * ny, 0.0);
    fxy_.assign(nx * ny, 0.0);
    std::vector<double> col(nx);
    for (std::size_t i = 0; i < nx; ++i) {
        const auto s = spline_slopes(y_, std::span<const double>(f_.data() + i * ny, ny));
        std::copy(s.begin(), s.end(), fy_.begin() + static_cast<std::ptrdiff_t>(i * ny));
    }
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) col[i] = f_[i * ny + j];
        auto s = spline_slopes(x_, col);
        for (std::size_t i = 0; i < nx; ++i) fx_[i * ny + j] = s[i];
        for (std::size_t i = 0; i < nx; ++i) col[i] = fy_[i * ny + j];
        s = spline_slopes(x_, col);
        for (std::size_t i = 0; i < nx; ++i) fxy_[i * ny + j] = s[i];
    }
}

BicubicSpline BicubicSpline::from_nodes(std::vector<double> x, std::vector<double> y, std::vector<double> values,
                                        std::vector<double> dx, std::vector<double> dy, std::vector<double> dxy) {
    BicubicSpline s;
    const std::size_t n = x.size() * y.size();
    require(values.size() == n && dx.size() == n && dy.size() == n && dxy.size() == n, ErrorCode::FormatError,
            "bicubic node arrays do not match the axes");
    s.x_ = std::move(x);
    s.y_ = std::move(y);
    s.f_ = std::move(values);
    s.fx_ = std::move(dx);
    s.fy_ = std::move(dy);
    s.fxy_ = std::move(dxy);
    return s;
}

double BicubicSpline::operator()(double x, double y) const {
    const std::size_t i = locate(x_, x), j = locate(y_, y);
    const std::size_t ny = y_.size();
    const double hx = x_[i + 1] - x_[i], hy = y_[j + 1] - y_[j];
    const double u = (x - x_[i]) / hx, v = (y - y_[j]) / hy;
    // Cubic Hermite basis: h00, h10, h01, h11.
    auto basis = [](double t, double h, double out[4]) {
        const double t2 = t * t, t3 = t2 * t;
        out[0] = 2 * t3 - 3 * t2 + 1;
        out[1] = (t3 - 2 * t2 + t) * h;
        out[2] = -2 * t3 + 3 * t2;
        out[3] = (t3 - t2) * h;
    };
    double bx[4], by[4];
    basis(u, hx, bx);
    basis(v, hy, by);
    const std::size_t k00 = i * ny + j, k01 = k00 + 1, k10 = k00 + ny, k11 = k10 + 1;
    // Along y at x_i and x_{i+1}: value and x-derivative.
    auto along_y = [&](const std::vector<double>& g, const std::vector<double>& gy, std::size_t a, std::size_t b) {
        return g[a] * by[0] + gy[a] * by[1] + g[b] * by[2] + gy[b] * by[3];
    };
    const double f0 = along_y(f_, fy_, k00, k01), f1 = along_y(f_, fy_, k10, k11);
    const double d0 = along_y(fx_, fxy_, k00, k01), d1 = along_y(fx_, fxy_, k10, k11);
    return f0 * bx[0] + d0 * bx[1] + f1 * bx[2] + d1 * bx[3];
}

}  // namespace ddmm
