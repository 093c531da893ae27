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

// Natural cubic splines in one dimension and tensor-product bicubic splines on
// rectilinear grids.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ddmm {

class CubicSpline {
public:
    CubicSpline() = default;
    /// Interpolates (x_i, y_i) with zero second derivative at both ends.
    /// x must be strictly increasing with at least two points.
    CubicSpline(std::vector<double> x, std::vector<double> y);

    /// Evaluates the spline; outside [x_0, x_n] the end cubic is extended.
    double operator()(double t) const;
    double derivative(double t) const;

    const std::vector<double>& knots() const { return x_; }

private:
    std::size_t interval(double t) const;

    std::vector<double> x_, y_, m_;  // m_ holds second derivatives at the knots
};

/// First derivatives at the knots of the natural cubic spline through (x, y).
std::vector<double> spline_slopes(std::span<const double> x, std::span<const double> y);

/// Tensor-product cubic spline interpolant of values on an (x, y) grid, stored
/// as bicubic Hermite patches (value, d/dx, d/dy, d2/dxdy at every node).
class BicubicSpline {
public:
    BicubicSpline() = default;
    /// values is row-major with x as the slow index: values[i * ny + j] = f(x_i, y_j).
    BicubicSpline(std::vector<double> x, std::vector<double> y, std::vector<double> values);
    /// Rebuilds from stored node data without refitting.
    static BicubicSpline from_nodes(std::vector<double> x, std::vector<double> y, std::vector<double> values,
                                    std::vector<double> dx, std::vector<double> dy, std::vector<double> dxy);

    double operator()(double x, double y) const;

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }
    const std::vector<double>& values() const { return f_; }
    const std::vector<double>& dx() const { return fx_; }
    const std::vector<double>& dy() const { return fy_; }
    const std::vector<double>& dxy() const { return fxy_; }

private:
    std::vector<double> x_, y_, f_, fx_, fy_, fxy_;
};

}  // namespace ddmm
