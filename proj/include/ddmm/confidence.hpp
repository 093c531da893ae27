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

// Exact confidence intervals for a bivariate correlation by inverting the
// sample-correlation distribution, and spline surrogates of the endpoints
// over (alpha, r) for fast repeated queries.

#pragma once

#include "ddmm/spline.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ddmm {

/// Root brackets are (-1 + eps, 1 - eps); endpoints without an interior root
/// saturate to the bracket ends.
inline constexpr double kCiBracketEps = 1e-6;

struct CorrelationCI {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.0;
    int n_pilot = 0;
    double observed_r = 0.0;
    bool lower_saturated = false;
    bool upper_saturated = false;
};

/// Equal-tailed interval: lower solves P(rho_hat > r | rho_l) = alpha/2 and
/// upper solves P(rho_hat < r | rho_u) = alpha/2, each to a bracket width of 1e-8.
CorrelationCI ci_exact(double observed_r, double alpha, int n_pilot);

/// Tensor design for the surrogate: alpha nodes equally spaced, r nodes equally
/// spaced in atanh(r) so they crowd toward +-1 where the endpoints bend fastest.
struct CiSurrogateOptions {
    double alpha_lo = 0.02;
    double alpha_hi = 0.7;
    double r_lo = -0.99;
    double r_hi = 0.99;
    int n_alpha = 60;
    int n_r = 60;
    unsigned threads = 0;

    std::uint64_t design_hash() const;
};

class CiSurrogate {
public:
    CiSurrogate() = default;
    CiSurrogate(int n_pilot, CiSurrogateOptions options, BicubicSpline lower, BicubicSpline upper);

    int n_pilot() const { return n_pilot_; }
    const CiSurrogateOptions& options() const { return options_; }
    bool contains(double observed_r, double alpha) const;
    const BicubicSpline& lower_surface() const { return lower_; }
    const BicubicSpline& upper_surface() const { return upper_; }

    void save(const std::string& path) const;
    static CiSurrogate load(const std::string& path);

private:
    int n_pilot_ = 0;
    CiSurrogateOptions options_;
    BicubicSpline lower_, upper_;  // spline coordinates are (alpha, r)
};

/// Solves ci_exact on the tensor design and fits interpolating bicubic splines
/// to each endpoint. Throws DesignTooSmall below 100 design points.
CiSurrogate build_ci_surrogate(int n_pilot, const CiSurrogateOptions& options = {});

/// Surrogate evaluation clipped to [-1, 1]; crossing endpoints are swapped
/// with a warning. Queries outside the trained box throw ExtrapolationRefused.
CorrelationCI ci_fast(const CiSurrogate& surrogate, double observed_r, double alpha);

/// Reads the surrogate from cache_dir when a matching file exists, otherwise
/// builds it and writes it there. An empty cache_dir disables caching.
CiSurrogate cached_ci_surrogate(const std::string& cache_dir, int n_pilot, const CiSurrogateOptions& options = {},
                                bool rebuild = false);

/// Where intervals come from: the surrogate inside its trained box, the exact
/// inversion everywhere else (or everywhere, when no surrogate is attached).
class CiSource {
public:
    explicit CiSource(int n_pilot) : n_pilot_(n_pilot) {}
    explicit CiSource(const CiSurrogate& surrogate) : n_pilot_(surrogate.n_pilot()), surrogate_(&surrogate) {}

    CorrelationCI operator()(double observed_r, double alpha) const;
    int n_pilot() const { return n_pilot_; }
    bool exact_only() const { return surrogate_ == nullptr; }

private:
    int n_pilot_;
    const CiSurrogate* surrogate_ = nullptr;
};

}  // namespace ddmm
