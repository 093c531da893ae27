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

#include "ddmm/confidence.hpp"

#include "ddmm/binary_io.hpp"
#include "ddmm/error.hpp"
#include "ddmm/log.hpp"
#include "ddmm/parallel.hpp"
#include "ddmm/sampling.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace ddmm {

namespace {

constexpr double kRootWidth = 1e-8;
constexpr char kSurrogateMagic[9] = "DDMMCIS1";
constexpr std::uint32_t kSurrogateVersion = 1;

// Root of the monotone function g on [lo, hi] given g(lo), g(hi) of opposite sign.
template <typename G>
double bracketed_root(G&& g, double lo, double hi, double g_lo, double g_hi) {
    std::uintmax_t max_iter = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= kRootWidth; };
    try {
        const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, tol, max_iter);
        require(max_iter < 200, ErrorCode::RootBracketFailure, "confidence endpoint did not converge");
        return 0.5 * (a + b);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(ErrorCode::RootBracketFailure, e.what());
    }
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    v.back() = hi;
    return v;
}

}  // namespace

CorrelationCI ci_exact(double observed_r, double alpha, int n_pilot) {
    require(std::isfinite(observed_r) && std::abs(observed_r) < 1.0, ErrorCode::InvalidArgument,
            "observed correlation must lie strictly inside (-1, 1)");
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    require(n_pilot >= 3, ErrorCode::InvalidArgument, "pilot size must be at least 3");

    const double lo = -1.0 + kCiBracketEps, hi = 1.0 - kCiBracketEps;
    const double target = 0.5 * alpha;
    CorrelationCI ci;
    ci.alpha = alpha;
    ci.n_pilot = n_pilot;
    ci.observed_r = observed_r;

    // P(rho_hat > r | rho) increases with rho.
    auto upper_tail = [&](double rho) { return corr_upper_tail(observed_r, {rho, n_pilot}) - target; };
    const double u_lo = upper_tail(lo), u_hi = upper_tail(hi);
    if (u_lo >= 0.0) {
        ci.lower = lo;
        ci.lower_saturated = true;
    } else if (u_hi < 0.0) {
        ci.lower = hi;
        ci.lower_saturated = true;
    } else {
        ci.lower = bracketed_root(upper_tail, lo, hi, u_lo, u_hi);
    }

    // P(rho_hat < r | rho) decreases with rho.
    auto lower_tail = [&](double rho) { return corr_lower_tail(observed_r, {rho, n_pilot}) - target; };
    const double l_lo = lower_tail(lo), l_hi = lower_tail(hi);
    if (l_hi >= 0.0) {
        ci.upper = hi;
        ci.upper_saturated = true;
    } else if (l_lo < 0.0) {
        ci.upper = lo;
        ci.upper_saturated = true;
    } else {
        ci.upper = bracketed_root(lower_tail, lo, hi, l_lo, l_hi);
    }
    if (ci.lower > ci.upper) std::swap(ci.lower, ci.upper);
    return ci;
}

std::uint64_t CiSurrogateOptions::design_hash() const {
    const std::vector<double> key{alpha_lo, alpha_hi, r_lo, r_hi, static_cast<double>(n_alpha),
                                  static_cast<double>(n_r), static_cast<double>(kSurrogateVersion)};
    return fnv1a(key);
}

CiSurrogate::CiSurrogate(int n_pilot, CiSurrogateOptions options, BicubicSpline lower, BicubicSpline upper)
    : n_pilot_(n_pilot), options_(options), lower_(std::move(lower)), upper_(std::move(upper)) {}

bool CiSurrogate::contains(double observed_r, double alpha) const {
    return alpha >= options_.alpha_lo && alpha <= options_.alpha_hi && observed_r >= options_.r_lo &&
           observed_r <= options_.r_hi;
}

CiSurrogate build_ci_surrogate(int n_pilot, const CiSurrogateOptions& options) {
    require(n_pilot >= 3, ErrorCode::InvalidArgument, "pilot size must be at least 3");
    require(options.n_alpha >= 4 && options.n_r >= 4 &&
                static_cast<long long>(options.n_alpha) * options.n_r >= 100,
            ErrorCode::DesignTooSmall, "the surrogate design needs at least 100 points and 4 per axis");
    require(options.alpha_lo > 0.0 && options.alpha_hi < 1.0 && options.alpha_lo < options.alpha_hi,
            ErrorCode::InvalidArgument, "alpha range must lie inside (0, 1)");
    require(options.r_lo > -1.0 && options.r_hi < 1.0 && options.r_lo < options.r_hi, ErrorCode::InvalidArgument,
            "r range must lie inside (-1, 1)");

    const auto alphas = linspace(options.alpha_lo, options.alpha_hi, options.n_alpha);
    auto rs = linspace(std::atanh(options.r_lo), std::atanh(options.r_hi), options.n_r);
    for (auto& r : rs) r = std::tanh(r);
    rs.front() = options.r_lo;
    rs.back() = options.r_hi;
    const std::size_t na = alphas.size(), nr = rs.size();
    std::vector<double> lower(na * nr), upper(na * nr);
    parallel_for(na * nr, options.threads, [&](std::size_t k) {
        const auto ci = ci_exact(rs[k % nr], alphas[k / nr], n_pilot);
        lower[k] = ci.lower;
        upper[k] = ci.upper;
    });
    return CiSurrogate(n_pilot, options, BicubicSpline(alphas, rs, std::move(lower)),
                       BicubicSpline(alphas, rs, std::move(upper)));
}

CorrelationCI ci_fast(const CiSurrogate& surrogate, double observed_r, double alpha) {
    if (!surrogate.contains(observed_r, alpha)) {
        std::ostringstream msg;
        msg << "(alpha, r) = (" << alpha << ", " << observed_r << ") is outside the surrogate's trained box";
        fail(ErrorCode::ExtrapolationRefused, msg.str());
    }
    CorrelationCI ci;
    ci.alpha = alpha;
    ci.observed_r = observed_r;
    ci.n_pilot = surrogate.n_pilot();
    ci.lower = std::clamp(surrogate.lower_surface()(alpha, observed_r), -1.0, 1.0);
    ci.upper = std::clamp(surrogate.upper_surface()(alpha, observed_r), -1.0, 1.0);
    if (ci.lower > ci.upper) {
        warn("surrogate endpoints crossed at (alpha, r) = (" + std::to_string(alpha) + ", " +
             std::to_string(observed_r) + "); swapping");
        std::swap(ci.lower, ci.upper);
    }
    return ci;
}

void CiSurrogate::save(const std::string& path) const {
    BinaryWriter out(path, kSurrogateMagic, kSurrogateVersion);
    out.put(static_cast<std::int32_t>(n_pilot_));
    out.put(options_.alpha_lo);
    out.put(options_.alpha_hi);
    out.put(options_.r_lo);
    out.put(options_.r_hi);
    out.put(static_cast<std::int32_t>(options_.n_alpha));
    out.put(static_cast<std::int32_t>(options_.n_r));
    for (const BicubicSpline* s : {&lower_, &upper_}) {
        out.put_vector(s->x());
        out.put_vector(s->y());
        out.put_vector(s->values());
        out.put_vector(s->dx());
        out.put_vector(s->dy());
        out.put_vector(s->dxy());
    }
    out.finish();
}

CiSurrogate CiSurrogate::load(const std::string& path) {
    BinaryReader in(path, kSurrogateMagic, kSurrogateVersion);
    const int n_pilot = in.get<std::int32_t>();
    CiSurrogateOptions options;
    options.alpha_lo = in.get<double>();
    options.alpha_hi = in.get<double>();
    options.r_lo = in.get<double>();
    options.r_hi = in.get<double>();
    options.n_alpha = in.get<std::int32_t>();
    options.n_r = in.get<std::int32_t>();
    BicubicSpline surfaces[2];
    for (auto& s : surfaces) {
        auto x = in.get_vector<double>();
        auto y = in.get_vector<double>();
        auto f = in.get_vector<double>();
        auto fx = in.get_vector<double>();
        auto fy = in.get_vector<double>();
        auto fxy = in.get_vector<double>();
        s = BicubicSpline::from_nodes(std::move(x), std::move(y), std::move(f), std::move(fx), std::move(fy),
                                      std::move(fxy));
    }
    require(static_cast<int>(surfaces[0].x().size()) == options.n_alpha &&
                static_cast<int>(surfaces[0].y().size()) == options.n_r,
            ErrorCode::FormatError, path + " has inconsistent surrogate dimensions");
    return CiSurrogate(n_pilot, options, std::move(surfaces[0]), std::move(surfaces[1]));
}

CiSurrogate cached_ci_surrogate(const std::string& cache_dir, int n_pilot, const CiSurrogateOptions& options,
                                bool rebuild) {
    if (cache_dir.empty()) return build_ci_surrogate(n_pilot, options);
    std::ostringstream name;
    name << "ci_surrogate_N" << n_pilot << "_" << std::hex << options.design_hash() << ".bin";
    const std::filesystem::path path = std::filesystem::path(cache_dir) / name.str();
    if (!rebuild && std::filesystem::exists(path)) {
        try {
            return CiSurrogate::load(path.string());
        } catch (const Error& e) {
            warn(std::string("ignoring unreadable cache: ") + e.what());
        }
    }
    info("building confidence-interval surrogate for N = " + std::to_string(n_pilot));
    auto surrogate = build_ci_surrogate(n_pilot, options);
    std::filesystem::create_directories(cache_dir);
    surrogate.save(path.string());
    return surrogate;
}

CorrelationCI CiSource::operator()(double observed_r, double alpha) const {
    if (surrogate_ && surrogate_->contains(observed_r, alpha)) return ci_fast(*surrogate_, observed_r, alpha);
    return ci_exact(observed_r, alpha, n_pilot_);
}

}  // namespace ddmm
