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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace ddmm;

namespace {

const ModelEnsemble kEnsemble{{1.0, 0.1}, 100.0};

const ExpectedDiscrepancyGrid& grid5() {
    static const ExpectedDiscrepancyGrid g =
        brute_force_grid(GridAxes::uniform(ThetaBox{}, 0.01, 0.99, {26, 25, 50}), 5, kEnsemble);
    return g;
}

const CiSource& ci5() {
    static const CiSurrogate s = build_ci_surrogate(5);
    static const CiSource src(s);
    return src;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return static_cast<ErrorCode>(0);
}

double bowl(double a, double r) { return (a - 0.3) * (a - 0.3) + 0.1 * (r - 0.7) * (r - 0.7) - 0.05; }

struct Synthetic {
    std::vector<std::array<double, 2>> points;
    std::vector<double> y, noise;
};

Synthetic synthetic(std::size_t n, double noise_sd, std::uint64_t seed) {
    const AlphaBox box;
    Synthetic s;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    for (const auto& u : latin_hypercube(n, seed)) {
        const double a = box.alpha_lo + u[0] * (box.alpha_hi - box.alpha_lo);
        const double r = box.rho_lo + u[1] * (box.rho_hi - box.rho_lo);
        s.points.push_back({a, r});
        s.y.push_back(bowl(a, r) + noise_sd * z(rng));
        s.noise.push_back(noise_sd * noise_sd);
    }
    return s;
}

}  // namespace

TEST_SUITE("alpha_opt") {

TEST_CASE("Latin hypercube hits every stratum once") {
    const std::size_t n = 37;
    const auto pts = latin_hypercube(n, 5);
    for (int d = 0; d < 2; ++d) {
        std::vector<int> hits(n, 0);
        for (const auto& p : pts) {
            REQUIRE(p[d] >= 0.0);
            REQUIRE(p[d] < 1.0);
            ++hits[static_cast<std::size_t>(p[d] * n)];
        }
        for (int h : hits) CHECK(h == 1);
    }
    CHECK(latin_hypercube(n, 5) == pts);
}

TEST_CASE("Delta at the true correlation is nonnegative") {
    for (double rho : {0.3, 0.6, 0.9})
        for (double alpha : {0.1, 0.253, 0.5}) CHECK(delta_at(alpha, rho, rho, grid5(), ci5()) >= 0.0);
}

TEST_CASE("sampled Delta") {
    CHECK(sample_delta(0.253, 0.8, 5, grid5(), ci5(), 17) == sample_delta(0.253, 0.8, 5, grid5(), ci5(), 17));
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 10000; ++s) sum += sample_delta(0.253, 0.8, 5, grid5(), ci5(), s);
    CHECK(sum / 10000.0 < 0.0);
    CHECK(code_of([] { sample_delta(0.253, 0.8, 6, grid5(), ci5(), 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("design means and variances of the mean") {
    const AlphaBox box;
    std::vector<std::array<double, 2>> pts(10, {0.2, 0.7});
    std::vector<double> s;
    for (int i = 0; i < 10; ++i) {
        s.push_back(1.0);
        s.push_back(i == 0 ? 4.0 : 1.0);
    }
    const auto d = AlphaDesign::from_samples(box, 5, pts, 2, s);
    CHECK(d.means[0] == 2.5);
    CHECK(d.variances[0] == doctest::Approx(4.5 / 2.0));
    CHECK(d.variances[1] == 0.0);

    CHECK(code_of([&] { d.subset({0, 3}, {1}); }) == ErrorCode::InvalidArgument);
    const auto sub = d.subset({0, 3}, {1, 0});
    CHECK(sub.means[0] == 2.5);
    CHECK(sub.samples == std::vector<double>{4.0, 1.0, 1.0, 1.0});
    CHECK(code_of([&] { AlphaDesign::from_samples(box, 5, pts, 2, {1.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("design construction") {
    const AlphaBox box;
    CHECK(code_of([&] { build_design(9, 5, box, 5, grid5(), ci5(), 1); }) == ErrorCode::DesignTooSmall);
    CHECK(code_of([&] { build_design(10, 1, box, 5, grid5(), ci5(), 1); }) == ErrorCode::DesignTooSmall);
    const auto d = build_design(12, 10, box, 5, grid5(), ci5(), 3, 2);
    CHECK(d.points.size() == 12);
    CHECK(d.samples.size() == 120);
    for (const auto& p : d.points) {
        CHECK(p[0] >= box.alpha_lo);
        CHECK(p[0] <= box.alpha_hi);
        CHECK(p[1] >= box.rho_lo);
        CHECK(p[1] <= box.rho_hi);
    }
    const auto serial = build_design(12, 10, box, 5, grid5(), ci5(), 3, 1);
    CHECK(serial.samples == d.samples);

    const auto path = (std::filesystem::temp_directory_path() / "ddmm_design.json").string();
    d.save(path);
    const auto back = AlphaDesign::load(path);
    CHECK(back.samples == d.samples);
    CHECK(back.variances == d.variances);
    CHECK(back.points == d.points);
}

TEST_CASE("four times the repetitions quarter the variance of the mean") {
    const AlphaBox box;
    const auto a = build_design(20, 40, box, 5, grid5(), ci5(), 8);
    const auto b = build_design(20, 160, box, 5, grid5(), ci5(), 8);
    double va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(a.points[i] == b.points[i]);
        va += a.variances[i];
        vb += b.variances[i];
    }
    CHECK(va / vb > 2.0);
    CHECK(va / vb < 8.0);
}

TEST_CASE("noiseless quadratic is reproduced") {
    const auto s = synthetic(40, 0.0, 2);
    const AlphaBox box;
    const auto gp = fit_gp(box, s.points, s.y, s.noise);
    double sse = 0.0;
    const auto held = latin_hypercube(200, 99);
    for (const auto& u : held) {
        const double a = box.alpha_lo + u[0] * (box.alpha_hi - box.alpha_lo);
        const double r = box.rho_lo + u[1] * (box.rho_hi - box.rho_lo);
        sse += std::pow(gp(a, r) - bowl(a, r), 2);
    }
    CHECK(std::sqrt(sse / 200.0) < 1e-3);
    CHECK(gp.length_scales[0] > 0.0);
    CHECK(gp.length_scales[1] > 0.0);
}

TEST_CASE("constant targets give a constant mean") {
    const auto s = synthetic(15, 0.0, 4);
    const std::vector<double> y(15, -0.02);
    const auto gp = fit_gp(AlphaBox{}, s.points, y, std::vector<double>(15, 0.0));
    for (double a : {0.05, 0.2, 0.45, 0.6})
        for (double r : {0.5, 0.77, 0.95}) CHECK(std::abs(gp(a, r) + 0.02) < 1e-6);
}

TEST_CASE("a noisy outlier is smoothed toward its neighbours") {
    auto s = synthetic(40, 0.0, 6);
    for (auto& v : s.noise) v = 1e-8;
    s.y[7] += 0.05;
    s.noise[7] = 1.0;
    const auto gp = fit_gp(AlphaBox{}, s.points, s.y, s.noise);
    const double outlier = std::abs(gp(s.points[7][0], s.points[7][1]) - s.y[7]);
    double typical = 0.0;
    for (std::size_t i = 0; i < 40; ++i)
        if (i != 7) typical = std::max(typical, std::abs(gp(s.points[i][0], s.points[i][1]) - s.y[i]));
    CHECK(outlier > 0.04);
    CHECK(outlier > 10.0 * typical);
}

TEST_CASE("GP input checks and round trip") {
    const auto s = synthetic(12, 1e-3, 1);
    CHECK(code_of([&] {
              fit_gp(AlphaBox{}, {s.points.begin(), s.points.begin() + 9}, {s.y.begin(), s.y.begin() + 9},
                     {s.noise.begin(), s.noise.begin() + 9});
          }) == ErrorCode::DesignTooSmall);
    auto bad = s.noise;
    bad[0] = -1.0;
    CHECK(code_of([&] { fit_gp(AlphaBox{}, s.points, s.y, bad); }) == ErrorCode::InvalidArgument);
    auto nan_y = s.y;
    nan_y[3] = std::nan("");
    CHECK(code_of([&] { fit_gp(AlphaBox{}, s.points, nan_y, s.noise); }) == ErrorCode::NonFiniteIntegrand);

    const auto gp = fit_gp(AlphaBox{}, s.points, s.y, s.noise);
    const auto path = (std::filesystem::temp_directory_path() / "ddmm_gp.json").string();
    gp.save(path);
    const auto back = GpSurface::load(path);
    CHECK(back(0.3, 0.8) == gp(0.3, 0.8));
    CHECK(code_of([&] { AlphaDesign::load(path); }) == ErrorCode::FormatError);
}

TEST_CASE("minimax over the posterior mean") {
    const AlphaBox box;
    const auto s = synthetic(60, 0.0, 8);
    const auto gp = fit_gp(box, s.points, s.y, s.noise);
    const auto opt = optimal_alpha(gp, box, 101, 51);
    CHECK(opt.alpha == doctest::Approx(0.3).epsilon(0.01));

    // Exhaustive check on the same grid.
    double best = std::numeric_limits<double>::infinity();
    double best_alpha = 0.0;
    for (std::size_t i = 0; i < 101; ++i) {
        const double a = box.alpha_lo + (box.alpha_hi - box.alpha_lo) * i / 100.0;
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < 51; ++k) worst = std::max(worst, gp(a, box.rho_lo + (box.rho_hi - box.rho_lo) * k / 50.0));
        if (worst < best) {
            best = worst;
            best_alpha = a;
        }
    }
    CHECK(opt.alpha == best_alpha);
    CHECK(opt.worst_case == best);
    CHECK(opt.worst_case < 0.0);

    const auto fine = optimal_alpha(gp, box, 201, 101);
    CHECK(std::abs(fine.alpha - opt.alpha) < 0.01);
}

TEST_CASE("optimum is stable across restart seeds") {
    const auto s = synthetic(80, 2e-3, 12);
    double lo = 1.0, hi = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GpOptions o;
        o.seed = seed;
        const double a = optimal_alpha(fit_gp(AlphaBox{}, s.points, s.y, s.noise, o), AlphaBox{}).alpha;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    CHECK(hi - lo <= 0.04);
}

TEST_CASE("Pareto front") {
    const auto front = pareto_front(900.0, 0.035, 700, 276, 15);
    REQUIRE(!front.empty());
    for (const auto& [d, r] : front) {
        CHECK(d >= 10);
        CHECK(d <= 700);
        CHECK(r >= 2);
        CHECK(r <= 276);
        CHECK(d * r * 0.035 == doctest::Approx(900.0).epsilon(0.06));
    }
    for (std::size_t i = 1; i < front.size(); ++i) CHECK(front[i].first > front[i - 1].first);
    CHECK(pareto_front(0.1, 0.035, 700, 276).empty());
}

TEST_CASE("risk model fit") {
    const double b1 = 0.4, c1 = 0.02, c2 = 0.5;
    std::vector<RiskSample> samples;
    for (const auto& [d, r] : pareto_front(900.0, 0.035, 700, 276, 12)) {
        const double risk = (b1 / r) * (b1 / r) + c1 / d + c2 / (d * r);
        samples.push_back({d, r, risk, 0.1 * risk});
    }
    const auto m = pareto_risk_fit(samples);
    CHECK(m.b1 == doctest::Approx(b1).epsilon(0.05));
    CHECK(m.c1 == doctest::Approx(c1).epsilon(0.05));
    CHECK(m.c2 == doctest::Approx(c2).epsilon(0.05));
    CHECK(m(100, 20) == doctest::Approx(m.squared_bias(20) + m.variance(100, 20)));

    auto zero = samples;
    for (auto& s : zero) s.risk = s.std_error = 0.0;
    const auto z = pareto_risk_fit(zero);
    CHECK(z.b1 == 0.0);
    CHECK(z.c1 == 0.0);
    CHECK(z.c2 == 0.0);

    std::vector<RiskSample> same(6, RiskSample{50, 10, 0.01, 0.001});
    CHECK(code_of([&] { pareto_risk_fit(same); }) == ErrorCode::RiskFitFailure);
    CHECK(code_of([&] { pareto_risk_fit({samples.begin(), samples.begin() + 4}); }) == ErrorCode::InvalidArgument);

    // Negative c2 is not allowed even when it would fit better.
    auto neg = samples;
    for (auto& s : neg) s.risk = std::max(0.0, c1 / s.design_points - 5.0 / (s.design_points * s.repetitions));
    const auto n = pareto_risk_fit(neg);
    CHECK(n.c1 >= 0.0);
    CHECK(n.c2 >= 0.0);
}

TEST_CASE("risk samples from a reference design") {
    const AlphaBox box;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    std::vector<std::array<double, 2>> pts;
    std::vector<double> raw;
    const int reps = 12;
    for (const auto& u : latin_hypercube(40, 3)) {
        const double a = box.alpha_lo + u[0] * (box.alpha_hi - box.alpha_lo);
        const double r = box.rho_lo + u[1] * (box.rho_hi - box.rho_lo);
        pts.push_back({a, r});
        for (int j = 0; j < reps; ++j) raw.push_back(bowl(a, r) + 0.02 * z(rng));
    }
    const auto ref = AlphaDesign::from_samples(box, 5, pts, reps, raw);
    GpOptions gp;
    gp.restarts = 2;
    double alpha_ref = 0.0;
    const auto risks = pareto_risk_samples(ref, {{20, 12}, {30, 8}, {40, 6}}, 4, gp, 1, &alpha_ref);
    REQUIRE(risks.size() == 3);
    CHECK(alpha_ref == doctest::Approx(0.3).epsilon(0.15));
    for (const auto& r : risks) {
        CHECK(std::isfinite(r.risk));
        CHECK(r.risk >= 0.0);
        CHECK(r.std_error >= 0.0);
    }
    CHECK(code_of([&] { pareto_risk_samples(ref, {{41, 2}}, 4, gp, 1); }) == ErrorCode::InvalidArgument);
}

}  // TEST_SUITE
