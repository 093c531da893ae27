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

#include "ddmm/ddmm.h"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

const double kCosts[2] = {1.0, 0.1};
const ddmm_ensemble kEnsemble{2, kCosts, 100.0};

std::string temp_dir(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / ("ddmm_capi_" + std::string(name));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

// Small enough to compute directly in well under a second.
ddmm_grid_options small_options() {
    ddmm_grid_options o;
    ddmm_grid_options_init(&o);
    o.coarse_dims[0] = 6;
    o.coarse_dims[1] = 6;
    o.coarse_dims[2] = 10;
    o.fine_dims[0] = 21;
    o.fine_dims[1] = 21;
    o.fine_dims[2] = 40;
    o.cp_rank = 3;
    o.cp_max_iterations = 20;
    o.threads = 1;
    return o;
}

struct Grid {
    ddmm_grid* g = nullptr;
    explicit Grid(int n, const char* cache = nullptr) {
        const ddmm_grid_options o = small_options();
        REQUIRE(ddmm_grid_create(n, &kEnsemble, &o, cache, 0, &g) == DDMM_OK);
    }
    ~Grid() { ddmm_grid_destroy(g); }
};

struct Captured {
    std::vector<std::string> warnings;
};

void capture(int level, const char* message, void* user) {
    if (level == 1) static_cast<Captured*>(user)->warnings.emplace_back(message);
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and status names") {
    CHECK(ddmm_abi_version() == DDMM_ABI_VERSION);
    CHECK(std::string(ddmm_status_name(DDMM_OK)) == "Ok");
    CHECK(std::string(ddmm_status_name(DDMM_GP_FIT_FAILURE)) == "GpFitFailure");
    CHECK(std::string(ddmm_status_name(DDMM_NULL_ARGUMENT)) == "NullArgument");
    CHECK(std::string(ddmm_status_name(static_cast<ddmm_status>(57))) == "Unknown");
}

TEST_CASE("null arguments are reported, not dereferenced") {
    double lo = 0, hi = 0;
    CHECK(ddmm_ci_exact(0.5, 0.1, 5, nullptr, &hi) == DDMM_NULL_ARGUMENT);
    CHECK(std::strlen(ddmm_last_error()) > 0);
    CHECK(ddmm_allocate(nullptr, &kEnsemble, nullptr) == DDMM_NULL_ARGUMENT);
    CHECK(ddmm_grid_create(5, &kEnsemble, nullptr, nullptr, 0, nullptr) == DDMM_NULL_ARGUMENT);
    ddmm_grid_destroy(nullptr);
    ddmm_ci_surrogate_destroy(nullptr);
    ddmm_paired_destroy(nullptr);
    REQUIRE(ddmm_ci_exact(0.5, 0.1, 5, &lo, &hi) == DDMM_OK);
    CHECK(std::string(ddmm_last_error()).empty());
}

TEST_CASE("library errors map to their status codes") {
    double lo = 0, hi = 0;
    CHECK(ddmm_ci_exact(0.5, 1.5, 5, &lo, &hi) == DDMM_INVALID_ARGUMENT);
    CHECK(ddmm_ci_exact(1.5, 0.1, 5, &lo, &hi) == DDMM_INVALID_ARGUMENT);
    ddmm_paired* p = nullptr;
    CHECK(ddmm_paired_read("/nonexistent/pilot.csv", &p) == DDMM_IO_ERROR);
    CHECK(p == nullptr);
}

TEST_CASE("allocation through the C interface") {
    const double sigma[2] = {1.0, 1.0};
    const double rho = 0.9;
    const ddmm_covariance cov{2, sigma, &rho, nullptr};
    double n[2], beta[1];
    size_t order[2];
    ddmm_allocation a{n, beta, order, 0, 0, 0, 0, 0};
    REQUIRE(ddmm_allocate(&cov, &kEnsemble, &a) == DDMM_OK);
    const double r1 = std::sqrt(0.81 / (0.1 * 0.19));
    CHECK(n[0] == doctest::Approx(100.0 / (1.0 + 0.1 * r1)).epsilon(1e-12));
    CHECK(n[1] == doctest::Approx(r1 * n[0]).epsilon(1e-12));
    CHECK(beta[0] == doctest::Approx(0.9));
    CHECK(a.pooled == 0);
    CHECK(a.variance_reduction_ratio > 1.0);

    const double low = 0.2;
    const double costs[2] = {1.0, 0.9};
    const ddmm_ensemble e{2, costs, 100.0};
    const ddmm_covariance weak{2, sigma, &low, nullptr};
    REQUIRE(ddmm_allocate(&weak, &e, &a) == DDMM_OK);
    CHECK(a.pooled == 1);
    CHECK(n[0] == doctest::Approx(100.0 / 1.9));
    CHECK(n[1] == doctest::Approx(100.0 / 1.9));

    const double full[4] = {1.0, 0.9, 0.9, 1.0};
    const ddmm_covariance by_matrix{2, nullptr, nullptr, full};
    double d = 1.0;
    REQUIRE(ddmm_discrepancy(&by_matrix, &cov, &kEnsemble, &d) == DDMM_OK);
    CHECK(std::abs(d) < 1e-12);
}

TEST_CASE("confidence intervals: exact and surrogate agree") {
    double lo = 0, hi = 0;
    REQUIRE(ddmm_ci_exact(0.8, 0.253, 5, &lo, &hi) == DDMM_OK);
    CHECK(lo < 0.8);
    CHECK(hi > 0.8);
    const std::string dir = temp_dir("ci");
    ddmm_ci_surrogate* s = nullptr;
    REQUIRE(ddmm_ci_surrogate_create(5, dir.c_str(), 0, 1, &s) == DDMM_OK);
    double slo = 0, shi = 0;
    REQUIRE(ddmm_ci_surrogate_query(s, 0.8, 0.253, &slo, &shi) == DDMM_OK);
    CHECK(slo == doctest::Approx(lo).epsilon(0.02));
    CHECK(shi == doctest::Approx(hi).epsilon(0.02));
    ddmm_ci_surrogate_destroy(s);
    // Second creation comes from the cache and answers identically.
    REQUIRE(ddmm_ci_surrogate_create(5, dir.c_str(), 0, 1, &s) == DDMM_OK);
    double clo = 0, chi = 0;
    REQUIRE(ddmm_ci_surrogate_query(s, 0.8, 0.253, &clo, &chi) == DDMM_OK);
    CHECK(clo == slo);
    CHECK(chi == shi);
    ddmm_ci_surrogate_destroy(s);
}

TEST_CASE("grid info, save and load") {
    Grid grid(5);
    ddmm_grid_info info;
    REQUIRE(ddmm_grid_get_info(grid.g, &info) == DDMM_OK);
    CHECK(info.n_pilot == 5);
    CHECK(info.dims[0] == 21);
    CHECK(info.dims[2] == 40);
    CHECK(info.costs[1] == 0.1);

    const std::string path = temp_dir("grid") + "/g.bin";
    REQUIRE(ddmm_grid_save(grid.g, path.c_str()) == DDMM_OK);
    ddmm_grid* loaded = nullptr;
    REQUIRE(ddmm_grid_load(path.c_str(), &loaded) == DDMM_OK);
    ddmm_solution a, b;
    REQUIRE(ddmm_solve(grid.g, nullptr, 0.7, 0.253, &a) == DDMM_OK);
    REQUIRE(ddmm_solve(loaded, nullptr, 0.7, 0.253, &b) == DDMM_OK);
    CHECK(a.adjusted_rho == b.adjusted_rho);
    CHECK(a.worst_case_expected_discrepancy == b.worst_case_expected_discrepancy);
    ddmm_grid_destroy(loaded);

    std::ofstream(path, std::ios::binary | std::ios::trunc) << "junk";
    CHECK(ddmm_grid_load(path.c_str(), &loaded) == DDMM_FORMAT_ERROR);
}

TEST_CASE("solve and adjust_pairs agree") {
    Grid grid(5);
    const double x[5] = {0.1, 1.3, -0.4, 2.2, 0.9};
    const double y[5] = {0.3, 1.1, -0.2, 1.7, 1.4};
    double s0 = 0, s1 = 0, r = 0;
    REQUIRE(ddmm_sample_moments(x, y, 5, &s0, &s1, &r) == DDMM_OK);
    ddmm_solution direct, paired;
    REQUIRE(ddmm_solve(grid.g, nullptr, r, 0.253, &direct) == DDMM_OK);
    REQUIRE(ddmm_adjust_pairs(grid.g, nullptr, x, y, 5, 0.253, &paired) == DDMM_OK);
    CHECK(paired.observed_r == r);
    CHECK(paired.adjusted_rho == direct.adjusted_rho);
    CHECK(paired.ci_lower <= r);
    CHECK(paired.ci_upper >= r);
    CHECK(paired.adjusted_rho > 0.0);
    CHECK(paired.adjusted_rho < 1.0);
    // Pilot size must match the grid.
    CHECK(ddmm_adjust_pairs(grid.g, nullptr, x, y, 4, 0.253, &paired) == DDMM_INVALID_ARGUMENT);
}

TEST_CASE("log callback receives warnings") {
    Captured cap;
    ddmm_set_log_callback(capture, &cap);
    Grid grid(5);
    ddmm_solution s;
    // An interval narrower than the column spacing snaps to one column.
    REQUIRE(ddmm_solve(grid.g, nullptr, 0.999, 0.9, &s) == DDMM_OK);
    ddmm_set_log_callback(nullptr, nullptr);
    if (s.snapped) CHECK_FALSE(cap.warnings.empty());
}

TEST_CASE("edd curve through the C interface") {
    Grid grid(5);
    std::vector<double> rho(10), edd(10), base(10), pct(10);
    REQUIRE(ddmm_rho_axis(10, 0.05, 0.95, rho.data()) == DDMM_OK);
    CHECK(rho[0] == doctest::Approx(0.095));
    REQUIRE(ddmm_edd_curve(grid.g, nullptr, 0.253, &kEnsemble, rho.data(), 10, edd.data(), base.data(),
                           pct.data()) == DDMM_OK);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(std::isfinite(edd[i]));
        CHECK(base[i] >= 0.0);
        CHECK(pct[i] == doctest::Approx(100.0 * edd[i] / base[i]));
    }
    REQUIRE(ddmm_edd_curve(grid.g, nullptr, 0.253, &kEnsemble, rho.data(), 10, edd.data(), nullptr, nullptr) ==
            DDMM_OK);
}

TEST_CASE("paired data and empirical evaluation") {
    const std::string path = temp_dir("paired") + "/pairs.csv";
    {
        std::ofstream f(path);
        f << "input_id,hifi,lofi,qoi\n";
        std::uint64_t state = 12345;
        auto uniform = [&] {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            return (static_cast<double>(state >> 11) + 0.5) / 9007199254740992.0;
        };
        for (int i = 0; i < 400; ++i) {
            const double z0 = std::sqrt(-2 * std::log(uniform())) * std::cos(6.283185307179586 * uniform());
            const double z1 = std::sqrt(-2 * std::log(uniform())) * std::cos(6.283185307179586 * uniform());
            f << i << "," << z0 << "," << 0.8 * z0 + 0.6 * z1 << ",a\n";
            f << i << "," << 2 * z0 << "," << z1 << ",b\n";
        }
    }
    ddmm_paired* data = nullptr;
    REQUIRE(ddmm_paired_read(path.c_str(), &data) == DDMM_OK);
    REQUIRE(ddmm_paired_groups(data) == 2);
    CHECK(std::string(ddmm_paired_name(data, 0)) == "a");
    CHECK(ddmm_paired_rows(data, 1) == 400);
    CHECK(ddmm_paired_name(data, 7) == nullptr);
    const double* h = nullptr;
    const double* l = nullptr;
    size_t rows = 0;
    REQUIRE(ddmm_paired_columns(data, 0, &h, &l, &rows) == DDMM_OK);
    CHECK(rows == 400);
    CHECK(ddmm_paired_columns(data, 2, &h, &l, &rows) == DDMM_INVALID_ARGUMENT);

    Grid grid(5);
    ddmm_empirical_summary s;
    REQUIRE(ddmm_empirical_eval(data, 0, &kEnsemble, grid.g, nullptr, 0.253, 50, 7, 0, &s) == DDMM_OK);
    CHECK(s.trials == 50);
    CHECK(s.truth_rho == doctest::Approx(0.8).epsilon(0.1));
    CHECK(s.edd.mean == doctest::Approx(s.discrepancy_adjusted.mean - s.discrepancy_unadjusted.mean));
    ddmm_empirical_summary again;
    REQUIRE(ddmm_empirical_eval(data, 0, &kEnsemble, grid.g, nullptr, 0.253, 50, 7, 0, &again) == DDMM_OK);
    CHECK(again.edd.mean == s.edd.mean);
    ddmm_paired_destroy(data);
}

TEST_CASE("shapley and robustness through the C interface") {
    const double rho[2] = {0.3, 0.8};
    std::vector<double> phi(6), total(2);
    REQUIRE(ddmm_shapley(rho, 2, 5, &kEnsemble, 10000, 3, 0, 1, phi.data(), total.data()) == DDMM_OK);
    for (int i = 0; i < 2; ++i) {
        CHECK(phi[3 * i] + phi[3 * i + 1] + phi[3 * i + 2] == doctest::Approx(1.0).epsilon(0.05));
        CHECK(total[i] > 0.0);
    }
    const int sizes[2] = {6, 20};
    ddmm_robustness_row rows[2];
    REQUIRE(ddmm_robustness(sizes, 2, 2, 3, 50, 1, rows) == DDMM_OK);
    CHECK(rows[0].n_pilot == 6);
    CHECK(rows[1].discrepancy.mean < rows[0].discrepancy.mean);
}

}  // TEST_SUITE
