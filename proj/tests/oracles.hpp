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

// Independent reference computations used by the unit and acceptance tests.
// None of them call the allocation code they are checking.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace ddmm::oracle {

struct GridOptimum {
    double n0 = 0.0;
    double n1 = 0.0;
    double beta = 0.0;
    double objective = 0.0;
};

// Two-model variance s0^2/n0 + (1/n0 - 1/n1)(b^2 s1^2 - 2 b rho s0 s1) on the
// budget line c0 n0 + c1 n1 = C, minimised by a dense (n0, beta) grid that is
// refined twice around the incumbent.
inline GridOptimum bifidelity_grid_search(double rho, double s0, double s1, double c0, double c1, double budget) {
    auto objective = [&](double n0, double b) {
        const double n1 = (budget - c0 * n0) / c1;
        if (n1 < n0) return std::numeric_limits<double>::infinity();
        return s0 * s0 / n0 + (1.0 / n0 - 1.0 / n1) * (b * b * s1 * s1 - 2.0 * b * rho * s0 * s1);
    };
    const double n_max = budget / (c0 + c1);
    double n_lo = 1e-6 * n_max, n_hi = n_max;
    const double b_span = 2.0 * std::abs(s0 / s1) + 1.0;
    double b_lo = -b_span, b_hi = b_span;
    GridOptimum best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < 4; ++pass) {
        const int steps = 1000;
        const double dn = (n_hi - n_lo) / steps, db = (b_hi - b_lo) / steps;
        for (int i = 0; i <= steps; ++i) {
            const double n0 = n_lo + i * dn;
            if (n0 <= 0.0) continue;
            for (int j = 0; j <= steps; ++j) {
                const double b = b_lo + j * db;
                const double v = objective(n0, b);
                if (v < best.objective) best = {n0, (budget - c0 * n0) / c1, b, v};
            }
        }
        n_lo = std::max(best.n0 - 5 * dn, 1e-9);
        n_hi = std::min(best.n0 + 5 * dn, n_max);
        b_lo = best.beta - 5 * db;
        b_hi = best.beta + 5 * db;
    }
    return best;
}

// Exact minimiser of sum S_i / n_i subject to n nondecreasing and
// sum c_i n_i = C, by enumerating every partition into contiguous blocks of
// equal n. Each block gets n proportional to sqrt(S_B / c_B); the optimum is
// the best partition whose block values come out nondecreasing.
inline double nested_allocation_optimum(const std::vector<double>& s, const std::vector<double>& c, double budget,
                                        std::vector<double>* n_out = nullptr) {
    const std::size_t m = s.size();
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << (m - 1)); ++mask) {
        // bit i set: a block boundary between model i and model i + 1
        std::vector<std::pair<std::size_t, std::size_t>> blocks;
        std::size_t start = 0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            if (mask & (1u << i)) {
                blocks.emplace_back(start, i);
                start = i + 1;
            }
        }
        blocks.emplace_back(start, m - 1);
        std::vector<double> n(m);
        double spend = 0.0;
        std::vector<double> root(blocks.size());
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            double sb = 0.0, cb = 0.0;
            for (std::size_t i = blocks[b].first; i <= blocks[b].second; ++i) {
                sb += std::max(s[i], 1e-14);
                cb += c[i];
            }
            root[b] = std::sqrt(sb / cb);
            spend += cb * root[b];
        }
        bool feasible = true;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (b > 0 && root[b] < root[b - 1]) feasible = false;
            for (std::size_t i = blocks[b].first; i <= blocks[b].second; ++i) n[i] = budget / spend * root[b];
        }
        if (!feasible) continue;
        double obj = 0.0;
        for (std::size_t i = 0; i < m; ++i) obj += std::max(s[i], 1e-14) / n[i];
        if (obj < best) {
            best = obj;
            if (n_out) *n_out = n;
        }
    }
    return best;
}

}  // namespace ddmm::oracle
