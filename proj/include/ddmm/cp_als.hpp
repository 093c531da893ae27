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

// Rank-R canonical polyadic (CP) decomposition of a dense third-order tensor
// by alternating least squares.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace ddmm {

/// Dense I x J x K tensor stored row-major (k fastest).
struct Tensor3 {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::vector<double> values;

    Tensor3() = default;
    Tensor3(std::size_t i, std::size_t j, std::size_t k) : dims{i, j, k}, values(i * j * k, 0.0) {}

    double& operator()(std::size_t i, std::size_t j, std::size_t k) { return values[(i * dims[1] + j) * dims[2] + k]; }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return values[(i * dims[1] + j) * dims[2] + k];
    }
};

/// X ~ sum_r A(:, r) o B(:, r) o C(:, r).
struct CpModel {
    Eigen::MatrixXd a, b, c;

    int rank() const { return static_cast<int>(a.cols()); }
};

struct CpOptions {
    int rank = 12;
    int max_iterations = 500;
    double tolerance = 1e-8;  // stop when the relative fit changes less than this
    std::uint64_t seed = 0;
};

struct CpResult {
    CpModel model;
    int iterations = 0;
    bool converged = false;
    double relative_error = 0.0;  // ||X - X_hat||_F / ||X||_F
};

/// Random initialisation from options.seed, or `warm` padded with small random
/// columns when it has fewer than options.rank components.
CpResult cp_als(const Tensor3& x, const CpOptions& options, const CpModel* warm = nullptr);

/// Decompositions for ranks 1..max_rank, each warm-started from the previous
/// rank so the reconstruction error cannot increase with rank.
std::vector<CpResult> cp_rank_sweep(const Tensor3& x, int max_rank, const CpOptions& options);

Tensor3 cp_reconstruct(const CpModel& model);
double relative_error(const Tensor3& x, const CpModel& model);

}  // namespace ddmm
