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

#include "ddmm/cp_als.hpp"

#include "ddmm/error.hpp"
#include "ddmm/sampling.hpp"

#include <cmath>
#include <random>

namespace ddmm {

namespace {

using Mat = Eigen::MatrixXd;

// Matricised-tensor-times-Khatri-Rao product for each mode.
Mat mttkrp(const Tensor3& x, const Mat& b, const Mat& c, int mode, const Mat& a_other) {
    const auto [ni, nj, nk] = x.dims;
    const Eigen::Index r = b.cols();
    if (mode == 0) {  // out(i) = sum_jk x(i,j,k) B(j) * C(k)
        Mat out = Mat::Zero(static_cast<Eigen::Index>(ni), r);
        for (std::size_t i = 0; i < ni; ++i)
            for (std::size_t j = 0; j < nj; ++j) {
                const double* row = &x.values[(i * nj + j) * nk];
                const Eigen::Map<const Eigen::RowVectorXd> xr(row, static_cast<Eigen::Index>(nk));
                const Eigen::RowVectorXd t = xr * c;  // sum_k x(i,j,k) C(k,:)
                out.row(static_cast<Eigen::Index>(i)) += t.cwiseProduct(b.row(static_cast<Eigen::Index>(j)));
            }
        return out;
    }
    if (mode == 1) {  // b unused: factors are (A, C)
        const Mat& a = a_other;
        Mat out = Mat::Zero(static_cast<Eigen::Index>(nj), r);
        for (std::size_t i = 0; i < ni; ++i)
            for (std::size_t j = 0; j < nj; ++j) {
                const Eigen::Map<const Eigen::RowVectorXd> xr(&x.values[(i * nj + j) * nk], static_cast<Eigen::Index>(nk));
                const Eigen::RowVectorXd t = xr * c;
                out.row(static_cast<Eigen::Index>(j)) += t.cwiseProduct(a.row(static_cast<Eigen::Index>(i)));
            }
        return out;
    }
    // mode 2: out(k) = sum_ij x(i,j,k) A(i) * B(j)
    const Mat& a = a_other;
    Mat out = Mat::Zero(static_cast<Eigen::Index>(nk), r);
    for (std::size_t i = 0; i < ni; ++i)
        for (std::size_t j = 0; j < nj; ++j) {
            const Eigen::Map<const Eigen::VectorXd> xr(&x.values[(i * nj + j) * nk], static_cast<Eigen::Index>(nk));
            const Eigen::RowVectorXd ab =
                a.row(static_cast<Eigen::Index>(i)).cwiseProduct(b.row(static_cast<Eigen::Index>(j)));
            out.noalias() += xr * ab;
        }
    return out;
}

Mat solve_normal(const Mat& m, const Mat& gram) {
    // (gram is symmetric PSD) out = m * gram^+, via a ridge-free LDLT with a
    // pseudo-inverse fallback for rank-deficient Gram matrices.
    Eigen::LDLT<Mat> ldlt(gram);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-13)
        return ldlt.solve(m.transpose()).transpose();
    return m * gram.completeOrthogonalDecomposition().pseudoInverse();
}

double squared_norm(const Tensor3& x) {
    double s = 0.0;
    for (double v : x.values) s += v * v;
    return s;
}

Mat random_factor(std::size_t rows, Eigen::Index cols, std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Mat m(static_cast<Eigen::Index>(rows), cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * u(rng);
    return m;
}

Mat pad(const Mat& m, Eigen::Index cols, std::mt19937_64& rng, double scale) {
    Mat out(m.rows(), cols);
    out.leftCols(m.cols()) = m;
    if (cols > m.cols()) out.rightCols(cols - m.cols()) = random_factor(static_cast<std::size_t>(m.rows()), cols - m.cols(), rng, scale);
    return out;
}

}  // namespace

CpResult cp_als(const Tensor3& x, const CpOptions& options, const CpModel* warm) {
    require(options.rank >= 1, ErrorCode::InvalidArgument, "CP rank must be at least 1");
    require(x.values.size() == x.dims[0] * x.dims[1] * x.dims[2] && !x.values.empty(), ErrorCode::InvalidArgument,
            "tensor values do not match its dimensions");
    const Eigen::Index r = options.rank;
    std::mt19937_64 rng = make_stream(options.seed, static_cast<std::uint64_t>(r));
    const double norm2 = squared_norm(x);
    CpResult result;
    if (norm2 == 0.0) {
        result.model.a = Mat::Zero(static_cast<Eigen::Index>(x.dims[0]), r);
        result.model.b = Mat::Zero(static_cast<Eigen::Index>(x.dims[1]), r);
        result.model.c = Mat::Zero(static_cast<Eigen::Index>(x.dims[2]), r);
        result.converged = true;
        return result;
    }

    Mat a, b, c;
    if (warm && warm->rank() <= r && warm->rank() > 0) {
        // New columns start small so the warm model's fit is nearly preserved.
        const double scale = 1e-3 * std::cbrt(std::sqrt(norm2));
        a = pad(warm->a, r, rng, scale);
        b = pad(warm->b, r, rng, scale);
        c = pad(warm->c, r, rng, scale);
    } else {
        const double scale = std::cbrt(std::sqrt(norm2 / static_cast<double>(x.values.size())));
        a = random_factor(x.dims[0], r, rng, scale);
        b = random_factor(x.dims[1], r, rng, scale);
        c = random_factor(x.dims[2], r, rng, scale);
    }

    // Residual summed directly: the expanded form ||X||^2 - 2<X, X_hat> + ||X_hat||^2
    // cancels below a relative error of about 1e-8.
    auto fit_of = [&](const Mat& fa, const Mat& fb, const Mat& fc) {
        const auto [ni, nj, nk] = x.dims;
        double resid2 = 0.0;
        Eigen::VectorXd xh(static_cast<Eigen::Index>(nk));
        for (std::size_t i = 0; i < ni; ++i)
            for (std::size_t j = 0; j < nj; ++j) {
                const Eigen::RowVectorXd ab =
                    fa.row(static_cast<Eigen::Index>(i)).cwiseProduct(fb.row(static_cast<Eigen::Index>(j)));
                xh.noalias() = fc * ab.transpose();
                const Eigen::Map<const Eigen::VectorXd> xr(&x.values[(i * nj + j) * nk], static_cast<Eigen::Index>(nk));
                resid2 += (xr - xh).squaredNorm();
            }
        return 1.0 - std::sqrt(resid2 / norm2);
    };

    double previous_fit = -1.0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Mat a0 = a, b0 = b, c0 = c;
        a = solve_normal(mttkrp(x, b, c, 0, a), (b.transpose() * b).cwiseProduct(c.transpose() * c));
        b = solve_normal(mttkrp(x, b, c, 1, a), (a.transpose() * a).cwiseProduct(c.transpose() * c));
        c = solve_normal(mttkrp(x, b, c, 2, a), (a.transpose() * a).cwiseProduct(b.transpose() * b));
        double fit = fit_of(a, b, c);

        // Extrapolate along the last update (step it^(1/3)); keep it only if
        // the fit improves. Speeds up ALS through flat stretches.
        if (it > 2) {
            const double step = std::cbrt(static_cast<double>(it));
            Mat al = a0 + step * (a - a0), bl = b0 + step * (b - b0), cl = c0 + step * (c - c0);
            const double fit_ls = fit_of(al, bl, cl);
            if (fit_ls > fit) {
                a = std::move(al);
                b = std::move(bl);
                c = std::move(cl);
                fit = fit_ls;
            }
        }
        result.iterations = it;
        if (previous_fit >= 0.0 && std::abs(fit - previous_fit) < options.tolerance) {
            result.converged = true;
            break;
        }
        previous_fit = fit;
    }
    result.model = {std::move(a), std::move(b), std::move(c)};
    result.relative_error = relative_error(x, result.model);
    return result;
}

std::vector<CpResult> cp_rank_sweep(const Tensor3& x, int max_rank, const CpOptions& options) {
    std::vector<CpResult> out;
    const CpModel* warm = nullptr;
    for (int r = 1; r <= max_rank; ++r) {
        CpOptions o = options;
        o.rank = r;
        auto res = cp_als(x, o, warm);
        // ALS from a warm start never increases the error of the padded start,
        // but guard against a worse local solution from the random padding.
        if (!out.empty() && res.relative_error > out.back().relative_error) {
            CpResult keep = out.back();
            for (Mat* m : {&keep.model.a, &keep.model.b, &keep.model.c}) {
                Mat padded = Mat::Zero(m->rows(), r);
                padded.leftCols(m->cols()) = *m;
                *m = std::move(padded);
            }
            res = std::move(keep);
        }
        out.push_back(std::move(res));
        warm = &out.back().model;
    }
    return out;
}

Tensor3 cp_reconstruct(const CpModel& model) {
    const auto ni = static_cast<std::size_t>(model.a.rows()), nj = static_cast<std::size_t>(model.b.rows()),
               nk = static_cast<std::size_t>(model.c.rows());
    Tensor3 out(ni, nj, nk);
    // Rows of the Khatri-Rao product A (.) B times C^T, written straight into
    // the row-major (ij, k) view of the tensor.
    Mat kr(static_cast<Eigen::Index>(ni * nj), model.a.cols());
    for (std::size_t i = 0; i < ni; ++i)
        for (std::size_t j = 0; j < nj; ++j)
            kr.row(static_cast<Eigen::Index>(i * nj + j)) =
                model.a.row(static_cast<Eigen::Index>(i)).cwiseProduct(model.b.row(static_cast<Eigen::Index>(j)));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> view(
        out.values.data(), static_cast<Eigen::Index>(ni * nj), static_cast<Eigen::Index>(nk));
    view.noalias() = kr * model.c.transpose();
    return out;
}

double relative_error(const Tensor3& x, const CpModel& model) {
    const Tensor3 xh = cp_reconstruct(model);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double d = x.values[i] - xh.values[i];
        num += d * d;
        den += x.values[i] * x.values[i];
    }
    return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

}  // namespace ddmm
