// Copyright 2026 The trilinear-sense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "trilinear/errors.hpp"

namespace trilinear {

template <typename Scalar>
struct SymmetricEigen {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;                // ascending
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // column p pairs with values[p]
};

/// Cyclic Jacobi rotations for small dense real symmetric matrices.
///
/// Sweeps over all off-diagonal pairs until the off-diagonal Frobenius mass
/// falls below `tol` times the matrix Frobenius norm. Eigenpairs come back
/// sorted ascending; each eigenvector's first non-negligible component is
/// made positive so results are reproducible.
template <typename Scalar>
SymmetricEigen<Scalar> jacobi_eigen(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> &input,
                                    Scalar tol = Scalar(1e-15), int max_sweeps = 100) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = input.rows();
    if (input.cols() != n) {
        throw InvalidArgument("jacobi_eigen: matrix is not square");
    }
    Mat a = input;
    Mat v = Mat::Identity(n, n);
    const Scalar scale = std::max(a.norm(), std::numeric_limits<Scalar>::min());

    auto off_norm = [&] {
        Scalar s = 0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) s += 2 * a(p, q) * a(p, q);
        return std::sqrt(s);
    };

    int sweep = 0;
    while (off_norm() > tol * scale) {
        if (++sweep > max_sweeps) {
            throw ConvergenceError("jacobi_eigen: no convergence");
        }
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Scalar apq = a(p, q);
                if (apq == Scalar(0)) continue;
                // Rotation angle that zeroes a(p, q); t is the smaller root.
                const Scalar theta = (a(q, q) - a(p, p)) / (2 * apq);
                const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const Scalar c = 1 / std::sqrt(t * t + 1);
                const Scalar s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

    SymmetricEigen<Scalar> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<size_t>(k)];
        out.values[k] = a(src, src);
        auto col = v.col(src);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(col[i]) > Scalar(1e-12)) {
                if (col[i] < 0) col = -col;
                break;
            }
        }
        out.vectors.col(k) = col;
    }
    return out;
}

}  // namespace trilinear
