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
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "trilinear/csv.hpp"
#include "trilinear/errors.hpp"
#include "trilinear/fock_algebra.hpp"

namespace trilinear {

enum class Method { eigendecomposition, krylov };

struct PropagatorSettings {
    Method method = Method::eigendecomposition;
    int krylov_dim = 30;
    double time_step = 0;  // sampling interval for series, s; not an accuracy knob
    double norm_tol = 1e-9;
    double tail_mass_tol = 1e-6;
    double krylov_tol = 1e-12;  // per-step local error target
    bool check_tail = true;

    void validate() const {
        if (krylov_dim < 2) throw InvalidArgument("PropagatorSettings: krylov_dim must be at least 2");
        if (time_step < 0) throw InvalidArgument("PropagatorSettings: time_step must be non-negative");
        if (!(norm_tol > 0 && norm_tol < 1) || !(tail_mass_tol > 0 && tail_mass_tol < 1))
            throw InvalidArgument("PropagatorSettings: tolerances must lie in (0, 1)");
    }
};

/// Population on the last two Fock rows of every mode whose cutoff is at least 2.
/// Modes truncated at 0 or 1 are treated as deliberately frozen and skipped.
inline void check_truncation(const Ket &psi, double tol) {
    for (Mode m : {Mode::breathing, Mode::rocking}) {
        if (psi.layout().cutoff(m) < 2) continue;
        const double tail = tail_mass(psi, m, 2);
        if (tail > tol) throw TruncationBreach(mode_name(m), tail, tol);
    }
}

/// exp(-i H t) for a fixed time-independent hermitian H (in rad/s).
///
/// The eigendecomposition path rotates the spin into the sigma^x basis when H
/// commutes with sigma^x, splits the result into connected components of its
/// sparsity graph and diagonalizes each block once; later calls only apply
/// phases. The Krylov path runs Lanczos with full re-orthogonalization on a
/// sparse copy of H with adaptive step control.
class Propagator {
   public:
    explicit Propagator(const LinOp &h, PropagatorSettings settings = {})
        : layout_(h.layout()), settings_(settings) {
        settings_.validate();
        if (!h.hermitian() && h.hermiticity_defect() > LinOp::hermitian_tolerance * std::max(1.0, h.max_abs())) {
            throw InvalidArgument("Propagator: Hamiltonian is not hermitian");
        }
        if (settings_.method == Method::eigendecomposition) {
            diagonalize(h.matrix());
        } else {
            sparse_ = h.matrix().sparseView(0.0, 0.0);
            sparse_.makeCompressed();
            norm_bound_ = 0;
            for (Eigen::Index r = 0; r < h.matrix().rows(); ++r)
                norm_bound_ = std::max(norm_bound_, h.matrix().row(r).cwiseAbs().sum());
        }
    }

    const PropagatorSettings &settings() const { return settings_; }
    const SpaceLayout &layout() const { return layout_; }
    size_t block_count() const { return blocks_.size(); }
    bool uses_spin_symmetry() const { return spin_rotated_; }

    /// exp(-i H t) v without any norm or truncation checks.
    ComplexVector apply(const ComplexVector &v, double t) const {
        if (v.size() != layout_.dim()) throw InvalidArgument("Propagator: vector dimension mismatch");
        return settings_.method == Method::eigendecomposition ? apply_eig(v, t) : apply_krylov(v, t);
    }

    /// Evolves psi0 by t and enforces the norm and tail-mass guards.
    Ket evolve(const Ket &psi0, double t) const {
        if (!(psi0.layout() == layout_)) throw InvalidArgument("Propagator: state layout mismatch");
        ComplexVector out = apply(psi0.amplitudes(), t);
        const double n = out.norm();
        if (!(std::abs(n - 1.0) <= settings_.norm_tol)) {
            throw NormBreach("evolve: norm drifted to " + csv::format_double(n, 15));
        }
        Ket psi(layout_, std::move(out));
        if (settings_.check_tail) check_truncation(psi, settings_.tail_mass_tol);
        return psi;
    }

   private:
    struct Block {
        std::vector<Eigen::Index> indices;
        Eigen::VectorXd energies;
        Eigen::MatrixXd real_vectors;
        ComplexMatrix complex_vectors;
        bool real = true;
    };

    static bool commutes_with_spin_flip(const ComplexMatrix &m) {
        const Eigen::Index n = m.rows();
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                if (m(i, j) != m(i ^ 1, j ^ 1)) return false;
        return true;
    }

    // Pairwise (down, up) -> (sigma^x = +1, sigma^x = -1) amplitudes.
    static void rotate_spin(ComplexVector &v) {
        const double h = 1.0 / std::sqrt(2.0);
        for (Eigen::Index i = 0; i < v.size(); i += 2) {
            const cplx d = v[i], u = v[i + 1];
            v[i] = h * (d + u);
            v[i + 1] = h * (d - u);
        }
    }

    void diagonalize(const ComplexMatrix &h) {
        const Eigen::Index n = h.rows();
        ComplexMatrix m;
        spin_rotated_ = commutes_with_spin_flip(h);
        if (spin_rotated_) {
            // Sector matrices: H(2a, 2b) +/- H(2a, 2b + 1); cross-sector entries vanish exactly.
            m = ComplexMatrix::Zero(n, n);
            for (Eigen::Index b = 0; b < n; b += 2)
                for (Eigen::Index a = 0; a < n; a += 2) {
                    m(a, b) = h(a, b) + h(a, b + 1);
                    m(a + 1, b + 1) = h(a, b) - h(a, b + 1);
                }
        } else {
            m = h;
        }

        // Union-find over the non-zero pattern.
        std::vector<Eigen::Index> parent(static_cast<size_t>(n));
        std::iota(parent.begin(), parent.end(), Eigen::Index{0});
        std::function<Eigen::Index(Eigen::Index)> find = [&](Eigen::Index x) {
            while (parent[static_cast<size_t>(x)] != x) {
                parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
                x = parent[static_cast<size_t>(x)];
            }
            return x;
        };
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < j; ++i)
                if (m(i, j) != cplx(0.0) || m(j, i) != cplx(0.0)) {
                    const auto ri = find(i), rj = find(j);
                    if (ri != rj) parent[static_cast<size_t>(std::max(ri, rj))] = std::min(ri, rj);
                }
        std::vector<std::vector<Eigen::Index>> groups(static_cast<size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) groups[static_cast<size_t>(find(i))].push_back(i);

        for (auto &idx : groups) {
            if (idx.empty()) continue;
            Block blk;
            blk.indices = std::move(idx);
            const auto k = static_cast<Eigen::Index>(blk.indices.size());
            ComplexMatrix sub(k, k);
            for (Eigen::Index c = 0; c < k; ++c)
                for (Eigen::Index r = 0; r < k; ++r)
                    sub(r, c) = m(blk.indices[static_cast<size_t>(r)], blk.indices[static_cast<size_t>(c)]);
            blk.real = sub.imag().cwiseAbs().maxCoeff() == 0.0;
            if (blk.real) {
                Eigen::MatrixXd re = sub.real();
                re = (0.5 * (re + re.transpose())).eval();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(re);
                if (es.info() != Eigen::Success) throw ConvergenceError("Propagator: eigensolver failed");
                blk.energies = es.eigenvalues();
                blk.real_vectors = es.eigenvectors();
            } else {
                sub = (0.5 * (sub + sub.adjoint())).eval();
                Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sub);
                if (es.info() != Eigen::Success) throw ConvergenceError("Propagator: eigensolver failed");
                blk.energies = es.eigenvalues();
                blk.complex_vectors = es.eigenvectors();
            }
            blocks_.push_back(std::move(blk));
        }
    }

    ComplexVector apply_eig(const ComplexVector &v, double t) const {
        ComplexVector w = v;
        if (spin_rotated_) rotate_spin(w);
        ComplexVector out(w.size());
        for (const auto &blk : blocks_) {
            const auto k = static_cast<Eigen::Index>(blk.indices.size());
            ComplexVector x(k);
            for (Eigen::Index i = 0; i < k; ++i) x[i] = w[blk.indices[static_cast<size_t>(i)]];
            ComplexVector y;
            if (blk.real) {
                const Eigen::VectorXd cr = blk.real_vectors.transpose() * x.real();
                const Eigen::VectorXd ci = blk.real_vectors.transpose() * x.imag();
                ComplexVector c(k);
                for (Eigen::Index i = 0; i < k; ++i)
                    c[i] = cplx(cr[i], ci[i]) * std::polar(1.0, -blk.energies[i] * t);
                const Eigen::VectorXd yr = blk.real_vectors * c.real();
                const Eigen::VectorXd yi = blk.real_vectors * c.imag();
                y.resize(k);
                for (Eigen::Index i = 0; i < k; ++i) y[i] = cplx(yr[i], yi[i]);
            } else {
                ComplexVector c = blk.complex_vectors.adjoint() * x;
                for (Eigen::Index i = 0; i < k; ++i) c[i] *= std::polar(1.0, -blk.energies[i] * t);
                y = blk.complex_vectors * c;
            }
            for (Eigen::Index i = 0; i < k; ++i) out[blk.indices[static_cast<size_t>(i)]] = y[i];
        }
        if (spin_rotated_) rotate_spin(out);  // the rotation is its own inverse
        return out;
    }

    // exp(-i T dt) e_1 for a real symmetric tridiagonal T, diagonalized once per Krylov basis.
    struct Tridiagonal {
        Eigen::VectorXd energies;
        Eigen::MatrixXd vectors;

        Tridiagonal(const Eigen::VectorXd &alpha, const Eigen::VectorXd &beta, Eigen::Index m) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (Eigen::Index i = 0; i < m; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            energies = es.eigenvalues();
            vectors = es.eigenvectors();
        }

        ComplexVector exp_e1(double dt) const {
            ComplexVector c(energies.size());
            for (Eigen::Index k = 0; k < energies.size(); ++k)
                c[k] = std::polar(1.0, -energies[k] * dt) * vectors(0, k);
            return vectors.cast<cplx>() * c;
        }
    };

    ComplexVector apply_krylov(const ComplexVector &v0, double t) const {
        ComplexVector v = v0;
        if (t == 0.0) return v;
        const double sign = t > 0 ? 1.0 : -1.0;
        const double total = std::abs(t);
        const Eigen::Index dim = v.size();
        const Eigen::Index mmax = std::min<Eigen::Index>(settings_.krylov_dim, dim);
        double done = 0.0;
        double dt = norm_bound_ > 0 ? std::min(total, 0.25 * static_cast<double>(mmax) / norm_bound_) : total;
        int guard = 0;

        while (done < total) {
            if (++guard > 10'000'000) throw ConvergenceError("krylov: step budget exhausted");
            const double scale = v.norm();
            if (scale == 0.0) return v;
            ComplexMatrix V(dim, mmax + 1);
            Eigen::VectorXd alpha = Eigen::VectorXd::Zero(mmax), beta = Eigen::VectorXd::Zero(mmax);
            V.col(0) = v / scale;
            Eigen::Index m = mmax;
            bool invariant = false;
            for (Eigen::Index j = 0; j < mmax; ++j) {
                ComplexVector w = sparse_ * V.col(j);
                alpha[j] = V.col(j).dot(w).real();
                // Full re-orthogonalization, applied twice.
                for (int pass = 0; pass < 2; ++pass) {
                    const ComplexVector c = V.leftCols(j + 1).adjoint() * w;
                    w.noalias() -= V.leftCols(j + 1) * c;
                }
                beta[j] = w.norm();
                if (beta[j] <= 1e-13 * std::max(1.0, norm_bound_)) {
                    m = j + 1;
                    invariant = true;
                    break;
                }
                V.col(j + 1) = w / beta[j];
            }

            const double remaining = total - done;
            double step = std::min(dt, remaining);
            const Tridiagonal tri(alpha, beta, m);
            ComplexVector y;
            for (;;) {
                y = tri.exp_e1(sign * step);
                // Integrated Lanczos residual: beta_m |t| |e_m^T exp(-i T t) e_1|.
                const double err = invariant ? 0.0 : beta[m - 1] * step * std::abs(y[m - 1]);
                if (err <= settings_.krylov_tol * std::max(step / total, 1e-3)) break;
                step *= 0.5;
                if (step < total * 1e-14) throw ConvergenceError("krylov: step size underflow");
            }
            v = scale * (V.leftCols(m) * y);
            done += step;
            dt = (step == remaining) ? dt : step * 1.25;
        }
        return v;
    }

    SpaceLayout layout_;
    PropagatorSettings settings_;
    std::vector<Block> blocks_;
    bool spin_rotated_ = false;
    Eigen::SparseMatrix<cplx> sparse_;
    double norm_bound_ = 0;
};

inline Ket evolve(const LinOp &h, const Ket &psi0, double t, const PropagatorSettings &settings = {}) {
    return Propagator(h, settings).evolve(psi0, t);
}

/// Which marginal an observable_series column group extracts.
struct Observable {
    enum class Kind { fock_b, fock_r, spin };
    Kind kind = Kind::spin;
    std::vector<int> indices;  // empty: every Fock index up to the cutoff

    static Observable fock_b(std::vector<int> idx = {}) { return {Kind::fock_b, std::move(idx)}; }
    static Observable fock_r(std::vector<int> idx = {}) { return {Kind::fock_r, std::move(idx)}; }
    static Observable spin() { return {Kind::spin, {}}; }
};

namespace detail {

inline std::vector<int> resolve_indices(const Observable &o, int cutoff) {
    if (!o.indices.empty()) {
        for (int k : o.indices)
            if (k < 0 || k > cutoff) throw InvalidArgument("observable index outside the Fock cutoff");
        return o.indices;
    }
    std::vector<int> all(static_cast<size_t>(cutoff + 1));
    std::iota(all.begin(), all.end(), 0);
    return all;
}

inline void append_observables(const Ket &psi, const std::vector<Observable> &obs, std::vector<double> &row) {
    for (const auto &o : obs) {
        if (o.kind == Observable::Kind::spin) {
            const auto s = spin_probs(psi);
            row.push_back(s.down);
            row.push_back(s.up);
            continue;
        }
        const Mode m = o.kind == Observable::Kind::fock_b ? Mode::breathing : Mode::rocking;
        const auto p = fock_probs(psi, m);
        for (int k : resolve_indices(o, psi.layout().cutoff(m))) row.push_back(p[static_cast<size_t>(k)]);
    }
}

}  // namespace detail

inline std::vector<std::string> observable_columns(const SpaceLayout &layout, const std::vector<Observable> &obs) {
    std::vector<std::string> cols;
    for (const auto &o : obs) {
        switch (o.kind) {
            case Observable::Kind::spin:
                cols.emplace_back("p_down");
                cols.emplace_back("p_up");
                break;
            case Observable::Kind::fock_b:
                for (int k : detail::resolve_indices(o, layout.n_cut_b())) cols.push_back("p_nb_" + std::to_string(k));
                break;
            case Observable::Kind::fock_r:
                for (int k : detail::resolve_indices(o, layout.n_cut_r())) cols.push_back("p_nr_" + std::to_string(k));
                break;
        }
    }
    return cols;
}

/// Time series of marginals; first column "t_ms". One Propagator serves the whole grid.
inline csv::Table observable_series(const Propagator &prop, const Ket &psi0, const std::vector<double> &t_grid,
                                    const std::vector<Observable> &obs) {
    for (size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] < t_grid[i - 1]) throw InvalidArgument("observable_series: time grid is not monotone");
    csv::Table table;
    table.columns.emplace_back("t_ms");
    for (auto &c : observable_columns(psi0.layout(), obs)) table.columns.push_back(std::move(c));
    for (double t : t_grid) {
        const Ket psi = prop.evolve(psi0, t);
        std::vector<double> row{t * 1e3};
        detail::append_observables(psi, obs, row);
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline csv::Table observable_series(const LinOp &h, const Ket &psi0, const std::vector<double> &t_grid,
                                    const std::vector<Observable> &obs, const PropagatorSettings &settings = {}) {
    if (t_grid.empty()) {
        csv::Table table;
        table.columns.emplace_back("t_ms");
        for (auto &c : observable_columns(psi0.layout(), obs)) table.columns.push_back(std::move(c));
        return table;
    }
    return observable_series(Propagator(h, settings), psi0, t_grid, obs);
}

/// Uniform grid of `samples` points on [0, t_final].
inline std::vector<double> uniform_grid(double t_final, int samples) {
    std::vector<double> g;
    if (samples <= 0) return g;
    if (samples == 1) return {t_final};
    for (int i = 0; i < samples; ++i) g.push_back(t_final * i / (samples - 1));
    return g;
}

// ---------------------------------------------------------------------------
// Truncation scan

struct TruncationStep {
    SpaceLayout layout{0, 0};
    double tail_b = 0;
    double tail_r = 0;
    double max_change = std::numeric_limits<double>::quiet_NaN();  // vs previous step
    std::vector<double> p_b;
    std::vector<double> p_r;
    SpinProbs spin;
};

struct TruncationReport {
    std::vector<TruncationStep> steps;
    double threshold = 1e-6;
    bool converged = false;       // last change below threshold
    int converged_index = -1;     // smallest ladder index whose result already agrees with the next one

    const SpaceLayout *converged_layout() const {
        return converged_index >= 0 ? &steps[static_cast<size_t>(converged_index)].layout : nullptr;
    }
};

using HamiltonianBuilder = std::function<LinOp(const SpaceLayout &)>;

/// Re-runs one evolution on a ladder of ascending cutoffs and reports the
/// max-abs change of all marginals between successive rungs.
inline TruncationReport truncation_scan(const HamiltonianBuilder &builder, const StateSpec &state, double t,
                                        const std::vector<SpaceLayout> &ladder, PropagatorSettings settings = {},
                                        double threshold = 1e-6) {
    for (size_t i = 1; i < ladder.size(); ++i) {
        if (ladder[i].n_cut_b() < ladder[i - 1].n_cut_b() || ladder[i].n_cut_r() < ladder[i - 1].n_cut_r() ||
            ladder[i] == ladder[i - 1])
            throw InvalidArgument("truncation_scan: cutoffs must be ascending");
    }
    settings.check_tail = false;
    TruncationReport rep;
    rep.threshold = threshold;
    auto diff = [](const std::vector<double> &a, const std::vector<double> &b) {
        double d = 0;
        for (size_t k = 0; k < std::max(a.size(), b.size()); ++k) {
            const double x = k < a.size() ? a[k] : 0.0, y = k < b.size() ? b[k] : 0.0;
            d = std::max(d, std::abs(x - y));
        }
        return d;
    };
    for (const auto &layout : ladder) {
        const Ket psi = Propagator(builder(layout), settings).evolve(prepare_state(layout, state), t);
        TruncationStep st;
        st.layout = layout;
        st.tail_b = tail_mass(psi, Mode::breathing);
        st.tail_r = tail_mass(psi, Mode::rocking);
        st.p_b = fock_probs(psi, Mode::breathing);
        st.p_r = fock_probs(psi, Mode::rocking);
        st.spin = spin_probs(psi);
        if (!rep.steps.empty()) {
            const auto &prev = rep.steps.back();
            st.max_change = std::max({diff(prev.p_b, st.p_b), diff(prev.p_r, st.p_r),
                                      std::abs(prev.spin.down - st.spin.down), std::abs(prev.spin.up - st.spin.up)});
            if (st.max_change < threshold && rep.converged_index < 0)
                rep.converged_index = static_cast<int>(rep.steps.size()) - 1;
        }
        rep.steps.push_back(std::move(st));
    }
    rep.converged = rep.steps.size() >= 2 && rep.steps.back().max_change < threshold;
    return rep;
}

}  // namespace trilinear
