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
#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "trilinear/csv.hpp"
#include "trilinear/errors.hpp"

namespace trilinear {

using cplx = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

enum class Mode { breathing, rocking };

inline const char *mode_name(Mode m) { return m == Mode::breathing ? "breathing" : "rocking"; }

/// Truncated spin-1/2 x breathing x rocking space.
///
/// Basis index = spin + 2 * (n_r + (n_cut_r + 1) * n_b), i.e. row-major over
/// (n_b, n_r, spin) with the spin fastest; spin down = 0, up = 1.
class SpaceLayout {
   public:
    SpaceLayout(int n_cut_b, int n_cut_r) : n_cut_b_(n_cut_b), n_cut_r_(n_cut_r) {
        if (n_cut_b < 0 || n_cut_r < 0) {
            throw InvalidArgument("SpaceLayout: cutoffs must be non-negative");
        }
    }

    int n_cut_b() const { return n_cut_b_; }
    int n_cut_r() const { return n_cut_r_; }
    int cutoff(Mode m) const { return m == Mode::breathing ? n_cut_b_ : n_cut_r_; }
    Eigen::Index dim() const { return 2 * Eigen::Index(n_cut_b_ + 1) * (n_cut_r_ + 1); }

    Eigen::Index index(int spin, int n_b, int n_r) const {
        return spin + 2 * (n_r + Eigen::Index(n_cut_r_ + 1) * n_b);
    }
    int spin_of(Eigen::Index i) const { return static_cast<int>(i % 2); }
    int n_r_of(Eigen::Index i) const { return static_cast<int>((i / 2) % (n_cut_r_ + 1)); }
    int n_b_of(Eigen::Index i) const { return static_cast<int>((i / 2) / (n_cut_r_ + 1)); }

    bool operator==(const SpaceLayout &) const = default;

   private:
    int n_cut_b_;
    int n_cut_r_;
};

/// Normalized state vector on a SpaceLayout.
class Ket {
   public:
    static constexpr double norm_tolerance = 1e-9;

    Ket(SpaceLayout layout, ComplexVector amplitudes) : layout_(layout), amp_(std::move(amplitudes)) {
        if (amp_.size() != layout_.dim()) {
            throw InvalidArgument("Ket: amplitude vector does not match layout dimension");
        }
        const double n = amp_.norm();
        if (!(std::abs(n - 1.0) <= norm_tolerance)) {
            throw NormBreach("Ket: state norm " + csv::format_double(n, 15) + " deviates from 1");
        }
    }

    /// Rescales an arbitrary non-zero vector to unit norm.
    static Ket normalized(SpaceLayout layout, ComplexVector v) {
        const double n = v.norm();
        if (!(n > 0) || !std::isfinite(n)) {
            throw InvalidArgument("Ket::normalized: zero or non-finite vector");
        }
        v /= n;
        return Ket(layout, std::move(v));
    }

    const SpaceLayout &layout() const { return layout_; }
    const ComplexVector &amplitudes() const { return amp_; }
    cplx amplitude(int spin, int n_b, int n_r) const { return amp_[layout_.index(spin, n_b, n_r)]; }
    double norm() const { return amp_.norm(); }

   private:
    SpaceLayout layout_;
    ComplexVector amp_;
};

/// Dense operator on a SpaceLayout; the hermitian flag is verified when set.
class LinOp {
   public:
    static constexpr double hermitian_tolerance = 1e-12;

    LinOp(SpaceLayout layout, ComplexMatrix m, bool hermitian = false)
        : layout_(layout), m_(std::move(m)), hermitian_(hermitian) {
        if (m_.rows() != layout_.dim() || m_.cols() != layout_.dim()) {
            throw InvalidArgument("LinOp: matrix does not match layout dimension");
        }
        if (hermitian_ && hermiticity_defect() > hermitian_tolerance * std::max(1.0, max_abs())) {
            throw InvalidArgument("LinOp: matrix flagged hermitian is not");
        }
    }

    static LinOp identity(SpaceLayout layout) {
        return LinOp(layout, ComplexMatrix::Identity(layout.dim(), layout.dim()), true);
    }
    static LinOp zero(SpaceLayout layout) {
        return LinOp(layout, ComplexMatrix::Zero(layout.dim(), layout.dim()), true);
    }

    const SpaceLayout &layout() const { return layout_; }
    const ComplexMatrix &matrix() const { return m_; }
    bool hermitian() const { return hermitian_; }
    cplx element(Eigen::Index row, Eigen::Index col) const { return m_(row, col); }

    double max_abs() const { return m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0; }
    double hermiticity_defect() const {
        return m_.size() ? (m_ - m_.adjoint()).cwiseAbs().maxCoeff() : 0.0;
    }
    /// True when every imaginary part is exactly zero.
    bool is_real() const { return m_.imag().cwiseAbs().maxCoeff() == 0.0; }

    LinOp adjoint() const { return LinOp(layout_, m_.adjoint(), hermitian_); }

    ComplexVector apply(const ComplexVector &v) const { return m_ * v; }
    ComplexVector apply(const Ket &k) const { return m_ * k.amplitudes(); }

    /// <psi| M |psi>
    cplx expectation(const Ket &k) const { return k.amplitudes().dot(m_ * k.amplitudes()); }
    cplx expectation(const ComplexVector &v) const { return v.dot(m_ * v); }

    friend LinOp operator+(const LinOp &a, const LinOp &b) {
        check_same(a, b);
        return LinOp(a.layout_, a.m_ + b.m_, a.hermitian_ && b.hermitian_);
    }
    friend LinOp operator-(const LinOp &a, const LinOp &b) {
        check_same(a, b);
        return LinOp(a.layout_, a.m_ - b.m_, a.hermitian_ && b.hermitian_);
    }
    friend LinOp operator*(const LinOp &a, const LinOp &b) {
        check_same(a, b);
        return LinOp(a.layout_, a.m_ * b.m_, false);
    }
    friend LinOp operator*(double s, const LinOp &a) { return LinOp(a.layout_, s * a.m_, a.hermitian_); }
    friend LinOp operator*(cplx s, const LinOp &a) {
        return LinOp(a.layout_, s * a.m_, a.hermitian_ && s.imag() == 0.0);
    }

   private:
    static void check_same(const LinOp &a, const LinOp &b) {
        if (!(a.layout_ == b.layout_)) throw InvalidArgument("LinOp: layout mismatch");
    }

    SpaceLayout layout_;
    ComplexMatrix m_;
    bool hermitian_;
};

inline LinOp commutator(const LinOp &a, const LinOp &b) { return a * b - b * a; }

namespace factors {

/// Truncated single-mode annihilator on {0..cutoff}.
inline Eigen::MatrixXd annihilator(int cutoff) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
    for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Eigen::MatrixXd number(int cutoff) {
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
    for (int k = 0; k <= cutoff; ++k) n(k, k) = k;
    return n;
}

inline Eigen::MatrixXd identity(int cutoff) { return Eigen::MatrixXd::Identity(cutoff + 1, cutoff + 1); }

inline Eigen::Matrix2cd spin_identity() { return Eigen::Matrix2cd::Identity(); }

}  // namespace factors

/// Builds spin (x) breathing (x) rocking from per-factor matrices without
/// forming dense products of full-space operators.
inline LinOp tensor(const SpaceLayout &layout, const Eigen::Matrix2cd &spin, const Eigen::MatrixXd &b,
                    const Eigen::MatrixXd &r, bool hermitian = false) {
    const int nb = layout.n_cut_b() + 1, nr = layout.n_cut_r() + 1;
    if (b.rows() != nb || b.cols() != nb || r.rows() != nr || r.cols() != nr) {
        throw InvalidArgument("tensor: factor shape does not match layout");
    }
    ComplexMatrix m = ComplexMatrix::Zero(layout.dim(), layout.dim());
    for (int b1 = 0; b1 < nb; ++b1)
        for (int b2 = 0; b2 < nb; ++b2) {
            if (b(b1, b2) == 0.0) continue;
            for (int r1 = 0; r1 < nr; ++r1)
                for (int r2 = 0; r2 < nr; ++r2) {
                    const double br = b(b1, b2) * r(r1, r2);
                    if (br == 0.0) continue;
                    for (int s1 = 0; s1 < 2; ++s1)
                        for (int s2 = 0; s2 < 2; ++s2)
                            m(layout.index(s1, b1, r1), layout.index(s2, b2, r2)) += br * spin(s1, s2);
                }
        }
    return LinOp(layout, std::move(m), hermitian);
}

/// a_b or a_r on the full space.
inline LinOp annihilator(const SpaceLayout &layout, Mode mode) {
    if (mode == Mode::breathing)
        return tensor(layout, factors::spin_identity(), factors::annihilator(layout.n_cut_b()),
                      factors::identity(layout.n_cut_r()));
    return tensor(layout, factors::spin_identity(), factors::identity(layout.n_cut_b()),
                  factors::annihilator(layout.n_cut_r()));
}

inline LinOp creator(const SpaceLayout &layout, Mode mode) { return annihilator(layout, mode).adjoint(); }

inline LinOp number_operator(const SpaceLayout &layout, Mode mode) {
    if (mode == Mode::breathing)
        return tensor(layout, factors::spin_identity(), factors::number(layout.n_cut_b()),
                      factors::identity(layout.n_cut_r()), true);
    return tensor(layout, factors::spin_identity(), factors::identity(layout.n_cut_b()),
                  factors::number(layout.n_cut_r()), true);
}

enum class PauliAxis { x, y, z, plus, minus };

/// 2x2 Pauli matrix in the {down, up} basis; sigma^+ raises down to up.
inline Eigen::Matrix2cd pauli_matrix(PauliAxis axis) {
    const cplx i(0, 1);
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    switch (axis) {
        case PauliAxis::x:
            m << 0, 1, 1, 0;
            break;
        case PauliAxis::y:
            // sigma^y |down> = -i |up>, so that sigma^+ = (sigma^x + i sigma^y) / 2 = |up><down|.
            m << 0, i, -i, 0;
            break;
        case PauliAxis::z:
            m << -1, 0, 0, 1;
            break;
        case PauliAxis::plus:
            m(1, 0) = 1;
            break;
        case PauliAxis::minus:
            m(0, 1) = 1;
            break;
    }
    return m;
}

inline LinOp pauli(const SpaceLayout &layout, PauliAxis axis) {
    const bool herm = axis == PauliAxis::x || axis == PauliAxis::y || axis == PauliAxis::z;
    return tensor(layout, pauli_matrix(axis), factors::identity(layout.n_cut_b()),
                  factors::identity(layout.n_cut_r()), herm);
}

// ---------------------------------------------------------------------------
// State preparation

enum class SpinState { down, up, plus, minus };

/// Motional part of an initial state.
///   fock(n_b, n_r)   |n_b, n_r>
///   twin(n)          |n, n>
///   noon(n)          (|n, 0> + |0, n>) / sqrt(2)
///   binomial(n)      (a_b^+ + a_r^+)^n / sqrt(2^n n!) |0, 0>
struct MotionSpec {
    enum class Kind { fock, twin, noon, binomial };
    Kind kind = Kind::fock;
    int n_b = 0;
    int n_r = 0;
    int n = 0;

    static MotionSpec fock(int nb, int nr) { return {Kind::fock, nb, nr, 0}; }
    static MotionSpec twin(int n) { return {Kind::twin, 0, 0, n}; }
    static MotionSpec noon(int n) { return {Kind::noon, 0, 0, n}; }
    static MotionSpec binomial(int n) { return {Kind::binomial, 0, 0, n}; }

    int max_breathing() const {
        switch (kind) {
            case Kind::fock:
                return n_b;
            default:
                return n;
        }
    }
    int max_rocking() const {
        switch (kind) {
            case Kind::fock:
                return n_r;
            default:
                return n;
        }
    }

    std::string to_string() const {
        switch (kind) {
            case Kind::fock:
                return "fock(" + std::to_string(n_b) + "," + std::to_string(n_r) + ")";
            case Kind::twin:
                return "twin(" + std::to_string(n) + ")";
            case Kind::noon:
                return "noon(" + std::to_string(n) + ")";
            case Kind::binomial:
                return "binomial(" + std::to_string(n) + ")";
        }
        return {};
    }
};

struct StateSpec {
    SpinState spin = SpinState::down;
    MotionSpec motion;
};

inline std::string spin_to_string(SpinState s) {
    switch (s) {
        case SpinState::down:
            return "down";
        case SpinState::up:
            return "up";
        case SpinState::plus:
            return "+";
        case SpinState::minus:
            return "-";
    }
    return {};
}

inline SpinState parse_spin(const std::string &text) {
    if (text == "down" || text == "d") return SpinState::down;
    if (text == "up" || text == "u") return SpinState::up;
    if (text == "+" || text == "plus") return SpinState::plus;
    if (text == "-" || text == "minus") return SpinState::minus;
    throw InvalidArgument("unknown spin state '" + text + "'");
}

/// Parses "fock(2,0)", "twin(5)", "noon(3)" or "binomial(2)"; whitespace ignored.
inline MotionSpec parse_motion(const std::string &raw) {
    std::string text;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) text += c;
    const auto open = text.find('('), close = text.rfind(')');
    if (open == std::string::npos || close != text.size() - 1 || close < open) {
        throw InvalidArgument("malformed motional state '" + raw + "'");
    }
    const std::string name = text.substr(0, open);
    std::vector<int> args;
    std::stringstream ss(text.substr(open + 1, close - open - 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0;
        if (!csv::parse_double(item, v) || v < 0 || v != std::floor(v) || v > 1e6) {
            throw InvalidArgument("malformed motional state argument '" + item + "'");
        }
        args.push_back(static_cast<int>(v));
    }
    if (name == "fock" && args.size() == 2) return MotionSpec::fock(args[0], args[1]);
    if (name == "twin" && args.size() == 1) return MotionSpec::twin(args[0]);
    if (name == "noon" && args.size() == 1) return MotionSpec::noon(args[0]);
    if (name == "binomial" && args.size() == 1) return MotionSpec::binomial(args[0]);
    throw InvalidArgument("unknown motional state '" + raw + "'");
}

inline std::array<cplx, 2> spin_amplitudes(SpinState s) {
    const double h = 1.0 / std::sqrt(2.0);
    switch (s) {
        case SpinState::down:
            return {1.0, 0.0};
        case SpinState::up:
            return {0.0, 1.0};
        case SpinState::plus:
            return {h, h};
        case SpinState::minus:
            return {-h, h};  // (|up> - |down>) / sqrt(2)
    }
    return {1.0, 0.0};
}

/// Two-mode amplitudes c(n_b, n_r) of the motional spec, unnormalized entries dropped.
struct MotionalTerm {
    int n_b;
    int n_r;
    double amplitude;
};

inline std::vector<MotionalTerm> motional_terms(const MotionSpec &m) {
    switch (m.kind) {
        case MotionSpec::Kind::fock:
            return {{m.n_b, m.n_r, 1.0}};
        case MotionSpec::Kind::twin:
            return {{m.n, m.n, 1.0}};
        case MotionSpec::Kind::noon: {
            if (m.n == 0) return {{0, 0, 1.0}};
            const double h = 1.0 / std::sqrt(2.0);
            return {{m.n, 0, h}, {0, m.n, h}};
        }
        case MotionSpec::Kind::binomial: {
            // sqrt(C(n, k) / 2^n) on |k, n - k>.
            std::vector<MotionalTerm> out;
            for (int k = 0; k <= m.n; ++k) {
                const double log_c = std::lgamma(m.n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m.n - k + 1.0);
                out.push_back({k, m.n - k, std::exp(0.5 * (log_c - m.n * std::log(2.0)))});
            }
            return out;
        }
    }
    return {};
}

/// Product state spin (x) motion. Every occupied Fock index must stay at or
/// below cutoff - margin.
inline Ket prepare_state(const SpaceLayout &layout, const StateSpec &spec, int margin = 0) {
    if (spec.motion.max_breathing() > layout.n_cut_b() - margin ||
        spec.motion.max_rocking() > layout.n_cut_r() - margin) {
        throw InvalidArgument("prepare_state: " + spec.motion.to_string() + " exceeds the Fock cutoff");
    }
    ComplexVector v = ComplexVector::Zero(layout.dim());
    const auto spin = spin_amplitudes(spec.spin);
    for (const auto &t : motional_terms(spec.motion))
        for (int s = 0; s < 2; ++s) v[layout.index(s, t.n_b, t.n_r)] += spin[s] * t.amplitude;
    return Ket::normalized(layout, std::move(v));
}

// ---------------------------------------------------------------------------
// Marginals

/// Marginal distribution over one mode's Fock index.
inline std::vector<double> fock_probs(const Ket &psi, Mode mode) {
    const auto &L = psi.layout();
    std::vector<double> p(static_cast<size_t>(L.cutoff(mode) + 1), 0.0);
    const auto &a = psi.amplitudes();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const int n = mode == Mode::breathing ? L.n_b_of(i) : L.n_r_of(i);
        p[static_cast<size_t>(n)] += std::norm(a[i]);
    }
    return p;
}

struct SpinProbs {
    double down = 0;
    double up = 0;
};

inline SpinProbs spin_probs(const Ket &psi) {
    SpinProbs p;
    const auto &a = psi.amplitudes();
    for (Eigen::Index i = 0; i < a.size(); i += 2) {
        p.down += std::norm(a[i]);
        p.up += std::norm(a[i + 1]);
    }
    return p;
}

/// Population on the last `rows` Fock levels of a mode.
inline double tail_mass(const Ket &psi, Mode mode, int rows = 2) {
    const auto p = fock_probs(psi, mode);
    double s = 0;
    for (int k = 0; k < rows && k < static_cast<int>(p.size()); ++k) s += p[p.size() - 1 - static_cast<size_t>(k)];
    return s;
}

// ---------------------------------------------------------------------------
// CSV snapshots: "index,re,im" with a header row, 17 significant digits.

inline void write_ket_csv(std::ostream &os, const Ket &psi) {
    os << "index,re,im\n";
    const auto &a = psi.amplitudes();
    for (Eigen::Index i = 0; i < a.size(); ++i)
        os << i << ',' << csv::format_double(a[i].real(), 17) << ',' << csv::format_double(a[i].imag(), 17) << '\n';
}

inline Ket read_ket_csv(std::istream &is, const SpaceLayout &layout) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("index,re,im", 0) != 0) {
        throw InvalidArgument("read_ket_csv: missing header");
    }
    ComplexVector v = ComplexVector::Zero(layout.dim());
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string f0, f1, f2;
        double idx = 0, re = 0, im = 0;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2) ||
            !csv::parse_double(f0, idx) || !csv::parse_double(f1, re) || !csv::parse_double(f2, im) || idx < 0 ||
            idx >= static_cast<double>(layout.dim())) {
            throw InvalidArgument("read_ket_csv: malformed row '" + line + "'");
        }
        v[static_cast<Eigen::Index>(idx)] = cplx(re, im);
    }
    return Ket(layout, std::move(v));
}

}  // namespace trilinear
