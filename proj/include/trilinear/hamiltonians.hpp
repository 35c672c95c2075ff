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

#include <cmath>
#include <string>
#include <vector>

#include "trilinear/errors.hpp"
#include "trilinear/fock_algebra.hpp"
#include "trilinear/trap_modes.hpp"

// Rotating-frame Hamiltonians of the two sensing schemes. Every operator is
// expressed as H / hbar, i.e. in rad/s.

namespace trilinear {

/// Sensing-scheme drive. `g` is g_b for case 1 and g_r for case 2.
struct DriveConfig {
    Scheme scheme = Scheme::case1;
    double g = 0;         // rad/s
    double omega = 0;     // detuning, rad/s
    double lambda = 0;    // rad/s
    double duration = 0;  // s

    static constexpr double weak_coupling_limit = 0.3;

    double g_over_omega() const { return g / omega; }
    double lambda_over_omega() const { return lambda / omega; }

    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (!(std::abs(g_over_omega()) <= weak_coupling_limit))
            w.push_back("g/omega = " + csv::format_double(g_over_omega(), 4) + " is outside the weak-coupling regime");
        if (!(std::abs(lambda_over_omega()) <= weak_coupling_limit))
            w.push_back("lambda/omega = " + csv::format_double(lambda_over_omega(), 4) +
                        " is outside the weak-coupling regime");
        return w;
    }
};

namespace detail {

inline void require_scheme(const DriveConfig &cfg, Scheme s, const char *who) {
    if (cfg.scheme != s) throw InvalidArgument(std::string(who) + ": drive configuration has the wrong case");
}

inline void require_detuning(const DriveConfig &cfg, const char *who) {
    if (!(cfg.omega != 0.0) || !std::isfinite(cfg.omega))
        throw InvalidArgument(std::string(who) + ": detuning omega must be non-zero");
}

inline Eigen::MatrixXd pow_matrix(const Eigen::MatrixXd &m, int k) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    for (int i = 0; i < k; ++i) out = out * m;
    return out;
}

inline Eigen::Matrix2cd sigma_x() { return pauli_matrix(PauliAxis::x); }

struct Factors {
    Eigen::MatrixXd ab, ar, ib, ir, nb, nr;
    explicit Factors(const SpaceLayout &L)
        : ab(factors::annihilator(L.n_cut_b())),
          ar(factors::annihilator(L.n_cut_r())),
          ib(factors::identity(L.n_cut_b())),
          ir(factors::identity(L.n_cut_r())),
          nb(factors::number(L.n_cut_b())),
          nr(factors::number(L.n_cut_r())) {}
};

}  // namespace detail

/// lambda (a_b a_r^+2 + a_b^+ a_r^2)
inline LinOp h_trilinear(const SpaceLayout &layout, double lambda) {
    detail::Factors f(layout);
    const Eigen::MatrixXd ar2 = f.ar * f.ar;
    const auto I2 = factors::spin_identity();
    return LinOp(layout,
                 lambda * (tensor(layout, I2, f.ab, ar2.transpose()).matrix() +
                           tensor(layout, I2, f.ab.transpose(), ar2).matrix()),
                 true);
}

/// Free part: omega n_b (case 1) or omega (n_b + n_r) (case 2).
inline LinOp h_free(const SpaceLayout &layout, const DriveConfig &cfg) {
    detail::Factors f(layout);
    const auto I2 = factors::spin_identity();
    ComplexMatrix m = cfg.omega * tensor(layout, I2, f.nb, f.ir).matrix();
    if (cfg.scheme == Scheme::case2) m += cfg.omega * tensor(layout, I2, f.ib, f.nr).matrix();
    return LinOp(layout, std::move(m), true);
}

/// Spin-phonon plus trilinear part: g sigma^x (a + a^+) + trilinear, with a = a_b (case 1) or a_r (case 2).
inline LinOp h_spin_boson(const SpaceLayout &layout, const DriveConfig &cfg) {
    detail::Factors f(layout);
    const auto sx = detail::sigma_x();
    ComplexMatrix m = cfg.scheme == Scheme::case1
                          ? tensor(layout, sx, f.ab + f.ab.transpose(), f.ir).matrix()
                          : tensor(layout, sx, f.ib, f.ar + f.ar.transpose()).matrix();
    m *= cfg.g;
    m += h_trilinear(layout, cfg.lambda).matrix();
    return LinOp(layout, std::move(m), true);
}

inline LinOp h_case1(const SpaceLayout &layout, const DriveConfig &cfg) {
    detail::require_scheme(cfg, Scheme::case1, "h_case1");
    return h_free(layout, cfg) + h_spin_boson(layout, cfg);
}

inline LinOp h_case2(const SpaceLayout &layout, const DriveConfig &cfg) {
    detail::require_scheme(cfg, Scheme::case2, "h_case2");
    return h_free(layout, cfg) + h_spin_boson(layout, cfg);
}

/// (lambda^2 / omega) { 4 n_b (n_r + 1/2) - a_r^+2 a_r^2 }
inline LinOp h_residual(const SpaceLayout &layout, double lambda, double omega) {
    detail::Factors f(layout);
    const auto I2 = factors::spin_identity();
    const Eigen::MatrixXd ar2 = f.ar * f.ar;
    ComplexMatrix m = 4.0 * tensor(layout, I2, f.nb, f.nr + 0.5 * f.ir).matrix() -
                      tensor(layout, I2, f.ib, ar2.transpose() * ar2).matrix();
    return LinOp(layout, (lambda * lambda / omega) * m, true);
}

/// Spin-dependent squeezing: omega n_b - (g lambda / omega) sigma^x (a_r^+2 + a_r^2) [+ residual].
inline LinOp h_eff_case1(const SpaceLayout &layout, const DriveConfig &cfg, bool include_residual = false) {
    detail::require_scheme(cfg, Scheme::case1, "h_eff_case1");
    detail::require_detuning(cfg, "h_eff_case1");
    detail::Factors f(layout);
    const Eigen::MatrixXd ar2 = f.ar * f.ar;
    ComplexMatrix m = h_free(layout, cfg).matrix() -
                      (cfg.g * cfg.lambda / cfg.omega) *
                          tensor(layout, detail::sigma_x(), f.ib, ar2 + ar2.transpose()).matrix();
    if (include_residual) m += h_residual(layout, cfg.lambda, cfg.omega).matrix();
    return LinOp(layout, std::move(m), true);
}

/// Spin-dependent beam splitter: omega (n_b + n_r) - (2 g lambda / omega) sigma^x (a_b^+ a_r + a_b a_r^+) [- residual].
inline LinOp h_eff_case2(const SpaceLayout &layout, const DriveConfig &cfg, bool include_residual = false) {
    detail::require_scheme(cfg, Scheme::case2, "h_eff_case2");
    detail::require_detuning(cfg, "h_eff_case2");
    detail::Factors f(layout);
    const auto sx = detail::sigma_x();
    ComplexMatrix m = h_free(layout, cfg).matrix() -
                      (2.0 * cfg.g * cfg.lambda / cfg.omega) *
                          (tensor(layout, sx, f.ab.transpose(), f.ar).matrix() +
                           tensor(layout, sx, f.ab, f.ar.transpose()).matrix());
    if (include_residual) m -= h_residual(layout, cfg.lambda, cfg.omega).matrix();
    return LinOp(layout, std::move(m), true);
}

inline LinOp h_effective(const SpaceLayout &layout, const DriveConfig &cfg, bool include_residual = false) {
    return cfg.scheme == Scheme::case1 ? h_eff_case1(layout, cfg, include_residual)
                                       : h_eff_case2(layout, cfg, include_residual);
}

inline LinOp h_exact(const SpaceLayout &layout, const DriveConfig &cfg) {
    return cfg.scheme == Scheme::case1 ? h_case1(layout, cfg) : h_case2(layout, cfg);
}

/// Anti-hermitian Schrieffer-Wolff generator S with H_sb + [H_0, S] = 0.
///
/// case 1: (g/omega) sigma^x (a_b - a_b^+) + (lambda/omega)(a_b a_r^+2 - a_b^+ a_r^2)
/// case 2: (g/omega) sigma^x (a_r - a_r^+) + (lambda/omega)(a_b^+ a_r^2 - a_b a_r^+2)
inline LinOp sw_generator(const SpaceLayout &layout, const DriveConfig &cfg) {
    detail::require_detuning(cfg, "sw_generator");
    detail::Factors f(layout);
    const auto I2 = factors::spin_identity();
    const auto sx = detail::sigma_x();
    const Eigen::MatrixXd ar2 = f.ar * f.ar;
    const ComplexMatrix pair_up = tensor(layout, I2, f.ab, ar2.transpose()).matrix();    // a_b a_r^+2
    const ComplexMatrix pair_down = tensor(layout, I2, f.ab.transpose(), ar2).matrix();  // a_b^+ a_r^2
    ComplexMatrix s;
    if (cfg.scheme == Scheme::case1) {
        s = (cfg.g / cfg.omega) * tensor(layout, sx, f.ab - f.ab.transpose(), f.ir).matrix() +
            (cfg.lambda / cfg.omega) * (pair_up - pair_down);
    } else {
        s = (cfg.g / cfg.omega) * tensor(layout, sx, f.ib, f.ar - f.ar.transpose()).matrix() +
            (cfg.lambda / cfg.omega) * (pair_down - pair_up);
    }
    return LinOp(layout, std::move(s), false);
}

}  // namespace trilinear
