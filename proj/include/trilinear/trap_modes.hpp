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
#include <string>
#include <vector>

#include "trilinear/constants.hpp"
#include "trilinear/errors.hpp"
#include "trilinear/jacobi.hpp"

namespace trilinear {

enum class Axis { x, y, z };

inline const char *axis_name(Axis axis) {
    switch (axis) {
        case Axis::x:
            return "x";
        case Axis::y:
            return "y";
        case Axis::z:
            return "z";
    }
    return "?";
}

/// Ion species and Paul-trap secular frequencies (SI, angular).
struct TrapConfig {
    double ion_mass = 0;    // kg
    double ion_charge = constants::elementary_charge;  // C
    double omega_x = 0;     // rad/s
    double omega_y = 0;
    double omega_z = 0;
    int n_ions = 2;

    double omega(Axis axis) const {
        switch (axis) {
            case Axis::x:
                return omega_x;
            case Axis::y:
                return omega_y;
            default:
                return omega_z;
        }
    }

    /// Throws InvalidArgument unless the crystal can be linear along z.
    void validate() const {
        if (!(ion_mass > 0) || !(ion_charge > 0)) {
            throw InvalidArgument("TrapConfig: mass and charge must be positive");
        }
        if (!(omega_x > 0) || !(omega_y > 0) || !(omega_z > 0) || !std::isfinite(omega_x) ||
            !std::isfinite(omega_y) || !std::isfinite(omega_z)) {
            throw InvalidArgument("TrapConfig: trap frequencies must be finite and positive");
        }
        if (!(omega_x > omega_z) || !(omega_y > omega_z)) {
            throw InvalidArgument("TrapConfig: radial frequencies must exceed the axial frequency");
        }
        if (n_ions < 1) {
            throw InvalidArgument("TrapConfig: n_ions must be positive");
        }
    }
};

struct ModeSpectrum {
    Axis axis = Axis::z;
    std::vector<double> eigenvalues;        // dimensionless, ascending
    Eigen::MatrixXd eigenvectors;           // column p is mode p
    std::vector<double> mode_frequencies;   // rad/s
};

struct CouplingConstants {
    double length_scale = 0;       // l, m
    double ground_state_size = 0;  // z_b, m
    double lambda = 0;             // rad/s
    double omega_b = 0;
    double omega_rock_x = 0;
    double omega_rock_y = 0;
};

namespace detail {

// Gradient of U(u) = sum u_k^2 / 2 + sum_{k<j} 1 / |u_k - u_j|.
inline Eigen::VectorXd coulomb_gradient(const Eigen::VectorXd &u) {
    const Eigen::Index n = u.size();
    Eigen::VectorXd g = u;
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == k) continue;
            const double d = u[k] - u[j];
            g[k] -= (d > 0 ? 1.0 : -1.0) / (d * d);
        }
    }
    return g;
}

inline Eigen::MatrixXd coulomb_hessian(const Eigen::VectorXd &u) {
    const Eigen::Index n = u.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == k) continue;
            const double c = 2.0 / std::pow(std::abs(u[k] - u[j]), 3);
            h(k, k) += c;
            h(k, j) -= c;
        }
    }
    return h;
}

}  // namespace detail

/// Dimensionless equilibrium positions u_k of a linear crystal, ascending.
///
/// Damped Newton on the force balance with an analytic Jacobian, seeded by
/// uniform spacing. Converged means max |grad U| < 1e-12.
inline std::vector<double> equilibrium_positions(const TrapConfig &cfg, int max_iterations = 200) {
    cfg.validate();
    const int n = cfg.n_ions;
    if (n < 2) {
        throw InvalidArgument("equilibrium_positions: need at least two ions");
    }
    const double spacing = 2.018 / std::pow(static_cast<double>(n), 0.559);
    Eigen::VectorXd u(n);
    for (int k = 0; k < n; ++k) u[k] = (k - 0.5 * (n - 1)) * spacing;

    auto ordered = [](const Eigen::VectorXd &v) {
        for (Eigen::Index k = 1; k < v.size(); ++k)
            if (!(v[k] > v[k - 1])) return false;
        return true;
    };

    Eigen::VectorXd g = detail::coulomb_gradient(u);
    for (int it = 0; it < max_iterations; ++it) {
        if (g.lpNorm<Eigen::Infinity>() < 1e-12) {
            std::vector<double> out(u.data(), u.data() + n);
            // Symmetrize away rounding in the centre of mass.
            const double mean = u.mean();
            for (auto &x : out) x -= mean;
            return out;
        }
        const Eigen::VectorXd step = detail::coulomb_hessian(u).ldlt().solve(-g);
        double alpha = 1.0;
        const double g0 = g.norm();
        for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
            Eigen::VectorXd trial = u + alpha * step;
            if (!ordered(trial)) continue;
            Eigen::VectorXd gt = detail::coulomb_gradient(trial);
            if (gt.norm() < g0 || ls == 39) {
                u = trial;
                g = gt;
                break;
            }
        }
    }
    if (g.lpNorm<Eigen::Infinity>() < 1e-12) {
        return {u.data(), u.data() + n};
    }
    throw ConvergenceError("equilibrium_positions: Newton iteration did not converge");
}

/// Harmonic stiffness matrix along `axis`, in units of m * omega_z^2.
inline Eigen::MatrixXd stiffness_matrix(const TrapConfig &cfg, Axis axis, const std::vector<double> &u) {
    const auto n = static_cast<Eigen::Index>(u.size());
    const double beta = cfg.omega(axis) / cfg.omega_z;
    const double b = axis == Axis::z ? 2.0 : -1.0;
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        double diag = beta * beta;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == k) continue;
            const double c = b / std::pow(std::abs(u[static_cast<size_t>(k)] - u[static_cast<size_t>(r)]), 3);
            diag += c;
            a(k, r) = -c;
        }
        a(k, k) = diag;
    }
    return a;
}

/// Eigen-decomposition of a stiffness matrix. Frequencies are sqrt(gamma) * omega_z
/// because the matrix is normalised by omega_z^2 on every axis.
inline ModeSpectrum normal_modes(const Eigen::MatrixXd &a, Axis axis = Axis::z, double omega_z = 1.0) {
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
        throw InvalidArgument("normal_modes: matrix is not symmetric");
    }
    auto eig = jacobi_eigen<double>(a);
    ModeSpectrum out;
    out.axis = axis;
    out.eigenvectors = eig.vectors;
    for (Eigen::Index p = 0; p < eig.values.size(); ++p) {
        const double gamma = eig.values[p];
        if (gamma <= 0) {
            throw UnstableCrystal(std::string("normal_modes: non-positive eigenvalue on axis ") +
                                  axis_name(axis) + ", unstable crystal");
        }
        out.eigenvalues.push_back(gamma);
        out.mode_frequencies.push_back(std::sqrt(gamma) * omega_z);
    }
    return out;
}

inline ModeSpectrum mode_spectrum(const TrapConfig &cfg, Axis axis) {
    const auto u = equilibrium_positions(cfg);
    return normal_modes(stiffness_matrix(cfg, axis, u), axis, cfg.omega_z);
}

/// Length scale, breathing-mode ground-state size and trilinear coupling of a two-ion crystal.
inline CouplingConstants trilinear_coupling(const TrapConfig &cfg) {
    cfg.validate();
    if (cfg.n_ions != 2) {
        throw Unsupported("trilinear_coupling: only two-ion crystals are supported");
    }
    CouplingConstants c;
    const double coulomb = cfg.ion_charge * cfg.ion_charge / (4.0 * std::numbers::pi * constants::epsilon0);
    c.length_scale = std::cbrt(coulomb / (cfg.ion_mass * cfg.omega_z * cfg.omega_z));
    if (!std::isfinite(c.length_scale) || !(c.length_scale > 0)) {
        throw InvalidArgument("trilinear_coupling: length scale is not finite");
    }
    // Breathing is the upper axial mode; rocking is the lower radial mode.
    c.omega_b = mode_spectrum(cfg, Axis::z).mode_frequencies.back();
    c.omega_rock_x = mode_spectrum(cfg, Axis::x).mode_frequencies.front();
    c.omega_rock_y = mode_spectrum(cfg, Axis::y).mode_frequencies.front();
    c.ground_state_size = std::sqrt(constants::hbar / (2.0 * cfg.ion_mass * c.omega_b));
    c.lambda = c.omega_b * c.ground_state_size / (std::pow(2.0, 5.0 / 6.0) * c.length_scale);
    return c;
}

enum class Scheme { case1 = 1, case2 = 2 };

struct ResonanceReport {
    Scheme scheme = Scheme::case1;
    double detuning = 0;          // rad/s
    double omega_b = 0;
    double omega_rock = 0;        // rocking frequency the resonance demands
    double required_omega_x = 0;
    double lambda = 0;
    double omega_rock_y = 0;
    double threshold_ratio = 20;
    bool breathing_fast = false;   // omega_b / lambda >= threshold
    bool y_mode_detuned = false;   // |omega_rock_y - omega_b| / lambda >= threshold
    bool warning() const { return !breathing_fast || !y_mode_detuned; }
};

/// Radial frequency needed for omega_b = 2 omega_rock + omega (case 1) or
/// omega_b = 2 omega_rock - omega (case 2), plus the rotating-wave validity flags.
inline ResonanceReport resonance_check(const TrapConfig &cfg, Scheme scheme, double detuning,
                                       double threshold_ratio = 20.0) {
    cfg.validate();
    ResonanceReport r;
    r.scheme = scheme;
    r.detuning = detuning;
    r.threshold_ratio = threshold_ratio;
    const auto c = trilinear_coupling(cfg);
    r.omega_b = c.omega_b;
    r.lambda = c.lambda;
    r.omega_rock_y = c.omega_rock_y;
    r.omega_rock = scheme == Scheme::case1 ? 0.5 * (c.omega_b - detuning) : 0.5 * (c.omega_b + detuning);
    if (!(r.omega_rock > 0)) {
        throw InvalidArgument("resonance_check: no real radial frequency satisfies the resonance");
    }
    r.required_omega_x = std::hypot(r.omega_rock, cfg.omega_z);
    r.breathing_fast = r.omega_b / r.lambda >= threshold_ratio;
    r.y_mode_detuned = std::abs(r.omega_rock_y - r.omega_b) / r.lambda >= threshold_ratio;
    return r;
}

}  // namespace trilinear
