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
#include <functional>
#include <future>
#include <string>
#include <vector>

#include "trilinear/errors.hpp"
#include "trilinear/fock_algebra.hpp"

namespace trilinear {

using PmfFunction = std::function<std::vector<double>(double)>;
using StateFunction = std::function<ComplexVector(double)>;

enum class DerivativeMode { analytic, central_difference };

/// lambda -> outcome probabilities, plus how to differentiate it.
struct ProbabilityModel {
    PmfFunction evaluator;
    DerivativeMode derivative_mode = DerivativeMode::central_difference;
    PmfFunction derivative;     // d p / d lambda, required for DerivativeMode::analytic
    double fd_rel_step = 1e-4;  // step = fd_rel_step * |lambda|
    double fd_abs_step = 0;     // used instead when lambda == 0; must then be positive
    bool concurrent = false;    // evaluate the finite-difference probes in parallel
};

struct FisherResult {
    double value = 0;
    double dropped_mass = 0;             // probability of outcomes under the floor
    double dropped_derivative_mass = 0;  // sum |dp/dlambda| over those outcomes
    size_t outcomes_used = 0;
};

struct EstimationResult {
    double cfi = 0;
    double qfi = 0;
    double delta_lambda = 0;  // rad/s, from the CFI
    int nu = 1;
};

namespace detail {

inline constexpr double outcome_floor = 1e-12;
inline constexpr double pmf_tolerance = 1e-9;

inline void validate_pmf(const std::vector<double> &p) {
    double s = 0;
    for (double x : p) {
        if (!(x >= -pmf_tolerance)) throw InvalidArgument("cfi: probability vector has a negative entry");
        s += x;
    }
    if (!(std::abs(s - 1.0) <= pmf_tolerance))
        throw InvalidArgument("cfi: probability vector sums to " + std::to_string(s));
}

inline double fd_step(double lambda, double rel, double abs_step) {
    if (lambda != 0.0) return rel * std::abs(lambda);
    if (!(abs_step > 0)) throw InvalidArgument("finite difference at lambda = 0 needs a positive absolute step");
    return abs_step;
}

/// Evaluates f at each point, optionally concurrently; order preserved.
template <typename F>
auto evaluate_all(const F &f, const std::vector<double> &points, bool concurrent) {
    using R = decltype(f(points[0]));
    std::vector<R> out;
    out.reserve(points.size());
    if (!concurrent) {
        for (double x : points) out.push_back(f(x));
        return out;
    }
    std::vector<std::future<R>> jobs;
    for (double x : points) jobs.push_back(std::async(std::launch::async, [&f, x] { return f(x); }));
    for (auto &j : jobs) out.push_back(j.get());
    return out;
}

// Central difference with one Richardson refinement from samples at
// lambda - 2h, lambda - h, lambda + h, lambda + 2h.
template <typename V>
V richardson(const V &m2, const V &m1, const V &p1, const V &p2, double h) {
    const V d1 = (p1 - m1) / (2.0 * h);
    const V d2 = (p2 - m2) / (4.0 * h);
    return (4.0 * d1 - d2) / 3.0;
}

}  // namespace detail

/// Classical Fisher information sum_n (dp_n/dlambda)^2 / p_n.
/// Outcomes with p_n below 1e-12 are dropped and their mass reported.
inline FisherResult cfi(const ProbabilityModel &model, double lambda) {
    if (!model.evaluator) throw InvalidArgument("cfi: model has no evaluator");
    const std::vector<double> p = model.evaluator(lambda);
    detail::validate_pmf(p);
    Eigen::VectorXd dp;
    if (model.derivative_mode == DerivativeMode::analytic) {
        if (!model.derivative) throw InvalidArgument("cfi: analytic mode needs a derivative function");
        const auto d = model.derivative(lambda);
        if (d.size() != p.size()) throw InvalidArgument("cfi: derivative length mismatch");
        dp = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    } else {
        const double h = detail::fd_step(lambda, model.fd_rel_step, model.fd_abs_step);
        const auto probes = detail::evaluate_all(model.evaluator,
                                                 {lambda - 2 * h, lambda - h, lambda + h, lambda + 2 * h},
                                                 model.concurrent);
        std::vector<Eigen::VectorXd> v;
        for (const auto &q : probes) {
            detail::validate_pmf(q);
            if (q.size() != p.size()) throw InvalidArgument("cfi: pmf length changes with lambda");
            v.emplace_back(Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size())));
        }
        dp = detail::richardson<Eigen::VectorXd>(v[0], v[1], v[2], v[3], h);
    }
    FisherResult out;
    for (size_t n = 0; n < p.size(); ++n) {
        const double d = dp[static_cast<Eigen::Index>(n)];
        if (p[n] < detail::outcome_floor) {
            out.dropped_mass += std::max(p[n], 0.0);
            out.dropped_derivative_mass += std::abs(d);
            continue;
        }
        out.value += d * d / p[n];
        ++out.outcomes_used;
    }
    return out;
}

/// Quantum Fisher information of a pure-state family,
/// 4 (<d psi|d psi> - |<psi|d psi>|^2), by central differences on amplitudes.
///
/// Every probed state is rotated so that the component which is largest in
/// psi(lambda) is real and non-negative before differencing.
inline double qfi_pure(const StateFunction &state_fn, double lambda, double rel_step = 1e-4, double abs_step = 0,
                       bool concurrent = false) {
    const ComplexVector psi = state_fn(lambda);
    auto check_norm = [](const ComplexVector &v) {
        if (!(std::abs(v.norm() - 1.0) <= Ket::norm_tolerance)) throw NormBreach("qfi_pure: state is not normalized");
    };
    check_norm(psi);
    Eigen::Index ref = 0;
    psi.cwiseAbs().maxCoeff(&ref);
    auto align = [ref](ComplexVector v) {
        const cplx a = v[ref];
        if (std::abs(a) > 0) v *= std::conj(a) / std::abs(a);
        return v;
    };
    const ComplexVector psi0 = align(psi);
    const double h = detail::fd_step(lambda, rel_step, abs_step);
    const auto probes = detail::evaluate_all(state_fn, {lambda - 2 * h, lambda - h, lambda + h, lambda + 2 * h},
                                             concurrent);
    std::vector<ComplexVector> v;
    for (const auto &q : probes) {
        if (q.size() != psi.size()) throw InvalidArgument("qfi_pure: state dimension changes with lambda");
        check_norm(q);
        v.push_back(align(q));
    }
    const ComplexVector d = detail::richardson<ComplexVector>(v[0], v[1], v[2], v[3], h);
    const double f = 4.0 * (d.squaredNorm() - std::norm(psi0.dot(d)));
    return std::max(f, 0.0);
}

inline double qfi_pure(const std::function<Ket(double)> &state_fn, double lambda, double rel_step = 1e-4,
                       double abs_step = 0) {
    return qfi_pure(StateFunction([&](double x) { return state_fn(x).amplitudes(); }), lambda, rel_step, abs_step);
}

inline double cramer_rao(double fisher, int nu = 1) {
    if (!(fisher > 0) || !std::isfinite(fisher)) throw InvalidArgument("cramer_rao: Fisher information must be positive");
    if (nu < 1) throw InvalidArgument("cramer_rao: repetitions must be at least 1");
    return 1.0 / std::sqrt(static_cast<double>(nu) * fisher);
}

/// QFI 8 g_b^2 t^2 / omega^2 of the effective squeezed vacuum and its bound.
struct SqueezedBound {
    double qfi = 0;
    double delta_lambda(int nu = 1) const { return cramer_rao(qfi, nu); }
};

inline SqueezedBound qfi_squeezed_analytic(double g_b, double omega, double t) {
    if (!(omega > 0)) throw InvalidArgument("qfi_squeezed_analytic: omega must be positive");
    const double f = 8.0 * g_b * g_b * t * t / (omega * omega);
    if (!(f > 0)) throw InvalidArgument("qfi_squeezed_analytic: zero information, the bound diverges");
    return {f};
}

enum class SensingScheme { fock_nb, twin_fock, ramsey_n };

struct AnalyticCfiParams {
    double g = 0;      // g_r, rad/s
    double omega = 0;  // rad/s
    double t = 0;      // s
    int n = 0;         // n_b, twin occupation n, or binomial order n
};

/// Closed-form CFI of the beam-splitter schemes:
///   fock_nb    16 n g^2 t^2 / omega^2
///   twin_fock  32 n (n + 1) g^2 t^2 / omega^2
///   ramsey_n   16 n^2 g^2 t^2 / omega^2
inline double analytic_cfi(SensingScheme scheme, const AnalyticCfiParams &p) {
    if (p.n < 0) throw InvalidArgument("analytic_cfi: n must be non-negative");
    if (!(p.omega != 0)) throw InvalidArgument("analytic_cfi: omega must be non-zero");
    const double base = p.g * p.g * p.t * p.t / (p.omega * p.omega);
    const double n = p.n;
    switch (scheme) {
        case SensingScheme::fock_nb:
            return 16.0 * n * base;
        case SensingScheme::twin_fock:
            return 32.0 * n * (n + 1) * base;
        case SensingScheme::ramsey_n:
            return 16.0 * n * n * base;
    }
    throw InvalidArgument("analytic_cfi: unknown scheme");
}

inline EstimationResult make_estimation_result(double cfi_value, double qfi_value, int nu = 1) {
    if (cfi_value > qfi_value * (1.0 + 1e-6) + 1e-300)
        throw InvalidArgument("estimation: CFI exceeds QFI for the same state");
    return {cfi_value, qfi_value, cramer_rao(cfi_value, nu), nu};
}

}  // namespace trilinear
