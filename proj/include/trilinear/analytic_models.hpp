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
#include <complex>
#include <numbers>
#include <vector>

#include "trilinear/errors.hpp"
#include "trilinear/fock_algebra.hpp"

namespace trilinear {

/// Parameters of the effective squeezing / beam-splitter evolutions.
struct EffectiveParams {
    double r = 0;                          // squeeze parameter, 2 g_b lambda t / omega
    double phi = -std::numbers::pi / 2;    // squeeze phase
    double theta = 0;                      // beam-splitter rate 2 g_r lambda / omega, rad/s
};

inline double squeeze_parameter(double g_b, double lambda, double omega, double t) {
    return 2.0 * g_b * lambda * t / omega;
}

inline double beam_splitter_rate(double g_r, double lambda, double omega) { return 2.0 * g_r * lambda / omega; }

struct SqueezedPmf {
    std::vector<double> p;      // index n_r = 0..n_max
    double captured_mass = 0;   // sum of p
};

/// Photon-number distribution of squeezed vacuum:
/// p_{2m} = tanh^{2m}(r) / cosh(r) * (2m)! / (4^m (m!)^2), odd entries zero.
inline SqueezedPmf squeezed_vacuum_pmf(double r, int n_max) {
    if (!(r >= 0)) throw InvalidArgument("squeezed_vacuum_pmf: r must be non-negative");
    if (n_max < 0) throw InvalidArgument("squeezed_vacuum_pmf: n_max must be non-negative");
    SqueezedPmf out;
    out.p.assign(static_cast<size_t>(n_max) + 1, 0.0);
    if (r == 0) {
        out.p[0] = 1.0;
        out.captured_mass = 1.0;
        return out;
    }
    const double log_t2 = 2.0 * std::log(std::tanh(r));
    const double log_sech = -std::log(std::cosh(r));
    for (int m = 0; 2 * m <= n_max; ++m) {
        const double lp = m * log_t2 + log_sech + std::lgamma(2.0 * m + 1) - 2.0 * m * std::log(2.0) -
                          2.0 * std::lgamma(m + 1.0);
        out.p[static_cast<size_t>(2 * m)] = std::exp(lp);
    }
    for (double x : out.p) out.captured_mass += x;
    return out;
}

/// Amplitudes <n| S(xi) |0> of exp((r/2)(e^{-i phi} a^2 - e^{i phi} a^+2)) |0>, n = 0..n_max.
inline ComplexVector squeezed_vacuum_amplitudes(double r, double phi, int n_max) {
    if (!(r >= 0)) throw InvalidArgument("squeezed_vacuum_amplitudes: r must be non-negative");
    ComplexVector a = ComplexVector::Zero(n_max + 1);
    const double th = std::tanh(r);
    const cplx base = -std::polar(th, phi);
    for (int m = 0; 2 * m <= n_max; ++m) {
        const double mag = std::exp(0.5 * (std::lgamma(2.0 * m + 1)) - m * std::log(2.0) - std::lgamma(m + 1.0)) /
                           std::sqrt(std::cosh(r));
        a[2 * m] = mag * std::pow(base, m);
    }
    return a;
}

namespace detail {

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

inline double log_factorial(int n) { return std::lgamma(n + 1.0); }

}  // namespace detail

/// Fock populations after a balanced-phase beam splitter of angle x = theta t on |n_b, 0>:
/// p_k = C(n_b, k) cos^{2k}(x) sin^{2(n_b - k)}(x), k = 0..n_b.
inline std::vector<double> beam_splitter_pmf(int n_b, double x) {
    if (n_b < 0) throw InvalidArgument("beam_splitter_pmf: n_b must be non-negative");
    const double c2 = std::cos(x) * std::cos(x), s2 = std::sin(x) * std::sin(x);
    std::vector<double> p(static_cast<size_t>(n_b) + 1);
    for (int k = 0; k <= n_b; ++k) p[static_cast<size_t>(k)] = detail::binomial(n_b, k) * std::pow(c2, k) * std::pow(s2, n_b - k);
    return p;
}

/// exp(i x (a_b^+ a_r + a_b a_r^+)) |n_b, n_r>, returned as amplitudes over
/// k_b = 0..n_b + n_r (the rocking number is n_b + n_r - k_b).
///
/// Uses a_b^+ -> cos x a_b^+ + i sin x a_r^+, a_r^+ -> i sin x a_b^+ + cos x a_r^+
/// and expands both binomials.
inline ComplexVector beam_splitter_amplitudes(int n_b, int n_r, double x) {
    if (n_b < 0 || n_r < 0) throw InvalidArgument("beam_splitter_amplitudes: occupations must be non-negative");
    const int total = n_b + n_r;
    const cplx c(std::cos(x), 0.0), is(0.0, std::sin(x));
    ComplexVector out = ComplexVector::Zero(total + 1);
    for (int k = 0; k <= n_b; ++k) {
        // k breathing quanta kept from the n_b factor, l taken from the n_r factor.
        const cplx from_b = detail::binomial(n_b, k) * std::pow(c, k) * std::pow(is, n_b - k);
        for (int l = 0; l <= n_r; ++l) {
            const cplx from_r = detail::binomial(n_r, l) * std::pow(is, l) * std::pow(c, n_r - l);
            const int kb = k + l;
            const double norm = std::exp(0.5 * (detail::log_factorial(kb) + detail::log_factorial(total - kb) -
                                                detail::log_factorial(n_b) - detail::log_factorial(n_r)));
            out[kb] += from_b * from_r * norm;
        }
    }
    return out;
}

/// Breathing-mode distribution after the beam splitter acts on |n, n>, k_b = 0..2n.
inline std::vector<double> twin_fock_pmf(int n, double x) {
    if (n < 0) throw InvalidArgument("twin_fock_pmf: n must be non-negative");
    const auto a = beam_splitter_amplitudes(n, n, x);
    std::vector<double> p(static_cast<size_t>(a.size()));
    for (Eigen::Index k = 0; k < a.size(); ++k) p[static_cast<size_t>(k)] = std::norm(a[k]);
    return p;
}

namespace debug {

/// The twin-Fock double sum exactly as it appears in print, kept only to
/// tabulate how far it is from the unitary result. Not a distribution for n >= 2.
inline std::vector<double> twin_fock_pmf_printed(int n, double x) {
    if (n < 0) throw InvalidArgument("twin_fock_pmf_printed: n must be non-negative");
    const double s = std::sin(x), c = std::cos(x);
    std::vector<double> amp(static_cast<size_t>(2 * n) + 1, 0.0);
    for (int k = 0; k <= n; ++k)
        for (int l = 0; l <= n; ++l) {
            const int kb = n + k - l;
            const double sign = ((n - k) % 2 == 0) ? 1.0 : -1.0;
            const double num = std::exp(detail::log_factorial(n) +
                                        0.5 * (detail::log_factorial(kb) + detail::log_factorial(n - k + l)));
            const double den = std::exp(detail::log_factorial(k) + detail::log_factorial(n - k) +
                                        detail::log_factorial(l) + detail::log_factorial(n - k));
            amp[static_cast<size_t>(kb)] += sign * std::pow(s, 2 * n - k - l) * std::pow(c, k + l) * num / den;
        }
    std::vector<double> p(amp.size());
    for (size_t i = 0; i < amp.size(); ++i) p[i] = amp[i] * amp[i];
    return p;
}

}  // namespace debug

/// Spin populations (cos^2(n theta t), sin^2(n theta t)) for the binomial(n) motional family.
inline SpinProbs ramsey_populations(int n, double theta, double t) {
    if (n < 0) throw InvalidArgument("ramsey_populations: n must be non-negative");
    const double c = std::cos(n * theta * t), s = std::sin(n * theta * t);
    return {c * c, s * s};
}

// ---------------------------------------------------------------------------

struct OscillationFit {
    double omega = 0;  // angular frequency, units of 1 / t
    double amplitude = 0;
    double offset = 0;
    double rms_residual = 0;
};

namespace detail {

// Least-squares y ~ A cos(w t) + B sin(w t) + C at fixed w; returns the residual sum of squares.
inline double sinusoid_rss(const std::vector<double> &t, const std::vector<double> &y, double w, double *amp = nullptr,
                           double *off = nullptr) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d aty = Eigen::Vector3d::Zero();
    for (size_t i = 0; i < t.size(); ++i) {
        const Eigen::Vector3d row(std::cos(w * t[i]), std::sin(w * t[i]), 1.0);
        ata += row * row.transpose();
        aty += row * y[i];
    }
    const Eigen::Vector3d coef = ata.ldlt().solve(aty);
    double rss = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        const double f = coef[0] * std::cos(w * t[i]) + coef[1] * std::sin(w * t[i]) + coef[2];
        rss += (y[i] - f) * (y[i] - f);
    }
    if (amp) *amp = std::hypot(coef[0], coef[1]);
    if (off) *off = coef[2];
    return rss;
}

}  // namespace detail

/// Dominant angular frequency of a sampled signal by a least-squares sinusoid
/// fit: coarse scan up to the Nyquist limit, then golden-section refinement.
inline OscillationFit fit_oscillation(const std::vector<double> &t, const std::vector<double> &y) {
    if (t.size() != y.size() || t.size() < 4) throw InvalidArgument("fit_oscillation: need at least four samples");
    const double span = t.back() - t.front();
    if (!(span > 0)) throw InvalidArgument("fit_oscillation: time samples must span a positive interval");
    const double dt = span / static_cast<double>(t.size() - 1);
    const double w_step = std::numbers::pi / (8.0 * span);
    const double w_max = std::numbers::pi / dt;
    double best_w = w_step, best = std::numeric_limits<double>::infinity();
    for (double w = w_step; w <= w_max; w += w_step) {
        const double r = detail::sinusoid_rss(t, y, w);
        if (r < best) best = r, best_w = w;
    }
    double a = std::max(best_w - w_step, 0.5 * w_step), b = best_w + w_step;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = detail::sinusoid_rss(t, y, x1), f2 = detail::sinusoid_rss(t, y, x2);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * b; ++it) {
        if (f1 < f2) {
            b = x2, x2 = x1, f2 = f1;
            x1 = b - g * (b - a), f1 = detail::sinusoid_rss(t, y, x1);
        } else {
            a = x1, x1 = x2, f1 = f2;
            x2 = a + g * (b - a), f2 = detail::sinusoid_rss(t, y, x2);
        }
    }
    OscillationFit fit;
    fit.omega = 0.5 * (a + b);
    const double rss = detail::sinusoid_rss(t, y, fit.omega, &fit.amplitude, &fit.offset);
    fit.rms_residual = std::sqrt(rss / static_cast<double>(t.size()));
    return fit;
}

}  // namespace trilinear
