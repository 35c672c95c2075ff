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

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <typeinfo>
#include <vector>

#include "trilinear/analytic_models.hpp"
#include "trilinear/estimation.hpp"
#include "trilinear/experiment_config.hpp"
#include "trilinear/trap_modes.hpp"

namespace trilinear {

/// Effective-theory marginals used as overlay columns; fields stay empty when no closed form applies.
struct AnalyticOverlay {
    std::optional<std::vector<double>> p_b;
    std::optional<std::vector<double>> p_r;
    std::optional<SpinProbs> spin;
    std::string label;  // which closed form produced the overlay
};

inline AnalyticOverlay analytic_overlay(const ExperimentConfig &cfg, double t_s) {
    AnalyticOverlay o;
    const DriveConfig d = cfg.drive();
    const auto &m = cfg.initial_state.motion;
    const SpinState spin = cfg.initial_state.spin;
    const bool sx_eigen = spin == SpinState::plus || spin == SpinState::minus;
    const auto sized = [](std::vector<double> p, int cut) {
        p.resize(static_cast<size_t>(cut) + 1, 0.0);
        return p;
    };
    if (sx_eigen) o.spin = SpinProbs{0.5, 0.5};

    if (cfg.scheme == Scheme::case1) {
        if (m.kind != MotionSpec::Kind::fock || m.n_r != 0) return o;
        const double r = std::abs(squeeze_parameter(d.g, d.lambda, d.omega, t_s));
        // The breathing mode is displaced in the lab frame, so only the rocking marginal has an overlay.
        o.p_r = squeezed_vacuum_pmf(r, cfg.cutoff_r).p;
        o.label = "squeezed vacuum, r = 2 g lambda t / omega";
        return o;
    }

    const double theta = beam_splitter_rate(d.g, d.lambda, d.omega);
    if (m.kind == MotionSpec::Kind::fock || m.kind == MotionSpec::Kind::twin) {
        const int nb = m.kind == MotionSpec::Kind::fock ? m.n_b : m.n;
        const int nr = m.kind == MotionSpec::Kind::fock ? m.n_r : m.n;
        const ComplexVector a = beam_splitter_amplitudes(nb, nr, theta * t_s);
        const int total = nb + nr;
        std::vector<double> pb(static_cast<size_t>(total) + 1), pr(static_cast<size_t>(total) + 1);
        for (int k = 0; k <= total; ++k) {
            pb[static_cast<size_t>(k)] = std::norm(a[k]);
            pr[static_cast<size_t>(total - k)] = std::norm(a[k]);
        }
        o.p_b = sized(pb, cfg.cutoff_b);
        o.p_r = sized(pr, cfg.cutoff_r);
        o.label = m.kind == MotionSpec::Kind::twin ? "twin-Fock beam splitter" : "Fock beam splitter";
    } else if (m.kind == MotionSpec::Kind::binomial) {
        std::vector<double> p(static_cast<size_t>(m.n) + 1);
        for (int k = 0; k <= m.n; ++k) p[static_cast<size_t>(k)] = detail::binomial(m.n, k) * std::pow(0.5, m.n);
        o.p_b = sized(p, cfg.cutoff_b);
        o.p_r = sized(p, cfg.cutoff_r);
        if (spin == SpinState::down || spin == SpinState::up) {
            const auto r = ramsey_populations(m.n, theta, t_s);
            o.spin = spin == SpinState::down ? r : SpinProbs{r.up, r.down};
        }
        o.label = "binomial spin rotation at n theta";
    }
    return o;
}

struct NamedTable {
    std::string file;
    csv::Table table;
};

struct RunOptions {
    int jobs = 1;               // concurrent Fisher-information probes when > 1
    bool scalars_only = false;  // skip time-series tables that no scalar output needs
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<NamedTable> tables;
    std::map<std::string, double> scalars;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> summary;  // ordered key/value lines

    std::string summary_text() const {
        std::ostringstream o;
        for (const auto &[k, v] : summary) o << k << " = " << v << '\n';
        for (const auto &w : warnings) o << "warning = " << w << '\n';
        return o.str();
    }

    const csv::Table *table(const std::string &file) const {
        for (const auto &t : tables)
            if (t.file == file) return &t.table;
        return nullptr;
    }
};

namespace experiment_detail {

inline std::vector<int> indices(const std::vector<int> &requested, int cutoff) {
    if (!requested.empty()) return requested;
    std::vector<int> all(static_cast<size_t>(cutoff) + 1);
    for (int k = 0; k <= cutoff; ++k) all[static_cast<size_t>(k)] = k;
    return all;
}

inline std::vector<double> marginal(const Ket &psi, Measurement m) {
    if (m == Measurement::fock_b) return fock_probs(psi, Mode::breathing);
    if (m == Measurement::fock_r) return fock_probs(psi, Mode::rocking);
    const auto s = spin_probs(psi);
    return {s.down, s.up};
}

inline std::optional<double> analytic_cfi_for(const ExperimentConfig &cfg, double t_s) {
    const DriveConfig d = cfg.drive();
    const auto &m = cfg.initial_state.motion;
    const Measurement meas = cfg.resolved_measurement();
    const AnalyticCfiParams p{d.g, d.omega, t_s, 0};
    if (cfg.scheme == Scheme::case1) {
        if (m.kind == MotionSpec::Kind::fock && m.n_r == 0 && meas == Measurement::fock_r)
            return 8.0 * d.g * d.g * t_s * t_s / (d.omega * d.omega);
        return std::nullopt;
    }
    if (m.kind == MotionSpec::Kind::fock && m.n_r == 0 && meas == Measurement::fock_b)
        return analytic_cfi(SensingScheme::fock_nb, {p.g, p.omega, p.t, m.n_b});
    if (m.kind == MotionSpec::Kind::twin && meas == Measurement::fock_b)
        return analytic_cfi(SensingScheme::twin_fock, {p.g, p.omega, p.t, m.n});
    if (m.kind == MotionSpec::Kind::binomial && meas == Measurement::spin &&
        (cfg.initial_state.spin == SpinState::down || cfg.initial_state.spin == SpinState::up))
        return analytic_cfi(SensingScheme::ramsey_n, {p.g, p.omega, p.t, m.n});
    return std::nullopt;
}

inline std::optional<double> analytic_qfi_for(const ExperimentConfig &cfg, double t_s) {
    const auto &m = cfg.initial_state.motion;
    const SpinState s = cfg.initial_state.spin;
    if (cfg.scheme == Scheme::case1 && m.kind == MotionSpec::Kind::fock && m.n_r == 0 &&
        (s == SpinState::plus || s == SpinState::minus)) {
        const DriveConfig d = cfg.drive();
        return 8.0 * d.g * d.g * t_s * t_s / (d.omega * d.omega);
    }
    return std::nullopt;
}

inline double finite_difference_step(const ExperimentConfig &cfg) {
    const DriveConfig d = cfg.drive();
    return 1e-4 * std::abs(d.g * d.g / d.omega);  // only used at lambda = 0
}

inline std::string fmt(double x) { return csv::format_double(x, 12); }

}  // namespace experiment_detail

/// Runs one configuration and keeps every table in memory; nothing touches the disk.
inline ExperimentResult run_experiment(const ExperimentConfig &cfg, const RunOptions &opts = {}) {
    using namespace experiment_detail;
    cfg.validate();
    ExperimentResult res;
    res.config = cfg;
    const DriveConfig d = cfg.drive();
    const SpaceLayout L = cfg.layout();
    const LinOp h = cfg.hamiltonian(L, d.lambda);
    const Propagator prop(h, cfg.settings());
    const Ket psi0 = prepare_state(L, cfg.initial_state);
    res.warnings = d.warnings();

    auto &sm = res.summary;
    sm.emplace_back("name", cfg.name);
    sm.emplace_back("scheme", cfg.scheme == Scheme::case1 ? "case1" : "case2");
    sm.emplace_back("hamiltonian", cfg.effective ? (cfg.residual ? "effective+residual" : "effective") : "exact");
    sm.emplace_back("initial_state", spin_to_string(cfg.initial_state.spin) + " " + cfg.initial_state.motion.to_string());
    sm.emplace_back("cutoffs", std::to_string(cfg.cutoff_b) + "/" + std::to_string(cfg.cutoff_r));
    sm.emplace_back("dimension", std::to_string(L.dim()));
    sm.emplace_back("method", cfg.method == Method::krylov ? "krylov" : "eig");
    sm.emplace_back("g_over_omega", fmt(d.g_over_omega()));
    sm.emplace_back("lambda_over_omega", fmt(d.lambda_over_omega()));
    if (cfg.scheme == Scheme::case1) {
        sm.emplace_back("squeeze_parameter_r_at_t_final",
                        fmt(squeeze_parameter(d.g, d.lambda, d.omega, constants::ms_to_s(cfg.t_final))));
    } else {
        sm.emplace_back("theta_rad_per_s", fmt(beam_splitter_rate(d.g, d.lambda, d.omega)));
    }

    const bool want_b = cfg.wants(Output::fock_b) && !opts.scalars_only;
    const bool want_r = cfg.wants(Output::fock_r) && !opts.scalars_only;
    const bool want_spin = (cfg.wants(Output::spin) && !opts.scalars_only) || cfg.wants(Output::spin_frequency);

    if (want_b || want_r || want_spin) {
        const auto grid = uniform_grid(constants::ms_to_s(cfg.t_final), cfg.n_time_samples);
        const auto ib = indices(cfg.fock_indices_b, cfg.cutoff_b), ir = indices(cfg.fock_indices_r, cfg.cutoff_r);
        csv::Table tb, tr, ts;
        const AnalyticOverlay probe = analytic_overlay(cfg, 0.0);
        const bool ob = probe.p_b.has_value(), orr = probe.p_r.has_value(), os = probe.spin.has_value();
        tb.columns = tr.columns = ts.columns = {"t_ms"};
        for (int k : ib) tb.columns.push_back("p_nb_" + std::to_string(k));
        if (ob)
            for (int k : ib) tb.columns.push_back("analytic_p_nb_" + std::to_string(k));
        for (int k : ir) tr.columns.push_back("p_nr_" + std::to_string(k));
        if (orr)
            for (int k : ir) tr.columns.push_back("analytic_p_nr_" + std::to_string(k));
        ts.columns.insert(ts.columns.end(), {"p_down", "p_up"});
        if (os) ts.columns.insert(ts.columns.end(), {"analytic_p_down", "analytic_p_up"});

        double dev_b = 0, dev_r = 0, dev_s = 0, tail_b = 0, tail_r = 0;
        for (double t : grid) {
            const Ket psi = prop.evolve(psi0, t);
            tail_b = std::max(tail_b, tail_mass(psi, Mode::breathing));
            tail_r = std::max(tail_r, tail_mass(psi, Mode::rocking));
            const AnalyticOverlay ov = analytic_overlay(cfg, t);
            const double t_ms = constants::s_to_ms(t);
            if (want_b) {
                const auto p = fock_probs(psi, Mode::breathing);
                std::vector<double> row{t_ms};
                for (int k : ib) row.push_back(p[static_cast<size_t>(k)]);
                if (ob)
                    for (int k : ib) {
                        row.push_back((*ov.p_b)[static_cast<size_t>(k)]);
                        dev_b = std::max(dev_b, std::abs(row.back() - p[static_cast<size_t>(k)]));
                    }
                tb.rows.push_back(std::move(row));
            }
            if (want_r) {
                const auto p = fock_probs(psi, Mode::rocking);
                std::vector<double> row{t_ms};
                for (int k : ir) row.push_back(p[static_cast<size_t>(k)]);
                if (orr)
                    for (int k : ir) {
                        row.push_back((*ov.p_r)[static_cast<size_t>(k)]);
                        dev_r = std::max(dev_r, std::abs(row.back() - p[static_cast<size_t>(k)]));
                    }
                tr.rows.push_back(std::move(row));
            }
            if (want_spin) {
                const auto s = spin_probs(psi);
                std::vector<double> row{t_ms, s.down, s.up};
                if (os) {
                    row.insert(row.end(), {ov.spin->down, ov.spin->up});
                    dev_s = std::max({dev_s, std::abs(ov.spin->down - s.down), std::abs(ov.spin->up - s.up)});
                }
                ts.rows.push_back(std::move(row));
            }
        }
        sm.emplace_back("max_tail_mass_breathing", fmt(tail_b));
        sm.emplace_back("max_tail_mass_rocking", fmt(tail_r));
        if (!probe.label.empty()) sm.emplace_back("analytic_model", probe.label);
        auto record = [&](bool want, bool overlay, const char *key, double dev, const char *file, csv::Table &t) {
            if (!want) return;
            if (overlay) {
                res.scalars[key] = dev;
                sm.emplace_back(key, fmt(dev));
            }
            res.tables.push_back({file, std::move(t)});
        };
        record(want_b, ob, "max_deviation_fock_b", dev_b, "fock_b.csv", tb);
        record(want_r, orr, "max_deviation_fock_r", dev_r, "fock_r.csv", tr);
        const bool keep_spin = cfg.wants(Output::spin) && !opts.scalars_only;
        if (cfg.wants(Output::spin_frequency)) {
            std::vector<double> t_ms, down;
            for (const auto &row : ts.rows) {
                t_ms.push_back(row[0]);
                down.push_back(row[1]);
            }
            const auto fit = fit_oscillation(t_ms, down);
            csv::Table tf;
            tf.columns = {"t_ms", "omega_fit_rad_per_ms"};
            std::vector<double> row{cfg.t_final, fit.omega};
            res.scalars["spin_frequency"] = fit.omega;
            sm.emplace_back("spin_frequency_rad_per_ms", fmt(fit.omega));
            const auto &m = cfg.initial_state.motion;
            if (cfg.scheme == Scheme::case2 && m.kind == MotionSpec::Kind::binomial && os) {
                const double expect = 2.0 * m.n * beam_splitter_rate(d.g, d.lambda, d.omega) * 1e-3;
                tf.columns.insert(tf.columns.end(), {"omega_analytic_rad_per_ms", "relative_error"});
                row.insert(row.end(), {expect, std::abs(fit.omega - expect) / expect});
                res.scalars["spin_frequency_analytic"] = expect;
                sm.emplace_back("spin_frequency_analytic_rad_per_ms", fmt(expect));
            }
            tf.rows.push_back(std::move(row));
            record(keep_spin, os, "max_deviation_spin", dev_s, "spin.csv", ts);
            res.tables.push_back({"spin_frequency.csv", std::move(tf)});
        } else {
            record(keep_spin, os, "max_deviation_spin", dev_s, "spin.csv", ts);
        }
    }

    const double t_est = constants::ms_to_s(cfg.estimation_time_ms());
    const double abs_step = finite_difference_step(cfg);
    const PropagatorSettings settings = cfg.settings();
    auto state_at = [&cfg, &L, &settings, t_est](double lam) {
        return Propagator(cfg.hamiltonian(L, lam), settings).evolve(prepare_state(L, cfg.initial_state), t_est);
    };
    std::optional<double> cfi_value, qfi_value;
    if (cfg.wants(Output::cfi)) {
        ProbabilityModel model;
        const Measurement meas = cfg.resolved_measurement();
        model.evaluator = [&state_at, meas](double lam) { return experiment_detail::marginal(state_at(lam), meas); };
        model.fd_abs_step = abs_step;
        model.concurrent = opts.jobs > 1;
        const FisherResult f = cfi(model, d.lambda);
        cfi_value = f.value;
        csv::Table t;
        t.columns = {"t_ms", "cfi"};
        std::vector<double> row{cfg.estimation_time_ms(), f.value};
        res.scalars["cfi"] = f.value;
        sm.emplace_back("measurement", measurement_name(meas));
        sm.emplace_back("cfi_s2", fmt(f.value));
        if (const auto a = analytic_cfi_for(cfg, t_est)) {
            t.columns.push_back("cfi_analytic");
            row.push_back(*a);
            res.scalars["cfi_analytic"] = *a;
            sm.emplace_back("cfi_analytic_s2", fmt(*a));
        }
        const double dl = f.value > 0 ? cramer_rao(f.value, cfg.nu) : std::numeric_limits<double>::infinity();
        t.columns.insert(t.columns.end(), {"delta_lambda", "delta_lambda_over_2pi_hz", "dropped_mass"});
        row.insert(row.end(), {dl, dl / constants::two_pi, f.dropped_mass});
        res.scalars["delta_lambda"] = dl;
        sm.emplace_back("delta_lambda_rad_per_s", fmt(dl));
        sm.emplace_back("nu", std::to_string(cfg.nu));
        t.rows.push_back(std::move(row));
        res.tables.push_back({"cfi.csv", std::move(t)});
    }
    if (cfg.wants(Output::qfi)) {
        const StateFunction fn = [&state_at](double lam) { return state_at(lam).amplitudes(); };
        const double q = qfi_pure(fn, d.lambda, 1e-4, abs_step, opts.jobs > 1);
        qfi_value = q;
        csv::Table t;
        t.columns = {"t_ms", "qfi"};
        std::vector<double> row{cfg.estimation_time_ms(), q};
        res.scalars["qfi"] = q;
        sm.emplace_back("qfi_s2", fmt(q));
        if (const auto a = analytic_qfi_for(cfg, t_est)) {
            t.columns.push_back("qfi_analytic");
            row.push_back(*a);
            res.scalars["qfi_analytic"] = *a;
            sm.emplace_back("qfi_analytic_s2", fmt(*a));
        }
        const double dl = q > 0 ? cramer_rao(q, cfg.nu) : std::numeric_limits<double>::infinity();
        t.columns.push_back("delta_lambda_quantum");
        row.push_back(dl);
        res.scalars["delta_lambda_quantum"] = dl;
        t.rows.push_back(std::move(row));
        res.tables.push_back({"qfi.csv", std::move(t)});
    }
    if (cfi_value && qfi_value && *cfi_value > *qfi_value * (1 + 1e-6))
        res.warnings.push_back("CFI exceeds QFI beyond finite-difference tolerance");
    return res;
}

/// Writes every table plus summary.txt into `dir`, creating it if needed.
inline void write_result(const ExperimentResult &res, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    for (const auto &t : res.tables) {
        std::ofstream f(dir / t.file, std::ios::binary);
        if (!f) throw Error("cannot write " + (dir / t.file).string());
        t.table.write(f);
    }
    std::ofstream s(dir / "summary.txt", std::ios::binary);
    if (!s) throw Error("cannot write " + (dir / "summary.txt").string());
    s << res.summary_text();
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
    double value = 0;
    std::map<std::string, double> scalars;
    std::string error;
};

struct SweepResult {
    std::string axis;
    std::vector<std::string> columns;  // scalar columns between the axis and "error"
    std::vector<SweepRow> rows;

    void write(std::ostream &os) const {
        os << axis;
        for (const auto &c : columns) os << ',' << c;
        os << ",error\n";
        for (const auto &r : rows) {
            os << csv::format_double(r.value);
            for (const auto &c : columns) {
                os << ',';
                if (auto it = r.scalars.find(c); it != r.scalars.end()) os << csv::format_double(it->second);
            }
            os << ',' << r.error << '\n';
        }
    }
};

inline std::string error_label(const std::exception &e) {
    std::string kind = "error";
    if (dynamic_cast<const TruncationBreach *>(&e)) kind = "truncation";
    else if (dynamic_cast<const ConfigError *>(&e) || dynamic_cast<const InvalidArgument *>(&e)) kind = "config";
    else if (dynamic_cast<const NormBreach *>(&e) || dynamic_cast<const ConvergenceError *>(&e)) kind = "numerical";
    std::string msg = kind + ": " + e.what();
    for (char &c : msg)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return msg;
}

/// One run per value with `axis` overridden; points run on up to `jobs` threads, rows keep input order.
inline SweepResult sweep(const ExperimentConfig &base, const std::string &axis, const std::vector<double> &values,
                         int jobs = 1) {
    if (!ExperimentConfig::is_numeric_key(axis)) throw ConfigError("sweep: '" + axis + "' is not a numeric key");
    SweepResult out;
    out.axis = axis;
    for (Output o : base.outputs) {
        if (o == Output::cfi) out.columns.insert(out.columns.end(), {"cfi", "cfi_analytic", "delta_lambda"});
        if (o == Output::qfi) out.columns.insert(out.columns.end(), {"qfi", "qfi_analytic"});
        if (o == Output::spin_frequency)
            out.columns.insert(out.columns.end(), {"spin_frequency", "spin_frequency_analytic"});
    }
    if (out.columns.empty()) throw ConfigError("sweep: outputs must include cfi, qfi or spin_frequency");
    out.rows.resize(values.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < values.size(); i = next++) {
            SweepRow &row = out.rows[i];
            row.value = values[i];
            try {
                ExperimentConfig c = base;
                c.set(axis, config_detail::exact(values[i]));
                c.validate();
                row.scalars = run_experiment(c, {1, true}).scalars;
            } catch (const std::exception &e) {
                row.error = error_label(e);
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto &t : pool) t.join();
    return out;
}

// ---------------------------------------------------------------------------
// Trap report

struct TrapFile {
    TrapConfig trap;
    double detuning_over_2pi = 0;  // kHz
    double threshold = 20;

    static TrapFile from_file(const KeyValueFile &kv) {
        TrapFile t;
        t.trap.ion_mass = 0;
        bool have_mass = false;
        for (const auto &[key, e] : kv.entries()) {
            try {
                const double v = config_detail::to_double(key, e.value);
                if (key == "ion_mass_amu") {
                    t.trap.ion_mass = v * constants::atomic_mass_unit, have_mass = true;
                } else if (key == "ion_mass_kg") {
                    t.trap.ion_mass = v, have_mass = true;
                } else if (key == "ion_charge_e") {
                    t.trap.ion_charge = v * constants::elementary_charge;
                } else if (key == "omega_x_over_2pi") {
                    t.trap.omega_x = constants::khz_to_rad_per_s(v);
                } else if (key == "omega_y_over_2pi") {
                    t.trap.omega_y = constants::khz_to_rad_per_s(v);
                } else if (key == "omega_z_over_2pi") {
                    t.trap.omega_z = constants::khz_to_rad_per_s(v);
                } else if (key == "n_ions") {
                    t.trap.n_ions = config_detail::to_int(key, e.value);
                } else if (key == "detuning_over_2pi") {
                    t.detuning_over_2pi = v;
                } else if (key == "threshold") {
                    t.threshold = v;
                } else {
                    throw ConfigError("unknown key '" + key + "'");
                }
            } catch (const ConfigError &err) {
                kv.fail(e.line, err.what());
            }
        }
        if (!have_mass) throw ConfigError(kv.source() + ": missing ion_mass_amu or ion_mass_kg");
        try {
            t.trap.validate();
        } catch (const InvalidArgument &err) {
            throw ConfigError(kv.source() + ": " + err.what());
        }
        return t;
    }

    static TrapFile load(const std::string &path) { return from_file(KeyValueFile::load(path)); }
};

struct ModesReport {
    std::string text;
    csv::Table modes;  // axis index (0 = x, 1 = y, 2 = z), mode index, gamma, frequency, eigenvector
};

inline ModesReport modes_report(const TrapFile &tf) {
    using experiment_detail::fmt;
    const TrapConfig &cfg = tf.trap;
    ModesReport rep;
    std::ostringstream o;
    const auto u = equilibrium_positions(cfg);
    o << "n_ions = " << cfg.n_ions << '\n' << "equilibrium_positions =";
    for (double x : u) o << ' ' << fmt(x);
    o << '\n';
    rep.modes.columns = {"axis", "mode", "gamma", "omega_over_2pi_khz"};
    for (int k = 0; k < cfg.n_ions; ++k) rep.modes.columns.push_back("b_" + std::to_string(k));
    for (Axis a : {Axis::x, Axis::y, Axis::z}) {
        const auto spec = mode_spectrum(cfg, a);
        for (size_t p = 0; p < spec.eigenvalues.size(); ++p) {
            o << "mode " << axis_name(a) << p << ": gamma = " << fmt(spec.eigenvalues[p])
              << ", omega/2pi = " << fmt(constants::rad_per_s_to_khz(spec.mode_frequencies[p])) << " kHz\n";
            std::vector<double> row{static_cast<double>(a), static_cast<double>(p), spec.eigenvalues[p],
                                    constants::rad_per_s_to_khz(spec.mode_frequencies[p])};
            for (int k = 0; k < cfg.n_ions; ++k) row.push_back(spec.eigenvectors(k, static_cast<Eigen::Index>(p)));
            rep.modes.rows.push_back(std::move(row));
        }
    }
    if (cfg.n_ions == 2) {
        const auto c = trilinear_coupling(cfg);
        o << "length_scale_um = " << fmt(c.length_scale * 1e6) << '\n'
          << "ground_state_size_nm = " << fmt(c.ground_state_size * 1e9) << '\n'
          << "lambda_over_2pi_khz = " << fmt(constants::rad_per_s_to_khz(c.lambda)) << '\n'
          << "omega_b_over_2pi_khz = " << fmt(constants::rad_per_s_to_khz(c.omega_b)) << '\n'
          << "omega_rock_x_over_2pi_khz = " << fmt(constants::rad_per_s_to_khz(c.omega_rock_x)) << '\n'
          << "omega_rock_y_over_2pi_khz = " << fmt(constants::rad_per_s_to_khz(c.omega_rock_y)) << '\n';
        for (Scheme s : {Scheme::case1, Scheme::case2}) {
            const std::string tag = s == Scheme::case1 ? "case1" : "case2";
            try {
                const auto r = resonance_check(cfg, s, constants::khz_to_rad_per_s(tf.detuning_over_2pi), tf.threshold);
                o << tag << ".omega_rock_over_2pi_khz = " << fmt(constants::rad_per_s_to_khz(r.omega_rock)) << '\n'
                  << tag << ".required_omega_x_over_2pi_khz = "
                  << fmt(constants::rad_per_s_to_khz(r.required_omega_x)) << '\n'
                  << tag << ".breathing_fast = " << (r.breathing_fast ? "true" : "false") << '\n'
                  << tag << ".y_mode_detuned = " << (r.y_mode_detuned ? "true" : "false") << '\n';
                if (r.warning()) o << tag << ".warning = rotating-wave conditions not met at ratio " << fmt(tf.threshold) << '\n';
            } catch (const InvalidArgument &e) {
                o << tag << ".resonance = none (" << e.what() << ")\n";
            }
        }
    } else {
        o << "coupling = unsupported for n_ions != 2\n";
    }
    rep.text = o.str();
    return rep;
}

// ---------------------------------------------------------------------------
// Figure configs and self test

inline const std::vector<std::string> &figure_names() {
    static const std::vector<std::string> names{"fig1", "fig2", "fig3", "fig4a", "fig4b"};
    return names;
}

inline std::string default_config_dir() {
    if (const char *env = std::getenv("TRILINEAR_CONFIG_DIR")) return env;
#ifdef TRILINEAR_CONFIG_DIR
    return TRILINEAR_CONFIG_DIR;
#else
    return "configs";
#endif
}

inline ExperimentConfig figure_config(const std::string &fig, const std::string &dir = default_config_dir()) {
    const auto &names = figure_names();
    if (std::find(names.begin(), names.end(), fig) == names.end()) throw ConfigError("unknown figure '" + fig + "'");
    return ExperimentConfig::load((std::filesystem::path(dir) / (fig + ".cfg")).string());
}

struct SelfTestCheck {
    std::string name;
    double value = 0;
    double limit = 0;
    bool passed = false;
};

struct SelfTestLimits {
    double norm_drift = 1e-9;
    double energy_drift = 1e-8;     // relative to max(|<H>|, Delta H) at t = 0
    double krylov_agreement = 1e-7;
    double truncation_change = 1e-6;
    int samples = 21;
};

/// Numerical hygiene of one configuration at its shipped cutoffs.
inline std::vector<SelfTestCheck> selftest_config(const ExperimentConfig &cfg, const SelfTestLimits &lim = {}) {
    const SpaceLayout L = cfg.layout();
    const DriveConfig d = cfg.drive();
    const LinOp h = cfg.hamiltonian(L, d.lambda);
    PropagatorSettings eig = cfg.settings();
    eig.method = Method::eigendecomposition;
    PropagatorSettings kry = eig;
    kry.method = Method::krylov;
    const Propagator pe(h, eig), pk(h, kry);
    const Ket psi0 = prepare_state(L, cfg.initial_state);
    const double e0 = h.expectation(psi0.amplitudes()).real();
    const ComplexVector hpsi = h.apply(psi0.amplitudes());
    const double spread = std::sqrt(std::max(0.0, hpsi.squaredNorm() - e0 * e0));
    const double scale = std::max(std::abs(e0), spread);

    double norm_drift = 0, energy_drift = 0, agreement = 0;
    const auto grid = uniform_grid(constants::ms_to_s(cfg.t_final), lim.samples);
    for (size_t i = 0; i < grid.size(); ++i) {
        const ComplexVector v = pe.apply(psi0.amplitudes(), grid[i]);
        norm_drift = std::max(norm_drift, std::abs(v.norm() - 1.0));
        energy_drift = std::max(energy_drift, std::abs(h.expectation(v).real() - e0) / scale);
        if (i % 5 == 0 || i + 1 == grid.size())
            agreement = std::max(agreement, (pk.apply(psi0.amplitudes(), grid[i]) - v).norm());
    }
    const SpaceLayout bigger(cfg.cutoff_b + 2, cfg.cutoff_r + std::max(2, cfg.cutoff_r / 7));
    const HamiltonianBuilder builder = [&cfg, &d](const SpaceLayout &l) { return cfg.hamiltonian(l, d.lambda); };
    const auto scan = truncation_scan(builder, cfg.initial_state, constants::ms_to_s(cfg.t_final), {L, bigger}, eig,
                                      lim.truncation_change);
    const double change = scan.steps.back().max_change;
    const std::string p = cfg.name + ".";
    return {{p + "norm_drift", norm_drift, lim.norm_drift, norm_drift < lim.norm_drift},
            {p + "energy_drift", energy_drift, lim.energy_drift, energy_drift < lim.energy_drift},
            {p + "eig_vs_krylov", agreement, lim.krylov_agreement, agreement < lim.krylov_agreement},
            {p + "truncation_change", change, lim.truncation_change, change < lim.truncation_change}};
}

/// Figures run concurrently; checks come back in figure order.
inline std::vector<SelfTestCheck> run_selftest(const std::string &config_dir = default_config_dir(),
                                               const SelfTestLimits &lim = {}) {
    std::vector<std::future<std::vector<SelfTestCheck>>> pending;
    for (const auto &fig : figure_names()) {
        const ExperimentConfig cfg = figure_config(fig, config_dir);
        pending.push_back(std::async(std::launch::async, [cfg, lim] { return selftest_config(cfg, lim); }));
    }
    std::vector<SelfTestCheck> all;
    for (auto &f : pending) {
        const auto checks = f.get();
        all.insert(all.end(), checks.begin(), checks.end());
    }
    return all;
}

}  // namespace trilinear
