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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trilinear/constants.hpp"
#include "trilinear/csv.hpp"
#include "trilinear/errors.hpp"
#include "trilinear/fock_algebra.hpp"
#include "trilinear/hamiltonians.hpp"
#include "trilinear/propagation.hpp"

namespace trilinear {

// Flat "dotted.key = value" files. '#' starts a comment; blank lines are ignored.
// Keys are unique; values are trimmed and must be non-empty.
class KeyValueFile {
   public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static KeyValueFile parse(std::istream &in, const std::string &source = "<config>") {
        KeyValueFile kv;
        kv.source_ = source;
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
            const std::string line = trim(raw);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) kv.fail(line_no, "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
            if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) {
                    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
                }))
                kv.fail(line_no, "invalid key '" + key + "'");
            if (value.empty()) kv.fail(line_no, "empty value for '" + key + "'");
            if (kv.entries_.count(key)) kv.fail(line_no, "duplicate key '" + key + "'");
            kv.entries_[key] = {value, line_no};
        }
        return kv;
    }

    static KeyValueFile load(const std::string &path) {
        std::ifstream f(path);
        if (!f) throw ConfigError(path + ": cannot open file");
        return parse(f, path);
    }

    const std::map<std::string, Entry> &entries() const { return entries_; }
    const std::string &source() const { return source_; }

    [[noreturn]] void fail(int line, const std::string &msg) const {
        throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }

    static std::string trim(const std::string &s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
    }

    static std::vector<std::string> split_list(const std::string &s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

   private:
    std::string source_;
    std::map<std::string, Entry> entries_;
};

namespace config_detail {

inline double to_double(const std::string &key, const std::string &v) {
    double x = 0;
    if (!csv::parse_double(v, x) || !std::isfinite(x)) throw ConfigError(key + ": '" + v + "' is not a number");
    return x;
}

inline int to_int(const std::string &key, const std::string &v) {
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::abs(x) > std::numeric_limits<int>::max())
        throw ConfigError(key + ": '" + v + "' is not an integer");
    return static_cast<int>(x);
}

inline bool to_bool(const std::string &key, const std::string &v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

// Shortest representation that parses back to the same double.
inline std::string exact(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string join(const std::vector<int> &v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace config_detail

enum class Output { fock_b, fock_r, spin, cfi, qfi, spin_frequency };

inline const char *output_name(Output o) {
    switch (o) {
        case Output::fock_b: return "fock_b";
        case Output::fock_r: return "fock_r";
        case Output::spin: return "spin";
        case Output::cfi: return "cfi";
        case Output::qfi: return "qfi";
        case Output::spin_frequency: return "spin_frequency";
    }
    return "";
}

inline bool is_scalar(Output o) { return o == Output::cfi || o == Output::qfi || o == Output::spin_frequency; }

enum class Measurement { fock_b, fock_r, spin };

inline const char *measurement_name(Measurement m) {
    return m == Measurement::fock_b ? "fock_b" : m == Measurement::fock_r ? "fock_r" : "spin";
}

/// One simulation: drive parameters in lab units, initial state, cutoffs and requested outputs.
struct ExperimentConfig {
    std::string name = "experiment";
    Scheme scheme = Scheme::case1;
    double g_over_2pi = 0;       // kHz
    double omega_over_2pi = 0;   // kHz
    double lambda_over_2pi = 0;  // kHz
    double t_final = 0;          // ms
    int n_time_samples = 101;
    StateSpec initial_state;
    int cutoff_b = 4;
    int cutoff_r = 4;
    std::vector<Output> outputs{Output::spin};
    std::vector<int> fock_indices_b;  // empty: all
    std::vector<int> fock_indices_r;
    bool effective = false;
    bool residual = false;
    Method method = Method::eigendecomposition;
    int krylov_dim = 30;
    double tail_mass_tol = 1e-6;
    int nu = 1;
    std::optional<Measurement> measurement;  // unset: chosen from scheme and state
    std::optional<double> estimation_t;      // ms; unset: t_final

    DriveConfig drive() const {
        DriveConfig d;
        d.scheme = scheme;
        d.g = constants::khz_to_rad_per_s(g_over_2pi);
        d.omega = constants::khz_to_rad_per_s(omega_over_2pi);
        d.lambda = constants::khz_to_rad_per_s(lambda_over_2pi);
        d.duration = constants::ms_to_s(t_final);
        return d;
    }
    SpaceLayout layout() const { return SpaceLayout(cutoff_b, cutoff_r); }
    PropagatorSettings settings() const {
        PropagatorSettings s;
        s.method = method;
        s.krylov_dim = krylov_dim;
        s.tail_mass_tol = tail_mass_tol;
        s.time_step = n_time_samples > 1 ? constants::ms_to_s(t_final) / (n_time_samples - 1) : 0.0;
        return s;
    }
    double estimation_time_ms() const { return estimation_t.value_or(t_final); }
    bool wants(Output o) const { return std::find(outputs.begin(), outputs.end(), o) != outputs.end(); }

    Measurement resolved_measurement() const {
        if (measurement) return *measurement;
        if (scheme == Scheme::case1) return Measurement::fock_r;
        return initial_state.motion.kind == MotionSpec::Kind::binomial ? Measurement::spin : Measurement::fock_b;
    }

    LinOp hamiltonian(const SpaceLayout &L, double lambda_rad_s) const {
        DriveConfig d = drive();
        d.lambda = lambda_rad_s;
        return effective ? h_effective(L, d, residual) : h_exact(L, d);
    }

    /// Assigns one key; the same entry point serves files, CLI overrides and sweeps.
    void set(const std::string &key, const std::string &value) {
        using namespace config_detail;
        if (key == "name") {
            name = value;
        } else if (key == "scheme") {
            if (value == "case1") scheme = Scheme::case1;
            else if (value == "case2") scheme = Scheme::case2;
            else throw ConfigError("scheme: expected case1 or case2, got '" + value + "'");
        } else if (key == "g_over_2pi") {
            g_over_2pi = to_double(key, value);
        } else if (key == "omega_over_2pi") {
            omega_over_2pi = to_double(key, value);
        } else if (key == "lambda_over_2pi") {
            lambda_over_2pi = to_double(key, value);
        } else if (key == "t_final") {
            t_final = to_double(key, value);
        } else if (key == "n_time_samples") {
            n_time_samples = to_int(key, value);
        } else if (key == "initial_state.spin") {
            try {
                initial_state.spin = parse_spin(value);
            } catch (const InvalidArgument &e) {
                throw ConfigError(key + ": " + e.what());
            }
        } else if (key == "initial_state.motion") {
            try {
                initial_state.motion = parse_motion(value);
            } catch (const InvalidArgument &e) {
                throw ConfigError(key + ": " + e.what());
            }
        } else if (key == "initial_state.n") {
            const int n = to_int(key, value);
            if (n < 0) throw ConfigError(key + ": must be non-negative");
            auto &m = initial_state.motion;
            if (m.kind == MotionSpec::Kind::fock) m.n_b = n;
            else m.n = n;
        } else if (key == "cutoffs.n_b") {
            cutoff_b = to_int(key, value);
        } else if (key == "cutoffs.n_r") {
            cutoff_r = to_int(key, value);
        } else if (key == "outputs") {
            outputs.clear();
            for (const auto &item : KeyValueFile::split_list(value)) {
                bool found = false;
                for (Output o : {Output::fock_b, Output::fock_r, Output::spin, Output::cfi, Output::qfi,
                                 Output::spin_frequency})
                    if (item == output_name(o)) {
                        if (!wants(o)) outputs.push_back(o);
                        found = true;
                    }
                if (!found) throw ConfigError("outputs: unknown output '" + item + "'");
            }
        } else if (key == "fock_indices.b" || key == "fock_indices.r") {
            std::vector<int> idx;
            for (const auto &item : KeyValueFile::split_list(value)) idx.push_back(to_int(key, item));
            (key == "fock_indices.b" ? fock_indices_b : fock_indices_r) = idx;
        } else if (key == "hamiltonian") {
            if (value == "exact") effective = false;
            else if (value == "effective") effective = true;
            else throw ConfigError("hamiltonian: expected exact or effective, got '" + value + "'");
        } else if (key == "residual") {
            residual = to_bool(key, value);
        } else if (key == "method") {
            if (value == "eig") method = Method::eigendecomposition;
            else if (value == "krylov") method = Method::krylov;
            else throw ConfigError("method: expected eig or krylov, got '" + value + "'");
        } else if (key == "krylov_dim") {
            krylov_dim = to_int(key, value);
        } else if (key == "tail_mass_tol") {
            tail_mass_tol = to_double(key, value);
        } else if (key == "nu") {
            nu = to_int(key, value);
        } else if (key == "measurement") {
            if (value == "auto") measurement.reset();
            else if (value == "fock_b") measurement = Measurement::fock_b;
            else if (value == "fock_r") measurement = Measurement::fock_r;
            else if (value == "spin") measurement = Measurement::spin;
            else throw ConfigError("measurement: expected fock_b, fock_r, spin or auto, got '" + value + "'");
        } else if (key == "estimation.t") {
            estimation_t = to_double(key, value);
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }

    /// Cutoffs used when a file omits them; squeezing in case 1 needs the deeper rocking space.
    static std::pair<int, int> default_cutoffs(Scheme s) { return s == Scheme::case1 ? std::pair{20, 40} : std::pair{10, 10}; }

    static bool is_numeric_key(const std::string &key) {
        static const char *keys[] = {"g_over_2pi",   "omega_over_2pi", "lambda_over_2pi", "t_final",
                                     "n_time_samples", "initial_state.n", "cutoffs.n_b",   "cutoffs.n_r",
                                     "krylov_dim",   "tail_mass_tol",  "nu",              "estimation.t"};
        return std::any_of(std::begin(keys), std::end(keys), [&](const char *k) { return key == k; });
    }

    void validate() const {
        auto bad = [](const std::string &m) { throw ConfigError(m); };
        if (!(omega_over_2pi != 0)) bad("omega_over_2pi must be non-zero");
        if (!(t_final >= 0)) bad("t_final must be non-negative");
        if (n_time_samples < 1) bad("n_time_samples must be at least 1");
        if (cutoff_b < 0 || cutoff_r < 0) bad("cutoffs must be non-negative");
        if (initial_state.motion.max_breathing() > cutoff_b || initial_state.motion.max_rocking() > cutoff_r)
            bad("initial_state.motion " + initial_state.motion.to_string() + " exceeds the cutoffs");
        if (outputs.empty()) bad("outputs must not be empty");
        for (int k : fock_indices_b)
            if (k < 0 || k > cutoff_b) bad("fock_indices.b entry " + std::to_string(k) + " outside the cutoff");
        for (int k : fock_indices_r)
            if (k < 0 || k > cutoff_r) bad("fock_indices.r entry " + std::to_string(k) + " outside the cutoff");
        if (krylov_dim < 2) bad("krylov_dim must be at least 2");
        if (!(tail_mass_tol > 0 && tail_mass_tol < 1)) bad("tail_mass_tol must lie in (0, 1)");
        if (nu < 1) bad("nu must be at least 1");
        if (estimation_t && !(*estimation_t >= 0)) bad("estimation.t must be non-negative");
        if ((wants(Output::cfi) || wants(Output::qfi)) && !(lambda_over_2pi != 0))
            bad("Fisher information needs a non-zero lambda_over_2pi");
        if (wants(Output::spin_frequency) && n_time_samples < 4) bad("spin_frequency needs n_time_samples >= 4");
    }

    static ExperimentConfig from_file(const KeyValueFile &kv) {
        ExperimentConfig c;
        for (const auto &[key, e] : kv.entries()) {
            try {
                c.set(key, e.value);
            } catch (const ConfigError &err) {
                kv.fail(e.line, err.what());
            }
        }
        static const char *required[] = {"scheme", "g_over_2pi", "omega_over_2pi", "lambda_over_2pi", "t_final"};
        for (const char *k : required)
            if (!kv.entries().count(k)) throw ConfigError(kv.source() + ": missing required key '" + k + "'");
        const auto [def_b, def_r] = default_cutoffs(c.scheme);
        if (!kv.entries().count("cutoffs.n_b")) c.cutoff_b = def_b;
        if (!kv.entries().count("cutoffs.n_r")) c.cutoff_r = def_r;
        try {
            c.validate();
        } catch (const ConfigError &err) {
            throw ConfigError(kv.source() + ": " + err.what());
        }
        return c;
    }

    static ExperimentConfig parse(const std::string &text, const std::string &source = "<config>") {
        std::istringstream in(text);
        return from_file(KeyValueFile::parse(in, source));
    }

    static ExperimentConfig load(const std::string &path) { return from_file(KeyValueFile::load(path)); }

    /// Canonical text form; parse(to_string()) reproduces the config exactly.
    std::string to_string() const {
        using config_detail::exact;
        std::ostringstream o;
        o << "name = " << name << '\n'
          << "scheme = " << (scheme == Scheme::case1 ? "case1" : "case2") << '\n'
          << "g_over_2pi = " << exact(g_over_2pi) << '\n'
          << "omega_over_2pi = " << exact(omega_over_2pi) << '\n'
          << "lambda_over_2pi = " << exact(lambda_over_2pi) << '\n'
          << "t_final = " << exact(t_final) << '\n'
          << "n_time_samples = " << n_time_samples << '\n'
          << "initial_state.spin = " << spin_to_string(initial_state.spin) << '\n'
          << "initial_state.motion = " << initial_state.motion.to_string() << '\n'
          << "cutoffs.n_b = " << cutoff_b << '\n'
          << "cutoffs.n_r = " << cutoff_r << '\n'
          << "outputs = ";
        for (size_t i = 0; i < outputs.size(); ++i) o << (i ? ", " : "") << output_name(outputs[i]);
        o << '\n';
        if (!fock_indices_b.empty()) o << "fock_indices.b = " << config_detail::join(fock_indices_b) << '\n';
        if (!fock_indices_r.empty()) o << "fock_indices.r = " << config_detail::join(fock_indices_r) << '\n';
        o << "hamiltonian = " << (effective ? "effective" : "exact") << '\n'
          << "residual = " << (residual ? "true" : "false") << '\n'
          << "method = " << (method == Method::krylov ? "krylov" : "eig") << '\n'
          << "krylov_dim = " << krylov_dim << '\n'
          << "tail_mass_tol = " << exact(tail_mass_tol) << '\n'
          << "nu = " << nu << '\n'
          << "measurement = " << (measurement ? measurement_name(*measurement) : "auto") << '\n';
        if (estimation_t) o << "estimation.t = " << exact(*estimation_t) << '\n';
        return o.str();
    }
};

}  // namespace trilinear
