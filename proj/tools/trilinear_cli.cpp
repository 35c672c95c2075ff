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

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trilinear/trilinear.hpp"

namespace {

using namespace trilinear;

enum Exit { ok = 0, config_error = 2, truncation = 3, numerical = 4 };

struct Overrides {
    std::optional<int> cutoff_b, cutoff_r;
    std::string method;

    void add_to(CLI::App *app) {
        app->add_option("--cutoff-b", cutoff_b, "Breathing-mode Fock cutoff");
        app->add_option("--cutoff-r", cutoff_r, "Rocking-mode Fock cutoff");
        app->add_option("--method", method, "Propagator: eig or krylov");
    }

    void apply(ExperimentConfig &cfg) const {
        if (cutoff_b) cfg.set("cutoffs.n_b", std::to_string(*cutoff_b));
        if (cutoff_r) cfg.set("cutoffs.n_r", std::to_string(*cutoff_r));
        if (!method.empty()) cfg.set("method", method);
        cfg.validate();
    }
};

int report(const std::exception &e) {
    std::cerr << "trilinear: " << e.what() << '\n';
    if (dynamic_cast<const TruncationBreach *>(&e)) return truncation;
    if (dynamic_cast<const ConfigError *>(&e) || dynamic_cast<const InvalidArgument *>(&e) ||
        dynamic_cast<const Unsupported *>(&e))
        return config_error;
    return numerical;
}

std::vector<double> parse_values(const std::string &text) {
    std::vector<double> out;
    for (const auto &item : KeyValueFile::split_list(text)) {
        double x = 0;
        if (!csv::parse_double(item, x)) throw ConfigError("--values: '" + item + "' is not a number");
        out.push_back(x);
    }
    return out;
}

int run_and_write(ExperimentConfig cfg, const Overrides &ov, const std::string &out, int jobs) {
    ov.apply(cfg);
    const auto res = run_experiment(cfg, {jobs, false});
    write_result(res, out);
    std::cout << res.summary_text();
    return ok;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Trilinear phonon coupling simulator"};
    app.require_subcommand(1);

    std::string config, out, axis, values, config_dir = default_config_dir();
    int jobs = 1;
    Overrides ov;

    auto *modes = app.add_subcommand("modes", "Normal modes, coupling constant and resonance conditions of a trap");
    modes->add_option("--config", config, "Trap configuration file")->required();
    modes->add_option("--out", out, "Directory for modes.csv and modes.txt");

    auto *run = app.add_subcommand("run", "Run one experiment configuration");
    run->add_option("--config", config, "Experiment configuration file")->required();
    run->add_option("--out", out, "Output directory")->required();
    run->add_option("--jobs", jobs, "Concurrent Fisher-information probes")->check(CLI::PositiveNumber);
    ov.add_to(run);

    auto *sw = app.add_subcommand("sweep", "Scan one numeric key and tabulate scalar outputs");
    sw->add_option("--config", config, "Experiment configuration file")->required();
    sw->add_option("--axis", axis, "Numeric key to vary, e.g. initial_state.n")->required();
    sw->add_option("--values", values, "Comma-separated values")->required();
    sw->add_option("--out", out, "Output directory (sweep.csv); stdout when omitted");
    sw->add_option("--jobs", jobs, "Concurrent sweep points")->check(CLI::PositiveNumber);
    ov.add_to(sw);

    std::string figure;
    auto *rep = app.add_subcommand("reproduce", "Run a shipped figure configuration");
    rep->add_option("figure", figure, "fig1, fig2, fig3, fig4a or fig4b")
        ->required()
        ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4a", "fig4b"}));
    rep->add_option("--config", config, "Use this file instead of the shipped configuration");
    rep->add_option("--config-dir", config_dir, "Directory holding the shipped configurations");
    rep->add_option("--out", out, "Output directory (default: ./<figure>)");
    rep->add_option("--jobs", jobs, "Concurrent Fisher-information probes")->check(CLI::PositiveNumber);
    ov.add_to(rep);

    auto *self = app.add_subcommand("selftest", "Norm, energy, propagator and truncation checks on every figure");
    self->add_option("--config-dir", config_dir, "Directory holding the shipped configurations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*modes) {
            const auto r = modes_report(TrapFile::load(config));
            std::cout << r.text;
            if (!out.empty()) {
                std::filesystem::create_directories(out);
                std::ofstream(std::filesystem::path(out) / "modes.txt", std::ios::binary) << r.text;
                std::ofstream f(std::filesystem::path(out) / "modes.csv", std::ios::binary);
                r.modes.write(f);
            }
            return ok;
        }
        if (*run) return run_and_write(ExperimentConfig::load(config), ov, out, jobs);
        if (*rep) {
            const auto cfg = config.empty() ? figure_config(figure, config_dir) : ExperimentConfig::load(config);
            return run_and_write(cfg, ov, out.empty() ? figure : out, jobs);
        }
        if (*sw) {
            auto cfg = ExperimentConfig::load(config);
            ov.apply(cfg);
            const auto res = sweep(cfg, axis, parse_values(values), jobs);
            if (out.empty()) {
                res.write(std::cout);
            } else {
                std::filesystem::create_directories(out);
                std::ofstream f(std::filesystem::path(out) / "sweep.csv", std::ios::binary);
                res.write(f);
            }
            return ok;
        }
        if (*self) {
            bool all = true;
            for (const auto &c : run_selftest(config_dir)) {
                std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << csv::format_double(c.value, 3)
                          << " (limit " << csv::format_double(c.limit, 3) << ")\n";
                all = all && c.passed;
            }
            return all ? ok : numerical;
        }
    } catch (const std::exception &e) {
        return report(e);
    }
    return ok;
}
