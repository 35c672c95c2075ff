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

#include "trilinear/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"

using namespace trilinear;
namespace fs = std::filesystem;

namespace {

const char *small_case2 = R"(
# comment line
name = small
scheme = case2
g_over_2pi = 3.0     # kHz
omega_over_2pi = 60
lambda_over_2pi = 0.4
t_final = 6
n_time_samples = 13
initial_state.spin = +
initial_state.motion = fock(2,0)
cutoffs.n_b = 6
cutoffs.n_r = 6
outputs = fock_b, fock_r, spin
)";

std::string slurp(const fs::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("trilinear_test_" + name);
    fs::remove_all(p);
    return p;
}

int cli(const std::string &args) {
    const std::string cmd = std::string(TRILINEAR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path &p, const std::string &text) { std::ofstream(p, std::ios::binary) << text; }

std::string table_text(const csv::Table &t) {
    std::ostringstream o;
    t.write(o);
    return o.str();
}

}  // namespace

TEST(key_value_file, grammar) {
    std::istringstream in("a.b = 1 # trailing\n\n  c_d=  x y \n");
    const auto kv = KeyValueFile::parse(in, "mem");
    ASSERT_EQ(kv.entries().size(), 2u);
    EXPECT_EQ(kv.entries().at("a.b").value, "1");
    EXPECT_EQ(kv.entries().at("c_d").value, "x y");
    EXPECT_EQ(kv.entries().at("c_d").line, 3);

    auto fails = [](const std::string &text, const std::string &fragment) {
        std::istringstream s(text);
        try {
            KeyValueFile::parse(s, "mem");
        } catch (const ConfigError &e) {
            EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
            return;
        }
        ADD_FAILURE() << "no error for: " << text;
    };
    fails("a = 1\na = 2\n", "mem:2: duplicate key");
    fails("just words\n", "mem:1: expected");
    fails("Bad = 1\n", "invalid key");
    fails("a =   # nothing\n", "empty value");
    EXPECT_THROW(KeyValueFile::load("/nonexistent/file.cfg"), ConfigError);
}

TEST(experiment_config, parse_and_round_trip) {
    const auto c = ExperimentConfig::parse(small_case2);
    EXPECT_EQ(c.scheme, Scheme::case2);
    EXPECT_DOUBLE_EQ(c.drive().g, 2 * M_PI * 3000);
    EXPECT_DOUBLE_EQ(c.drive().duration, 6e-3);
    EXPECT_EQ(c.initial_state.motion.to_string(), "fock(2,0)");
    EXPECT_EQ(c.outputs.size(), 3u);
    EXPECT_EQ(c.resolved_measurement(), Measurement::fock_b);

    const std::string text = c.to_string();
    const auto back = ExperimentConfig::parse(text);
    EXPECT_EQ(back.to_string(), text);
    EXPECT_EQ(back.drive().g, c.drive().g);

    for (const auto &fig : figure_names()) {
        const auto f = figure_config(fig);
        EXPECT_EQ(f.name, fig);
        EXPECT_EQ(ExperimentConfig::parse(f.to_string()).to_string(), f.to_string()) << fig;
    }
    EXPECT_THROW(figure_config("fig9"), ConfigError);
}

TEST(experiment_config, rejects_bad_input) {
    const std::string base = small_case2;
    auto bad = [&](const std::string &extra) { return ExperimentConfig::parse(base + extra); };
    EXPECT_THROW(bad("colour = red\n"), ConfigError);
    EXPECT_THROW(bad("nu = 1.5\n"), ConfigError);
    EXPECT_THROW(bad("method = magic\n"), ConfigError);
    EXPECT_THROW(bad("outputs = fock_b, wigner\n"), ConfigError);
    EXPECT_THROW(bad("fock_indices.b = 9\n"), ConfigError);
    EXPECT_THROW(bad("residual = maybe\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("scheme = case3\n"), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse("scheme = case1\n"), ConfigError);  // required keys missing
    std::string big = base;
    big.replace(big.find("fock(2,0)"), 9, "fock(7,0)");
    EXPECT_THROW(ExperimentConfig::parse(big), ConfigError);
    try {
        bad("g_over_2pi = fast\n");
    } catch (const ConfigError &e) {
        EXPECT_NE(std::string(e.what()).find("<config>:"), std::string::npos);
    }
}

TEST(experiment_config, default_cutoffs) {
    std::string text = small_case2;
    text.replace(text.find("cutoffs.n_b = 6\n"), 16, "");
    text.replace(text.find("cutoffs.n_r = 6\n"), 16, "");
    const auto c2 = ExperimentConfig::parse(text);
    EXPECT_EQ(c2.cutoff_b, 10);
    EXPECT_EQ(c2.cutoff_r, 10);
    text.replace(text.find("scheme = case2"), 14, "scheme = case1");
    text.replace(text.find("fock(2,0)"), 9, "fock(0,0)");
    const auto c1 = ExperimentConfig::parse(text);
    EXPECT_EQ(c1.cutoff_b, 20);
    EXPECT_EQ(c1.cutoff_r, 40);
}

TEST(experiment_config, sweep_key_assignment) {
    auto c = ExperimentConfig::parse(small_case2);
    c.set("initial_state.n", "3");
    EXPECT_EQ(c.initial_state.motion.to_string(), "fock(3,0)");
    c.set("initial_state.motion", "twin(1)");
    c.set("initial_state.n", "2");
    EXPECT_EQ(c.initial_state.motion.to_string(), "twin(2)");
    EXPECT_TRUE(ExperimentConfig::is_numeric_key("lambda_over_2pi"));
    EXPECT_FALSE(ExperimentConfig::is_numeric_key("scheme"));
}

TEST(analytic_overlay, closed_forms) {
    auto c = ExperimentConfig::parse(small_case2);
    const double t = 3e-3;
    const auto o = analytic_overlay(c, t);
    const double x = beam_splitter_rate(c.drive().g, c.drive().lambda, c.drive().omega) * t;
    const auto p = beam_splitter_pmf(2, x);
    ASSERT_TRUE(o.p_b.has_value());
    ASSERT_EQ(o.p_b->size(), 7u);
    for (int k = 0; k <= 2; ++k) {
        EXPECT_NEAR((*o.p_b)[k], p[k], 1e-14);
        EXPECT_NEAR((*o.p_r)[2 - k], p[k], 1e-14);
    }
    EXPECT_EQ(o.spin->down, 0.5);

    c.set("initial_state.spin", "down");
    c.set("initial_state.motion", "binomial(2)");
    const auto b = analytic_overlay(c, t);
    const auto r = ramsey_populations(2, x / t, t);
    EXPECT_NEAR(b.spin->down, r.down, 1e-15);
    EXPECT_NEAR((*b.p_b)[1], 0.5, 1e-15);
}

TEST(run_experiment, tables_and_determinism) {
    const auto c = ExperimentConfig::parse(small_case2);
    const auto r1 = run_experiment(c), r2 = run_experiment(c);
    ASSERT_EQ(r1.tables.size(), 3u);
    for (const auto &t : r1.tables) {
        EXPECT_EQ(t.table.columns.front(), "t_ms");
        EXPECT_EQ(t.table.rows.size(), 13u);
    }
    const auto *fb = r1.table("fock_b.csv");
    ASSERT_NE(fb, nullptr);
    EXPECT_NE(fb->column("analytic_p_nb_2"), static_cast<size_t>(-1));
    EXPECT_NEAR(fb->rows.back()[0], 6.0, 1e-12);
    EXPECT_LT(r1.scalars.at("max_deviation_fock_b"), 0.05);
    for (size_t i = 0; i < r1.tables.size(); ++i)
        EXPECT_EQ(table_text(r1.tables[i].table), table_text(r2.tables[i].table));
    EXPECT_EQ(r1.summary_text(), r2.summary_text());
}

TEST(run_experiment, scalar_outputs) {
    auto c = ExperimentConfig::parse(std::string(small_case2) + "estimation.t = 4\n");
    c.set("outputs", "cfi, qfi");
    const auto r = run_experiment(c, {2, false});
    const double cf = r.scalars.at("cfi"), q = r.scalars.at("qfi");
    EXPECT_NEAR(cf / r.scalars.at("cfi_analytic"), 1.0, 0.1);
    EXPECT_LE(cf, q * (1 + 1e-6));
    EXPECT_NEAR(r.scalars.at("delta_lambda"), 1 / std::sqrt(cf), 1e-12 / std::sqrt(cf));
    ASSERT_NE(r.table("cfi.csv"), nullptr);
    EXPECT_EQ(r.table("cfi.csv")->rows[0][0], 4.0);
}

TEST(run_experiment, truncation_breach_propagates) {
    auto c = ExperimentConfig::parse(small_case2);
    c.set("cutoffs.n_b", "2");
    c.set("cutoffs.n_r", "2");
    EXPECT_THROW(run_experiment(c), TruncationBreach);
}

TEST(sweep, empty_values_give_header_only) {
    auto c = ExperimentConfig::parse(small_case2);
    c.set("outputs", "cfi");
    const auto s = sweep(c, "lambda_over_2pi", {});
    std::ostringstream o;
    s.write(o);
    EXPECT_EQ(o.str(), "lambda_over_2pi,cfi,cfi_analytic,delta_lambda,error\n");
    EXPECT_THROW(sweep(c, "scheme", {1}), ConfigError);
    c.set("outputs", "spin");
    EXPECT_THROW(sweep(c, "nu", {1}), ConfigError);
}

// Twin-Fock CFI over n: the effective-theory closed form 32 n (n + 1) g^2 t^2 / omega^2.
TEST(sweep, twin_fock_scaling_with_failed_point) {
    auto c = ExperimentConfig::parse(small_case2);
    c.set("initial_state.motion", "twin(1)");
    c.set("cutoffs.n_b", "9");
    c.set("cutoffs.n_r", "9");
    c.set("outputs", "cfi");
    c.set("hamiltonian", "effective");
    const auto s = sweep(c, "initial_state.n", {1, 2, 3, 12}, 3);
    ASSERT_EQ(s.rows.size(), 4u);
    for (int i = 0; i < 3; ++i) {
        const auto &row = s.rows[i];
        EXPECT_EQ(row.value, i + 1.0);
        EXPECT_TRUE(row.error.empty()) << row.error;
        EXPECT_NEAR(row.scalars.at("cfi") / row.scalars.at("cfi_analytic"), 1.0, 1e-6);
    }
    const double r12 = s.rows[1].scalars.at("cfi") / s.rows[0].scalars.at("cfi");
    EXPECT_NEAR(r12, 3.0, 1e-5);  // n(n+1): 6 / 2
    EXPECT_NE(s.rows[3].error.find("config"), std::string::npos);
    std::ostringstream o;
    s.write(o);
    const std::string text = o.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}

// Fitted p_down frequency is linear in lambda with slope 4 g / omega (n = 1).
TEST(sweep, spin_frequency_linear_in_lambda) {
    auto c = figure_config("fig4a");
    c.set("outputs", "spin_frequency");
    const std::vector<double> lam{0.2, 0.3, 0.4, 0.5, 0.6};
    const auto s = sweep(c, "lambda_over_2pi", lam, 2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lam.size(); ++i) {
        ASSERT_TRUE(s.rows[i].error.empty()) << s.rows[i].error;
        const double x = 2 * M_PI * lam[i] * 1e3, y = s.rows[i].scalars.at("spin_frequency") * 1e3;  // rad/s
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double n = lam.size(), slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(slope / (4 * 3.0 / 60), 1.0, 0.05);
}

TEST(modes_report, ca40_values) {
    const auto r = modes_report(TrapFile::load(default_config_dir() + "/ca40_trap.cfg"));
    EXPECT_NE(r.text.find("length_scale_um = 4.44769"), std::string::npos) << r.text;
    EXPECT_NE(r.text.find("ground_state_size_nm = 8.54089"), std::string::npos);
    EXPECT_NE(r.text.find("lambda_over_2pi_khz = 1.86668"), std::string::npos);
    EXPECT_NE(r.text.find("case1.omega_rock_over_2pi_khz = 858.525403784"), std::string::npos);
    EXPECT_EQ(r.modes.rows.size(), 6u);
}

TEST(cli, exit_codes_and_outputs) {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    write_file(dir / "good.cfg", small_case2);
    write_file(dir / "bad.cfg", std::string(small_case2) + "scheme = case1\n");
    write_file(dir / "unstable.cfg",
               "ion_mass_amu = 40\nn_ions = 5\nomega_z_over_2pi = 1000\nomega_x_over_2pi = 1010\n"
               "omega_y_over_2pi = 1010\n");

    EXPECT_EQ(cli("run --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o_bad").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "o_bad"));
    EXPECT_EQ(cli("run --config " + (dir / "good.cfg").string() + " --cutoff-b 2 --cutoff-r 2 --out " +
                  (dir / "o_trunc").string()),
              3);
    EXPECT_FALSE(fs::exists(dir / "o_trunc"));
    EXPECT_EQ(cli("modes --config " + (dir / "unstable.cfg").string()), 4);
    EXPECT_EQ(cli("run --config " + (dir / "good.cfg").string() + " --method fast --out " + (dir / "x").string()), 2);
    EXPECT_EQ(cli("frobnicate"), 2);

    ASSERT_EQ(cli("run --config " + (dir / "good.cfg").string() + " --out " + (dir / "a").string()), 0);
    ASSERT_EQ(cli("run --config " + (dir / "good.cfg").string() + " --out " + (dir / "b").string() + " --jobs 2"), 0);
    for (const char *f : {"fock_b.csv", "fock_r.csv", "spin.csv", "summary.txt"}) {
        EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    EXPECT_EQ(slurp(dir / "a" / "spin.csv").substr(0, 12), "t_ms,p_down,");

    ASSERT_EQ(cli("run --config " + (dir / "good.cfg").string() + " --method krylov --out " + (dir / "k").string()), 0);
    EXPECT_EQ(slurp(dir / "k" / "fock_b.csv").substr(0, 40), slurp(dir / "a" / "fock_b.csv").substr(0, 40));

    ASSERT_EQ(cli("sweep --config " + (dir / "good.cfg").string() + " --axis lambda_over_2pi --values '' --out " +
                  (dir / "s").string()),
              2);  // no scalar outputs requested
    write_file(dir / "scalar.cfg", std::string(small_case2) + "measurement = fock_b\n");
    {
        auto c = ExperimentConfig::load((dir / "scalar.cfg").string());
        c.set("outputs", "cfi");
        write_file(dir / "scalar.cfg", c.to_string());
    }
    ASSERT_EQ(cli("sweep --config " + (dir / "scalar.cfg").string() + " --axis lambda_over_2pi --values '' --out " +
                  (dir / "s").string()),
              0);
    EXPECT_EQ(slurp(dir / "s" / "sweep.csv"), "lambda_over_2pi,cfi,cfi_analytic,delta_lambda,error\n");
    fs::remove_all(dir);
}
