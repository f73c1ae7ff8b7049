// Copyright 2026 The vfgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vfgnn/experiment.h"

namespace vfgnn {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vfgnn_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const fs::path& path) {
  Csv csv;
  std::istringstream in(slurp(path));
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      csv.header = cells;
      first = false;
    } else {
      csv.rows.push_back(cells);
    }
  }
  return csv;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(VFGNN_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override { unsetenv(kOutputDirEnv); }
};

ExperimentConfig small_config(const std::string& name) {
  ExperimentConfig c;
  c.synthetic = "50x40x0.1";
  c.iterations = 60;
  c.output_dir = fresh_dir(name).string();
  return c;
}

TEST_F(ExperimentTest, DefaultsMatchHyperparameters) {
  const ExperimentConfig c;
  EXPECT_EQ(c.dim, 6);
  EXPECT_EQ(c.layers, 2);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.05);
  EXPECT_EQ(c.eval_every, 5);
  EXPECT_EQ(c.split, (std::array<double, 3>{0.6, 0.2, 0.2}));
  EXPECT_NO_THROW(validate_config(c));
}

TEST_F(ExperimentTest, ConfigRoundTrip) {
  ExperimentConfig c;
  c.variant = Variant::kGgnn;
  c.participation_rate = 0.37;
  c.learning_rate = 0.1 / 3.0;
  c.transport = Transport::kRevealIndividual;
  c.quantization = Quantization::kLaplace;
  c.data_seed = 18446744073709551615ull;
  c.sweep_values = {1.0, 1e-7};
  c.attack_transports = {Transport::kIdentity};
  c.cost_users = {7};
  c.allow_insecure_projection = true;
  const ExperimentConfig back = config_from_json(config_to_json(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST_F(ExperimentTest, ConfigErrorsNameTheField) {
  auto field_of = [](const std::string& json) {
    try {
      validate_config(config_from_json(json));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of(R"({"participation_rate": 0})"), "participation_rate");
  EXPECT_EQ(field_of(R"({"participation_rate": 1.5})"), "participation_rate");
  EXPECT_EQ(field_of(R"({"iterations": 2.5})"), "iterations");
  EXPECT_EQ(field_of(R"({"variant": "mlp"})"), "variant");
  EXPECT_EQ(field_of(R"({"unknown_key": 1})"), "unknown_key");
  EXPECT_EQ(field_of(R"({"split": [0.5, 0.5]})"), "split");
  EXPECT_EQ(field_of(R"({"data_path": "/nonexistent/ratings.dat"})"),
            "data_path");
  EXPECT_EQ(field_of(R"({"synthetic": "10by10"})"), "synthetic");
  EXPECT_EQ(field_of(R"({"sweep_axis": "lr"})"), "sweep_axis");
  EXPECT_EQ(field_of("{not json"), "config");
  EXPECT_EQ(field_of(R"({"mode": "central"})"), "<none>");
}

TEST_F(ExperimentTest, CentralTrainLossTrendsDown) {
  ExperimentConfig c = small_config("central");
  c.mode = "central";
  const auto rmse = cli_train(c);
  ASSERT_EQ(rmse.size(), 1u);
  const Csv csv = read_csv(fs::path(c.output_dir) / "metrics.csv");
  EXPECT_EQ(csv.header,
            (std::vector<std::string>{"epoch", "split", "rmse", "loss"}));
  std::vector<double> loss;
  for (const auto& row : csv.rows)
    if (row[1] == "train") loss.push_back(std::stod(row[3]));
  ASSERT_GE(loss.size(), 6u);
  const double head = (loss[0] + loss[1] + loss[2]) / 3.0;
  const std::size_t n = loss.size();
  const double tail = (loss[n - 1] + loss[n - 2] + loss[n - 3]) / 3.0;
  EXPECT_LT(tail, head);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "model.ckpt"));
  std::ifstream ckpt(fs::path(c.output_dir) / "model.ckpt");
  EXPECT_NO_THROW(read_checkpoint(ckpt));
}

TEST_F(ExperimentTest, SinglePartyFederatedMatchesCentral) {
  ExperimentConfig central = small_config("eq_central");
  central.mode = "central";
  ExperimentConfig fed = small_config("eq_fed");
  fed.parties = 1;
  fed.transport = Transport::kIdentity;
  fed.quantization = Quantization::kNone;
  cli_train(central);
  cli_train(fed);
  const Csv a = read_csv(fs::path(central.output_dir) / "metrics.csv");
  const Csv b = read_csv(fs::path(fed.output_dir) / "metrics.csv");
  ASSERT_EQ(a.rows.size(), b.rows.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    worst = std::max(worst, std::abs(std::stod(a.rows[i][2]) -
                                     std::stod(b.rows[i][2])));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST_F(ExperimentTest, OutputsAreByteIdenticalAcrossReruns) {
  ExperimentConfig a = small_config("det_a");
  a.iterations = 10;
  ExperimentConfig b = a;
  b.output_dir = fresh_dir("det_b").string();
  cli_train(a);
  cli_train(b);
  for (const char* name :
       {"metrics.csv", "model.ckpt", "summary.csv", "messages.csv"}) {
    EXPECT_EQ(slurp(fs::path(a.output_dir) / name),
              slurp(fs::path(b.output_dir) / name))
        << name;
  }
}

TEST_F(ExperimentTest, RepeatsWriteOneFilePerRepeat) {
  ExperimentConfig c = small_config("repeats");
  c.iterations = 5;
  c.repeats = 2;
  const auto rmse = cli_train(c);
  EXPECT_EQ(rmse.size(), 2u);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "metrics_1.csv"));
  EXPECT_EQ(read_csv(fs::path(c.output_dir) / "summary.csv").rows.size(), 2u);
}

TEST_F(ExperimentTest, SweepSingleValueGivesSingleRow) {
  ExperimentConfig c = small_config("sweep_single");
  c.iterations = 5;
  c.sweep_axis = "r";
  c.sweep_values = {2.0};
  const auto rows = cli_sweep(c);
  ASSERT_EQ(rows.size(), 1u);
  const Csv csv = read_csv(fs::path(c.output_dir) / "sweep.csv");
  EXPECT_EQ(csv.header, (std::vector<std::string>{"axis", "value", "test_rmse",
                                                  "test_rmse_std"}));
  ASSERT_EQ(csv.rows.size(), 1u);
  EXPECT_EQ(csv.rows[0][0], "r");
}

TEST_F(ExperimentTest, AlphaSweepFullParticipationIsNoWorse) {
  ExperimentConfig c;
  c.synthetic = "400x200x0.05";
  c.parties = 4;
  c.repeats = 2;
  c.sweep_axis = "alpha";
  c.sweep_values = {0.25, 1.0};
  c.output_dir = fresh_dir("sweep_alpha").string();
  const auto rows = cli_sweep(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LE(rows[1].test_rmse, rows[0].test_rmse + 0.01);
}

TEST_F(ExperimentTest, QRatioSweepStaysWithinTolerance) {
  ExperimentConfig c;
  c.synthetic = "400x200x0.05";
  c.repeats = 2;
  c.sweep_axis = "qratio";
  c.sweep_values = {1.0, 5.0, 100.0};
  c.allow_insecure_projection = true;
  c.output_dir = fresh_dir("sweep_q").string();
  const auto rows = cli_sweep(c);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_LT(std::abs(r.test_rmse / rows[0].test_rmse - 1.0), 0.03)
        << r.value;
  }
}

TEST_F(ExperimentTest, AttackTableShapeAndDeterminism) {
  ExperimentConfig c;
  c.synthetic = "200x120x0.03";
  c.p_ads = {0.5};
  c.output_dir = fresh_dir("attack_a").string();
  const auto rows = cli_attack(c);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].transport, Transport::kRevealIndividual);
  EXPECT_DOUBLE_EQ(rows[0].report.precision, 1.0);
  ExperimentConfig again = c;
  again.output_dir = fresh_dir("attack_b").string();
  cli_attack(again);
  EXPECT_EQ(slurp(fs::path(c.output_dir) / "attack.csv"),
            slurp(fs::path(again.output_dir) / "attack.csv"));
}

TEST_F(ExperimentTest, CommcostExchangeScalesWithQ) {
  ExperimentConfig c;
  c.cost_users = {100};
  c.cost_q_ratios = {1.0, 5.0};
  c.allow_insecure_projection = true;
  c.output_dir = fresh_dir("commcost").string();
  const auto points = cli_commcost(c);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_EQ(points[1].measured.exchange * 5, points[0].measured.exchange);
  const Csv csv = read_csv(fs::path(c.output_dir) / "commcost.csv");
  EXPECT_EQ(csv.header,
            (std::vector<std::string>{"users", "q", "alpha", "phase",
                                      "predicted_bits", "measured_bits",
                                      "ratio"}));
  EXPECT_EQ(csv.rows.size(), 8u);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "crossval.csv"));
}

TEST_F(ExperimentTest, OutputDirEnvironmentOverride) {
  const fs::path dir = fresh_dir("env_override");
  setenv(kOutputDirEnv, dir.c_str(), 1);
  ExperimentConfig c = small_config("env_ignored");
  c.iterations = 2;
  EXPECT_EQ(output_dir(c), dir);
  cli_train(c);
  unsetenv(kOutputDirEnv);
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  EXPECT_FALSE(fs::exists(fs::path(c.output_dir) / "metrics.csv"));
}

TEST(Cli, InvalidAlphaExitsWithConfigError) {
  const RunResult r = run_cli("train --alpha 0");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("participation_rate"), std::string::npos);
}

TEST(Cli, UnknownFlagIsAConfigError) {
  EXPECT_EQ(run_cli("train --no-such-flag").exit_code, 1);
}

TEST(Cli, RuntimeErrorExitsWithTwo) {
  const fs::path bad = fresh_dir("bad_data");
  fs::create_directories(bad);
  std::ofstream(bad / "ratings.csv") << "user_id,item_id,rating\na,b\n";
  const RunResult r = run_cli("train --data " + (bad / "ratings.csv").string() +
                              " --output " + (bad / "out").string());
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(Cli, PrecedenceCommandLineOverFileOverDefaults) {
  const fs::path dir = fresh_dir("precedence");
  fs::create_directories(dir);
  std::ofstream(dir / "config.json")
      << R"({"iterations": 3, "participation_rate": 0.5})";
  const RunResult r = run_cli("train --config " +
                              (dir / "config.json").string() +
                              " --alpha 0.75 --print-config");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const ExperimentConfig c = config_from_json(r.output);
  EXPECT_EQ(c.iterations, 3);
  EXPECT_DOUBLE_EQ(c.participation_rate, 0.75);
  EXPECT_EQ(c.dim, 6);
}

TEST(Cli, TrainWritesOutputs) {
  const fs::path dir = fresh_dir("cli_train");
  const RunResult r =
      run_cli("train --mode central --variant gcn --synthetic 50x40x0.1 "
              "--iterations 10 --output " + dir.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "model.ckpt"));
}

}  // namespace
}  // namespace vfgnn
