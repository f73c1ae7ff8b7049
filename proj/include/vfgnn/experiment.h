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


// Experiment driver behind the vfgnn command-line tool: a JSON-backed
// configuration and one entry point per subcommand. Every entry point writes
// CSV tables into the output directory and throws on failure; ConfigError
// marks a bad configuration value and names the offending field.

#ifndef VFGNN_EXPERIMENT_H_
#define VFGNN_EXPERIMENT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vfgnn/attack.h"
#include "vfgnn/commcost.h"
#include "vfgnn/datagraph.h"
#include "vfgnn/fedsim.h"
#include "vfgnn/gnncore.h"

namespace vfgnn {

// Environment variable that overrides ExperimentConfig::output_dir.
inline constexpr const char* kOutputDirEnv = "VFGNN_OUTPUT_DIR";

struct ExperimentConfig {
  // Data: a ratings file, or a synthetic "<users>x<items>x<density>" spec.
  std::string data_path;
  std::string data_format = "csv";
  std::string synthetic = "200x120x0.05";
  std::string generator = "latent";  // latent | uniform
  int thd = 0;        // drop users with fewer ratings, 0 keeps everyone
  int max_users = 0;  // seeded user subsample, 0 keeps everyone
  std::array<double, 3> split{0.6, 0.2, 0.2};

  std::string mode = "federated";  // central | federated
  Variant variant = Variant::kGcn;
  int parties = 2;
  double participation_rate = 1.0;
  int iterations = 200;
  int dim = 6;
  int layers = 2;
  double learning_rate = 0.05;
  double r = 3.0;
  double clip_bound = 0.5;
  int q = 0;  // 0 derives q from q_ratio
  double q_ratio = 5.0;
  Quantization quantization = Quantization::kTernary;
  Transport transport = Transport::kProjected;

  std::uint64_t data_seed = 1;
  std::uint64_t init_seed = 2;
  std::uint64_t protocol_seed = 3;
  std::uint64_t attack_seed = 4;
  int eval_every = 5;
  int repeats = 1;  // seeds advance by the repeat index
  std::string output_dir = "vfgnn_out";

  // sweep
  std::string sweep_axis = "alpha";  // alpha | r | qratio
  std::vector<double> sweep_values = {0.25, 0.5, 1.0};
  // attack
  std::vector<double> p_ads = {0.2, 0.5, 0.8};
  std::vector<Transport> attack_transports = {
      Transport::kRevealIndividual, Transport::kIdentity,
      Transport::kProjected};
  int c_max = 3;
  // commcost
  std::vector<int> cost_users = {100, 200, 400};
  std::vector<double> cost_q_ratios = {5.0};
  int cost_fixed_q = 0;
  bool allow_insecure_projection = false;

  bool operator==(const ExperimentConfig&) const = default;
};

std::string config_to_json(const ExperimentConfig& config);
// Missing keys keep their current value in `base`; unknown keys and
// ill-typed values raise ConfigError naming the key.
ExperimentConfig config_from_json(const std::string& text,
                                  ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = {});
// Throws ConfigError naming the first invalid field.
void validate_config(const ExperimentConfig& config);

RatingDataset load_dataset(const ExperimentConfig& config);
FederatedConfig federated_config(const ExperimentConfig& config, int repeat);
// The output directory after applying the environment override.
std::filesystem::path output_dir(const ExperimentConfig& config);

// Writes metrics.csv (metrics_<k>.csv for later repeats), model.ckpt and
// summary.csv (repeat,test_rmse). Returns the test RMSE per repeat.
std::vector<double> cli_train(const ExperimentConfig& config);
// Writes attack.csv over p_ad x transport for the configured variant.
std::vector<AttackRow> cli_attack(const ExperimentConfig& config);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  double test_rmse = 0.0;
  double test_rmse_std = 0.0;
};
// Writes sweep.csv (axis,value,test_rmse,test_rmse_std), one row per value.
std::vector<SweepRow> cli_sweep(const ExperimentConfig& config);
// Writes commcost.csv (per grid point and phase) and crossval.csv
// (phase,slope,max_rel_residual).
std::vector<CostSweepPoint> cli_commcost(const ExperimentConfig& config);

}  // namespace vfgnn

#endif  // VFGNN_EXPERIMENT_H_
