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


// vfgnn: train, attack, sweep and commcost subcommands.
//
// Configuration precedence is command line > --config file > defaults.
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vfgnn/experiment.h"

namespace {

using vfgnn::ConfigError;
using vfgnn::ExperimentConfig;

using Override = std::function<void(ExperimentConfig&)>;

class Overrides {
 public:
  explicit Overrides(CLI::App* app) : app_(app) {}

  template <typename T, typename Set>
  void add(const std::string& flags, const std::string& help, Set set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(flags, *value, help);
    list_.push_back([opt, value, set](ExperimentConfig& c) {
      if (opt->count() > 0) set(c, *value);
    });
  }

  template <typename T>
  void add(const std::string& flags, const std::string& help,
           T ExperimentConfig::*member) {
    add<T>(flags, help, [member](ExperimentConfig& c, const T& v) {
      c.*member = v;
    });
  }

  template <typename Parse, typename E>
  void add_enum(const std::string& flags, const std::string& help,
                const std::string& field, E ExperimentConfig::*member,
                Parse parse) {
    add<std::string>(flags, help,
                     [field, member, parse](ExperimentConfig& c,
                                            const std::string& v) {
                       try {
                         c.*member = parse(v);
                       } catch (const vfgnn::InvalidArgument& e) {
                         throw ConfigError(field, e.what());
                       }
                     });
  }

  void apply(ExperimentConfig& c) const {
    for (const auto& o : list_) o(c);
  }

 private:
  CLI::App* app_;
  std::vector<Override> list_;
};

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Overrides> overrides;
  std::string config_path;
  bool print_config = false;
};

void add_common(Command& cmd) {
  CLI::App* app = cmd.app;
  app->add_option("--config", cmd.config_path, "JSON configuration file");
  app->add_flag("--print-config", cmd.print_config,
                "print the effective configuration and exit");
  Overrides& o = *cmd.overrides;
  using C = ExperimentConfig;
  o.add("--data", "ratings file", &C::data_path);
  o.add("--format", "ratings format: csv or movielens-dat", &C::data_format);
  o.add("--synthetic", "synthetic data <users>x<items>x<density>",
        &C::synthetic);
  o.add("--generator", "synthetic generator: latent or uniform",
        &C::generator);
  o.add("--thd", "minimum ratings per user", &C::thd);
  o.add("--max-users", "seeded user subsample size", &C::max_users);
  o.add("--mode", "central or federated", &C::mode);
  o.add_enum("--variant", "gcn, gat or ggnn", "variant", &C::variant,
             [](const std::string& s) { return vfgnn::parse_variant(s); });
  o.add("--parties", "number of parties", &C::parties);
  o.add("--alpha,--participation-rate", "participation rate in (0, 1]",
        &C::participation_rate);
  o.add("--iterations", "training iterations", &C::iterations);
  o.add("--dim", "embedding dimension", &C::dim);
  o.add("--layers", "propagation layers", &C::layers);
  o.add("--lr", "learning rate", &C::learning_rate);
  o.add("--r", "ternary quantization range", &C::r);
  o.add("--clip", "gradient clipping bound", &C::clip_bound);
  o.add("--q", "projected dimension (0 derives it from --q-ratio)", &C::q);
  o.add("--q-ratio", "users / q", &C::q_ratio);
  o.add_enum("--quant", "ternary, laplace or none", "quantization",
             &C::quantization,
             [](const std::string& s) { return vfgnn::parse_quantization(s); });
  o.add_enum("--transport", "projected, identity or reveal", "transport",
             &C::transport,
             [](const std::string& s) { return vfgnn::parse_transport(s); });
  o.add("--data-seed", "data seed", &C::data_seed);
  o.add("--init-seed", "initialization seed", &C::init_seed);
  o.add("--protocol-seed", "protocol seed", &C::protocol_seed);
  o.add("--attack-seed", "attack seed", &C::attack_seed);
  o.add("--eval-every", "evaluation interval", &C::eval_every);
  o.add("--repeats", "seeded repetitions", &C::repeats);
  o.add("--output", "output directory", &C::output_dir);
  o.add("--allow-insecure-projection",
        "permit q that violates 2q <= n + 1 (true/false)",
        &C::allow_insecure_projection);
}

ExperimentConfig resolve(const Command& cmd) {
  ExperimentConfig config;
  if (!cmd.config_path.empty()) config = vfgnn::load_config(cmd.config_path);
  cmd.overrides->apply(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertical federated GNN recommendation experiments"};
  app.require_subcommand(1);

  std::vector<Command> commands(4);
  const char* names[] = {"train", "attack", "sweep", "commcost"};
  const char* help[] = {"train a centralized or federated model",
                        "run the de-anonymization attack suite",
                        "sweep alpha, r or qratio and report test RMSE",
                        "measure and predict communication cost"};
  for (int i = 0; i < 4; ++i) {
    commands[i].app = app.add_subcommand(names[i], help[i]);
    commands[i].overrides = std::make_unique<Overrides>(commands[i].app);
    add_common(commands[i]);
  }
  using C = ExperimentConfig;
  commands[1].overrides->add("--p-ad", "adversary coverage levels", &C::p_ads);
  commands[1].overrides->add<std::vector<std::string>>(
      "--attack-transports", "transports to attack",
      [](C& c, const std::vector<std::string>& v) {
        c.attack_transports.clear();
        for (const auto& s : v) {
          try {
            c.attack_transports.push_back(vfgnn::parse_transport(s));
          } catch (const vfgnn::InvalidArgument& e) {
            throw ConfigError("attack_transports", e.what());
          }
        }
      });
  commands[1].overrides->add("--c-max", "largest subset size", &C::c_max);
  commands[2].overrides->add("--axis", "alpha, r or qratio", &C::sweep_axis);
  commands[2].overrides->add("--values", "axis values", &C::sweep_values);
  commands[3].overrides->add("--users", "user counts", &C::cost_users);
  commands[3].overrides->add("--q-ratios", "users / q values",
                             &C::cost_q_ratios);
  commands[3].overrides->add("--fixed-q", "fixed q (overrides --q-ratios)",
                             &C::cost_fixed_q);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (int i = 0; i < 4; ++i) {
      const Command& cmd = commands[i];
      if (!cmd.app->parsed()) continue;
      const ExperimentConfig config = resolve(cmd);
      if (cmd.print_config) {
        std::cout << vfgnn::config_to_json(config);
        return 0;
      }
      const auto dir = vfgnn::output_dir(config).string();
      switch (i) {
        case 0: {
          const auto rmse = vfgnn::cli_train(config);
          for (std::size_t k = 0; k < rmse.size(); ++k) {
            std::cout << "repeat " << k << " test_rmse " << rmse[k] << '\n';
          }
          break;
        }
        case 1: {
          for (const auto& r : vfgnn::cli_attack(config)) {
            std::cout << vfgnn::transport_name(r.transport) << " p_ad "
                      << r.p_ad << " precision " << r.report.precision
                      << " recall " << r.report.recall << " f1 "
                      << r.report.f1 << '\n';
          }
          break;
        }
        case 2: {
          for (const auto& r : vfgnn::cli_sweep(config)) {
            std::cout << r.axis << ' ' << r.value << " test_rmse "
                      << r.test_rmse << '\n';
          }
          break;
        }
        case 3: {
          for (const auto& p : vfgnn::cli_commcost(config)) {
            std::cout << "users " << p.users << " q " << p.q
                      << " total_bits " << p.measured_with_headers.total()
                      << '\n';
          }
          break;
        }
      }
      std::cout << "wrote " << dir << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
