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


#include "vfgnn/experiment.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "vfgnn/centralized.h"

namespace vfgnn {
namespace {

using Json = nlohmann::ordered_json;

template <typename T>
T get_checked(const Json& v, const std::string& key);

template <typename T>
struct IsVector : std::false_type {};
template <typename T>
struct IsVector<std::vector<T>> : std::true_type {};

template <typename T>
T get_checked(const Json& v, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
    return v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() ||
        (std::is_unsigned_v<T> && !v.is_number_unsigned())) {
      throw ConfigError(key, std::is_unsigned_v<T>
                                 ? "expected a non-negative integer"
                                 : "expected an integer");
    }
    return v.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    return v.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(key, "expected a string");
    return v.get<std::string>();
  } else if constexpr (IsVector<T>::value) {
    if (!v.is_array()) throw ConfigError(key, "expected an array");
    T out;
    for (const Json& e : v) {
      out.push_back(get_checked<typename T::value_type>(e, key));
    }
    return out;
  } else {
    static_assert(std::is_same_v<T, std::array<double, 3>>);
    if (!v.is_array() || v.size() != 3) {
      throw ConfigError(key, "expected three numbers");
    }
    T out;
    for (std::size_t i = 0; i < 3; ++i) out[i] = get_checked<double>(v[i], key);
    return out;
  }
}

template <typename Parse>
auto parse_field(const std::string& key, const std::string& text, Parse parse) {
  try {
    return parse(text);
  } catch (const InvalidArgument& e) {
    throw ConfigError(key, e.what());
  }
}

struct FieldIo {
  std::string key;
  std::function<Json(const ExperimentConfig&)> write;
  std::function<void(const Json&, ExperimentConfig&)> read;
};

template <typename T>
FieldIo plain(std::string key, T ExperimentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) { return Json(c.*member); },
          [key, member](const Json& v, ExperimentConfig& c) {
            c.*member = get_checked<T>(v, key);
          }};
}

template <typename E, typename Name, typename Parse>
FieldIo enumerated(std::string key, E ExperimentConfig::*member, Name name,
                   Parse parse) {
  return {key,
          [member, name](const ExperimentConfig& c) {
            return Json(std::string(name(c.*member)));
          },
          [key, member, parse](const Json& v, ExperimentConfig& c) {
            c.*member = parse_field(key, get_checked<std::string>(v, key),
                                    parse);
          }};
}

const std::vector<FieldIo>& fields() {
  static const std::vector<FieldIo> table = [] {
    using C = ExperimentConfig;
    auto variant_parse = [](const std::string& s) { return parse_variant(s); };
    auto transport_parse = [](const std::string& s) {
      return parse_transport(s);
    };
    return std::vector<FieldIo>{
        plain("data_path", &C::data_path),
        plain("data_format", &C::data_format),
        plain("synthetic", &C::synthetic),
        plain("generator", &C::generator),
        plain("thd", &C::thd),
        plain("max_users", &C::max_users),
        plain("split", &C::split),
        plain("mode", &C::mode),
        enumerated("variant", &C::variant,
                   [](Variant v) { return variant_name(v); }, variant_parse),
        plain("parties", &C::parties),
        plain("participation_rate", &C::participation_rate),
        plain("iterations", &C::iterations),
        plain("dim", &C::dim),
        plain("layers", &C::layers),
        plain("learning_rate", &C::learning_rate),
        plain("r", &C::r),
        plain("clip_bound", &C::clip_bound),
        plain("q", &C::q),
        plain("q_ratio", &C::q_ratio),
        enumerated("quantization", &C::quantization,
                   [](Quantization q) { return quantization_name(q); },
                   [](const std::string& s) { return parse_quantization(s); }),
        enumerated("transport", &C::transport,
                   [](Transport t) { return transport_name(t); },
                   transport_parse),
        plain("data_seed", &C::data_seed),
        plain("init_seed", &C::init_seed),
        plain("protocol_seed", &C::protocol_seed),
        plain("attack_seed", &C::attack_seed),
        plain("eval_every", &C::eval_every),
        plain("repeats", &C::repeats),
        plain("output_dir", &C::output_dir),
        plain("sweep_axis", &C::sweep_axis),
        plain("sweep_values", &C::sweep_values),
        plain("p_ads", &C::p_ads),
        FieldIo{"attack_transports",
                [](const C& c) {
                  Json out = Json::array();
                  for (Transport t : c.attack_transports) {
                    out.push_back(std::string(transport_name(t)));
                  }
                  return out;
                },
                [transport_parse](const Json& v, C& c) {
                  c.attack_transports.clear();
                  for (const auto& s : get_checked<std::vector<std::string>>(
                           v, "attack_transports")) {
                    c.attack_transports.push_back(
                        parse_field("attack_transports", s, transport_parse));
                  }
                }},
        plain("c_max", &C::c_max),
        plain("cost_users", &C::cost_users),
        plain("cost_q_ratios", &C::cost_q_ratios),
        plain("cost_fixed_q", &C::cost_fixed_q),
        plain("allow_insecure_projection", &C::allow_insecure_projection),
    };
  }();
  return table;
}

struct SyntheticSpec {
  int users = 0;
  int items = 0;
  double density = 0.0;
};

SyntheticSpec parse_synthetic(const std::string& text) {
  SyntheticSpec s;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> s.users >> x1 >> s.items >> x2 >> s.density) || x1 != 'x' ||
      x2 != 'x' || !(in >> std::ws).eof()) {
    throw ConfigError("synthetic",
                      "expected <users>x<items>x<density>, got '" + text + "'");
  }
  if (s.users < 1 || s.items < 1 || !(s.density > 0.0) || s.density > 1.0) {
    throw ConfigError("synthetic", "users and items must be positive and "
                                   "density in (0, 1]");
  }
  return s;
}

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

std::ofstream open_output(const std::filesystem::path& dir,
                          const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw Error("cannot write " + (dir / name).string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

std::string repeat_name(const std::string& stem, const std::string& ext,
                        int repeat) {
  return repeat == 0 ? stem + ext : stem + "_" + std::to_string(repeat) + ext;
}

struct RunOutput {
  ModelState model;
  std::vector<EpochMetrics> metrics;
  MessageLog log;
  double test_rmse = 0.0;
};

RunOutput run_once(const ExperimentConfig& config, const RatingDataset& ds,
                   int repeat) {
  const DatasetSplit split =
      split_train_val_test(ds, config.split, config.data_seed + repeat);
  const FederatedConfig fc = federated_config(config, repeat);
  RunOutput out;
  if (config.mode == "central") {
    CentralizedResult r = train_centralized(ds, split, fc.train);
    out.model = std::move(r.model);
    out.metrics = std::move(r.metrics);
    out.test_rmse = r.test_rmse;
  } else {
    const PartyPartition part =
        partition_items(ds, config.parties, config.data_seed);
    FederatedResult r = run_training(ds, part, split, fc);
    out.model = std::move(r.model);
    out.metrics = std::move(r.metrics);
    out.log = std::move(r.log);
    out.test_rmse = r.test_rmse;
  }
  return out;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) {
  Json j = Json::object();
  for (const FieldIo& f : fields()) j[f.key] = f.write(config);
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text,
                                  ExperimentConfig base) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const FieldIo& f) { return f.key == key; });
    if (it == table.end()) throw ConfigError(key, "unknown configuration key");
    it->read(value, base);
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str(), std::move(base));
}

void validate_config(const ExperimentConfig& c) {
  if (!c.data_path.empty()) {
    require(std::filesystem::exists(c.data_path), "data_path",
            "file not found: " + c.data_path);
    parse_field("data_format", c.data_format,
                [](const std::string& s) { return parse_rating_format(s); });
  } else {
    parse_synthetic(c.synthetic);
  }
  require(c.generator == "latent" || c.generator == "uniform", "generator",
          "expected latent or uniform");
  require(c.thd >= 0, "thd", "must be >= 0");
  require(c.max_users >= 0, "max_users", "must be >= 0");
  double split_sum = 0.0;
  for (double s : c.split) {
    require(s >= 0.0, "split", "ratios must be non-negative");
    split_sum += s;
  }
  require(std::abs(split_sum - 1.0) < 1e-9 && c.split[0] > 0.0, "split",
          "ratios must sum to 1 with a non-empty training part");
  require(c.mode == "central" || c.mode == "federated", "mode",
          "expected central or federated");
  require(c.parties >= 1, "parties", "must be >= 1");
  require(c.participation_rate > 0.0 && c.participation_rate <= 1.0,
          "participation_rate", "must lie in (0, 1]");
  require(c.iterations >= 1, "iterations", "must be >= 1");
  require(c.dim >= 1, "dim", "must be >= 1");
  require(c.layers >= 1, "layers", "must be >= 1");
  require(c.learning_rate > 0.0, "learning_rate", "must be positive");
  require(c.r > 0.0, "r", "must be positive");
  require(c.clip_bound > 0.0, "clip_bound", "must be positive");
  require(c.q >= 0, "q", "must be >= 0");
  require(c.q_ratio >= 1.0, "q_ratio", "must be >= 1");
  require(c.eval_every >= 1, "eval_every", "must be >= 1");
  require(c.repeats >= 1, "repeats", "must be >= 1");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  require(c.sweep_axis == "alpha" || c.sweep_axis == "r" ||
              c.sweep_axis == "qratio",
          "sweep_axis", "expected alpha, r or qratio");
  require(!c.sweep_values.empty(), "sweep_values", "must not be empty");
  require(!c.p_ads.empty(), "p_ads", "must not be empty");
  for (double p : c.p_ads) {
    require(p > 0.0 && p <= 1.0, "p_ads", "values must lie in (0, 1]");
  }
  require(!c.attack_transports.empty(), "attack_transports",
          "must not be empty");
  require(c.c_max >= 1, "c_max", "must be >= 1");
  require(!c.cost_users.empty(), "cost_users", "must not be empty");
  for (int u : c.cost_users) require(u >= 1, "cost_users", "must be >= 1");
  require(!c.cost_q_ratios.empty(), "cost_q_ratios", "must not be empty");
  require(c.cost_fixed_q >= 0, "cost_fixed_q", "must be >= 0");
}

RatingDataset load_dataset(const ExperimentConfig& config) {
  RatingDataset ds;
  if (!config.data_path.empty()) {
    if (!std::filesystem::exists(config.data_path)) {
      throw ConfigError("data_path", "file not found: " + config.data_path);
    }
    ds = load_ratings(config.data_path,
                      parse_field("data_format", config.data_format,
                                  [](const std::string& s) {
                                    return parse_rating_format(s);
                                  }));
  } else {
    const SyntheticSpec s = parse_synthetic(config.synthetic);
    ds = config.generator == "uniform"
             ? generate_synthetic(s.users, s.items, s.density, 5,
                                  config.data_seed)
             : generate_latent_factor(s.users, s.items, s.density, 3,
                                      config.data_seed);
  }
  if (config.thd > 0) ds = filter_by_threshold(ds, config.thd);
  if (config.max_users > 0 && config.max_users < ds.num_users()) {
    ds = subsample(ds, config.max_users, 0, config.data_seed);
  }
  return ds;
}

FederatedConfig federated_config(const ExperimentConfig& c, int repeat) {
  FederatedConfig fc;
  fc.train.model.variant = c.variant;
  fc.train.model.dim = c.dim;
  fc.train.model.layers = c.layers;
  fc.train.learning_rate = c.learning_rate;
  fc.train.iterations = c.iterations;
  fc.train.eval_every = c.eval_every;
  fc.train.seed = c.init_seed + repeat;
  fc.round.participation = c.participation_rate;
  fc.round.transport = c.transport;
  fc.round.quantization = c.quantization;
  fc.round.r = c.r;
  fc.round.clip_bound = c.clip_bound;
  fc.round.q = c.q;
  fc.round.q_ratio = c.q_ratio;
  fc.round.allow_insecure_projection = c.allow_insecure_projection;
  fc.protocol_seed = c.protocol_seed + repeat;
  return fc;
}

std::filesystem::path output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return config.output_dir;
}

std::vector<double> cli_train(const ExperimentConfig& config) {
  validate_config(config);
  const RatingDataset ds = load_dataset(config);
  const auto dir = output_dir(config);
  std::vector<double> rmse;
  for (int k = 0; k < config.repeats; ++k) {
    const RunOutput run = run_once(config, ds, k);
    auto metrics = open_output(dir, repeat_name("metrics", ".csv", k));
    write_metrics_csv(run.metrics, metrics);
    auto ckpt = open_output(dir, repeat_name("model", ".ckpt", k));
    write_checkpoint(run.model, ckpt);
    if (!run.log.empty()) {
      auto log = open_output(dir, repeat_name("messages", ".csv", k));
      run.log.write_csv(log);
    }
    rmse.push_back(run.test_rmse);
  }
  auto summary = open_output(dir, "summary.csv");
  summary << "repeat,test_rmse\n";
  for (std::size_t k = 0; k < rmse.size(); ++k) {
    summary << k << ',' << rmse[k] << '\n';
  }
  return rmse;
}

std::vector<AttackRow> cli_attack(const ExperimentConfig& config) {
  validate_config(config);
  const SyntheticSpec s = parse_synthetic(config.synthetic);
  require(config.parties >= 2, "parties", "the attack needs two parties");
  AttackSuiteConfig ac;
  ac.num_users = s.users;
  ac.items_per_party = s.items / config.parties;
  ac.num_parties = config.parties;
  ac.density = s.density;
  ac.variants = {config.variant};
  ac.transports = config.attack_transports;
  ac.p_ads = config.p_ads;
  ac.q_ratio = config.q_ratio;
  ac.c_max = config.c_max;
  ac.dim = config.dim;
  ac.data_seed = config.data_seed;
  ac.init_seed = config.init_seed;
  ac.protocol_seed = config.protocol_seed;
  ac.attack_seed = config.attack_seed;
  ac.repeats = config.repeats;
  const std::vector<AttackRow> rows = run_attack_suite(ac);
  auto out = open_output(output_dir(config), "attack.csv");
  write_attack_csv(rows, out);
  return rows;
}

std::vector<SweepRow> cli_sweep(const ExperimentConfig& config) {
  validate_config(config);
  const RatingDataset ds = load_dataset(config);
  std::vector<SweepRow> rows;
  for (double value : config.sweep_values) {
    ExperimentConfig point = config;
    point.mode = "federated";
    if (config.sweep_axis == "alpha") {
      point.participation_rate = value;
    } else if (config.sweep_axis == "r") {
      point.r = value;
    } else {
      point.q = 0;
      point.q_ratio = value;
    }
    validate_config(point);
    std::vector<double> rmse;
    for (int k = 0; k < point.repeats; ++k) {
      rmse.push_back(run_once(point, ds, k).test_rmse);
    }
    SweepRow row{config.sweep_axis, value, 0.0, 0.0};
    for (double e : rmse) row.test_rmse += e / rmse.size();
    for (double e : rmse) {
      row.test_rmse_std += (e - row.test_rmse) * (e - row.test_rmse);
    }
    row.test_rmse_std = std::sqrt(row.test_rmse_std / rmse.size());
    rows.push_back(row);
  }
  auto out = open_output(output_dir(config), "sweep.csv");
  out << "axis,value,test_rmse,test_rmse_std\n";
  for (const auto& r : rows) {
    out << r.axis << ',' << r.value << ',' << r.test_rmse << ','
        << r.test_rmse_std << '\n';
  }
  return rows;
}

std::vector<CostSweepPoint> cli_commcost(const ExperimentConfig& config) {
  validate_config(config);
  const SyntheticSpec s = parse_synthetic(config.synthetic);
  CostSweepConfig cc;
  cc.users = config.cost_users;
  cc.q_ratios = config.cost_q_ratios;
  cc.fixed_q = config.cost_fixed_q;
  cc.alphas = {config.participation_rate};
  cc.parties = config.parties;
  cc.items_per_party = std::max(1, s.items / config.parties);
  cc.density = s.density;
  cc.variant = config.variant;
  cc.quantization = config.quantization;
  cc.r = config.r;
  cc.allow_insecure_projection = config.allow_insecure_projection;
  cc.data_seed = config.data_seed;
  cc.init_seed = config.init_seed;
  cc.protocol_seed = config.protocol_seed;
  const std::vector<CostSweepPoint> points = run_cost_sweep(cc);
  const auto dir = output_dir(config);
  auto out = open_output(dir, "commcost.csv");
  write_cost_sweep_csv(points, out);
  std::vector<PhaseCost> measured, predicted;
  for (const auto& p : points) {
    measured.push_back(p.measured);
    predicted.push_back(p.predicted);
  }
  auto cv = open_output(dir, "crossval.csv");
  cv << "phase,slope,max_rel_residual\n";
  for (const auto& v : crossvalidate(measured, predicted)) {
    cv << phase_name(v.phase) << ',' << v.slope << ',' << v.max_rel_residual
       << '\n';
  }
  return points;
}

}  // namespace vfgnn
