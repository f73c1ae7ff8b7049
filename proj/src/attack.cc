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


#include "vfgnn/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace vfgnn {

AugmentedDataset plant_adversaries(const RatingDataset& dataset,
                                   const PartyPartition& partition,
                                   int attacker, int target, double p_ad,
                                   std::uint64_t seed) {
  const int parties = partition.num_parties;
  if (attacker < 0 || attacker >= parties || target < 0 || target >= parties ||
      attacker == target) {
    throw InvalidArgument("attacker and target must be distinct parties");
  }
  if (!(p_ad > 0.0) || p_ad > 1.0) {
    throw InvalidArgument("p_ad must lie in (0, 1]");
  }
  const int count = static_cast<int>(
      std::lround(p_ad * partition.party_size(target)));
  if (count < 1) {
    throw InvalidArgument("p_ad covers no items of the target party");
  }
  std::vector<int> items = partition.party_items[target];
  Rng rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
  items.resize(count);
  std::sort(items.begin(), items.end());

  AugmentedDataset out;
  out.dataset = dataset;
  out.partition = partition;
  AdversaryPlan& plan = out.plan;
  plan.attacker = attacker;
  plan.target = target;
  plan.p_ad = p_ad;
  plan.num_honest_users = dataset.num_users();
  const double mid = 0.5 * (dataset.scale.min + dataset.scale.max);
  for (int k = 0; k < count; ++k) {
    const int user = dataset.num_users() + k;
    out.dataset.user_ids.push_back("adv_" + std::to_string(k));
    out.dataset.records.push_back({user, items[k], mid});
    plan.adversary_users.push_back(user);
    plan.adversary_items.push_back(items[k]);
  }
  out.partition.num_users = out.dataset.num_users();
  for (const auto& r : dataset.records) {
    if (partition.item_party[r.item] == target) {
      plan.truth.insert({r.user, r.item});
    }
  }
  return out;
}

std::vector<EmbeddingMatch> attack_embedding_match(
    const std::vector<Vector>& adversary_embeddings,
    const std::vector<std::vector<Vector>>& revealed) {
  if (adversary_embeddings.empty()) {
    throw InvalidArgument("embedding match needs at least one adversary");
  }
  std::vector<EmbeddingMatch> out;
  for (std::size_t u = 0; u < revealed.size(); ++u) {
    for (const Vector& e : revealed[u]) {
      EmbeddingMatch best{static_cast<int>(u), 0,
                          std::numeric_limits<double>::infinity()};
      for (std::size_t a = 0; a < adversary_embeddings.size(); ++a) {
        const double d = (adversary_embeddings[a] - e).lpNorm<1>();
        if (d < best.distance) {
          best.adversary = static_cast<int>(a);
          best.distance = d;
        }
      }
      out.push_back(best);
    }
  }
  return out;
}

double subset_scale(const SubsetAttackParams& params, int size) {
  switch (params.variant) {
    case Variant::kGcn:
      return 1.0 / std::sqrt(static_cast<double>(size));
    case Variant::kGgnn:
      return 1.0 / size;
    case Variant::kGat:
      return params.mean_coeff;
  }
  return 1.0;
}

std::vector<SubsetMatch> attack_subset_match(
    const Matrix& aggregates, const std::vector<int>& users,
    const std::vector<Vector>& adversary_aggregates,
    const SubsetAttackParams& params) {
  const int n = static_cast<int>(adversary_aggregates.size());
  if (n == 0) throw InvalidArgument("subset match needs at least one adversary");
  if (params.c_max < 1) throw InvalidArgument("c_max must be >= 1");
  const int c_max = std::min(params.c_max, n);

  // Number of candidate subsets, checked against the cap before allocating.
  double total = 0.0, binom = 1.0;
  for (int c = 1; c <= c_max; ++c) {
    binom = binom * (n - c + 1) / c;
    total += binom;
  }
  if (total > static_cast<double>(params.max_candidates)) {
    throw InvalidArgument(
        "subset search would enumerate " + std::to_string(total) +
        " candidates (cap " + std::to_string(params.max_candidates) +
        "); use a smaller p_ad or c_max");
  }

  const Eigen::Index dim = aggregates.cols();
  std::vector<std::vector<int>> subsets;
  subsets.reserve(static_cast<std::size_t>(total));
  for (int c = 1; c <= c_max; ++c) {
    std::vector<int> idx(c);
    for (int i = 0; i < c; ++i) idx[i] = i;
    while (true) {
      subsets.push_back(idx);
      int i = c - 1;
      while (i >= 0 && idx[i] == n - c + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < c; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  Matrix candidates(static_cast<Eigen::Index>(subsets.size()), dim);
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    Vector sum = Vector::Zero(dim);
    for (int a : subsets[s]) sum += adversary_aggregates[a];
    candidates.row(static_cast<Eigen::Index>(s)) =
        subset_scale(params, static_cast<int>(subsets[s].size())) *
        sum.transpose();
  }

  std::vector<SubsetMatch> out;
  out.reserve(users.size());
  for (int u : users) {
    const Eigen::VectorXd dist =
        (candidates.rowwise() - aggregates.row(u)).cwiseAbs().rowwise().sum();
    Eigen::Index best = 0;
    for (Eigen::Index s = 1; s < dist.size(); ++s) {
      if (dist(s) < dist(best)) best = s;
    }
    out.push_back({u, subsets[best], dist(best)});
  }
  return out;
}

AttackReport score_attack(const std::set<Interaction>& inferred,
                          const std::set<Interaction>& truth) {
  AttackReport r;
  r.inferred = inferred.size();
  for (const auto& pair : inferred) r.correct += truth.count(pair);
  if (!inferred.empty()) {
    r.precision = static_cast<double>(r.correct) / inferred.size();
  }
  if (!truth.empty()) r.recall = static_cast<double>(r.correct) / truth.size();
  if (r.precision > 0.0 && r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

AttackReport run_attack(const AugmentedDataset& data, Variant variant,
                        Transport transport, const AttackSuiteConfig& config,
                        std::uint64_t init_seed, std::uint64_t protocol_seed) {
  const AdversaryPlan& plan = data.plan;
  DatasetSplit split;
  split.train = all_record_indices(data.dataset);

  FederatedConfig fc;
  fc.train.model.variant = variant;
  fc.train.model.dim = config.dim;
  fc.train.seed = init_seed;
  fc.round.transport = transport;
  fc.round.quantization = Quantization::kNone;
  fc.round.q_ratio = config.q_ratio;
  fc.protocol_seed = protocol_seed;
  const FederatedTrainer trainer(data.dataset, data.partition, split, fc);
  const LayerZeroView view = trainer.observe_layer_zero(plan.attacker);

  std::set<Interaction> inferred;
  const int honest = plan.num_honest_users;
  if (transport == Transport::kRevealIndividual) {
    const auto& revealed = view.revealed[plan.target];
    std::vector<Vector> adversaries;
    for (int user : plan.adversary_users) {
      adversaries.push_back(revealed.at(user).at(0));
    }
    const std::vector<std::vector<Vector>> honest_revealed(
        revealed.begin(), revealed.begin() + honest);
    for (const auto& m : attack_embedding_match(adversaries, honest_revealed)) {
      // Only exact matches identify an item; the nearest uncovered item is
      // discarded.
      if (m.distance <= 1e-12) {
        inferred.insert({m.user, plan.adversary_items[m.adversary]});
      }
    }
  } else {
    const Matrix& x = view.aggregates[plan.target];
    std::vector<Vector> adversaries;
    for (int user : plan.adversary_users) {
      adversaries.push_back(x.row(user).transpose());
    }
    std::vector<int> users;
    for (int u = 0; u < honest; ++u) {
      // An exactly zero aggregate reveals that u has no target neighbours.
      if (x.row(u).cwiseAbs().maxCoeff() > 0.0) users.push_back(u);
    }
    SubsetAttackParams params;
    params.variant = variant;
    params.mean_coeff = view.mean_coeff;
    params.c_max = config.c_max;
    for (const auto& m : attack_subset_match(x, users, adversaries, params)) {
      for (int a : m.adversaries) {
        inferred.insert({m.user, plan.adversary_items[a]});
      }
    }
  }
  return score_attack(inferred, plan.truth);
}

std::vector<AttackRow> run_attack_suite(const AttackSuiteConfig& config) {
  std::vector<AttackRow> rows;
  for (int rep = 0; rep < std::max(config.repeats, 1); ++rep) {
    const std::uint64_t data_seed = config.data_seed + rep;
    const RatingDataset ds = generate_synthetic(
        config.num_users, config.items_per_party * config.num_parties,
        config.density, 5, data_seed);
    const PartyPartition part =
        partition_items(ds, config.num_parties, data_seed);
    for (Variant variant : config.variants) {
      for (double p_ad : config.p_ads) {
        const AugmentedDataset data =
            plant_adversaries(ds, part, config.attacker, config.target, p_ad,
                              config.attack_seed + rep);
        for (Transport transport : config.transports) {
          AttackRow row;
          row.transport = transport;
          row.variant = variant;
          row.p_ad = p_ad;
          row.seed = data_seed;
          row.report = run_attack(data, variant, transport, config,
                                  config.init_seed + rep,
                                  config.protocol_seed + rep);
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

void write_attack_csv(const std::vector<AttackRow>& rows, std::ostream& out) {
  out << "transport,variant,p_ad,precision,recall,f1,seed\n";
  for (const auto& r : rows) {
    out << transport_name(r.transport) << ',' << variant_name(r.variant) << ','
        << r.p_ad << ',' << r.report.precision << ',' << r.report.recall << ','
        << r.report.f1 << ',' << r.seed << '\n';
  }
}

}  // namespace vfgnn
