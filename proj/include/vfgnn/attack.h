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


// De-anonymization attack harness.
//
// An attacking party registers fake users that each rate a single item of a
// target party, then tries to recover honest users' interactions with the
// target from what the protocol reveals in the first layer:
//
//   - reveal-individual transport: raw neighbour embeddings, matched to the
//     fake users' embeddings by l1 distance;
//   - aggregate transports: each honest user's (reconstructed) neighbourhood
//     aggregate, matched against sums over subsets of the fake users'
//     aggregates.

#ifndef VFGNN_ATTACK_H_
#define VFGNN_ATTACK_H_

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vfgnn/common.h"
#include "vfgnn/datagraph.h"
#include "vfgnn/fedsim.h"
#include "vfgnn/gnncore.h"

namespace vfgnn {

using Interaction = std::pair<int, int>;  // (user, global item)

struct AdversaryPlan {
  int attacker = 0;
  int target = 1;
  double p_ad = 0.5;
  int num_honest_users = 0;
  std::vector<int> adversary_users;  // appended after honest users
  std::vector<int> adversary_items;  // global item rated by each adversary
  std::set<Interaction> truth;       // honest users' target-party ratings
};

struct AugmentedDataset {
  RatingDataset dataset;
  PartyPartition partition;
  AdversaryPlan plan;
};

// Samples round(p_ad M_target) target items and adds one fake user per item
// with a single mid-scale rating.
AugmentedDataset plant_adversaries(const RatingDataset& dataset,
                                   const PartyPartition& partition,
                                   int attacker, int target, double p_ad,
                                   std::uint64_t seed);

struct EmbeddingMatch {
  int user = 0;
  int adversary = 0;  // index into the adversary list
  double distance = 0.0;
};

// One match per revealed embedding: the l1-nearest adversary embedding, ties
// to the lowest index. `revealed[u]` lists user u's neighbour embeddings.
std::vector<EmbeddingMatch> attack_embedding_match(
    const std::vector<Vector>& adversary_embeddings,
    const std::vector<std::vector<Vector>>& revealed);

struct SubsetAttackParams {
  Variant variant = Variant::kGcn;
  // GAT: the attacker's local average attention coefficient.
  double mean_coeff = 1.0;
  int c_max = 3;
  std::size_t max_candidates = 2'000'000;
};

struct SubsetMatch {
  int user = 0;
  std::vector<int> adversaries;  // ascending indices
  double objective = 0.0;
};

// Scale applied to a sum over a subset of size c: 1/sqrt(c) for GCN, 1/c for
// GGNN and the mean coefficient for GAT.
double subset_scale(const SubsetAttackParams& params, int size);

// For each listed user, the subset of adversary aggregates (size 1..c_max)
// whose scaled sum is l1-closest to the user's row of `aggregates`. Ties go
// to the smaller subset, then lexicographic order.
std::vector<SubsetMatch> attack_subset_match(
    const Matrix& aggregates, const std::vector<int>& users,
    const std::vector<Vector>& adversary_aggregates,
    const SubsetAttackParams& params);

struct AttackReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t inferred = 0;
  std::size_t correct = 0;
};

AttackReport score_attack(const std::set<Interaction>& inferred,
                          const std::set<Interaction>& truth);

struct AttackSuiteConfig {
  int num_users = 200;
  int items_per_party = 60;
  int num_parties = 2;
  double density = 0.03;
  int attacker = 0;
  int target = 1;
  std::vector<Variant> variants = {Variant::kGcn};
  std::vector<Transport> transports = {Transport::kRevealIndividual,
                                       Transport::kProjected};
  std::vector<double> p_ads = {0.2, 0.5, 0.8};
  double q_ratio = 5.0;
  int c_max = 3;
  int dim = 6;
  std::uint64_t data_seed = 1;
  std::uint64_t init_seed = 2;
  std::uint64_t protocol_seed = 3;
  std::uint64_t attack_seed = 4;
  int repeats = 1;  // seeds advance by the repeat index
};

struct AttackRow {
  Transport transport = Transport::kProjected;
  Variant variant = Variant::kGcn;
  double p_ad = 0.0;
  AttackReport report;
  std::uint64_t seed = 0;
};

// Attacks the layer-0 messages of a freshly initialized model for a single
// scenario.
AttackReport run_attack(const AugmentedDataset& data, Variant variant,
                        Transport transport, const AttackSuiteConfig& config,
                        std::uint64_t init_seed, std::uint64_t protocol_seed);

std::vector<AttackRow> run_attack_suite(const AttackSuiteConfig& config);

// Columns: transport,variant,p_ad,precision,recall,f1,seed.
void write_attack_csv(const std::vector<AttackRow>& rows, std::ostream& out);

}  // namespace vfgnn

#endif  // VFGNN_ATTACK_H_
