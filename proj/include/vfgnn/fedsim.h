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


// Vertical federated training simulation.
//
// Items (and their embeddings) are split across parties that share the user
// universe. The server keeps the public parameters: user embeddings, W^k,
// a_k, attention and GRU weights. Each iteration:
//
//   1. the server samples participating parties and sends them the public
//      parameters;
//   2. for every layer k, each participant computes its local neighbourhood
//      aggregate for all users, sends it (projected, exact or as raw
//      neighbour embeddings) to the other participants, and updates user and
//      item embeddings with the combined aggregate;
//   3. each participant differentiates its local rating loss, updates its
//      private item embeddings, and uploads a perturbed gradient of the
//      public parameters;
//   4. the server sums the uploads, rescales for partial participation and
//      takes an Adagrad step.
//
// Received aggregates are constants during differentiation.

#ifndef VFGNN_FEDSIM_H_
#define VFGNN_FEDSIM_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vfgnn/centralized.h"
#include "vfgnn/common.h"
#include "vfgnn/datagraph.h"
#include "vfgnn/gnncore.h"
#include "vfgnn/message_log.h"
#include "vfgnn/privacy.h"
#include "vfgnn/propagation.h"

namespace vfgnn {

enum class Transport {
  kProjected,         // Y = Phi X, receivers reconstruct Phi^T Y
  kIdentity,          // X sent as is
  kRevealIndividual,  // per-user neighbour embeddings (graph expansion)
};
enum class Quantization { kTernary, kLaplace, kNone };

std::string_view transport_name(Transport t);
Transport parse_transport(std::string_view name);
std::string_view quantization_name(Quantization q);
Quantization parse_quantization(std::string_view name);

struct RoundConfig {
  double participation = 1.0;  // alpha
  Transport transport = Transport::kProjected;
  Quantization quantization = Quantization::kTernary;
  // Share true user degrees instead of estimating them per party.
  bool oracle_degree = false;
  double r = 3.0;
  double clip_bound = 0.5;
  double laplace_epsilon = 1.0;
  double laplace_sensitivity = 1.0;
  // Projected dimension; 0 derives it as round(N / q_ratio).
  int q = 0;
  double q_ratio = 5.0;
  bool allow_insecure_projection = false;
  bool refresh_projection = false;  // new Phi every iteration
};

struct FederatedConfig {
  TrainConfig train;  // model, optimizer, iterations, init seed
  RoundConfig round;
  std::uint64_t protocol_seed = 7;
};

// E_p(N_u) = (sum M / M_p) N_u^p.
double estimate_degree(double local_degree, int party_size, int total_items);

// Uniform sample without replacement of max(1, round(alpha P)) parties,
// returned in ascending order.
std::vector<int> sample_participants(int num_parties, double alpha, Rng& rng);

// sum_i M_i / sum_{i in A} M_i.
double participation_scale(std::span<const int> party_sizes,
                           std::span<const int> participants);

// Partial-participation estimate of sum_p X_p from the participants' parts.
Matrix participation_estimate(std::span<const Matrix> components,
                              std::span<const int> party_sizes,
                              std::span<const int> participants);

// Weights (w_own, w_other[p]) such that a participant's user-side aggregate is
// w_own X_own + sum_{p != own} w_other[p] X_p.
struct AggregateWeights {
  double own = 1.0;
  std::vector<double> other;  // indexed by party
};
AggregateWeights aggregate_weights(Variant variant,
                                   std::span<const int> party_sizes,
                                   std::span<const int> participants,
                                   int own_party);

struct ClientState {
  int party = 0;
  BipartiteGraph graph;           // local item indices
  std::vector<int> global_items;  // local -> global item
  Matrix item_emb;                // private layer-0 embeddings
  Adagrad item_opt;
  Rng rng;                        // perturbation stream
};

struct ServerState {
  PublicParams pub;
  Adagrad opt;
  std::uint64_t projection_seed = 0;
  std::vector<int> party_sizes;
};

// What a party observes from the others during layer 0 of one forward pass.
struct LayerZeroView {
  int receiver = 0;
  // Reconstructed aggregates by sending party (projected and identity
  // transports); empty for the receiver itself.
  std::vector<Matrix> aggregates;
  // Reveal-individual transport: sender -> user -> neighbour embeddings.
  std::vector<std::vector<std::vector<Vector>>> revealed;
  // GAT: the receiver's mean user-side coefficient over its own edges.
  double mean_coeff = 0.0;
  // Projection degree scale sum M / M_p by party.
  std::vector<double> degree_scale;
};

class FederatedTrainer {
 public:
  FederatedTrainer(const RatingDataset& dataset,
                   const PartyPartition& partition, const DatasetSplit& split,
                   const FederatedConfig& config);

  // One protocol iteration; returns the participant set.
  std::vector<int> step();
  std::vector<EpochMetrics> evaluate() const;
  std::vector<EpochMetrics> run();

  LayerZeroView observe_layer_zero(int receiver) const;

  const PublicParams& public_params() const { return server_.pub; }
  // Item embeddings of all parties in global item order.
  Matrix global_item_emb() const;
  ModelState global_model() const;
  const std::vector<ClientState>& clients() const { return clients_; }
  const MessageLog& log() const { return log_; }
  const ProjectionSpec& projection() const { return projection_; }
  int iteration() const { return iteration_; }
  // Public-parameter gradient uploaded by each participant in the last step
  // after decoding, indexed by party (empty when not participating).
  const std::vector<Vector>& last_uploads() const { return last_uploads_; }

 private:
  struct Forward {
    std::vector<int> participants;
    std::vector<std::optional<Propagation>> props;  // by party
  };

  PropagationContext context_for(int party) const;
  // Runs all layers for the participants, delivering aggregates with the
  // configured transport. Messages are logged when `log` is set.
  void forward(Forward& fw, MessageLog* log, int round) const;
  // Delivers every participant's aggregate to every other participant and
  // returns what each sender's aggregate looks like after transport.
  std::vector<Matrix> exchange(Forward& fw, int layer,
                               MessageLog* log, int round) const;
  Vector upload(ClientState& client, const Vector& grad, int round);
  void refresh_projection();

  const RatingDataset& dataset_;
  PartyPartition partition_;
  DatasetSplit split_;
  FederatedConfig config_;
  int num_users_ = 0;
  int total_items_ = 0;
  std::vector<double> true_user_degree_;
  std::vector<ClientState> clients_;
  ServerState server_;
  ProjectionSpec projection_;
  Rng protocol_rng_;
  MessageLog log_;
  int iteration_ = 0;
  std::vector<Vector> last_uploads_;
};

struct FederatedResult {
  ModelState model;
  std::vector<EpochMetrics> metrics;
  MessageLog log;
  double test_rmse = 0.0;
};

FederatedResult run_training(const RatingDataset& dataset,
                             const PartyPartition& partition,
                             const DatasetSplit& split,
                             const FederatedConfig& config);

}  // namespace vfgnn

#endif  // VFGNN_FEDSIM_H_
