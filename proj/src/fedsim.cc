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


#include "vfgnn/fedsim.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace vfgnn {

std::string_view transport_name(Transport t) {
  switch (t) {
    case Transport::kProjected:
      return "projected";
    case Transport::kIdentity:
      return "identity";
    case Transport::kRevealIndividual:
      return "reveal";
  }
  return "unknown";
}

Transport parse_transport(std::string_view name) {
  if (name == "projected") return Transport::kProjected;
  if (name == "identity") return Transport::kIdentity;
  if (name == "reveal") return Transport::kRevealIndividual;
  throw InvalidArgument("unknown transport '" + std::string(name) +
                        "' (expected projected, identity or reveal)");
}

std::string_view quantization_name(Quantization q) {
  switch (q) {
    case Quantization::kTernary:
      return "ternary";
    case Quantization::kLaplace:
      return "laplace";
    case Quantization::kNone:
      return "none";
  }
  return "unknown";
}

Quantization parse_quantization(std::string_view name) {
  if (name == "ternary") return Quantization::kTernary;
  if (name == "laplace") return Quantization::kLaplace;
  if (name == "none") return Quantization::kNone;
  throw InvalidArgument("unknown quantization '" + std::string(name) +
                        "' (expected ternary, laplace or none)");
}

double estimate_degree(double local_degree, int party_size, int total_items) {
  if (party_size < 1) throw InvalidArgument("party size must be >= 1");
  return static_cast<double>(total_items) / party_size * local_degree;
}

std::vector<int> sample_participants(int num_parties, double alpha, Rng& rng) {
  if (num_parties < 1) throw InvalidArgument("need at least one party");
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw InvalidArgument("participation rate must lie in (0, 1]");
  }
  const int size =
      std::max(1, static_cast<int>(std::lround(alpha * num_parties)));
  std::vector<int> all(num_parties);
  std::iota(all.begin(), all.end(), 0);
  if (size == num_parties) return all;
  // Partial Fisher-Yates.
  for (int i = 0; i < size; ++i) {
    std::uniform_int_distribution<int> pick(i, num_parties - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(size);
  std::sort(all.begin(), all.end());
  return all;
}

double participation_scale(std::span<const int> party_sizes,
                           std::span<const int> participants) {
  const double total =
      std::accumulate(party_sizes.begin(), party_sizes.end(), 0.0);
  double active = 0.0;
  for (int p : participants) active += party_sizes[p];
  if (!(active > 0.0)) throw InvalidArgument("participants hold no items");
  return total / active;
}

Matrix participation_estimate(std::span<const Matrix> components,
                              std::span<const int> party_sizes,
                              std::span<const int> participants) {
  if (components.size() != party_sizes.size() || participants.empty()) {
    throw InvalidArgument("one component per party and a nonempty sample");
  }
  Matrix sum = Matrix::Zero(components[0].rows(), components[0].cols());
  for (int p : participants) sum += components[p];
  return participation_scale(party_sizes, participants) * sum;
}

AggregateWeights aggregate_weights(Variant variant,
                                   std::span<const int> party_sizes,
                                   std::span<const int> participants,
                                   int own_party) {
  AggregateWeights w;
  w.other.assign(party_sizes.size(), 0.0);
  if (variant == Variant::kGgnn) {
    double active = 0.0;
    for (int p : participants) active += party_sizes[p];
    w.own = party_sizes[own_party] / active;
    for (int p : participants) {
      if (p != own_party) w.other[p] = party_sizes[p] / active;
    }
  } else {
    const double rho = participation_scale(party_sizes, participants);
    w.own = rho;
    for (int p : participants) {
      if (p != own_party) w.other[p] = rho;
    }
  }
  return w;
}

FederatedTrainer::FederatedTrainer(const RatingDataset& dataset,
                                   const PartyPartition& partition,
                                   const DatasetSplit& split,
                                   const FederatedConfig& config)
    : dataset_(dataset),
      partition_(partition),
      split_(split),
      config_(config),
      num_users_(dataset.num_users()),
      total_items_(partition.total_items()),
      protocol_rng_(config.protocol_seed) {
  const RoundConfig& rc = config_.round;
  if (!(rc.participation > 0.0) || rc.participation > 1.0) {
    throw ConfigError("participation_rate", "must lie in (0, 1]");
  }
  if (partition_.total_items() != dataset.num_items() ||
      partition_.num_users != dataset.num_users()) {
    throw InvalidArgument("partition does not match dataset");
  }
  const ModelState init = init_model(config_.train.model, num_users_,
                                     total_items_, config_.train.seed);
  server_.pub = init.pub;
  server_.opt = Adagrad(static_cast<Eigen::Index>(flat_size(server_.pub)),
                        config_.train.learning_rate,
                        config_.train.adagrad_eps);
  server_.party_sizes = partition_.sizes();

  true_user_degree_.assign(num_users_, 0.0);
  for (std::size_t idx : split_.train) {
    true_user_degree_[dataset.records.at(idx).user] += 1.0;
  }

  for (int p = 0; p < partition_.num_parties; ++p) {
    ClientState c;
    c.party = p;
    c.graph = build_party_graph(dataset, partition_, p, split_.train);
    c.global_items = partition_.party_items[p];
    c.item_emb.resize(static_cast<Eigen::Index>(c.global_items.size()),
                      config_.train.model.dim);
    for (std::size_t l = 0; l < c.global_items.size(); ++l) {
      c.item_emb.row(l) = init.item_emb.row(c.global_items[l]);
    }
    c.item_opt = Adagrad(c.item_emb.size(), config_.train.learning_rate,
                         config_.train.adagrad_eps);
    c.rng.seed(config_.protocol_seed ^
               (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(p + 1)));
    clients_.push_back(std::move(c));
  }
  last_uploads_.resize(clients_.size());

  switch (rc.transport) {
    case Transport::kProjected: {
      const int q = rc.q > 0 ? rc.q
                             : std::max(1, static_cast<int>(std::lround(
                                               num_users_ / rc.q_ratio)));
      server_.projection_seed = protocol_rng_();
      projection_ = make_projection(q, num_users_, server_.projection_seed,
                                    rc.allow_insecure_projection);
      for (int p = 0; p < partition_.num_parties; ++p) {
        log_.record({0, 0, kServer, p, MessageKind::kProjectionSeed, 8, 0});
      }
      break;
    }
    case Transport::kIdentity:
    case Transport::kRevealIndividual:
      projection_ = make_identity_projection(std::max(num_users_, 1));
      break;
  }
}

void FederatedTrainer::refresh_projection() {
  server_.projection_seed = protocol_rng_();
  projection_ = make_projection(projection_.q, num_users_,
                                server_.projection_seed,
                                config_.round.allow_insecure_projection);
}

PropagationContext FederatedTrainer::context_for(int party) const {
  PropagationContext ctx;
  ctx.degree_scale = static_cast<double>(total_items_) /
                     std::max(server_.party_sizes[party], 1);
  if (config_.round.oracle_degree) ctx.user_degrees = true_user_degree_;
  return ctx;
}

std::vector<Matrix> FederatedTrainer::exchange(Forward& fw, int layer,
                                               MessageLog* log,
                                               int round) const {
  const int dim = config_.train.model.dim;
  std::vector<Matrix> delivered(clients_.size());
  if (fw.participants.size() < 2) return delivered;
  for (int p : fw.participants) {
    const Matrix& x = fw.props[p]->user_aggregate(layer);
    std::uint64_t payload = 0;
    switch (config_.round.transport) {
      case Transport::kProjected: {
        const Matrix y = project(projection_, x);
        payload = kFloatBytes * static_cast<std::uint64_t>(y.size());
        delivered[p] = reconstruct(projection_, y);
        break;
      }
      case Transport::kIdentity:
        payload = kFloatBytes * static_cast<std::uint64_t>(x.size());
        delivered[p] = x;
        break;
      case Transport::kRevealIndividual:
        // Every edge reveals the neighbour's embedding and its coefficient;
        // the receiver sums them back into the same aggregate.
        payload = kFloatBytes * (dim + 1) *
                  static_cast<std::uint64_t>(clients_[p].graph.num_edges());
        delivered[p] = x;
        break;
    }
    if (log == nullptr) continue;
    const MessageKind kind =
        config_.round.transport == Transport::kRevealIndividual
            ? MessageKind::kIndividualEmbedding
            : MessageKind::kAggregate;
    for (int c : fw.participants) {
      if (c == p) continue;
      log->record({round, layer, p, c, kind, payload, kDenseHeaderBytes});
    }
  }
  return delivered;
}

void FederatedTrainer::forward(Forward& fw, MessageLog* log, int round) const {
  const ModelConfig& mc = config_.train.model;
  fw.props.clear();
  fw.props.resize(clients_.size());
  for (int p : fw.participants) {
    fw.props[p].emplace(mc, server_.pub, clients_[p].item_emb,
                        clients_[p].graph, context_for(p));
  }
  std::vector<AggregateWeights> weights;
  for (std::size_t p = 0; p < clients_.size(); ++p) weights.emplace_back();
  for (int p : fw.participants) {
    weights[p] = aggregate_weights(mc.variant, server_.party_sizes,
                                   fw.participants, p);
  }
  for (int k = 0; k < mc.layers; ++k) {
    for (int p : fw.participants) fw.props[p]->user_aggregate(k);
    const std::vector<Matrix> delivered = exchange(fw, k, log, round);
    for (int c : fw.participants) {
      if (fw.participants.size() < 2) {
        fw.props[c]->advance(k, weights[c].own, nullptr);
        continue;
      }
      Matrix ext = Matrix::Zero(num_users_, mc.dim);
      for (int p : fw.participants) {
        if (p != c) ext += weights[c].other[p] * delivered[p];
      }
      fw.props[c]->advance(k, weights[c].own, &ext);
    }
  }
}

Vector FederatedTrainer::upload(ClientState& client, const Vector& grad,
                                int round) {
  const RoundConfig& rc = config_.round;
  const auto dense_bytes = kFloatBytes * static_cast<std::uint64_t>(grad.size());
  switch (rc.quantization) {
    case Quantization::kNone:
      log_.record({round, 0, client.party, kServer,
                   MessageKind::kGradientDense, dense_bytes,
                   kDenseHeaderBytes});
      return grad;
    case Quantization::kLaplace: {
      const Vector noisy =
          laplace_perturb(clip(grad, {rc.clip_bound}), rc.laplace_epsilon,
                          rc.laplace_sensitivity, client.rng);
      log_.record({round, 0, client.party, kServer,
                   MessageKind::kGradientDense, dense_bytes,
                   kDenseHeaderBytes});
      return noisy;
    }
    case Quantization::kTernary: {
      const QuantizedGradient q =
          ternary_quantize(clip(grad, {rc.clip_bound}), rc.r, client.rng);
      const std::vector<std::uint8_t> wire = encode_quantized(q);
      log_.record({round, 0, client.party, kServer,
                   MessageKind::kGradientTernary,
                   wire.size() - kQuantizedHeaderBytes,
                   kQuantizedHeaderBytes});
      return decode_quantized(wire).decode();
    }
  }
  return grad;
}

std::vector<int> FederatedTrainer::step() {
  const int round = ++iteration_;
  const int num_parties = static_cast<int>(clients_.size());
  Forward fw;
  fw.participants = sample_participants(
      num_parties, config_.round.participation, protocol_rng_);
  const double rho =
      participation_scale(server_.party_sizes, fw.participants);

  if (config_.round.refresh_projection &&
      config_.round.transport == Transport::kProjected) {
    refresh_projection();
    for (int p : fw.participants) {
      log_.record({round, 0, kServer, p, MessageKind::kProjectionSeed, 8, 0});
    }
  }
  const auto public_bytes =
      kFloatBytes * static_cast<std::uint64_t>(flat_size(server_.pub));
  for (int p : fw.participants) {
    log_.record({round, 0, kServer, p, MessageKind::kPublicParams,
                 public_bytes, kDenseHeaderBytes});
  }

  try {
    forward(fw, &log_, round);
  } catch (const Error& e) {
    throw ProtocolError("round " + std::to_string(round) + ": " + e.what());
  }

  for (auto& u : last_uploads_) u.resize(0);
  Vector total = Vector::Zero(static_cast<Eigen::Index>(flat_size(server_.pub)));
  for (int c : fw.participants) {
    ClientState& client = clients_[c];
    Propagation& prop = *fw.props[c];
    const std::vector<double> pred = prop.predict_edges();
    std::vector<double> edge_grad(pred.size());
    for (std::size_t e = 0; e < pred.size(); ++e) {
      edge_grad[e] =
          2.0 * (pred[e] - client.graph.edge(static_cast<int>(e)).rating);
    }
    Gradients g = prop.backward_edges(edge_grad);
    g.item_emb += (2.0 / total_items_) * client.item_emb;
    check_finite(g.item_emb, "party " + std::to_string(c) + " item gradient");
    check_finite(g.pub, "party " + std::to_string(c) + " public gradient");
    client.item_opt.step(client.item_emb, g.item_emb);
    last_uploads_[c] = upload(client, flatten(g.pub), round);
  }
  for (int c : fw.participants) total += last_uploads_[c];
  total *= rho;
  const Eigen::Index user_block = server_.pub.user_emb.size();
  total.head(user_block) +=
      (2.0 / num_users_) *
      Eigen::Map<const Vector>(server_.pub.user_emb.data(), user_block);

  Vector flat = flatten(server_.pub);
  server_.opt.step(flat, total);
  unflatten(flat, server_.pub);
  check_finite(server_.pub, "round " + std::to_string(round) + " parameters");
  return fw.participants;
}

std::vector<EpochMetrics> FederatedTrainer::evaluate() const {
  Forward fw;
  fw.participants.resize(clients_.size());
  std::iota(fw.participants.begin(), fw.participants.end(), 0);
  forward(fw, nullptr, iteration_);

  double loss = server_.pub.user_emb.squaredNorm() / num_users_;
  for (const auto& c : clients_) {
    loss += c.item_emb.squaredNorm() / total_items_;
    const std::vector<double> pred = fw.props[c.party]->predict_edges();
    for (std::size_t e = 0; e < pred.size(); ++e) {
      const double r = pred[e] - c.graph.edge(static_cast<int>(e)).rating;
      loss += r * r;
    }
  }
  std::vector<EpochMetrics> out;
  const std::pair<const char*, const std::vector<std::size_t>*> splits[] = {
      {"train", &split_.train},
      {"validation", &split_.validation},
      {"test", &split_.test}};
  for (const auto& [name, records] : splits) {
    double sq = 0.0;
    for (std::size_t idx : *records) {
      const RatingRecord& r = dataset_.records.at(idx);
      const int p = partition_.item_party[r.item];
      const double err =
          fw.props[p]->predict(r.user, partition_.item_local[r.item]) -
          r.rating;
      sq += err * err;
    }
    const double rmse =
        records->empty() ? 0.0 : std::sqrt(sq / records->size());
    out.push_back({iteration_, name, rmse, loss});
  }
  return out;
}

std::vector<EpochMetrics> FederatedTrainer::run() {
  std::vector<EpochMetrics> metrics;
  const TrainConfig& tc = config_.train;
  for (int t = 0; t < tc.iterations; ++t) {
    step();
    if (iteration_ % std::max(tc.eval_every, 1) == 0 ||
        t + 1 == tc.iterations) {
      for (auto& m : evaluate()) metrics.push_back(std::move(m));
    }
  }
  return metrics;
}

LayerZeroView FederatedTrainer::observe_layer_zero(int receiver) const {
  if (receiver < 0 || receiver >= static_cast<int>(clients_.size())) {
    throw InvalidArgument("receiver party out of range");
  }
  Forward fw;
  fw.participants.resize(clients_.size());
  std::iota(fw.participants.begin(), fw.participants.end(), 0);
  fw.props.resize(clients_.size());
  for (int p : fw.participants) {
    fw.props[p].emplace(config_.train.model, server_.pub,
                        clients_[p].item_emb, clients_[p].graph,
                        context_for(p));
    fw.props[p]->user_aggregate(0);
  }
  LayerZeroView view;
  view.receiver = receiver;
  view.aggregates.resize(clients_.size());
  view.revealed.resize(clients_.size());
  for (int p = 0; p < static_cast<int>(clients_.size()); ++p) {
    view.degree_scale.push_back(static_cast<double>(total_items_) /
                                std::max(server_.party_sizes[p], 1));
  }
  const std::vector<Matrix> delivered = exchange(fw, 0, nullptr, 0);
  for (int p : fw.participants) {
    if (p == receiver) continue;
    if (config_.round.transport == Transport::kRevealIndividual) {
      const ClientState& s = clients_[p];
      auto& per_user = view.revealed[p];
      per_user.resize(num_users_);
      for (int u = 0; u < num_users_; ++u) {
        for (int e : s.graph.user_edges(u)) {
          per_user[u].push_back(s.item_emb.row(s.graph.edge(e).item).transpose());
        }
      }
    } else {
      view.aggregates[p] = delivered[p];
    }
  }
  if (config_.train.model.variant == Variant::kGat) {
    const auto& coeffs = fw.props[receiver]->user_edge_coeffs(0);
    if (!coeffs.empty()) {
      view.mean_coeff =
          std::accumulate(coeffs.begin(), coeffs.end(), 0.0) / coeffs.size();
    }
  }
  return view;
}

Matrix FederatedTrainer::global_item_emb() const {
  Matrix out(total_items_, config_.train.model.dim);
  for (const auto& c : clients_) {
    for (std::size_t l = 0; l < c.global_items.size(); ++l) {
      out.row(c.global_items[l]) = c.item_emb.row(static_cast<Eigen::Index>(l));
    }
  }
  return out;
}

ModelState FederatedTrainer::global_model() const {
  ModelState m;
  m.config = config_.train.model;
  m.pub = server_.pub;
  m.item_emb = global_item_emb();
  return m;
}

FederatedResult run_training(const RatingDataset& dataset,
                             const PartyPartition& partition,
                             const DatasetSplit& split,
                             const FederatedConfig& config) {
  FederatedTrainer trainer(dataset, partition, split, config);
  FederatedResult result;
  result.metrics = trainer.run();
  result.model = trainer.global_model();
  result.log = trainer.log();
  result.test_rmse =
      result.metrics.empty() ? trainer.evaluate().back().rmse
                             : result.metrics.back().rmse;
  return result;
}

}  // namespace vfgnn
