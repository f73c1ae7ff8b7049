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

#ifndef VFGNN_PROPAGATION_H_
#define VFGNN_PROPAGATION_H_

#include <optional>
#include <span>
#include <vector>

#include "vfgnn/common.h"
#include "vfgnn/datagraph.h"
#include "vfgnn/gnncore.h"

namespace vfgnn {

// How a (possibly partial) view of the item graph stands in for the full one.
// The centralized model is the default: scale 1 and true degrees.
struct PropagationContext {
  // Multiplies local user degrees N_u^p into the estimate E_p(N_u) for GCN,
  // and the neighbour part of the GAT softmax denominator.
  double degree_scale = 1.0;
  // When set, GCN uses these true user degrees instead of the estimate.
  std::optional<std::vector<double>> user_degrees;
};

// Layer-by-layer forward pass with reverse-mode differentiation.
//
// Layer k is computed in two steps so that a federated caller can splice
// other parties' aggregates in between: user_aggregate(k) yields this
// graph's neighbourhood matrix X^k, and advance(k, w, ext) builds layer k + 1
// with the user-side aggregate w * X^k + ext. External matrices are treated
// as constants by backward().
class Propagation {
 public:
  Propagation(const ModelConfig& config, const PublicParams& params,
              const Matrix& item_emb, const BipartiteGraph& graph,
              PropagationContext context = {});

  int layers() const { return config_.layers; }

  const Matrix& user_aggregate(int layer);
  void advance(int layer, double own_weight, const Matrix* external);

  // All layers with own weight 1 and no external aggregates.
  void run();

  const Matrix& users(int layer) const { return users_.at(layer); }
  const Matrix& items(int layer) const { return items_.at(layer); }
  // GAT: b_uu used by the user update at `layer`.
  const Vector& user_self_coeffs(int layer) const;
  // GAT: user-side b_uv per graph edge at `layer`.
  const std::vector<double>& user_edge_coeffs(int layer) const;

  const Matrix& user_repr() const;
  const Matrix& item_repr() const;
  double predict(int user, int item) const;
  // One prediction per graph edge, in edge order.
  std::vector<double> predict_edges() const;

  // Gradients given dL/dh for the final user and item representations.
  Gradients backward(const Matrix& d_user_repr, const Matrix& d_item_repr);
  // Gradients given dL/d r_hat for every graph edge.
  Gradients backward_edges(std::span<const double> edge_grad);

 private:
  struct SideCache {
    Matrix local;  // aggregate over this graph's neighbours
    Matrix input;  // aggregate consumed by the update
    Matrix pre;    // GCN/GAT: argument of W
    double own_weight = 1.0;
    Vector self_coeff, self_logit;
    std::vector<double> edge_coeff, edge_logit;
    Matrix update_gate, reset_gate, candidate;
  };
  struct LayerCache {
    SideCache user, item;
    Matrix proj_users, proj_items;  // GAT: e W^T
    bool user_ready = false;
    bool advanced = false;
  };

  void compute_gat_side(int layer, bool user_side);
  Matrix side_update(int layer, bool user_side);
  void finish();

  ModelConfig config_;
  const PublicParams& params_;
  const BipartiteGraph& graph_;
  PropagationContext context_;
  std::vector<double> gcn_coeff_;   // per edge
  std::vector<double> user_deg_;    // local user degree
  std::vector<Matrix> users_, items_;
  std::vector<LayerCache> cache_;
  Matrix user_repr_, item_repr_;
  bool finished_ = false;
};

}  // namespace vfgnn

#endif  // VFGNN_PROPAGATION_H_
