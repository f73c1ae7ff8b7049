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

// GNN recommender model: parameters, per-layer operators and the loss.
//
// Three message-passing variants share one skeleton. At layer k every user
// aggregates its neighbouring items (and vice versa), then updates:
//
//   GCN   n_u = sum_v e_v / sqrt(N_u N_v)      e_u' = sigmoid(W (e_u + n_u))
//   GAT   n_u = sum_v b_uv e_v                 e_u' = sigmoid(W (b_uu e_u + n_u))
//   GGNN  n_u = mean_v e_v                     e_u' = GRU(e_u, n_u)
//
// Final representations are h = sum_k a_k e^k and ratings are predicted by
// the inner product h_u . h_v.

#ifndef VFGNN_GNNCORE_H_
#define VFGNN_GNNCORE_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfgnn/common.h"
#include "vfgnn/datagraph.h"

namespace vfgnn {

enum class Variant { kGcn, kGat, kGgnn };

std::string_view variant_name(Variant variant);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::kGcn;
  int dim = 6;
  int layers = 2;
  double init_std = 0.1;
  double leaky_slope = 0.2;  // GAT attention scoring
};

// Gated recurrent unit with input x (the neighbourhood aggregate) and hidden
// state h (the node's own embedding):
//
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   c  = tanh(Wc x + Uc (r * h) + bc)
//   h' = (1 - z) * h + z * c
struct GruParams {
  Matrix w_update, u_update;
  Matrix w_reset, u_reset;
  Matrix w_candidate, u_candidate;
  Vector b_update, b_reset, b_candidate;
};

// Parameters stored at the server and shared with every party. Only the
// groups used by the configured variant are populated: `weights` for GCN and
// GAT, `attention` for GAT, `gru` for GGNN.
struct PublicParams {
  Matrix user_emb;                // N x D, layer 0
  std::vector<Matrix> weights;    // W^k, D x D
  Vector layer_weights;           // a_k, K + 1 entries
  std::vector<Vector> attention;  // 2D entries: [self half; neighbour half]
  std::vector<GruParams> gru;
};

struct ModelState {
  ModelConfig config;
  PublicParams pub;
  Matrix item_emb;  // M x D, layer 0
};

struct Gradients {
  PublicParams pub;
  Matrix item_emb;
};

// Gaussian(0, init_std) embeddings and weights, zero GRU biases and uniform
// layer weights 1 / (K + 1).
ModelState init_model(const ModelConfig& config, int num_users, int num_items,
                      std::uint64_t seed);

PublicParams zeros_like(const PublicParams& like);
Gradients zeros_like(const ModelState& like);

// Flat view of the public parameters in a fixed order: user embeddings,
// layer weights a, then per layer W^k, attention, GRU blocks.
std::size_t flat_size(const PublicParams& params);
Vector flatten(const PublicParams& params);
void unflatten(const Vector& flat, PublicParams& params);
std::string flat_coordinate_name(const PublicParams& params,
                                 std::size_t index);

// Throws NumericError naming the first non-finite coordinate.
void check_finite(const PublicParams& params, std::string_view what);
void check_finite(const Matrix& item_emb, std::string_view what);

double sigmoid(double x);

// Per-layer parameters handed to the standalone operators below.
struct LayerParams {
  Variant variant = Variant::kGcn;
  const Matrix* weight = nullptr;
  const Vector* attention = nullptr;
  const GruParams* gru = nullptr;
  double leaky_slope = 0.2;
};

LayerParams layer_params(const ModelState& model, int layer);

enum class Direction { kToUsers, kToItems };

// Neighbourhood aggregates n^k for every node on the receiving side. Nodes
// without neighbours get a zero row.
Matrix aggregate(const BipartiteGraph& graph, const Matrix& users,
                 const Matrix& items, Direction direction,
                 const LayerParams& params);

// Softmax attention over the node itself and its neighbours. Entry 0 is the
// self coefficient b_uu; entry i + 1 belongs to neighbours.row(i).
Vector attention_coeffs(const Vector& self, const Matrix& neighbors,
                        const Matrix& weight, const Vector& attention,
                        double leaky_slope);

// e^{k+1} from e^k and n^k. `self_coeff` is b_uu for GAT and ignored
// otherwise.
Vector update(const Vector& self, const Vector& agg, const LayerParams& params,
              double self_coeff = 1.0);

Matrix combine_layers(std::span<const Matrix> layers, const Vector& weights);

double predict_rating(const Eigen::Ref<const Vector>& user_repr,
                      const Eigen::Ref<const Vector>& item_repr);

struct LossTerms {
  double rating = 0.0;
  double user_reg = 0.0;
  double item_reg = 0.0;
  double total() const { return rating + user_reg + item_reg; }
};

// sum (r_hat - r)^2 + (1/N) sum ||e_u||^2 + (1/M) sum ||e_v||^2.
LossTerms compute_loss_terms(std::span<const double> predictions,
                             std::span<const double> ratings,
                             const Matrix& user_emb, const Matrix& item_emb,
                             int num_users, int num_items);
double compute_loss(std::span<const double> predictions,
                    std::span<const double> ratings, const Matrix& user_emb,
                    const Matrix& item_emb, int num_users, int num_items);

// Full objective on the edges of `graph`, which also supplies the
// propagation structure.
double full_loss(const ModelState& model, const BipartiteGraph& graph);

// Exact gradient of full_loss with respect to every parameter.
Gradients backward(const ModelState& model, const BipartiteGraph& graph);

// Plain-text checkpoint: a header line, then one "tensor <name> <rows>
// <cols>" line per tensor followed by its rows, values in row-major order.
void write_checkpoint(const ModelState& model, std::ostream& out);
ModelState read_checkpoint(std::istream& in);

}  // namespace vfgnn

#endif  // VFGNN_GNNCORE_H_
