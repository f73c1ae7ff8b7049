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

#include "vfgnn/gnncore.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "vfgnn/propagation.h"

namespace vfgnn {
namespace {

PublicParams allocate_public(const ModelConfig& config, int num_users) {
  const int d = config.dim;
  PublicParams p;
  p.user_emb = Matrix::Zero(num_users, d);
  p.layer_weights = Vector::Zero(config.layers + 1);
  for (int k = 0; k < config.layers; ++k) {
    switch (config.variant) {
      case Variant::kGat:
        p.attention.push_back(Vector::Zero(2 * d));
        [[fallthrough]];
      case Variant::kGcn:
        p.weights.push_back(Matrix::Zero(d, d));
        break;
      case Variant::kGgnn: {
        GruParams g;
        g.w_update = g.u_update = g.w_reset = g.u_reset = g.w_candidate =
            g.u_candidate = Matrix::Zero(d, d);
        g.b_update = g.b_reset = g.b_candidate = Vector::Zero(d);
        p.gru.push_back(std::move(g));
        break;
      }
    }
  }
  return p;
}

// Visits every tensor of `params` in flat order. `fn(name, tensor)` receives
// either a Matrix or a Vector.
template <typename P, typename Fn>
void visit_tensors(P& params, Fn&& fn) {
  fn(std::string("user_emb"), params.user_emb);
  fn(std::string("layer_weights"), params.layer_weights);
  const std::size_t layers = std::max(
      {params.weights.size(), params.attention.size(), params.gru.size()});
  for (std::size_t k = 0; k < layers; ++k) {
    const std::string tag = "[" + std::to_string(k) + "]";
    if (k < params.weights.size()) fn("W" + tag, params.weights[k]);
    if (k < params.attention.size()) fn("attention" + tag, params.attention[k]);
    if (k < params.gru.size()) {
      auto& g = params.gru[k];
      fn("gru" + tag + ".w_update", g.w_update);
      fn("gru" + tag + ".u_update", g.u_update);
      fn("gru" + tag + ".w_reset", g.w_reset);
      fn("gru" + tag + ".u_reset", g.u_reset);
      fn("gru" + tag + ".w_candidate", g.w_candidate);
      fn("gru" + tag + ".u_candidate", g.u_candidate);
      fn("gru" + tag + ".b_update", g.b_update);
      fn("gru" + tag + ".b_reset", g.b_reset);
      fn("gru" + tag + ".b_candidate", g.b_candidate);
    }
  }
}

template <typename T>
std::string coordinate(const std::string& name, const T& tensor,
                       Eigen::Index i) {
  if constexpr (T::ColsAtCompileTime == 1) {
    return name + "(" + std::to_string(i) + ")";
  } else {
    return name + "(" + std::to_string(i / tensor.cols()) + "," +
           std::to_string(i % tensor.cols()) + ")";
  }
}

double leaky_relu(double t, double slope) { return t > 0.0 ? t : slope * t; }

}  // namespace

std::string_view variant_name(Variant variant) {
  switch (variant) {
    case Variant::kGcn:
      return "gcn";
    case Variant::kGat:
      return "gat";
    case Variant::kGgnn:
      return "ggnn";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "gcn") return Variant::kGcn;
  if (lower == "gat") return Variant::kGat;
  if (lower == "ggnn") return Variant::kGgnn;
  throw InvalidArgument("unknown GNN variant '" + std::string(name) +
                        "' (expected gcn, gat or ggnn)");
}

ModelState init_model(const ModelConfig& config, int num_users, int num_items,
                      std::uint64_t seed) {
  if (config.dim < 1 || config.layers < 1) {
    throw InvalidArgument("model needs dim >= 1 and layers >= 1");
  }
  if (num_users < 0 || num_items < 0) {
    throw InvalidArgument("negative node count");
  }
  ModelState m;
  m.config = config;
  m.pub = allocate_public(config, num_users);
  m.item_emb = Matrix::Zero(num_items, config.dim);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  auto fill = [&](auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = normal(rng);
  };
  fill(m.pub.user_emb);
  fill(m.item_emb);
  m.pub.layer_weights.setConstant(1.0 / (config.layers + 1));
  for (auto& w : m.pub.weights) fill(w);
  for (auto& a : m.pub.attention) fill(a);
  for (auto& g : m.pub.gru) {
    fill(g.w_update);
    fill(g.u_update);
    fill(g.w_reset);
    fill(g.u_reset);
    fill(g.w_candidate);
    fill(g.u_candidate);
  }
  return m;
}

PublicParams zeros_like(const PublicParams& like) {
  PublicParams out = like;
  visit_tensors(out, [](const std::string&, auto& t) { t.setZero(); });
  return out;
}

Gradients zeros_like(const ModelState& like) {
  Gradients g;
  g.pub = zeros_like(like.pub);
  g.item_emb = Matrix::Zero(like.item_emb.rows(), like.item_emb.cols());
  return g;
}

std::size_t flat_size(const PublicParams& params) {
  std::size_t n = 0;
  visit_tensors(params, [&](const std::string&, const auto& t) {
    n += static_cast<std::size_t>(t.size());
  });
  return n;
}

Vector flatten(const PublicParams& params) {
  Vector flat(static_cast<Eigen::Index>(flat_size(params)));
  Eigen::Index pos = 0;
  visit_tensors(params, [&](const std::string&, const auto& t) {
    std::copy(t.data(), t.data() + t.size(), flat.data() + pos);
    pos += t.size();
  });
  return flat;
}

void unflatten(const Vector& flat, PublicParams& params) {
  if (static_cast<std::size_t>(flat.size()) != flat_size(params)) {
    throw InvalidArgument("flat vector length does not match parameters");
  }
  Eigen::Index pos = 0;
  visit_tensors(params, [&](const std::string&, auto& t) {
    std::copy(flat.data() + pos, flat.data() + pos + t.size(), t.data());
    pos += t.size();
  });
}

std::string flat_coordinate_name(const PublicParams& params,
                                 std::size_t index) {
  std::string result;
  std::size_t pos = 0;
  visit_tensors(params, [&](const std::string& name, const auto& t) {
    const auto size = static_cast<std::size_t>(t.size());
    if (result.empty() && index < pos + size) {
      result = coordinate(name, t, static_cast<Eigen::Index>(index - pos));
    }
    pos += size;
  });
  if (result.empty()) throw InvalidArgument("flat index out of range");
  return result;
}

void check_finite(const PublicParams& params, std::string_view what) {
  visit_tensors(params, [&](const std::string& name, const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t.data()[i])) {
        throw NumericError(std::string(what) + ": non-finite value at " +
                           coordinate(name, t, i));
      }
    }
  });
}

void check_finite(const Matrix& item_emb, std::string_view what) {
  for (Eigen::Index i = 0; i < item_emb.size(); ++i) {
    if (!std::isfinite(item_emb.data()[i])) {
      throw NumericError(std::string(what) + ": non-finite value at " +
                         coordinate("item_emb", item_emb, i));
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LayerParams layer_params(const ModelState& model, int layer) {
  if (layer < 0 || layer >= model.config.layers) {
    throw InvalidArgument("layer out of range");
  }
  LayerParams p;
  p.variant = model.config.variant;
  p.leaky_slope = model.config.leaky_slope;
  if (!model.pub.weights.empty()) p.weight = &model.pub.weights[layer];
  if (!model.pub.attention.empty()) p.attention = &model.pub.attention[layer];
  if (!model.pub.gru.empty()) p.gru = &model.pub.gru[layer];
  return p;
}

Matrix aggregate(const BipartiteGraph& graph, const Matrix& users,
                 const Matrix& items, Direction direction,
                 const LayerParams& params) {
  if (users.rows() != graph.num_users() || items.rows() != graph.num_items() ||
      users.cols() != items.cols()) {
    throw InvalidArgument("embedding shapes do not match the graph");
  }
  const bool to_users = direction == Direction::kToUsers;
  const Matrix& self = to_users ? users : items;
  const Matrix& other = to_users ? items : users;
  Matrix out = Matrix::Zero(self.rows(), self.cols());
  for (Eigen::Index i = 0; i < self.rows(); ++i) {
    const int node = static_cast<int>(i);
    const auto edges = to_users ? graph.user_edges(node) : graph.item_edges(node);
    if (edges.empty()) continue;
    auto other_of = [&](int e) {
      return to_users ? graph.edge(e).item : graph.edge(e).user;
    };
    switch (params.variant) {
      case Variant::kGcn:
        for (int e : edges) {
          const int o = other_of(e);
          const int other_deg =
              to_users ? graph.item_degree(o) : graph.user_degree(o);
          out.row(i) += other.row(o) /
                        std::sqrt(static_cast<double>(edges.size()) * other_deg);
        }
        break;
      case Variant::kGgnn:
        for (int e : edges) out.row(i) += other.row(other_of(e));
        out.row(i) /= static_cast<double>(edges.size());
        break;
      case Variant::kGat: {
        if (params.weight == nullptr || params.attention == nullptr) {
          throw InvalidArgument("GAT aggregation needs W and attention");
        }
        Matrix nbrs(edges.size(), self.cols());
        for (std::size_t j = 0; j < edges.size(); ++j) {
          nbrs.row(j) = other.row(other_of(edges[j]));
        }
        const Vector b = attention_coeffs(self.row(i).transpose(), nbrs,
                                          *params.weight, *params.attention,
                                          params.leaky_slope);
        for (std::size_t j = 0; j < edges.size(); ++j) {
          out.row(i) += b(j + 1) * nbrs.row(j);
        }
        break;
      }
    }
  }
  return out;
}

Vector attention_coeffs(const Vector& self, const Matrix& neighbors,
                        const Matrix& weight, const Vector& attention,
                        double leaky_slope) {
  const Eigen::Index d = self.size();
  if (weight.rows() != d || weight.cols() != d || attention.size() != 2 * d ||
      (neighbors.rows() > 0 && neighbors.cols() != d)) {
    throw InvalidArgument("attention parameter shapes do not match");
  }
  const Vector ws = weight * self;
  const double self_part = attention.head(d).dot(ws);
  Vector logits(neighbors.rows() + 1);
  logits(0) = leaky_relu(self_part + attention.tail(d).dot(ws), leaky_slope);
  for (Eigen::Index j = 0; j < neighbors.rows(); ++j) {
    const Vector wv = weight * neighbors.row(j).transpose();
    logits(j + 1) =
        leaky_relu(self_part + attention.tail(d).dot(wv), leaky_slope);
  }
  const double m = logits.maxCoeff();
  Vector b = (logits.array() - m).exp().matrix();
  return b / b.sum();
}

Vector update(const Vector& self, const Vector& agg, const LayerParams& params,
              double self_coeff) {
  if (self.size() != agg.size()) {
    throw InvalidArgument("embedding and aggregate sizes differ");
  }
  auto sig = [](const Vector& z) {
    return z.unaryExpr([](double x) { return sigmoid(x); }).eval();
  };
  switch (params.variant) {
    case Variant::kGcn:
      return sig(*params.weight * (self + agg));
    case Variant::kGat:
      return sig(*params.weight * (self_coeff * self + agg));
    case Variant::kGgnn: {
      const GruParams& g = *params.gru;
      const Vector z = sig(g.w_update * agg + g.u_update * self + g.b_update);
      const Vector r = sig(g.w_reset * agg + g.u_reset * self + g.b_reset);
      const Vector c = (g.w_candidate * agg +
                        g.u_candidate * r.cwiseProduct(self) + g.b_candidate)
                           .array()
                           .tanh()
                           .matrix();
      return ((1.0 - z.array()) * self.array() + z.array() * c.array())
          .matrix();
    }
  }
  return {};
}

Matrix combine_layers(std::span<const Matrix> layers, const Vector& weights) {
  if (layers.empty() || static_cast<Eigen::Index>(layers.size()) !=
                            weights.size()) {
    throw InvalidArgument("need one combination weight per layer");
  }
  Matrix h = weights(0) * layers[0];
  for (std::size_t k = 1; k < layers.size(); ++k) {
    h += weights(static_cast<Eigen::Index>(k)) * layers[k];
  }
  return h;
}

double predict_rating(const Eigen::Ref<const Vector>& user_repr,
                      const Eigen::Ref<const Vector>& item_repr) {
  if (user_repr.size() != item_repr.size()) {
    throw InvalidArgument("representation sizes differ");
  }
  return user_repr.dot(item_repr);
}

LossTerms compute_loss_terms(std::span<const double> predictions,
                             std::span<const double> ratings,
                             const Matrix& user_emb, const Matrix& item_emb,
                             int num_users, int num_items) {
  if (predictions.size() != ratings.size()) {
    throw InvalidArgument("predictions and ratings differ in length");
  }
  LossTerms t;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - ratings[i];
    t.rating += r * r;
  }
  if (num_users > 0) t.user_reg = user_emb.squaredNorm() / num_users;
  if (num_items > 0) t.item_reg = item_emb.squaredNorm() / num_items;
  return t;
}

double compute_loss(std::span<const double> predictions,
                    std::span<const double> ratings, const Matrix& user_emb,
                    const Matrix& item_emb, int num_users, int num_items) {
  return compute_loss_terms(predictions, ratings, user_emb, item_emb,
                            num_users, num_items)
      .total();
}

double full_loss(const ModelState& model, const BipartiteGraph& graph) {
  Propagation prop(model.config, model.pub, model.item_emb, graph);
  prop.run();
  const std::vector<double> pred = prop.predict_edges();
  std::vector<double> ratings(graph.num_edges());
  for (std::size_t e = 0; e < ratings.size(); ++e) {
    ratings[e] = graph.edge(static_cast<int>(e)).rating;
  }
  return compute_loss(pred, ratings, model.pub.user_emb, model.item_emb,
                      graph.num_users(), graph.num_items());
}

Gradients backward(const ModelState& model, const BipartiteGraph& graph) {
  Propagation prop(model.config, model.pub, model.item_emb, graph);
  prop.run();
  const std::vector<double> pred = prop.predict_edges();
  std::vector<double> edge_grad(pred.size());
  for (std::size_t e = 0; e < pred.size(); ++e) {
    edge_grad[e] = 2.0 * (pred[e] - graph.edge(static_cast<int>(e)).rating);
  }
  Gradients g = prop.backward_edges(edge_grad);
  if (graph.num_users() > 0) {
    g.pub.user_emb += (2.0 / graph.num_users()) * model.pub.user_emb;
  }
  if (graph.num_items() > 0) {
    g.item_emb += (2.0 / graph.num_items()) * model.item_emb;
  }
  check_finite(g.pub, "gradient");
  check_finite(g.item_emb, "gradient");
  return g;
}

namespace {
constexpr const char* kCheckpointMagic = "vfgnn-checkpoint";

template <typename T>
void write_tensor(std::ostream& out, const std::string& name, const T& t) {
  const Eigen::Index cols = T::ColsAtCompileTime == 1 ? 1 : t.cols();
  const Eigen::Index rows = t.size() / std::max<Eigen::Index>(cols, 1);
  out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (c) out << ' ';
      out << t.data()[r * cols + c];
    }
    out << '\n';
  }
}

template <typename T>
void read_tensor(std::istream& in, const std::string& name, T& t) {
  std::string word, got;
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> word >> got >> rows >> cols) || word != "tensor") {
    throw ParseError("checkpoint: expected tensor header for " + name);
  }
  const Eigen::Index want_cols = T::ColsAtCompileTime == 1 ? 1 : t.cols();
  if (got != name || cols != want_cols || rows * cols != t.size()) {
    throw ParseError("checkpoint: tensor " + got + " " + std::to_string(rows) +
                     "x" + std::to_string(cols) + " does not match " + name);
  }
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (!(in >> t.data()[i])) {
      throw ParseError("checkpoint: truncated values in " + name);
    }
  }
}
}  // namespace

void write_checkpoint(const ModelState& model, std::ostream& out) {
  const auto old_precision = out.precision();
  out.precision(std::numeric_limits<double>::max_digits10);
  out << kCheckpointMagic << " 1 " << variant_name(model.config.variant) << ' '
      << model.config.dim << ' ' << model.config.layers << ' '
      << model.config.init_std << ' ' << model.config.leaky_slope << ' '
      << model.pub.user_emb.rows() << ' ' << model.item_emb.rows() << '\n';
  visit_tensors(model.pub, [&](const std::string& name, const auto& t) {
    write_tensor(out, name, t);
  });
  write_tensor(out, "item_emb", model.item_emb);
  out.precision(old_precision);
}

ModelState read_checkpoint(std::istream& in) {
  std::string magic, variant;
  int version = 0, users = 0, items = 0;
  ModelConfig config;
  if (!(in >> magic >> version >> variant >> config.dim >> config.layers >>
        config.init_std >> config.leaky_slope >> users >> items) ||
      magic != kCheckpointMagic || version != 1) {
    throw ParseError("checkpoint: bad header");
  }
  config.variant = parse_variant(variant);
  if (config.dim < 1 || config.layers < 1 || users < 0 || items < 0) {
    throw ParseError("checkpoint: bad dimensions in header");
  }
  ModelState m;
  m.config = config;
  m.pub = allocate_public(config, users);
  m.item_emb = Matrix::Zero(items, config.dim);
  visit_tensors(m.pub, [&](const std::string& name, auto& t) {
    read_tensor(in, name, t);
  });
  read_tensor(in, "item_emb", m.item_emb);
  return m;
}

}  // namespace vfgnn
