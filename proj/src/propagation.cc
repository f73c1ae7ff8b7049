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

#include "vfgnn/propagation.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace vfgnn {
namespace {

Matrix sigmoid_of(const Matrix& z) {
  return z.unaryExpr([](double x) { return sigmoid(x); });
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidArgument(std::string(what) + " has shape " +
                          std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

Propagation::Propagation(const ModelConfig& config, const PublicParams& params,
                         const Matrix& item_emb, const BipartiteGraph& graph,
                         PropagationContext context)
    : config_(config),
      params_(params),
      graph_(graph),
      context_(std::move(context)) {
  const int dim = config_.dim;
  const int layers = config_.layers;
  if (dim < 1 || layers < 1) {
    throw InvalidArgument("model needs dim >= 1 and layers >= 1");
  }
  require_shape(params_.user_emb, graph_.num_users(), dim, "user embeddings");
  require_shape(item_emb, graph_.num_items(), dim, "item embeddings");
  if (params_.layer_weights.size() != layers + 1) {
    throw InvalidArgument("layer weights need K + 1 entries");
  }
  const bool uses_w = config_.variant != Variant::kGgnn;
  if (uses_w) {
    if (static_cast<int>(params_.weights.size()) != layers) {
      throw InvalidArgument("expected one weight matrix per layer");
    }
    for (const auto& w : params_.weights) require_shape(w, dim, dim, "W^k");
  }
  if (config_.variant == Variant::kGat) {
    if (static_cast<int>(params_.attention.size()) != layers) {
      throw InvalidArgument("expected one attention vector per layer");
    }
    for (const auto& a : params_.attention) {
      if (a.size() != 2 * dim) {
        throw InvalidArgument("attention vectors need 2D entries");
      }
    }
  }
  if (config_.variant == Variant::kGgnn &&
      static_cast<int>(params_.gru.size()) != layers) {
    throw InvalidArgument("expected one GRU block per layer");
  }
  if (context_.user_degrees &&
      static_cast<int>(context_.user_degrees->size()) != graph_.num_users()) {
    throw InvalidArgument("user degree override has wrong length");
  }

  users_.resize(layers + 1);
  items_.resize(layers + 1);
  users_[0] = params_.user_emb;
  items_[0] = item_emb;
  cache_.resize(layers);

  user_deg_.resize(graph_.num_users());
  for (int u = 0; u < graph_.num_users(); ++u) {
    user_deg_[u] = graph_.user_degree(u);
  }
  if (config_.variant == Variant::kGcn) {
    gcn_coeff_.resize(graph_.num_edges());
    for (std::size_t e = 0; e < graph_.num_edges(); ++e) {
      const auto& edge = graph_.edge(static_cast<int>(e));
      const double du = context_.user_degrees
                            ? (*context_.user_degrees)[edge.user]
                            : context_.degree_scale * user_deg_[edge.user];
      gcn_coeff_[e] = 1.0 / std::sqrt(du * graph_.item_degree(edge.item));
    }
  }
}

const Matrix& Propagation::user_aggregate(int layer) {
  if (layer < 0 || layer >= config_.layers) {
    throw ProtocolError("layer " + std::to_string(layer) + " out of range");
  }
  if (layer > 0 && !cache_[layer - 1].advanced) {
    throw ProtocolError("layer " + std::to_string(layer) +
                        " requested before layer " +
                        std::to_string(layer - 1) + " was advanced");
  }
  LayerCache& c = cache_[layer];
  if (c.user_ready) return c.user.local;
  const Matrix& items = items_[layer];
  Matrix local = Matrix::Zero(graph_.num_users(), config_.dim);
  switch (config_.variant) {
    case Variant::kGcn:
      for (std::size_t e = 0; e < graph_.num_edges(); ++e) {
        const auto& edge = graph_.edge(static_cast<int>(e));
        local.row(edge.user) += gcn_coeff_[e] * items.row(edge.item);
      }
      c.user.local = std::move(local);
      break;
    case Variant::kGgnn:
      for (int u = 0; u < graph_.num_users(); ++u) {
        const auto edges = graph_.user_edges(u);
        if (edges.empty()) continue;
        for (int e : edges) local.row(u) += items.row(graph_.edge(e).item);
        local.row(u) /= static_cast<double>(edges.size());
      }
      c.user.local = std::move(local);
      break;
    case Variant::kGat:
      compute_gat_side(layer, /*user_side=*/true);
      break;
  }
  c.user_ready = true;
  return c.user.local;
}

void Propagation::compute_gat_side(int layer, bool user_side) {
  LayerCache& c = cache_[layer];
  const Matrix& w = params_.weights[layer];
  if (c.proj_users.size() == 0) {
    c.proj_users = users_[layer] * w.transpose();
    c.proj_items = items_[layer] * w.transpose();
  }
  const int dim = config_.dim;
  const Vector& att = params_.attention[layer];
  const Vector a_self = att.head(dim);
  const Vector a_nbr = att.tail(dim);
  const double slope = config_.leaky_slope;
  auto leaky = [slope](double t) { return t > 0.0 ? t : slope * t; };

  const Matrix& self_proj = user_side ? c.proj_users : c.proj_items;
  const Matrix& other_proj = user_side ? c.proj_items : c.proj_users;
  const Matrix& other_emb = user_side ? items_[layer] : users_[layer];
  const double scale = user_side ? context_.degree_scale : 1.0;
  const int count = user_side ? graph_.num_users() : graph_.num_items();

  SideCache& side = user_side ? c.user : c.item;
  side.self_coeff.resize(count);
  side.self_logit.resize(count);
  side.edge_coeff.assign(graph_.num_edges(), 0.0);
  side.edge_logit.assign(graph_.num_edges(), 0.0);
  side.local = Matrix::Zero(count, dim);

  const Vector self_part = self_proj * a_self;
  const Vector self_total = self_proj * (a_self + a_nbr);
  const Vector other_part = other_proj * a_nbr;
  for (int i = 0; i < count; ++i) {
    const auto edges = user_side ? graph_.user_edges(i) : graph_.item_edges(i);
    auto other_of = [&](int e) {
      return user_side ? graph_.edge(e).item : graph_.edge(e).user;
    };
    const double t_self = self_total(i);
    double max_logit = leaky(t_self);
    for (int e : edges) {
      const double t = self_part(i) + other_part(other_of(e));
      side.edge_logit[e] = t;
      max_logit = std::max(max_logit, leaky(t));
    }
    const double self_exp = std::exp(leaky(t_self) - max_logit);
    double nbr_sum = 0.0;
    for (int e : edges) {
      const double ex = std::exp(leaky(side.edge_logit[e]) - max_logit);
      side.edge_coeff[e] = ex;
      nbr_sum += ex;
    }
    const double denom = self_exp + scale * nbr_sum;
    side.self_logit(i) = t_self;
    side.self_coeff(i) = self_exp / denom;
    for (int e : edges) {
      side.edge_coeff[e] /= denom;
      side.local.row(i) += side.edge_coeff[e] * other_emb.row(other_of(e));
    }
  }
}

void Propagation::advance(int layer, double own_weight,
                          const Matrix* external) {
  user_aggregate(layer);
  LayerCache& c = cache_[layer];
  if (c.advanced) {
    throw ProtocolError("layer " + std::to_string(layer) +
                        " already advanced");
  }
  c.user.own_weight = own_weight;
  c.user.input = own_weight * c.user.local;
  if (external != nullptr) {
    require_shape(*external, graph_.num_users(), config_.dim,
                  "external aggregate");
    c.user.input += *external;
  }

  const Matrix& users = users_[layer];
  switch (config_.variant) {
    case Variant::kGcn: {
      c.item.local = Matrix::Zero(graph_.num_items(), config_.dim);
      for (std::size_t e = 0; e < graph_.num_edges(); ++e) {
        const auto& edge = graph_.edge(static_cast<int>(e));
        c.item.local.row(edge.item) += gcn_coeff_[e] * users.row(edge.user);
      }
      break;
    }
    case Variant::kGgnn: {
      c.item.local = Matrix::Zero(graph_.num_items(), config_.dim);
      for (int v = 0; v < graph_.num_items(); ++v) {
        const auto edges = graph_.item_edges(v);
        if (edges.empty()) continue;
        for (int e : edges) c.item.local.row(v) += users.row(graph_.edge(e).user);
        c.item.local.row(v) /= static_cast<double>(edges.size());
      }
      break;
    }
    case Variant::kGat:
      compute_gat_side(layer, /*user_side=*/false);
      break;
  }
  c.item.own_weight = 1.0;
  c.item.input = c.item.local;

  users_[layer + 1] = side_update(layer, /*user_side=*/true);
  items_[layer + 1] = side_update(layer, /*user_side=*/false);
  c.advanced = true;
  if (layer + 1 == config_.layers) finish();
}

Matrix Propagation::side_update(int layer, bool user_side) {
  SideCache& side = user_side ? cache_[layer].user : cache_[layer].item;
  const Matrix& self = user_side ? users_[layer] : items_[layer];
  switch (config_.variant) {
    case Variant::kGcn:
      side.pre = self + side.input;
      return sigmoid_of(side.pre * params_.weights[layer].transpose());
    case Variant::kGat:
      side.pre = side.self_coeff.asDiagonal() * self;
      side.pre += side.input;
      return sigmoid_of(side.pre * params_.weights[layer].transpose());
    case Variant::kGgnn: {
      const GruParams& g = params_.gru[layer];
      const Matrix& x = side.input;
      Matrix z = x * g.w_update.transpose() + self * g.u_update.transpose();
      z.rowwise() += g.b_update.transpose();
      side.update_gate = sigmoid_of(z);
      Matrix r = x * g.w_reset.transpose() + self * g.u_reset.transpose();
      r.rowwise() += g.b_reset.transpose();
      side.reset_gate = sigmoid_of(r);
      const Matrix gated = side.reset_gate.cwiseProduct(self);
      Matrix cand =
          x * g.w_candidate.transpose() + gated * g.u_candidate.transpose();
      cand.rowwise() += g.b_candidate.transpose();
      side.candidate = cand.array().tanh().matrix();
      return (1.0 - side.update_gate.array()) * self.array() +
             side.update_gate.array() * side.candidate.array();
    }
  }
  return {};
}

void Propagation::run() {
  for (int k = 0; k < config_.layers; ++k) advance(k, 1.0, nullptr);
}

void Propagation::finish() {
  user_repr_ = combine_layers(users_, params_.layer_weights);
  item_repr_ = combine_layers(items_, params_.layer_weights);
  finished_ = true;
}

const Vector& Propagation::user_self_coeffs(int layer) const {
  if (config_.variant != Variant::kGat || !cache_.at(layer).user_ready) {
    throw ProtocolError("attention coefficients not available");
  }
  return cache_[layer].user.self_coeff;
}

const std::vector<double>& Propagation::user_edge_coeffs(int layer) const {
  if (config_.variant != Variant::kGat || !cache_.at(layer).user_ready) {
    throw ProtocolError("attention coefficients not available");
  }
  return cache_[layer].user.edge_coeff;
}

const Matrix& Propagation::user_repr() const {
  if (!finished_) throw ProtocolError("forward pass not complete");
  return user_repr_;
}

const Matrix& Propagation::item_repr() const {
  if (!finished_) throw ProtocolError("forward pass not complete");
  return item_repr_;
}

double Propagation::predict(int user, int item) const {
  return predict_rating(user_repr().row(user).transpose(),
                        item_repr().row(item).transpose());
}

std::vector<double> Propagation::predict_edges() const {
  std::vector<double> out(graph_.num_edges());
  for (std::size_t e = 0; e < out.size(); ++e) {
    const auto& edge = graph_.edge(static_cast<int>(e));
    out[e] = predict(edge.user, edge.item);
  }
  return out;
}

Gradients Propagation::backward_edges(std::span<const double> edge_grad) {
  if (edge_grad.size() != graph_.num_edges()) {
    throw InvalidArgument("edge gradient length does not match graph");
  }
  const Matrix& hu = user_repr();
  const Matrix& hv = item_repr();
  Matrix d_hu = Matrix::Zero(hu.rows(), hu.cols());
  Matrix d_hv = Matrix::Zero(hv.rows(), hv.cols());
  for (std::size_t e = 0; e < edge_grad.size(); ++e) {
    const auto& edge = graph_.edge(static_cast<int>(e));
    d_hu.row(edge.user) += edge_grad[e] * hv.row(edge.item);
    d_hv.row(edge.item) += edge_grad[e] * hu.row(edge.user);
  }
  return backward(d_hu, d_hv);
}

Gradients Propagation::backward(const Matrix& d_user_repr,
                                const Matrix& d_item_repr) {
  if (!finished_) throw ProtocolError("forward pass not complete");
  const int layers = config_.layers;
  const int dim = config_.dim;
  const double slope = config_.leaky_slope;
  const Vector& a = params_.layer_weights;

  Gradients g;
  g.pub = zeros_like(params_);

  Matrix d_up = a(layers) * d_user_repr;
  Matrix d_vp = a(layers) * d_item_repr;
  g.pub.layer_weights(layers) = d_user_repr.cwiseProduct(users_[layers]).sum() +
                                d_item_repr.cwiseProduct(items_[layers]).sum();

  for (int k = layers - 1; k >= 0; --k) {
    const LayerCache& c = cache_[k];
    const Matrix& users = users_[k];
    const Matrix& items = items_[k];
    Matrix d_users = a(k) * d_user_repr;
    Matrix d_items = a(k) * d_item_repr;
    g.pub.layer_weights(k) = d_user_repr.cwiseProduct(users).sum() +
                             d_item_repr.cwiseProduct(items).sum();

    // Update step, per side: returns dL/d(input aggregate) and accumulates
    // into the self gradient. GAT also reports dL/d b_self.
    auto update_backward = [&](bool user_side, const Matrix& d_out,
                               Matrix& d_self, Vector& d_self_coeff) {
      const SideCache& side = user_side ? c.user : c.item;
      const Matrix& self = user_side ? users : items;
      const Matrix& out = user_side ? users_[k + 1] : items_[k + 1];
      if (config_.variant == Variant::kGgnn) {
        const GruParams& p = params_.gru[k];
        GruParams& gp = g.pub.gru[k];
        const auto& z = side.update_gate.array();
        const auto& r = side.reset_gate.array();
        const auto& cand = side.candidate.array();
        const Matrix& x = side.input;
        const Matrix dz = (d_out.array() * (cand - self.array())).matrix();
        const Matrix dc = (d_out.array() * z).matrix();
        d_self += (d_out.array() * (1.0 - z)).matrix();

        const Matrix dcp = (dc.array() * (1.0 - cand.square())).matrix();
        const Matrix gated = (r * self.array()).matrix();
        gp.w_candidate += dcp.transpose() * x;
        gp.u_candidate += dcp.transpose() * gated;
        gp.b_candidate += dcp.colwise().sum().transpose();
        Matrix d_x = dcp * p.w_candidate;
        const Matrix d_gated = dcp * p.u_candidate;
        const Matrix dr = (d_gated.array() * self.array()).matrix();
        d_self += (d_gated.array() * r).matrix();

        const Matrix dzp = (dz.array() * z * (1.0 - z)).matrix();
        gp.w_update += dzp.transpose() * x;
        gp.u_update += dzp.transpose() * self;
        gp.b_update += dzp.colwise().sum().transpose();
        d_x += dzp * p.w_update;
        d_self += dzp * p.u_update;

        const Matrix drp = (dr.array() * r * (1.0 - r)).matrix();
        gp.w_reset += drp.transpose() * x;
        gp.u_reset += drp.transpose() * self;
        gp.b_reset += drp.colwise().sum().transpose();
        d_x += drp * p.w_reset;
        d_self += drp * p.u_reset;
        return d_x;
      }
      const Matrix dz =
          (d_out.array() * out.array() * (1.0 - out.array())).matrix();
      g.pub.weights[k] += dz.transpose() * side.pre;
      Matrix d_pre = dz * params_.weights[k];
      if (config_.variant == Variant::kGat) {
        d_self += side.self_coeff.asDiagonal() * d_pre;
        d_self_coeff = d_pre.cwiseProduct(self).rowwise().sum();
      } else {
        d_self += d_pre;
      }
      return d_pre;
    };

    Vector d_self_coeff_u, d_self_coeff_v;
    const Matrix d_input_u =
        update_backward(true, d_up, d_users, d_self_coeff_u);
    const Matrix d_input_v =
        update_backward(false, d_vp, d_items, d_self_coeff_v);
    const Matrix d_local_u = c.user.own_weight * d_input_u;
    const Matrix& d_local_v = d_input_v;

    switch (config_.variant) {
      case Variant::kGcn:
        for (std::size_t e = 0; e < graph_.num_edges(); ++e) {
          const auto& edge = graph_.edge(static_cast<int>(e));
          d_items.row(edge.item) += gcn_coeff_[e] * d_local_u.row(edge.user);
          d_users.row(edge.user) += gcn_coeff_[e] * d_local_v.row(edge.item);
        }
        break;
      case Variant::kGgnn:
        for (std::size_t e = 0; e < graph_.num_edges(); ++e) {
          const auto& edge = graph_.edge(static_cast<int>(e));
          d_items.row(edge.item) +=
              d_local_u.row(edge.user) / user_deg_[edge.user];
          d_users.row(edge.user) += d_local_v.row(edge.item) /
                                    graph_.item_degree(edge.item);
        }
        break;
      case Variant::kGat: {
        const Vector& att = params_.attention[k];
        const Vector a_self = att.head(dim);
        const Vector a_nbr = att.tail(dim);
        const Vector a_sum = a_self + a_nbr;
        Matrix d_proj_u = Matrix::Zero(users.rows(), dim);
        Matrix d_proj_v = Matrix::Zero(items.rows(), dim);
        Vector d_att = Vector::Zero(2 * dim);
        auto leaky_grad = [slope](double t) { return t > 0.0 ? 1.0 : slope; };

        auto attention_backward = [&](bool user_side, const Matrix& d_local,
                                      const Vector& d_self_coeff) {
          const SideCache& side = user_side ? c.user : c.item;
          const Matrix& self_proj = user_side ? c.proj_users : c.proj_items;
          const Matrix& other_proj = user_side ? c.proj_items : c.proj_users;
          const Matrix& other_emb = user_side ? items : users;
          Matrix& d_self_proj = user_side ? d_proj_u : d_proj_v;
          Matrix& d_other_proj = user_side ? d_proj_v : d_proj_u;
          Matrix& d_other_emb = user_side ? d_items : d_users;
          const double scale = user_side ? context_.degree_scale : 1.0;
          const int count = user_side ? graph_.num_users() : graph_.num_items();
          for (int i = 0; i < count; ++i) {
            const auto edges =
                user_side ? graph_.user_edges(i) : graph_.item_edges(i);
            auto other_of = [&](int e) {
              return user_side ? graph_.edge(e).item : graph_.edge(e).user;
            };
            const double b_self = side.self_coeff(i);
            const double db_self = d_self_coeff(i);
            double weighted = b_self * db_self;
            for (int e : edges) {
              const int o = other_of(e);
              const double db = d_local.row(i).dot(other_emb.row(o));
              d_other_emb.row(o) += side.edge_coeff[e] * d_local.row(i);
              weighted += side.edge_coeff[e] * db;
            }
            const double dt_self = b_self * (db_self - weighted) *
                                   leaky_grad(side.self_logit(i));
            d_att.head(dim) += dt_self * self_proj.row(i).transpose();
            d_att.tail(dim) += dt_self * self_proj.row(i).transpose();
            d_self_proj.row(i) += dt_self * a_sum.transpose();
            for (int e : edges) {
              const int o = other_of(e);
              const double db = d_local.row(i).dot(other_emb.row(o));
              const double dt = side.edge_coeff[e] * (db - scale * weighted) *
                                leaky_grad(side.edge_logit[e]);
              d_att.head(dim) += dt * self_proj.row(i).transpose();
              d_att.tail(dim) += dt * other_proj.row(o).transpose();
              d_self_proj.row(i) += dt * a_self.transpose();
              d_other_proj.row(o) += dt * a_nbr.transpose();
            }
          }
        };
        attention_backward(true, d_local_u, d_self_coeff_u);
        attention_backward(false, d_local_v, d_self_coeff_v);

        const Matrix& w = params_.weights[k];
        g.pub.weights[k] +=
            d_proj_u.transpose() * users + d_proj_v.transpose() * items;
        d_users += d_proj_u * w;
        d_items += d_proj_v * w;
        g.pub.attention[k] += d_att;
        break;
      }
    }
    d_up = std::move(d_users);
    d_vp = std::move(d_items);
  }
  g.pub.user_emb = std::move(d_up);
  g.item_emb = std::move(d_vp);
  return g;
}

}  // namespace vfgnn
