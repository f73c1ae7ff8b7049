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


#include "vfgnn/centralized.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "vfgnn/propagation.h"

namespace vfgnn {

Adagrad::Adagrad(Eigen::Index size, double lr, double eps)
    : accum_(Vector::Zero(size)), lr_(lr), eps_(eps) {
  if (!(lr > 0.0) || !(eps > 0.0)) {
    throw InvalidArgument("Adagrad needs positive learning rate and epsilon");
  }
}

void Adagrad::step(Eigen::Ref<Vector> params,
                   const Eigen::Ref<const Vector>& grad) {
  if (params.size() != accum_.size() || grad.size() != accum_.size()) {
    throw InvalidArgument("Adagrad size mismatch");
  }
  accum_.array() += grad.array().square();
  params.array() -= lr_ * grad.array() / (accum_.array().sqrt() + eps_);
}

void Adagrad::step(Matrix& params, const Matrix& grad) {
  if (params.rows() != grad.rows() || params.cols() != grad.cols()) {
    throw InvalidArgument("Adagrad shape mismatch");
  }
  Eigen::Map<Vector> p(params.data(), params.size());
  Eigen::Map<const Vector> g(grad.data(), grad.size());
  step(p, g);
}

void write_metrics_csv(std::span<const EpochMetrics> metrics,
                       std::ostream& out) {
  out << "epoch,split,rmse,loss\n";
  for (const auto& m : metrics) {
    out << m.epoch << ',' << m.split << ',' << m.rmse << ',' << m.loss << '\n';
  }
}

double evaluate_rmse(const ModelState& model, const BipartiteGraph& graph,
                     const RatingDataset& dataset,
                     std::span<const std::size_t> records) {
  if (records.empty()) return 0.0;
  Propagation prop(model.config, model.pub, model.item_emb, graph);
  prop.run();
  double sq = 0.0;
  for (std::size_t idx : records) {
    const RatingRecord& r = dataset.records.at(idx);
    const double err = prop.predict(r.user, r.item) - r.rating;
    sq += err * err;
  }
  return std::sqrt(sq / static_cast<double>(records.size()));
}

CentralizedTrainer::CentralizedTrainer(const RatingDataset& dataset,
                                       const DatasetSplit& split,
                                       const TrainConfig& config)
    : dataset_(dataset),
      split_(split),
      config_(config),
      graph_(build_graph(dataset, split.train)),
      model_(init_model(config.model, dataset.num_users(), dataset.num_items(),
                        config.seed)) {
  public_opt_ = Adagrad(static_cast<Eigen::Index>(flat_size(model_.pub)),
                        config.learning_rate, config.adagrad_eps);
  item_opt_ = Adagrad(model_.item_emb.size(), config.learning_rate,
                      config.adagrad_eps);
}

double CentralizedTrainer::step() {
  const double loss = full_loss(model_, graph_);
  if (!std::isfinite(loss)) {
    throw NumericError("training diverged at iteration " +
                       std::to_string(iteration_));
  }
  const Gradients g = backward(model_, graph_);
  Vector flat = flatten(model_.pub);
  public_opt_.step(flat, flatten(g.pub));
  unflatten(flat, model_.pub);
  item_opt_.step(model_.item_emb, g.item_emb);
  ++iteration_;
  return loss;
}

std::vector<EpochMetrics> CentralizedTrainer::evaluate() const {
  std::vector<EpochMetrics> out;
  const double loss = full_loss(model_, graph_);
  const std::pair<const char*, const std::vector<std::size_t>*> splits[] = {
      {"train", &split_.train},
      {"validation", &split_.validation},
      {"test", &split_.test}};
  for (const auto& [name, records] : splits) {
    out.push_back({iteration_, name,
                   evaluate_rmse(model_, graph_, dataset_, *records),
                   loss});
  }
  return out;
}

std::vector<EpochMetrics> CentralizedTrainer::run() {
  std::vector<EpochMetrics> metrics;
  for (int t = 0; t < config_.iterations; ++t) {
    step();
    if (iteration_ % std::max(config_.eval_every, 1) == 0 ||
        t + 1 == config_.iterations) {
      for (auto& m : evaluate()) metrics.push_back(std::move(m));
    }
  }
  return metrics;
}

CentralizedResult train_centralized(const RatingDataset& dataset,
                                    const DatasetSplit& split,
                                    const TrainConfig& config) {
  CentralizedTrainer trainer(dataset, split, config);
  CentralizedResult result;
  result.metrics = trainer.run();
  result.model = trainer.model();
  result.test_rmse = result.metrics.empty() ? trainer.evaluate().back().rmse
                                            : result.metrics.back().rmse;
  return result;
}

}  // namespace vfgnn
