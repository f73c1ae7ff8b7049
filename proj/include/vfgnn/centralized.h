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

// Adagrad and the centralized (single-owner) training loop.

#ifndef VFGNN_CENTRALIZED_H_
#define VFGNN_CENTRALIZED_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vfgnn/common.h"
#include "vfgnn/datagraph.h"
#include "vfgnn/gnncore.h"

namespace vfgnn {

// theta -= lr * g / (sqrt(G) + eps) with G the running sum of g^2.
class Adagrad {
 public:
  Adagrad() = default;
  Adagrad(Eigen::Index size, double lr, double eps);

  void step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grad);
  // Row-major matrices are updated through their flat storage.
  void step(Matrix& params, const Matrix& grad);

  const Vector& accumulator() const { return accum_; }

 private:
  Vector accum_;
  double lr_ = 0.05;
  double eps_ = 1e-8;
};

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 0.05;
  double adagrad_eps = 1e-8;
  int iterations = 200;
  int eval_every = 5;  // the final iteration is always evaluated
  std::uint64_t seed = 1;
};

struct EpochMetrics {
  int epoch = 0;
  std::string split;  // train, validation or test
  double rmse = 0.0;
  double loss = 0.0;  // training objective at this epoch
};

void write_metrics_csv(std::span<const EpochMetrics> metrics,
                       std::ostream& out);

// Root mean squared error of `model` on the listed records, with
// representations propagated over `graph`.
double evaluate_rmse(const ModelState& model, const BipartiteGraph& graph,
                     const RatingDataset& dataset,
                     std::span<const std::size_t> records);

// Full-batch training on the split's training records.
class CentralizedTrainer {
 public:
  CentralizedTrainer(const RatingDataset& dataset, const DatasetSplit& split,
                     const TrainConfig& config);

  // One Adagrad step. Returns the objective before the step.
  double step();
  // RMSE on train, validation and test at the current iteration.
  std::vector<EpochMetrics> evaluate() const;
  // Runs the configured number of iterations.
  std::vector<EpochMetrics> run();

  const ModelState& model() const { return model_; }
  const BipartiteGraph& train_graph() const { return graph_; }
  int iteration() const { return iteration_; }

 private:
  const RatingDataset& dataset_;
  DatasetSplit split_;
  TrainConfig config_;
  BipartiteGraph graph_;
  ModelState model_;
  Adagrad public_opt_, item_opt_;
  int iteration_ = 0;
};

struct CentralizedResult {
  ModelState model;
  std::vector<EpochMetrics> metrics;
  double test_rmse = 0.0;
};

CentralizedResult train_centralized(const RatingDataset& dataset,
                                    const DatasetSplit& split,
                                    const TrainConfig& config);

}  // namespace vfgnn

#endif  // VFGNN_CENTRALIZED_H_
