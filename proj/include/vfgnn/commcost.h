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


// Communication accounting. An analytic cost model evaluated with unit
// constants, byte-exact measurement over a MessageLog, and sweeps that
// compare the two.

#ifndef VFGNN_COMMCOST_H_
#define VFGNN_COMMCOST_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string_view>
#include <vector>

#include "vfgnn/datagraph.h"
#include "vfgnn/fedsim.h"
#include "vfgnn/gnncore.h"
#include "vfgnn/message_log.h"

namespace vfgnn {

constexpr double kDenseBits = 32.0;      // s1
constexpr double kQuantizedBits = 40.0;  // s2: u32 index + i8 sign

struct CostModelParams {
  double alpha = 1.0;
  int parties = 2;
  int layers = 2;
  int dim = 6;
  int users = 100;
  int q = 20;
  int iterations = 1;
  double s1 = kDenseBits;
  double s2 = kQuantizedBits;
  double xi_l1 = 1.0;  // l1 norm of the uploaded public-parameter vector
  double r = 3.0;
  // Dense uploads replace the quantized term with alpha P d T s1.
  bool quantized = true;
  std::int64_t num_public = 0;  // d
};

struct PhaseCost {
  double download = 0.0;
  double exchange = 0.0;
  double upload = 0.0;
  double total() const { return download + exchange + upload; }
  double get(Phase phase) const;
};

// Bits per phase. Throws InvalidArgument on non-positive fields or alpha
// outside (0, 1].
PhaseCost predict_cost(const CostModelParams& params);

struct MeasuredCost {
  PhaseCost bits;
  std::map<MessageKind, double> bits_by_kind;
};

// Sums (payload + optionally header) bytes * 8 over every logged message.
MeasuredCost measure_cost(const MessageLog& log, bool include_headers = true);

// Least-squares line y = slope x + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  // max |y - fit| / |y| over the points.
  double max_rel_residual = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct PhaseValidation {
  Phase phase = Phase::kDownload;
  double slope = 0.0;  // measured ~ slope * predicted, through the origin
  double max_rel_residual = 0.0;
  std::vector<double> ratios;  // measured / predicted per point
};

// Throws InvalidArgument when the two series differ in length or are empty.
std::vector<PhaseValidation> crossvalidate(
    const std::vector<PhaseCost>& measured,
    const std::vector<PhaseCost>& predicted);

// Columns: phase,predicted_bits,measured_bits,ratio.
void write_cost_report(const PhaseCost& predicted, const PhaseCost& measured,
                       std::ostream& out);

struct CostSweepConfig {
  std::vector<int> users = {100, 200, 400};
  std::vector<double> q_ratios = {5.0};  // N_u / q
  int fixed_q = 0;  // when positive, overrides q_ratios
  std::vector<double> alphas = {1.0};
  int parties = 2;
  int items_per_party = 40;
  double density = 0.05;
  Variant variant = Variant::kGcn;
  Quantization quantization = Quantization::kTernary;
  double r = 3.0;
  int iterations = 1;
  bool allow_insecure_projection = false;
  std::uint64_t data_seed = 1;
  std::uint64_t init_seed = 2;
  std::uint64_t protocol_seed = 3;
};

struct CostSweepPoint {
  int users = 0;
  int q = 0;
  double alpha = 1.0;
  CostModelParams params;
  PhaseCost predicted;
  PhaseCost measured;               // payload only
  PhaseCost measured_with_headers;  // payload + headers
};

// One federated run of `iterations` steps per grid point (users x q_ratios x
// alphas, in that nesting order).
std::vector<CostSweepPoint> run_cost_sweep(const CostSweepConfig& config);

// Columns: users,q,alpha,phase,predicted_bits,measured_bits,ratio.
void write_cost_sweep_csv(const std::vector<CostSweepPoint>& points,
                          std::ostream& out);

std::string_view phase_name(Phase phase);

}  // namespace vfgnn

#endif  // VFGNN_COMMCOST_H_
