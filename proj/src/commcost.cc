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


#include "vfgnn/commcost.h"

#include <cmath>
#include <ostream>
#include <string>

namespace vfgnn {

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::kDownload:
      return "download";
    case Phase::kExchange:
      return "exchange";
    case Phase::kUpload:
      return "upload";
  }
  return "download";
}

double PhaseCost::get(Phase phase) const {
  switch (phase) {
    case Phase::kDownload:
      return download;
    case Phase::kExchange:
      return exchange;
    case Phase::kUpload:
      return upload;
  }
  return 0.0;
}

PhaseCost predict_cost(const CostModelParams& p) {
  if (!(p.alpha > 0.0) || p.alpha > 1.0) {
    throw InvalidArgument("alpha must lie in (0, 1]");
  }
  if (p.parties < 1 || p.layers < 1 || p.dim < 1 || p.users < 1 || p.q < 1 ||
      p.iterations < 1 || !(p.s1 > 0.0) || !(p.s2 > 0.0) || !(p.r > 0.0) ||
      p.xi_l1 < 0.0) {
    throw InvalidArgument("cost model parameters must be positive");
  }
  const double ap = p.alpha * p.parties;
  const double kd = static_cast<double>(p.layers) * p.dim;
  PhaseCost c;
  c.download = ap * kd * (p.dim + p.users) * p.iterations * p.s1;
  c.exchange = ap * ap * p.q * kd * p.iterations * p.s1;
  if (p.quantized) {
    c.upload = ap * p.xi_l1 * p.iterations * p.s2 / p.r;
  } else {
    if (p.num_public < 1) {
      throw InvalidArgument("dense upload cost needs num_public");
    }
    c.upload = ap * static_cast<double>(p.num_public) * p.iterations * p.s1;
  }
  return c;
}

MeasuredCost measure_cost(const MessageLog& log, bool include_headers) {
  MeasuredCost out;
  for (const Message& m : log.messages()) {
    const double bits =
        8.0 * static_cast<double>(m.payload_bytes +
                                  (include_headers ? m.header_bytes : 0));
    switch (phase_of(m.kind)) {
      case Phase::kDownload:
        out.bits.download += bits;
        break;
      case Phase::kExchange:
        out.bits.exchange += bits;
        break;
      case Phase::kUpload:
        out.bits.upload += bits;
        break;
    }
    out.bits_by_kind[m.kind] += bits;
  }
  return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("line fit needs two or more paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw InvalidArgument("line fit needs distinct x values");
  LinearFit fit;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double res = y[i] - (fit.slope * x[i] + fit.intercept);
    const double rel = y[i] != 0.0 ? std::abs(res / y[i]) : std::abs(res);
    fit.max_rel_residual = std::max(fit.max_rel_residual, rel);
  }
  return fit;
}

std::vector<PhaseValidation> crossvalidate(
    const std::vector<PhaseCost>& measured,
    const std::vector<PhaseCost>& predicted) {
  if (measured.empty() || measured.size() != predicted.size()) {
    throw InvalidArgument("cross-validation needs equal, non-empty series");
  }
  std::vector<PhaseValidation> out;
  for (Phase phase : {Phase::kDownload, Phase::kExchange, Phase::kUpload}) {
    PhaseValidation v;
    v.phase = phase;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
      const double x = predicted[i].get(phase), y = measured[i].get(phase);
      sxy += x * y;
      sxx += x * x;
      v.ratios.push_back(x != 0.0 ? y / x : 0.0);
    }
    v.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
      const double y = measured[i].get(phase);
      const double res = y - v.slope * predicted[i].get(phase);
      v.max_rel_residual = std::max(
          v.max_rel_residual, y != 0.0 ? std::abs(res / y) : std::abs(res));
    }
    out.push_back(std::move(v));
  }
  return out;
}

void write_cost_report(const PhaseCost& predicted, const PhaseCost& measured,
                       std::ostream& out) {
  out << "phase,predicted_bits,measured_bits,ratio\n";
  auto row = [&](std::string_view name, double p, double m) {
    out << name << ',' << p << ',' << m << ',' << (p != 0.0 ? m / p : 0.0)
        << '\n';
  };
  for (Phase phase : {Phase::kDownload, Phase::kExchange, Phase::kUpload}) {
    row(phase_name(phase), predicted.get(phase), measured.get(phase));
  }
  row("total", predicted.total(), measured.total());
}

std::vector<CostSweepPoint> run_cost_sweep(const CostSweepConfig& config) {
  if (config.users.empty() || config.q_ratios.empty() ||
      config.alphas.empty()) {
    throw InvalidArgument("cost sweep grid is empty");
  }
  std::vector<CostSweepPoint> points;
  for (int users : config.users) {
    const RatingDataset ds = generate_synthetic(
        users, config.items_per_party * config.parties, config.density, 5,
        config.data_seed);
    const PartyPartition part =
        partition_items(ds, config.parties, config.data_seed);
    DatasetSplit split;
    split.train = all_record_indices(ds);
    const std::vector<double> ratios =
        config.fixed_q > 0 ? std::vector<double>{0.0} : config.q_ratios;
    for (double q_ratio : ratios) {
      for (double alpha : config.alphas) {
        FederatedConfig fc;
        fc.train.model.variant = config.variant;
        fc.train.seed = config.init_seed;
        fc.round.participation = alpha;
        fc.round.quantization = config.quantization;
        fc.round.r = config.r;
        fc.round.q = config.fixed_q;
        if (q_ratio > 0.0) fc.round.q_ratio = q_ratio;
        fc.round.allow_insecure_projection = config.allow_insecure_projection;
        fc.protocol_seed = config.protocol_seed;
        FederatedTrainer trainer(ds, part, split, fc);
        double xi = 0.0;
        int uploads = 0;
        for (int t = 0; t < config.iterations; ++t) {
          for (int p : trainer.step()) {
            xi += trainer.last_uploads()[p].lpNorm<1>();
            ++uploads;
          }
        }
        CostSweepPoint pt;
        pt.users = users;
        pt.q = trainer.projection().q;
        pt.alpha = alpha;
        CostModelParams& cp = pt.params;
        cp.alpha = alpha;
        cp.parties = config.parties;
        cp.layers = fc.train.model.layers;
        cp.dim = fc.train.model.dim;
        cp.users = users;
        cp.q = pt.q;
        cp.iterations = config.iterations;
        cp.r = config.r;
        cp.quantized = config.quantization == Quantization::kTernary;
        cp.num_public =
            static_cast<std::int64_t>(flat_size(trainer.public_params()));
        cp.xi_l1 = uploads > 0 ? xi / uploads : 0.0;
        pt.predicted = predict_cost(cp);
        pt.measured = measure_cost(trainer.log(), false).bits;
        pt.measured_with_headers = measure_cost(trainer.log(), true).bits;
        points.push_back(pt);
      }
    }
  }
  return points;
}

void write_cost_sweep_csv(const std::vector<CostSweepPoint>& points,
                          std::ostream& out) {
  out << "users,q,alpha,phase,predicted_bits,measured_bits,ratio\n";
  for (const auto& pt : points) {
    auto row = [&](std::string_view name, double p, double m) {
      out << pt.users << ',' << pt.q << ',' << pt.alpha << ',' << name << ','
          << p << ',' << m << ',' << (p != 0.0 ? m / p : 0.0) << '\n';
    };
    for (Phase phase : {Phase::kDownload, Phase::kExchange, Phase::kUpload}) {
      row(phase_name(phase), pt.predicted.get(phase),
          pt.measured_with_headers.get(phase));
    }
    row("total", pt.predicted.total(), pt.measured_with_headers.total());
  }
}

}  // namespace vfgnn
