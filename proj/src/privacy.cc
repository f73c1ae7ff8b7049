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


#include "vfgnn/privacy.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace vfgnn {

bool satisfies_security_condition(int q, int n) { return 2 * q <= n + 1; }

ProjectionSpec make_projection(int q, int n, std::uint64_t seed,
                               bool allow_insecure) {
  if (q < 1 || n < 1) throw InvalidArgument("projection needs q, n >= 1");
  if (!allow_insecure && !satisfies_security_condition(q, n)) {
    throw InvalidArgument("projection q=" + std::to_string(q) +
                          " violates 2q <= n+1 for n=" + std::to_string(n));
  }
  ProjectionSpec spec;
  spec.q = q;
  spec.n = n;
  spec.seed = seed;
  spec.phi.resize(q, n);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(q));
  for (Eigen::Index i = 0; i < spec.phi.size(); ++i) {
    spec.phi.data()[i] = normal(rng);
  }
  return spec;
}

ProjectionSpec make_identity_projection(int n) {
  if (n < 1) throw InvalidArgument("projection needs n >= 1");
  ProjectionSpec spec;
  spec.q = spec.n = n;
  spec.identity = true;
  return spec;
}

Matrix project(const ProjectionSpec& spec, const Matrix& x) {
  if (x.rows() != spec.n) {
    throw InvalidArgument("project: expected " + std::to_string(spec.n) +
                          " rows, got " + std::to_string(x.rows()));
  }
  if (spec.identity) return x;
  return spec.phi * x;
}

Matrix reconstruct(const ProjectionSpec& spec, const Matrix& y) {
  if (y.rows() != spec.q) {
    throw InvalidArgument("reconstruct: expected " + std::to_string(spec.q) +
                          " rows, got " + std::to_string(y.rows()));
  }
  if (spec.identity) return y;
  return spec.phi.transpose() * y;
}

bool check_l_secure(const Matrix& phi, int removals, int trials, Rng& rng) {
  const int q = static_cast<int>(phi.rows());
  const int n = static_cast<int>(phi.cols());
  if (removals < 0 || removals > n - q) {
    throw InvalidArgument("l-secure check needs 0 <= l <= n - q");
  }
  std::vector<int> cols(n);
  for (int t = 0; t < std::max(trials, 1); ++t) {
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(cols.begin(), cols.end(), rng);
    Eigen::MatrixXd kept(q, n - removals);
    for (int j = 0; j < n - removals; ++j) kept.col(j) = phi.col(cols[j]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kept);
    lu.setThreshold(1e-10);
    if (lu.rank() < q) return false;
  }
  return true;
}

Vector clip(const Vector& x, const ClipSpec& spec) {
  if (!(spec.bound > 0.0)) throw InvalidArgument("clip bound must be > 0");
  return x.cwiseMax(-spec.bound).cwiseMin(spec.bound);
}

Vector QuantizedGradient::decode() const {
  Vector out = Vector::Zero(length);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out(indices[i]) = r * signs[i];
  }
  return out;
}

QuantizedGradient ternary_quantize(const Vector& x, double r, Rng& rng) {
  if (!(r > 0.0)) throw InvalidArgument("quantization bound r must be > 0");
  const double inf_norm = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  if (inf_norm > r) {
    throw InvalidArgument("ternary quantization needs ||x||_inf <= r (got " +
                          std::to_string(inf_norm) + " > " +
                          std::to_string(r) + "); clip first or raise r");
  }
  QuantizedGradient q;
  q.r = r;
  q.length = static_cast<std::uint32_t>(x.size());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = uniform(rng);
    if (u < std::abs(x(i)) / r) {
      q.indices.push_back(static_cast<std::uint32_t>(i));
      q.signs.push_back(x(i) > 0.0 ? 1 : -1);
    }
  }
  return q;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_quantized(const QuantizedGradient& q) {
  std::vector<std::uint8_t> out;
  out.reserve(kQuantizedHeaderBytes + kQuantizedEntryBytes * q.nonzeros());
  put_u32(out, q.length);
  put_u32(out, static_cast<std::uint32_t>(q.nonzeros()));
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(q.r)));
  for (std::size_t i = 0; i < q.nonzeros(); ++i) {
    put_u32(out, q.indices[i]);
    out.push_back(static_cast<std::uint8_t>(q.signs[i]));
  }
  return out;
}

QuantizedGradient decode_quantized(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kQuantizedHeaderBytes) {
    throw ParseError("quantized gradient: truncated header");
  }
  QuantizedGradient q;
  q.length = get_u32(bytes, 0);
  const std::uint32_t count = get_u32(bytes, 4);
  q.r = std::bit_cast<float>(get_u32(bytes, 8));
  if (bytes.size() != kQuantizedHeaderBytes + kQuantizedEntryBytes * count) {
    throw ParseError("quantized gradient: payload size does not match count");
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = kQuantizedHeaderBytes + kQuantizedEntryBytes * i;
    const std::uint32_t index = get_u32(bytes, at);
    const auto sign = static_cast<std::int8_t>(bytes[at + 4]);
    if (index >= q.length || (!q.indices.empty() && index <= q.indices.back())) {
      throw ParseError("quantized gradient: indices must be increasing and < d");
    }
    if (sign != 1 && sign != -1) {
      throw ParseError("quantized gradient: sign byte must be +1 or -1");
    }
    q.indices.push_back(index);
    q.signs.push_back(sign);
  }
  return q;
}

double dp_delta_bound(double r) {
  if (!(r > 0.0)) throw InvalidArgument("r must be > 0");
  return 1.0 / r;
}

double exact_tv(double x, double y, double r) {
  if (!(r > 0.0) || std::abs(x) > r || std::abs(y) > r) {
    throw InvalidArgument("exact_tv needs r > 0 and |x|, |y| <= r");
  }
  auto probs = [r](double v) {
    return std::array<double, 3>{std::max(v, 0.0) / r, 1.0 - std::abs(v) / r,
                                 std::max(-v, 0.0) / r};
  };
  const auto px = probs(x), py = probs(y);
  double tv = 0.0;
  for (int i = 0; i < 3; ++i) tv += std::abs(px[i] - py[i]);
  return 0.5 * tv;
}

Vector laplace_perturb(const Vector& x, double epsilon, double sensitivity,
                       Rng& rng) {
  if (!(epsilon > 0.0) || !(sensitivity > 0.0)) {
    throw InvalidArgument("Laplace mechanism needs epsilon, sensitivity > 0");
  }
  const double scale = sensitivity / epsilon;
  std::exponential_distribution<double> expo(1.0);
  Vector out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) += scale * (expo(rng) - expo(rng));
  }
  return out;
}

}  // namespace vfgnn
