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


// Privacy mechanisms applied to messages leaving a party: Gaussian random
// projection of neighbourhood aggregates, ternary stochastic quantization of
// public-parameter gradients, clipping, and a Laplace alternative.

#ifndef VFGNN_PRIVACY_H_
#define VFGNN_PRIVACY_H_

#include <cstdint>
#include <span>
#include <vector>

#include "vfgnn/common.h"

namespace vfgnn {

// Phi is q x n with i.i.d. N(0, 1/q) entries, regenerated from `seed`. In
// identity mode Phi = I and q = n, which transports aggregates exactly.
struct ProjectionSpec {
  int q = 0;
  int n = 0;
  std::uint64_t seed = 0;
  bool identity = false;
  Matrix phi;
};

// 2q <= n + 1: an eavesdropper cannot solve for the original rows.
bool satisfies_security_condition(int q, int n);

// Throws InvalidArgument when the security condition fails unless
// `allow_insecure` is set.
ProjectionSpec make_projection(int q, int n, std::uint64_t seed,
                               bool allow_insecure = false);
ProjectionSpec make_identity_projection(int n);

Matrix project(const ProjectionSpec& spec, const Matrix& x);      // Phi X
Matrix reconstruct(const ProjectionSpec& spec, const Matrix& y);  // Phi^T Y

// True iff every sampled removal of `removals` columns leaves Phi with full
// row rank (pivoted LU, relative threshold 1e-10).
bool check_l_secure(const Matrix& phi, int removals, int trials, Rng& rng);

struct ClipSpec {
  double bound = 0.5;
};

Vector clip(const Vector& x, const ClipSpec& spec);

// Sparse ternary vector: entry indices[i] equals r * signs[i], all others 0.
struct QuantizedGradient {
  double r = 1.0;
  std::uint32_t length = 0;
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<std::int8_t> signs;      // +1 or -1

  std::size_t nonzeros() const { return indices.size(); }
  Vector decode() const;
};

// q_i = r sign(x_i) b_i with b_i ~ Bernoulli(|x_i| / r). Requires
// ||x||_inf <= r.
QuantizedGradient ternary_quantize(const Vector& x, double r, Rng& rng);

// Little-endian wire layout: {length u32, count u32, r f32} followed by
// count x {index u32, sign i8}.
constexpr std::size_t kQuantizedHeaderBytes = 12;
constexpr std::size_t kQuantizedEntryBytes = 5;
std::vector<std::uint8_t> encode_quantized(const QuantizedGradient& q);
QuantizedGradient decode_quantized(std::span<const std::uint8_t> bytes);

// Delta of the (0, delta)-DP guarantee for neighbours with |x - y| <= 1.
double dp_delta_bound(double r);
// Total-variation distance between the output distributions at x and y.
double exact_tv(double x, double y, double r);

// Adds i.i.d. Laplace(sensitivity / epsilon) noise to every coordinate.
Vector laplace_perturb(const Vector& x, double epsilon, double sensitivity,
                       Rng& rng);

}  // namespace vfgnn

#endif  // VFGNN_PRIVACY_H_
