#pragma once

#include <cstdint>
#include <vector>

#include "dadaquant/rng.hpp"

namespace dadaquant {

/// Flat real-valued parameter or update vector.
using DenseVector = std::vector<double>;

/// Lossy fixed-point representation of a vector: per-coordinate sign and
/// bin index in [0, level], plus the source L2 norm. The norm is held at
/// binary32 precision because that is what the wire format carries.
/// Canonical form: sign is +1 wherever bin == 0.
struct QuantizedUpdate {
  std::uint32_t level = 1;
  float norm = 0.0f;
  std::vector<std::uint32_t> bins;
  std::vector<std::int8_t> signs;

  std::size_t dim() const { return bins.size(); }
  bool operator==(const QuantizedUpdate&) const = default;
};

/// Inputs for the closed-form expected accumulation variance of a weighted
/// sum of independently quantized values drawn uniformly from [-t, t].
struct VarianceSpec {
  std::vector<double> weights;         // positive, sum to 1
  std::vector<std::uint32_t> levels;   // one positive level per weight
  double halfrange = 1.0;              // t
};

double l2_norm(const DenseVector& p);

/// Stochastic fixed-point quantization of p into q bins of [0, 1] after
/// L2 normalization. Unbiased: E[dequantize(result)] = p over the random
/// stream. A zero-norm input yields all-zero bins rather than an error, so
/// a converged client costs near-zero uplink.
QuantizedUpdate quantize_fixed_point(const DenseVector& p, std::uint32_t q,
                                     RandomStream& rng);

/// Inverse of the lossy stage: sign * norm * bin / level per coordinate.
DenseVector dequantize(const QuantizedUpdate& u);

/// Round a value to the nearest member of the 8-bit floating-point code
/// book (1 sign, 5 exponent, 2 mantissa bits; bias 15; subnormals;
/// round-to-nearest-even; saturating at the largest finite magnitude).
double fp8_round(double x);

/// Coordinate-wise fp8_round. Payload accounting is one byte per coordinate.
DenseVector quantize_fp8(const DenseVector& p);

/// Closed form (t^2/6) * sum_i w_i^2 / q_i^2.
double accumulation_variance(const VarianceSpec& spec);

}  // namespace dadaquant
