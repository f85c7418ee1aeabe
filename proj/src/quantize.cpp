#include "dadaquant/quantize.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dadaquant {

namespace {

void require_finite(const DenseVector& p, const char* who) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i])) {
      throw std::invalid_argument(std::string(who) + ": non-finite input at coordinate " +
                                  std::to_string(i));
    }
  }
}

}  // namespace

double l2_norm(const DenseVector& p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return std::sqrt(s);
}

QuantizedUpdate quantize_fixed_point(const DenseVector& p, std::uint32_t q,
                                     RandomStream& rng) {
  if (q == 0) throw std::invalid_argument("quantize_fixed_point: level q must be >= 1");
  require_finite(p, "quantize_fixed_point");

  QuantizedUpdate u;
  u.level = q;
  u.norm = static_cast<float>(l2_norm(p));
  u.bins.assign(p.size(), 0);
  u.signs.assign(p.size(), 1);
  if (u.norm == 0.0f) return u;

  const double norm = static_cast<double>(u.norm);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = std::fabs(p[i]) / norm * q;
    const double fl = std::floor(x);
    // one draw per coordinate, unconditionally
    std::uint32_t bin = static_cast<std::uint32_t>(fl) + (rng.uniform() < x - fl ? 1u : 0u);
    if (bin > q) bin = q;  // |p_i|/norm can exceed 1 by one binary32 ulp
    u.bins[i] = bin;
    if (bin > 0 && p[i] < 0.0) u.signs[i] = -1;
  }
  return u;
}

DenseVector dequantize(const QuantizedUpdate& u) {
  if (u.level == 0) throw std::invalid_argument("dequantize: level must be >= 1");
  if (u.signs.size() != u.bins.size()) {
    throw std::invalid_argument("dequantize: sign/bin size mismatch");
  }
  if (!(u.norm >= 0.0f) || !std::isfinite(u.norm)) {
    throw std::invalid_argument("dequantize: norm must be finite and nonnegative");
  }
  DenseVector out(u.bins.size());
  const double scale = static_cast<double>(u.norm) / static_cast<double>(u.level);
  for (std::size_t i = 0; i < u.bins.size(); ++i) {
    if (u.bins[i] > u.level) {
      throw std::invalid_argument("dequantize: corrupt update, bin " +
                                  std::to_string(u.bins[i]) + " exceeds level " +
                                  std::to_string(u.level));
    }
    if (u.norm == 0.0f && u.bins[i] != 0) {
      throw std::invalid_argument("dequantize: corrupt update, nonzero bin with zero norm");
    }
    out[i] = static_cast<double>(u.signs[i]) * scale * static_cast<double>(u.bins[i]);
  }
  return out;
}

double fp8_round(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("fp8_round: non-finite input");
  if (x == 0.0) return x;
  const double sign = x < 0.0 ? -1.0 : 1.0;
  const double a = std::fabs(x);
  double r;
  if (a < 0x1p-14) {
    // subnormal grid: multiples of 2^-16
    r = std::nearbyint(a * 0x1p16) * 0x1p-16;
  } else {
    int e;
    std::frexp(a, &e);
    e -= 1;  // a = f * 2^e with f in [1, 2)
    const double step = std::ldexp(1.0, e - 2);  // 2 mantissa bits
    r = std::nearbyint(a / step) * step;
  }
  // exponent field 31 is reserved, so the largest finite value is
  // 1.75 * 2^15; anything beyond saturates
  if (r > 57344.0) r = 57344.0;
  return sign * r;
}

DenseVector quantize_fp8(const DenseVector& p) {
  require_finite(p, "quantize_fp8");
  DenseVector out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = fp8_round(p[i]);
  return out;
}

double accumulation_variance(const VarianceSpec& spec) {
  if (spec.weights.size() != spec.levels.size()) {
    throw std::invalid_argument("accumulation_variance: weights/levels size mismatch");
  }
  if (spec.weights.empty()) throw std::invalid_argument("accumulation_variance: empty spec");
  if (!(spec.halfrange > 0.0)) {
    throw std::invalid_argument("accumulation_variance: halfrange must be positive");
  }
  double wsum = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.weights.size(); ++i) {
    const double w = spec.weights[i];
    if (!(w > 0.0)) throw std::invalid_argument("accumulation_variance: weights must be positive");
    if (spec.levels[i] == 0) {
      throw std::invalid_argument("accumulation_variance: level must be >= 1");
    }
    wsum += w;
    const double q = static_cast<double>(spec.levels[i]);
    acc += w * w / (q * q);
  }
  if (std::fabs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument("accumulation_variance: weights must sum to 1");
  }
  return spec.halfrange * spec.halfrange / 6.0 * acc;
}

}  // namespace dadaquant
