#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dadaquant/quantize.hpp"

using namespace dadaquant;

namespace {

// Independent code book for the 1-5-2 format: every finite value spanned by
// sign x exponent-field 0..30 x mantissa 0..3 (field 31 is reserved).
std::vector<double> fp8_codebook() {
  std::vector<double> vals;
  for (int s : {1, -1}) {
    for (int e = 0; e < 31; ++e) {
      for (int m = 0; m < 4; ++m) {
        const double v = (e == 0) ? s * (m / 4.0) * std::pow(2.0, -14)
                                  : s * (1 + m / 4.0) * std::pow(2.0, e - 15);
        vals.push_back(v);
      }
    }
  }
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

int mantissa_code(double v) {
  if (v == 0.0) return 0;
  const double a = std::fabs(v);
  if (a < std::pow(2.0, -14)) return static_cast<int>(std::llround(a * std::pow(2.0, 16)));
  const int e = static_cast<int>(std::floor(std::log2(a) + 1e-12));
  return static_cast<int>(std::llround((a / std::pow(2.0, e) - 1.0) * 4.0));
}

double fp8_oracle(double x) {
  static const std::vector<double> cb = fp8_codebook();
  double best = cb.front();
  double bestd = std::fabs(x - best);
  for (double v : cb) {
    const double d = std::fabs(x - v);
    if (d < bestd) {
      best = v;
      bestd = d;
    } else if (d == bestd && mantissa_code(v) % 2 == 0 && mantissa_code(best) % 2 != 0) {
      best = v;  // round-to-nearest-even on the mantissa code
    }
  }
  return best;
}

}  // namespace

TEST_CASE("fixed-point quantization at boundary magnitudes is deterministic") {
  RandomStream rng(7);
  const DenseVector p{0.5, 0.0, 0.0};
  const QuantizedUpdate u = quantize_fixed_point(p, 2, rng);
  CHECK(u.norm == 0.5f);
  CHECK(u.bins == std::vector<std::uint32_t>{2, 0, 0});
  CHECK(u.signs == std::vector<std::int8_t>{1, 1, 1});
  CHECK(dequantize(u) == DenseVector{0.5, 0.0, 0.0});
}

TEST_CASE("zero vector quantizes to the all-zero update") {
  RandomStream rng(7);
  for (std::uint32_t q : {1u, 2u, 64u}) {
    const QuantizedUpdate u = quantize_fixed_point(DenseVector{0.0, 0.0}, q, rng);
    CHECK(u.norm == 0.0f);
    CHECK(u.bins == std::vector<std::uint32_t>{0, 0});
    CHECK(dequantize(u) == DenseVector{0.0, 0.0});
  }
}

TEST_CASE("quantizer rejects bad inputs") {
  RandomStream rng(7);
  CHECK_THROWS_AS(quantize_fixed_point(DenseVector{1.0}, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(quantize_fixed_point(DenseVector{std::nan("")}, 2, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      quantize_fixed_point(DenseVector{std::numeric_limits<double>::infinity()}, 2, rng),
      std::invalid_argument);
}

TEST_CASE("dequantize evaluates sign * norm * bin / q") {
  QuantizedUpdate u;
  u.level = 4;
  u.norm = 1.0f;
  u.bins = {1, 3};
  u.signs = {1, -1};
  CHECK(dequantize(u) == DenseVector{0.25, -0.75});

  u.norm = 0.0f;
  u.bins = {0, 0};
  u.signs = {1, 1};
  CHECK(dequantize(u) == DenseVector{0.0, 0.0});

  u.norm = 1.0f;
  u.bins = {5, 0};
  CHECK_THROWS_AS(dequantize(u), std::invalid_argument);  // bin exceeds level
}

TEST_CASE("Monte Carlo unbiasedness on the spec vector") {
  const DenseVector p{0.6, -0.8};
  const std::uint32_t q = 2;
  const int n = 1'000'000;
  double sum[2] = {0, 0}, sumsq[2] = {0, 0};
  for (int it = 0; it < n; ++it) {
    RandomStream rng(1000 + it);
    const DenseVector d = dequantize(quantize_fixed_point(p, q, rng));
    for (int j = 0; j < 2; ++j) {
      sum[j] += d[j];
      sumsq[j] += d[j] * d[j];
    }
  }
  for (int j = 0; j < 2; ++j) {
    const double mean = sum[j] / n;
    const double var = sumsq[j] / n - mean * mean;
    const double se = std::sqrt(var / n);
    CHECK(std::fabs(mean - p[j]) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("unbiasedness holds for random vectors and levels") {
  RandomStream gen(42);
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t dim = 4 + gen.bounded(12);
    DenseVector p(dim);
    for (double& v : p) v = gen.uniform(-1.0, 1.0);
    const std::uint32_t q = 1 + static_cast<std::uint32_t>(gen.bounded(8));

    const int n = 100'000;
    std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0);
    RandomStream rng(900 + trial);
    for (int it = 0; it < n; ++it) {
      const DenseVector d = dequantize(quantize_fixed_point(p, q, rng));
      for (std::size_t j = 0; j < dim; ++j) {
        sum[j] += d[j];
        sumsq[j] += d[j] * d[j];
      }
    }
    for (std::size_t j = 0; j < dim; ++j) {
      const double mean = sum[j] / n;
      const double var = sumsq[j] / n - mean * mean;
      const double se = std::sqrt(var / n);
      CHECK(std::fabs(mean - p[j]) <= 4.0 * se + 1e-12);
    }
  }
}

TEST_CASE("dequantize-quantize is exact on integer normalized magnitudes") {
  RandomStream rng(3);
  // |p_i| * q / norm integral for every coordinate
  const DenseVector p{3.0, -4.0};  // norm 5
  const QuantizedUpdate u = quantize_fixed_point(p, 5, rng);
  CHECK(u.bins == std::vector<std::uint32_t>{3, 4});
  CHECK(dequantize(u) == p);

  const DenseVector unit{0.0, -2.5, 0.0};
  const QuantizedUpdate v = quantize_fixed_point(unit, 7, rng);
  CHECK(dequantize(v) == unit);
}

TEST_CASE("scalar quantization variance matches u*b") {
  // quantize the scalar 0.3 at half-range 1 by embedding it in a vector of
  // norm exactly 1; interval s = 1/2, b = 0.3, u = 0.2 -> variance 0.06
  const double pval = 0.3;
  const DenseVector p{pval, std::sqrt(1.0 - pval * pval)};
  const int n = 200'000;
  double sum = 0, sumsq = 0;
  RandomStream rng(11);
  for (int it = 0; it < n; ++it) {
    const DenseVector d = dequantize(quantize_fixed_point(p, 2, rng));
    sum += d[0];
    sumsq += d[0] * d[0];
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(var == doctest::Approx(0.06).epsilon(0.02));
}

TEST_CASE("accumulation variance closed form") {
  CHECK(accumulation_variance({{0.5, 0.5}, {2, 2}, 1.0}) ==
        doctest::Approx(0.020833333333333332).epsilon(1e-12));

  SUBCASE("uniform weights simplify to t^2 / (6 K q^2)") {
    for (std::uint32_t K : {2u, 5u, 9u}) {
      for (std::uint32_t q : {1u, 4u, 16u}) {
        VarianceSpec spec;
        spec.weights.assign(K, 1.0 / K);
        spec.levels.assign(K, q);
        spec.halfrange = 1.7;
        CHECK(accumulation_variance(spec) ==
              doctest::Approx(1.7 * 1.7 / (6.0 * K * q * q)).epsilon(1e-12));
      }
    }
  }

  SUBCASE("vanishes as the level grows") {
    double prev = 1e300;
    for (std::uint32_t q : {1u, 8u, 64u, 4096u}) {
      const double v = accumulation_variance({{1.0}, {q}, 1.0});
      CHECK(v < prev);
      prev = v;
    }
    CHECK(prev < 1e-6);
  }

  SUBCASE("rejects invalid specs") {
    CHECK_THROWS_AS(accumulation_variance({{0.5, 0.5}, {2, 0}, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(accumulation_variance({{0.5, 0.4}, {2, 2}, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(accumulation_variance({{0.5, 0.5}, {2}, 1.0}), std::invalid_argument);
  }
}

TEST_CASE("weighted accumulation variance matches Monte Carlo") {
  VarianceSpec spec{{0.5, 0.5}, {2, 2}, 1.0};
  const double predicted = accumulation_variance(spec);
  const double t = spec.halfrange;

  const int n = 400'000;
  RandomStream rng(21);
  double acc = 0.0;
  for (int it = 0; it < n; ++it) {
    double s = 0.0, pfull = 0.0;
    for (std::size_t i = 0; i < spec.weights.size(); ++i) {
      const double pi = rng.uniform(-t, t);
      const DenseVector vec{pi, std::sqrt(t * t - pi * pi)};
      const DenseVector d = dequantize(quantize_fixed_point(vec, spec.levels[i], rng));
      s += spec.weights[i] * d[0];
      pfull += spec.weights[i] * pi;
    }
    acc += (s - pfull) * (s - pfull);
  }
  CHECK(acc / n == doctest::Approx(predicted).epsilon(0.01));
}

TEST_CASE("fp8 rounding hits the frozen code points") {
  CHECK(fp8_round(0.0) == 0.0);
  CHECK(fp8_round(1.0) == 1.0);
  CHECK(fp8_round(0.3) == 0.3125);
  CHECK(fp8_round(0.1) == 0.09375);
  CHECK(fp8_round(-0.7) == -0.75);
  CHECK(fp8_round(0.28125) == 0.25);  // midpoint, ties to even
  CHECK(fp8_round(1e9) == 57344.0);   // saturates at the largest finite value
  CHECK(fp8_round(-1e9) == -57344.0);
  CHECK(fp8_round(std::pow(2.0, -16)) == std::pow(2.0, -16));  // smallest subnormal
  CHECK(fp8_round(std::pow(2.0, -17)) == 0.0);                 // midpoint below it
}

TEST_CASE("fp8 rounding agrees with exhaustive code book search") {
  RandomStream rng(5);
  for (int it = 0; it < 4000; ++it) {
    double x;
    switch (it % 4) {
      case 0: x = rng.uniform(-2.0, 2.0); break;
      case 1: x = rng.normal(0.0, 1e-4); break;
      case 2: x = rng.normal(0.0, 1000.0); break;
      default: x = rng.uniform(-1e6, 1e6); break;
    }
    CHECK(fp8_round(x) == fp8_oracle(x));
  }
}

TEST_CASE("fp8 rounding is idempotent") {
  RandomStream rng(6);
  for (int it = 0; it < 2000; ++it) {
    const double x = rng.normal(0.0, std::exp(rng.uniform(-12.0, 12.0)));
    const double once = fp8_round(x);
    CHECK(fp8_round(once) == once);
  }
  DenseVector p{0.3, -0.7, 5.5e4, 1e-9};
  CHECK(quantize_fp8(quantize_fp8(p)) == quantize_fp8(p));
}
