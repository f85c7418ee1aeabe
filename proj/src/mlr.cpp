#include "dadaquant/mlr.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dadaquant::mlr {

namespace {

void require_params(const DenseVector& params) {
  if (params.size() != kParams) {
    throw std::invalid_argument("mlr: expected " + std::to_string(kParams) + " parameters, got " +
                                std::to_string(params.size()));
  }
}

// logits, stable log-sum-exp and per-class probabilities for one sample
struct Activations {
  double z[kClasses];
  double prob[kClasses];
  double logsum;
};

inline void forward(const DenseVector& p, const float* x, Activations& act) {
  for (std::size_t c = 0; c < kClasses; ++c) {
    double z = p[kClasses * kFeatures + c];
    const double* w = p.data() + c * kFeatures;
    for (std::size_t j = 0; j < kFeatures; ++j) z += w[j] * static_cast<double>(x[j]);
    act.z[c] = z;
  }
  double zmax = act.z[0];
  for (std::size_t c = 1; c < kClasses; ++c) zmax = std::max(zmax, act.z[c]);
  double sum = 0.0;
  for (std::size_t c = 0; c < kClasses; ++c) {
    act.prob[c] = std::exp(act.z[c] - zmax);
    sum += act.prob[c];
  }
  for (std::size_t c = 0; c < kClasses; ++c) act.prob[c] /= sum;
  act.logsum = zmax + std::log(sum);
}

}  // namespace

double loss(const DenseVector& params, const float* X, const std::uint8_t* y, std::size_t n) {
  require_params(params);
  if (n == 0) throw std::invalid_argument("mlr::loss: empty batch");
  Activations act;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    forward(params, X + i * kFeatures, act);
    total += act.logsum - act.z[y[i]];
  }
  return total / static_cast<double>(n);
}

double loss_grad(const DenseVector& params, const float* X, const std::uint8_t* y,
                 std::span<const std::uint32_t> idx, std::span<double> grad) {
  require_params(params);
  if (idx.empty()) throw std::invalid_argument("mlr::loss_grad: empty batch");
  if (grad.size() != kParams) throw std::invalid_argument("mlr::loss_grad: bad gradient size");
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  Activations act;
  double total = 0.0;
  for (std::uint32_t i : idx) {
    const float* x = X + static_cast<std::size_t>(i) * kFeatures;
    const std::uint8_t label = y[i];
    forward(params, x, act);
    total += act.logsum - act.z[label];
    for (std::size_t c = 0; c < kClasses; ++c) {
      const double g = (act.prob[c] - (c == label ? 1.0 : 0.0)) * inv_n;
      double* gw = grad.data() + c * kFeatures;
      for (std::size_t j = 0; j < kFeatures; ++j) gw[j] += g * static_cast<double>(x[j]);
      grad[kClasses * kFeatures + c] += g;
    }
  }
  return total * inv_n;
}

double loss_grad(const DenseVector& params, const float* X, const std::uint8_t* y, std::size_t n,
                 std::span<double> grad) {
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  return loss_grad(params, X, y, idx, grad);
}

std::size_t correct_count(const DenseVector& params, const float* X, const std::uint8_t* y,
                          std::size_t n) {
  require_params(params);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = X + i * kFeatures;
    double best = -1e300;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < kClasses; ++c) {
      double z = params[kClasses * kFeatures + c];
      const double* w = params.data() + c * kFeatures;
      for (std::size_t j = 0; j < kFeatures; ++j) z += w[j] * static_cast<double>(x[j]);
      if (z > best) {
        best = z;
        arg = c;
      }
    }
    if (arg == y[i]) ++correct;
  }
  return correct;
}

}  // namespace dadaquant::mlr
