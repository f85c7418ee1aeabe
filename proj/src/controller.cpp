#include "dadaquant/controller.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dadaquant {

void ControllerParams::validate() const {
  if (!(psi >= 0.0 && psi < 1.0)) {
    throw std::invalid_argument("controller: psi must lie in [0, 1)");
  }
  if (phi == 0) throw std::invalid_argument("controller: phi must be >= 1");
  if (q_min == 0) throw std::invalid_argument("controller: q_min must be >= 1");
  if (q_max < q_min) throw std::invalid_argument("controller: q_max must be >= q_min");
}

ControllerState::ControllerState(ControllerParams params) : params_(params) {
  params_.validate();
}

std::uint32_t ControllerState::next_level() {
  if (levels_.size() != smoothed_.size()) {
    throw std::logic_error("controller: next_level called twice within a round");
  }
  const std::size_t t = levels_.size();
  std::uint32_t q;
  if (t == 0) {
    q = params_.q_min;
  } else {
    q = levels_[t - 1];
    if (t > params_.phi && smoothed_[t - 1] >= smoothed_[t - params_.phi] &&
        levels_[t - 1] == levels_[t - params_.phi] && 2 * q <= params_.q_max) {
      q = 2 * q;
    }
  }
  levels_.push_back(q);
  return q;
}

double ControllerState::update_running_loss(double loss) {
  if (std::isnan(loss)) throw std::invalid_argument("controller: loss is NaN");
  if (smoothed_.size() + 1 != levels_.size()) {
    throw std::logic_error("controller: update_running_loss out of order");
  }
  const double smoothed =
      smoothed_.empty() ? loss : params_.psi * smoothed_.back() + (1.0 - params_.psi) * loss;
  smoothed_.push_back(smoothed);
  return smoothed;
}

std::uint32_t ControllerState::current_level() const {
  if (levels_.empty()) throw std::logic_error("controller: no level chosen yet");
  return levels_.back();
}

double ControllerState::running_loss() const {
  if (smoothed_.empty()) throw std::logic_error("controller: no loss recorded yet");
  return smoothed_.back();
}

CohortWeights CohortWeights::from_sizes(std::span<const std::uint64_t> sizes) {
  if (sizes.empty()) throw std::invalid_argument("cohort weights: empty cohort");
  double total = 0.0;
  for (std::uint64_t s : sizes) {
    if (s == 0) throw std::invalid_argument("cohort weights: client with no data");
    total += static_cast<double>(s);
  }
  CohortWeights w;
  w.weights.reserve(sizes.size());
  for (std::uint64_t s : sizes) w.weights.push_back(static_cast<double>(s) / total);
  return w;
}

void CohortWeights::validate() const {
  if (weights.empty()) throw std::invalid_argument("cohort weights: empty cohort");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("cohort weights: weights must be positive");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("cohort weights: weights must sum to 1, got " +
                                std::to_string(sum));
  }
}

std::vector<double> allocate_client_levels_real(const CohortWeights& w, std::uint32_t q) {
  w.validate();
  if (q == 0) throw std::invalid_argument("allocate_client_levels: q must be >= 1");
  double a = 0.0;
  double b = 0.0;
  for (double wi : w.weights) {
    a += std::cbrt(wi * wi);
    b += wi * wi;
  }
  b /= static_cast<double>(q) * static_cast<double>(q);
  const double scale = std::sqrt(a / b);
  std::vector<double> out;
  out.reserve(w.weights.size());
  for (double wi : w.weights) out.push_back(scale * std::cbrt(wi * wi));
  return out;
}

std::vector<std::uint32_t> allocate_client_levels(const CohortWeights& w, std::uint32_t q) {
  const std::vector<double> real = allocate_client_levels_real(w, q);
  std::vector<std::uint32_t> out;
  out.reserve(real.size());
  for (double r : real) {
    const double rounded = std::round(r);
    out.push_back(rounded < 1.0 ? 1u : static_cast<std::uint32_t>(rounded));
  }
  return out;
}

}  // namespace dadaquant
