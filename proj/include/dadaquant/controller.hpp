#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dadaquant {

struct ControllerParams {
  double psi = 0.9;          // smoothing factor of the running-average loss
  std::uint32_t phi = 50;    // rounds between level comparisons
  std::uint32_t q_min = 1;
  std::uint32_t q_max = 64;

  void validate() const;
};

// Time-adaptive level schedule driven by a running-average loss. Levels
// start at q_min, double when the smoothed loss has not improved over the
// last phi rounds (and the level has been stable that long), and never
// exceed q_max. The schedule is monotone by construction.
//
// The full-participation baseline controller is this same rule fed with the
// exact global loss; the simulator selects the loss source.
class ControllerState {
 public:
  explicit ControllerState(ControllerParams params);

  /// Chooses the level for round t (t = number of levels chosen so far).
  /// Must be called before update_running_loss within a round.
  std::uint32_t next_level();

  /// Records the cohort loss for the current round and returns the updated
  /// running average. Rejects NaN.
  double update_running_loss(double loss);

  std::uint32_t round() const { return static_cast<std::uint32_t>(levels_.size()); }
  std::uint32_t current_level() const;
  double running_loss() const;
  const std::vector<double>& loss_history() const { return smoothed_; }
  const std::vector<std::uint32_t>& level_history() const { return levels_; }
  const ControllerParams& params() const { return params_; }

 private:
  ControllerParams params_;
  std::vector<double> smoothed_;
  std::vector<std::uint32_t> levels_;
};

/// Accumulation weights for a sampled cohort, renormalized to sum to 1.
struct CohortWeights {
  std::vector<double> weights;

  static CohortWeights from_sizes(std::span<const std::uint64_t> sizes);
  void validate() const;
};

/// Real-valued minimizer of the cohort level sum at fixed expected
/// accumulation variance: q_i = sqrt(a/b) * w_i^(2/3) with
/// a = sum_j w_j^(2/3) and b = sum_j w_j^2 / q^2.
std::vector<double> allocate_client_levels_real(const CohortWeights& w, std::uint32_t q);

/// Integer allocation max(1, round(.)) of the real-valued solution.
std::vector<std::uint32_t> allocate_client_levels(const CohortWeights& w, std::uint32_t q);

}  // namespace dadaquant
