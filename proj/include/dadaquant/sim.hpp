#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dadaquant/codec.hpp"
#include "dadaquant/controller.hpp"
#include "dadaquant/quantize.hpp"
#include "dadaquant/synthetic.hpp"

namespace dadaquant {

enum class Compressor { None, Qsgd, FedPaq, FxpqGzip, Fp8 };

enum class Controller { None, Static, Time, Client, Doubly, AdaQuantFl };

const char* to_string(Compressor c);
const char* to_string(Controller c);
bool compressor_uses_levels(Compressor c);

struct TrainingConfig {
  std::uint32_t rounds = 500;
  std::uint32_t cohort = 10;  // K; ignored by the full-participation controller
  std::uint32_t epochs = 20;
  std::uint32_t batch = 10;
  double lr = 0.01;
  double mu = 1.0;  // proximal coefficient; 0 disables the anchor term
  Compressor compressor = Compressor::None;
  Controller controller = Controller::None;
  std::uint32_t q = 8;  // static level, and the base level for Client
  ControllerParams ctrl{};
  bool heterogeneity = true;
  std::uint32_t eval_interval = 10;
  std::uint64_t seed = 1;

  void validate(std::size_t n_clients) const;
};

struct RoundLog {
  std::uint32_t round = 0;
  std::vector<std::uint32_t> clients;  // sampled ids, ascending
  std::vector<std::uint32_t> levels;   // per client; 0 when the compressor is unleveled
  std::vector<std::uint64_t> bytes;    // per client: encoded blob bytes + 4 for the loss scalar
  std::uint64_t total_bytes = 0;
  double ghat = 0.0;     // cohort-weighted pre-training loss
  double gsmooth = 0.0;  // running average of ghat
  double test_accuracy = -1.0;  // < 0 when this round was not evaluated
  double test_loss = -1.0;

  bool evaluated() const { return test_accuracy >= 0.0; }
};

/// K distinct ids drawn uniformly without replacement, returned ascending.
std::vector<std::uint32_t> sample_cohort(RandomStream& rng, std::uint32_t n, std::uint32_t k);

/// Per-cohort-member epoch counts: floor(0.9 K) members, chosen uniformly,
/// get a count drawn uniformly from {1, ..., epochs}; the rest keep epochs.
std::vector<std::uint32_t> heterogeneous_epochs(RandomStream& rng, std::size_t cohort_size,
                                                std::uint32_t epochs);

struct LocalResult {
  DenseVector params;
  double loss_before = 0.0;  // loss over the full training split, before training
};

/// Mini-batch SGD on the local objective plus the proximal anchor
/// (mu/2)||p - p0||^2. Batches are reshuffled every epoch from rng.
LocalResult client_local_update(const DenseVector& p0, const ClientData& data,
                                std::uint32_t epochs, double lr, double mu, std::uint32_t batch,
                                RandomStream& rng);

/// p0 + sum_k w_k * dequantize(u_k), in the order given (callers pass
/// ascending client id so accumulation is deterministic).
DenseVector accumulate_updates(const DenseVector& p0, std::span<const double> weights,
                               std::span<const QuantizedUpdate> updates);

/// The full training loop: sample, schedule levels, train locally, quantize
/// and encode deltas (counting bytes), decode and accumulate, track losses,
/// evaluate periodically. Deterministic given the config seed.
std::vector<RoundLog> run_training(const TrainingConfig& cfg, const FederatedDataset& ds);

}  // namespace dadaquant
