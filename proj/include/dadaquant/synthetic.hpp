#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dadaquant/mlr.hpp"
#include "dadaquant/quantize.hpp"

namespace dadaquant {

struct ClientData {
  std::vector<float> features;       // size() x kFeatures, row-major
  std::vector<std::uint8_t> labels;  // class ids in [0, kClasses)
  std::uint32_t train_count = 0;     // first train_count samples form the training split

  std::size_t size() const { return labels.size(); }
  std::size_t test_count() const { return labels.size() - train_count; }
  const float* train_features() const { return features.data(); }
  const std::uint8_t* train_labels() const { return labels.data(); }
  const float* test_features() const { return features.data() + std::size_t{train_count} * mlr::kFeatures; }
  const std::uint8_t* test_labels() const { return labels.data() + train_count; }
};

struct FederatedDataset {
  std::vector<ClientData> clients;
  double alpha = 1.0;
  double beta = 1.0;
  std::uint64_t seed = 1;
  // Populated when alpha == 0: all clients then label with this one model,
  // flattened like an mlr parameter vector.
  DenseVector shared_model;

  std::size_t total_samples() const;
  std::size_t total_test_samples() const;
};

// Non-IID synthetic generator. Per client k: a labeling model with entries
// N(u_k, 1) for u_k ~ N(0, alpha), a feature mean with entries N(B_k, 1)
// for B_k ~ N(0, beta), and features x_j ~ N(v_j, j^-1.2) (1-based j).
// Labels are the argmax of the client's own model, noise-free. alpha = 0
// (resp. beta = 0) collapses all clients onto one shared model (feature
// mean): zero variation means a single draw, not N independent ones.
//
// Per-client sample counts are count_offset + round(lognormal(mu, sigma)),
// a heavy-tailed law; the calibration constants are exposed here.
struct SyntheticConfig {
  double alpha = 1.0;   // variance of the per-client model mean
  double beta = 1.0;    // variance of the per-client feature mean
  std::uint32_t clients = 30;
  std::uint64_t seed = 1;
  double count_log_mean = 4.0;
  double count_log_sigma = 1.5;
  std::uint32_t count_offset = 45;
  double train_fraction = 0.8;
};

FederatedDataset generate_synthetic(const SyntheticConfig& cfg);

void save_dataset(const FederatedDataset& ds, const std::string& path);
FederatedDataset load_dataset(const std::string& path);

/// Human-readable per-dataset statistics (counts, spread, class histogram).
std::string dataset_stats(const FederatedDataset& ds);

struct EvalResult {
  double accuracy = 0.0;  // sample-weighted top-1 over all test splits
  double loss = 0.0;      // mean cross-entropy over all test samples
};

EvalResult evaluate(const DenseVector& params, const FederatedDataset& ds);

}  // namespace dadaquant
