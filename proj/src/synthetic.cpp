#include "dadaquant/synthetic.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dadaquant/rng.hpp"

namespace dadaquant {

namespace {

constexpr std::uint64_t kSaltCounts = 0xC1;
constexpr std::uint64_t kSaltModel = 0xC2;
constexpr std::uint64_t kSaltMean = 0xC3;
constexpr std::uint64_t kSaltSamples = 0xC4;
constexpr std::uint64_t kSharedClient = 0xFFFFFFFFull;

struct GeneratingModel {
  double w[mlr::kClasses][mlr::kFeatures];
  double b[mlr::kClasses];
};

GeneratingModel draw_model(RandomStream& rng, double mean) {
  GeneratingModel m;
  for (auto& row : m.w) {
    for (double& v : row) v = rng.normal(mean, 1.0);
  }
  for (double& v : m.b) v = rng.normal(mean, 1.0);
  return m;
}

std::uint8_t label_of(const GeneratingModel& m, const float* x) {
  double best = -1e300;
  std::uint8_t arg = 0;
  for (std::size_t c = 0; c < mlr::kClasses; ++c) {
    double z = m.b[c];
    for (std::size_t j = 0; j < mlr::kFeatures; ++j) z += m.w[c][j] * static_cast<double>(x[j]);
    if (z > best) {
      best = z;
      arg = static_cast<std::uint8_t>(c);
    }
  }
  return arg;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("dataset file: unexpected end of file");
}

constexpr char kMagic[4] = {'D', 'Q', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::size_t FederatedDataset::total_samples() const {
  std::size_t n = 0;
  for (const auto& c : clients) n += c.size();
  return n;
}

std::size_t FederatedDataset::total_test_samples() const {
  std::size_t n = 0;
  for (const auto& c : clients) n += c.test_count();
  return n;
}

FederatedDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.alpha < 0.0 || cfg.beta < 0.0) {
    throw std::invalid_argument("generate_synthetic: alpha and beta must be >= 0");
  }
  if (cfg.clients == 0) throw std::invalid_argument("generate_synthetic: need at least 1 client");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw std::invalid_argument("generate_synthetic: train_fraction must lie in (0, 1)");
  }

  FederatedDataset ds;
  ds.alpha = cfg.alpha;
  ds.beta = cfg.beta;
  ds.seed = cfg.seed;
  ds.clients.resize(cfg.clients);

  GeneratingModel shared_model{};
  std::vector<double> shared_mean;
  if (cfg.alpha == 0.0) {
    auto rng = RandomStream::derive(cfg.seed, {kSaltModel, kSharedClient});
    shared_model = draw_model(rng, 0.0);
    ds.shared_model.reserve(mlr::kParams);
    for (const auto& row : shared_model.w) ds.shared_model.insert(ds.shared_model.end(), row, row + mlr::kFeatures);
    ds.shared_model.insert(ds.shared_model.end(), shared_model.b, shared_model.b + mlr::kClasses);
  }
  if (cfg.beta == 0.0) {
    auto rng = RandomStream::derive(cfg.seed, {kSaltMean, kSharedClient});
    shared_mean.resize(mlr::kFeatures);
    for (double& v : shared_mean) v = rng.normal(0.0, 1.0);
  }

  // feature covariance is diagonal with sigma_j^2 = j^-1.2, 1-based j
  double feat_sigma[mlr::kFeatures];
  for (std::size_t j = 0; j < mlr::kFeatures; ++j) {
    feat_sigma[j] = std::pow(static_cast<double>(j + 1), -0.6);
  }

  for (std::uint32_t k = 0; k < cfg.clients; ++k) {
    ClientData& client = ds.clients[k];

    auto count_rng = RandomStream::derive(cfg.seed, {kSaltCounts, k});
    const double draw = std::exp(count_rng.normal(cfg.count_log_mean, cfg.count_log_sigma));
    const std::uint64_t m = cfg.count_offset + static_cast<std::uint64_t>(std::llround(draw));

    GeneratingModel model;
    if (cfg.alpha == 0.0) {
      model = shared_model;
    } else {
      auto model_rng = RandomStream::derive(cfg.seed, {kSaltModel, k});
      const double u = model_rng.normal(0.0, std::sqrt(cfg.alpha));
      model = draw_model(model_rng, u);
    }

    std::vector<double> mean(mlr::kFeatures);
    if (cfg.beta == 0.0) {
      mean = shared_mean;
    } else {
      auto mean_rng = RandomStream::derive(cfg.seed, {kSaltMean, k});
      const double b = mean_rng.normal(0.0, std::sqrt(cfg.beta));
      for (double& v : mean) v = mean_rng.normal(b, 1.0);
    }

    auto sample_rng = RandomStream::derive(cfg.seed, {kSaltSamples, k});
    client.features.resize(m * mlr::kFeatures);
    client.labels.resize(m);
    for (std::uint64_t i = 0; i < m; ++i) {
      float* x = client.features.data() + i * mlr::kFeatures;
      for (std::size_t j = 0; j < mlr::kFeatures; ++j) {
        x[j] = static_cast<float>(sample_rng.normal(mean[j], feat_sigma[j]));
      }
      client.labels[i] = label_of(model, x);
    }
    client.train_count = static_cast<std::uint32_t>(std::llround(cfg.train_fraction * static_cast<double>(m)));
  }
  return ds;
}

void save_dataset(const FederatedDataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open dataset file for writing: " + path);
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(ds.clients.size()));
  write_pod(os, static_cast<std::uint32_t>(mlr::kFeatures));
  write_pod(os, static_cast<std::uint32_t>(mlr::kClasses));
  write_pod(os, ds.alpha);
  write_pod(os, ds.beta);
  write_pod(os, ds.seed);
  write_pod(os, static_cast<std::uint32_t>(ds.shared_model.size()));
  for (double v : ds.shared_model) write_pod(os, v);
  for (const auto& c : ds.clients) {
    write_pod(os, static_cast<std::uint32_t>(c.size()));
    write_pod(os, c.train_count);
  }
  for (const auto& c : ds.clients) {
    os.write(reinterpret_cast<const char*>(c.features.data()),
             static_cast<std::streamsize>(c.features.size() * sizeof(float)));
    os.write(reinterpret_cast<const char*>(c.labels.data()),
             static_cast<std::streamsize>(c.labels.size()));
  }
  if (!os) throw std::runtime_error("failed writing dataset file: " + path);
}

FederatedDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open dataset file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a dataset file: " + path);
  }
  std::uint32_t version, n, feat, classes;
  read_pod(is, version);
  if (version != kVersion) throw std::runtime_error("unsupported dataset version");
  read_pod(is, n);
  read_pod(is, feat);
  read_pod(is, classes);
  if (feat != mlr::kFeatures || classes != mlr::kClasses) {
    throw std::runtime_error("dataset dimensions do not match the model");
  }
  FederatedDataset ds;
  read_pod(is, ds.alpha);
  read_pod(is, ds.beta);
  read_pod(is, ds.seed);
  std::uint32_t shared_count;
  read_pod(is, shared_count);
  ds.shared_model.resize(shared_count);
  for (double& v : ds.shared_model) read_pod(is, v);
  ds.clients.resize(n);
  for (auto& c : ds.clients) {
    std::uint32_t m;
    read_pod(is, m);
    read_pod(is, c.train_count);
    if (m == 0 || c.train_count == 0 || c.train_count >= m) {
      throw std::runtime_error("dataset file: corrupt per-client counts");
    }
    c.features.resize(std::size_t{m} * mlr::kFeatures);
    c.labels.resize(m);
  }
  for (auto& c : ds.clients) {
    is.read(reinterpret_cast<char*>(c.features.data()),
            static_cast<std::streamsize>(c.features.size() * sizeof(float)));
    is.read(reinterpret_cast<char*>(c.labels.data()),
            static_cast<std::streamsize>(c.labels.size()));
    if (!is) throw std::runtime_error("dataset file: unexpected end of file");
    for (std::uint8_t l : c.labels) {
      if (l >= mlr::kClasses) throw std::runtime_error("dataset file: label out of range");
    }
  }
  return ds;
}

std::string dataset_stats(const FederatedDataset& ds) {
  std::size_t total = 0, smin = SIZE_MAX, smax = 0;
  double ssum = 0.0, ssq = 0.0;
  std::size_t hist[mlr::kClasses] = {};
  for (const auto& c : ds.clients) {
    const std::size_t m = c.size();
    total += m;
    smin = std::min(smin, m);
    smax = std::max(smax, m);
    ssum += static_cast<double>(m);
    ssq += static_cast<double>(m) * static_cast<double>(m);
    for (std::uint8_t l : c.labels) ++hist[l];
  }
  const double n = static_cast<double>(ds.clients.size());
  const double mean = ssum / n;
  const double var = ssq / n - mean * mean;
  const double sd = var > 0 ? std::sqrt(var) : 0.0;

  std::ostringstream os;
  os << "clients: " << ds.clients.size() << "\n"
     << "samples: " << total << "\n"
     << "samples per client: mean " << mean << ", min " << smin << ", max " << smax
     << ", stddev " << sd << ", cv " << (mean > 0 ? sd / mean : 0.0) << "\n"
     << "generator: alpha " << ds.alpha << ", beta " << ds.beta << ", seed " << ds.seed << "\n"
     << "class histogram:";
  for (std::size_t c = 0; c < mlr::kClasses; ++c) os << " " << hist[c];
  os << "\n";
  return os.str();
}

EvalResult evaluate(const DenseVector& params, const FederatedDataset& ds) {
  std::size_t total = 0, correct = 0;
  double loss_sum = 0.0;
  for (const auto& c : ds.clients) {
    const std::size_t m = c.test_count();
    if (m == 0) continue;
    correct += mlr::correct_count(params, c.test_features(), c.test_labels(), m);
    loss_sum += mlr::loss(params, c.test_features(), c.test_labels(), m) * static_cast<double>(m);
    total += m;
  }
  if (total == 0) throw std::invalid_argument("evaluate: dataset has no test samples");
  return {static_cast<double>(correct) / static_cast<double>(total),
          loss_sum / static_cast<double>(total)};
}

}  // namespace dadaquant
