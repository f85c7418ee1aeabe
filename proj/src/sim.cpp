#include "dadaquant/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dadaquant {

namespace {

constexpr std::uint64_t kSaltCohort = 0x51;
constexpr std::uint64_t kSaltHetero = 0x52;
constexpr std::uint64_t kSaltLocal = 0x53;
constexpr std::uint64_t kSaltQuant = 0x54;

}  // namespace

const char* to_string(Compressor c) {
  switch (c) {
    case Compressor::None: return "none";
    case Compressor::Qsgd: return "qsgd";
    case Compressor::FedPaq: return "fedpaq";
    case Compressor::FxpqGzip: return "fxpq-gzip";
    case Compressor::Fp8: return "fp8";
  }
  return "?";
}

const char* to_string(Controller c) {
  switch (c) {
    case Controller::None: return "none";
    case Controller::Static: return "static";
    case Controller::Time: return "time";
    case Controller::Client: return "client";
    case Controller::Doubly: return "doubly";
    case Controller::AdaQuantFl: return "adaquantfl";
  }
  return "?";
}

bool compressor_uses_levels(Compressor c) {
  return c == Compressor::Qsgd || c == Compressor::FedPaq || c == Compressor::FxpqGzip;
}

void TrainingConfig::validate(std::size_t n_clients) const {
  if (rounds == 0) throw std::invalid_argument("config: rounds must be >= 1");
  if (epochs == 0) throw std::invalid_argument("config: epochs must be >= 1");
  if (batch == 0) throw std::invalid_argument("config: batch must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("config: lr must be positive");
  if (!(mu >= 0.0)) throw std::invalid_argument("config: mu must be >= 0");
  if (eval_interval == 0) throw std::invalid_argument("config: eval_interval must be >= 1");
  if (cohort == 0 || cohort > n_clients) {
    throw std::invalid_argument("config: cohort must lie in [1, clients]");
  }
  const bool leveled = compressor_uses_levels(compressor);
  if (leveled && controller == Controller::None) {
    throw std::invalid_argument("config: the " + std::string(to_string(compressor)) +
                                " compressor needs a level controller");
  }
  if (!leveled && controller != Controller::None) {
    throw std::invalid_argument("config: controller " + std::string(to_string(controller)) +
                                " requires a leveled compressor");
  }
  if (leveled &&
      (controller == Controller::Static || controller == Controller::Client) && q == 0) {
    throw std::invalid_argument("config: q must be >= 1");
  }
  if (controller == Controller::Time || controller == Controller::Doubly ||
      controller == Controller::AdaQuantFl) {
    ctrl.validate();
  }
}

std::vector<std::uint32_t> sample_cohort(RandomStream& rng, std::uint32_t n, std::uint32_t k) {
  if (k == 0) throw std::invalid_argument("sample_cohort: cohort must be nonempty");
  if (k > n) {
    throw std::invalid_argument("sample_cohort: cohort size " + std::to_string(k) +
                                " exceeds client count " + std::to_string(n));
  }
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint32_t j = i + static_cast<std::uint32_t>(rng.bounded(n - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::uint32_t> heterogeneous_epochs(RandomStream& rng, std::size_t cohort_size,
                                                std::uint32_t epochs) {
  if (epochs == 0) throw std::invalid_argument("heterogeneous_epochs: epochs must be >= 1");
  std::vector<std::uint32_t> out(cohort_size, epochs);
  const std::size_t reduced = cohort_size * 9 / 10;
  std::vector<std::uint32_t> pos(cohort_size);
  std::iota(pos.begin(), pos.end(), 0u);
  for (std::size_t i = 0; i < reduced; ++i) {
    const std::size_t j = i + rng.bounded(cohort_size - i);
    std::swap(pos[i], pos[j]);
  }
  for (std::size_t i = 0; i < reduced; ++i) {
    out[pos[i]] = 1 + static_cast<std::uint32_t>(rng.bounded(epochs));
  }
  return out;
}

LocalResult client_local_update(const DenseVector& p0, const ClientData& data,
                                std::uint32_t epochs, double lr, double mu, std::uint32_t batch,
                                RandomStream& rng) {
  if (data.train_count == 0) {
    throw std::invalid_argument("client_local_update: empty local training split");
  }
  if (batch == 0) throw std::invalid_argument("client_local_update: batch must be >= 1");
  const float* X = data.train_features();
  const std::uint8_t* y = data.train_labels();
  const std::size_t n = data.train_count;

  LocalResult res;
  res.loss_before = mlr::loss(p0, X, y, n);
  res.params = p0;

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<double> grad(mlr::kParams);
  for (std::uint32_t e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min<std::size_t>(batch, n - start);
      mlr::loss_grad(res.params, X, y, std::span<const std::uint32_t>(order).subspan(start, len),
                     grad);
      for (std::size_t i = 0; i < mlr::kParams; ++i) {
        res.params[i] -= lr * (grad[i] + mu * (res.params[i] - p0[i]));
      }
    }
  }
  return res;
}

DenseVector accumulate_updates(const DenseVector& p0, std::span<const double> weights,
                               std::span<const QuantizedUpdate> updates) {
  if (weights.size() != updates.size()) {
    throw std::invalid_argument("accumulate_updates: weight/update count mismatch");
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (std::fabs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument("accumulate_updates: weights must sum to 1");
  }
  DenseVector p = p0;
  for (std::size_t k = 0; k < updates.size(); ++k) {
    const DenseVector d = dequantize(updates[k]);
    if (d.size() != p.size()) {
      throw std::invalid_argument("accumulate_updates: dimension mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += weights[k] * d[i];
  }
  return p;
}

std::vector<RoundLog> run_training(const TrainingConfig& cfg, const FederatedDataset& ds) {
  cfg.validate(ds.clients.size());
  const std::uint32_t n_clients = static_cast<std::uint32_t>(ds.clients.size());
  const bool full_participation = cfg.controller == Controller::AdaQuantFl;
  const bool leveled = compressor_uses_levels(cfg.compressor);
  const bool adaptive = cfg.controller == Controller::Time ||
                        cfg.controller == Controller::Doubly ||
                        cfg.controller == Controller::AdaQuantFl;

  ControllerState ctrl(adaptive ? cfg.ctrl : ControllerParams{});
  double log_ema = 0.0;  // running average for non-adaptive runs, logging only
  bool log_ema_init = false;

  DenseVector p(mlr::kParams, 0.0);
  std::vector<RoundLog> logs;
  logs.reserve(cfg.rounds);

  std::vector<std::uint32_t> all_ids(n_clients);
  std::iota(all_ids.begin(), all_ids.end(), 0u);

  for (std::uint32_t t = 0; t < cfg.rounds; ++t) {
    RoundLog lg;
    lg.round = t;

    if (full_participation) {
      lg.clients = all_ids;
    } else {
      auto rng = RandomStream::derive(cfg.seed, {kSaltCohort, t});
      lg.clients = sample_cohort(rng, n_clients, cfg.cohort);
    }
    const std::size_t K = lg.clients.size();

    std::vector<std::uint64_t> sizes(K);
    for (std::size_t i = 0; i < K; ++i) sizes[i] = ds.clients[lg.clients[i]].train_count;
    const CohortWeights w = CohortWeights::from_sizes(sizes);

    lg.levels.assign(K, 0);
    switch (cfg.controller) {
      case Controller::None:
        break;
      case Controller::Static:
        lg.levels.assign(K, cfg.q);
        break;
      case Controller::Time:
      case Controller::AdaQuantFl:
        lg.levels.assign(K, ctrl.next_level());
        break;
      case Controller::Client:
        lg.levels = allocate_client_levels(w, cfg.q);
        break;
      case Controller::Doubly:
        lg.levels = allocate_client_levels(w, ctrl.next_level());
        break;
    }

    std::vector<std::uint32_t> epochs(K, cfg.epochs);
    if (cfg.heterogeneity) {
      auto rng = RandomStream::derive(cfg.seed, {kSaltHetero, t});
      epochs = heterogeneous_epochs(rng, K, cfg.epochs);
    }

    std::vector<double> losses(K);
    std::vector<QuantizedUpdate> updates(leveled ? K : 0);
    std::vector<DenseVector> raw_deltas(leveled ? 0 : K);
    lg.bytes.assign(K, 0);

    for (std::size_t i = 0; i < K; ++i) {
      const std::uint32_t k = lg.clients[i];
      auto rng = RandomStream::derive(cfg.seed, {kSaltLocal, t, k});
      LocalResult res =
          client_local_update(p, ds.clients[k], epochs[i], cfg.lr, cfg.mu, cfg.batch, rng);
      losses[i] = res.loss_before;

      DenseVector delta(mlr::kParams);
      for (std::size_t j = 0; j < mlr::kParams; ++j) delta[j] = res.params[j] - p[j];

      switch (cfg.compressor) {
        case Compressor::None:
          raw_deltas[i] = std::move(delta);
          lg.bytes[i] = mlr::kParams * 4 + 4;
          break;
        case Compressor::Fp8:
          raw_deltas[i] = quantize_fp8(delta);
          lg.bytes[i] = mlr::kParams + 4;
          break;
        case Compressor::Qsgd:
        case Compressor::FedPaq:
        case Compressor::FxpqGzip: {
          auto qrng = RandomStream::derive(cfg.seed, {kSaltQuant, t, k});
          const QuantizedUpdate u = quantize_fixed_point(delta, lg.levels[i], qrng);
          EncodedBlob blob;
          if (cfg.compressor == Compressor::Qsgd) {
            blob = pack_update(u);
            updates[i] = unpack_update(blob);
          } else if (cfg.compressor == Compressor::FedPaq) {
            blob = fedpaq_pack(u);
            updates[i] = fedpaq_unpack(blob);
          } else {
            blob = deflate_pack(u);
            updates[i] = deflate_unpack(blob);
          }
          lg.bytes[i] = blob.bytes.size() + 4;
          break;
        }
      }
    }

    if (leveled) {
      p = accumulate_updates(p, w.weights, updates);
    } else {
      for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < mlr::kParams; ++j) p[j] += w.weights[i] * raw_deltas[i][j];
      }
    }

    lg.ghat = 0.0;
    for (std::size_t i = 0; i < K; ++i) lg.ghat += w.weights[i] * losses[i];
    if (adaptive) {
      lg.gsmooth = ctrl.update_running_loss(lg.ghat);
    } else {
      log_ema = log_ema_init ? cfg.ctrl.psi * log_ema + (1.0 - cfg.ctrl.psi) * lg.ghat : lg.ghat;
      log_ema_init = true;
      lg.gsmooth = log_ema;
    }

    lg.total_bytes = 0;
    for (std::uint64_t b : lg.bytes) lg.total_bytes += b;

    if ((t + 1) % cfg.eval_interval == 0 || t + 1 == cfg.rounds) {
      const EvalResult ev = evaluate(p, ds);
      lg.test_accuracy = ev.accuracy;
      lg.test_loss = ev.loss;
    }
    logs.push_back(std::move(lg));
  }
  return logs;
}

}  // namespace dadaquant
