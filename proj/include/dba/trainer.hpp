#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/model.hpp"
#include "dba/rng.hpp"
#include "dba/weights.hpp"

namespace dba {

struct TrainConfig {
  double lr = 0.1;
  int epochs = 50;
  int batch = 128;
  std::uint64_t seed = 0;
  int hidden = 0;          // 0 = linear
  double weight_decay = 0.0;

  void validate() const {
    require(lr > 0.0, Err::BadArgument, "learning rate must be positive");
    require(epochs >= 1, Err::BadArgument, "epochs must be >= 1");
    require(batch >= 1, Err::BadArgument, "batch size must be >= 1");
    require(hidden >= 0, Err::BadArgument, "hidden width must be >= 0");
    require(weight_decay >= 0.0, Err::BadArgument, "weight decay must be >= 0");
  }
};

struct FitResult {
  SoftmaxModel model;                     // final-epoch parameters
  std::vector<SoftmaxModel> checkpoints;  // one per epoch, in epoch order
};

namespace detail {

inline void sgd_step(SoftmaxModel& m, const Gradients& g, double lr, double wd) {
  auto apply = [&](std::vector<double>& p, const std::vector<double>& gp) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * (gp[i] + wd * p[i]);
  };
  apply(m.w, g.w);
  apply(m.w1, g.w1);
  apply(m.w2, g.w2);
}

inline void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed, int epoch) {
  Rng rng(seed, 0xE90C4ull + static_cast<std::uint64_t>(epoch));
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
    std::swap(idx[i - 1], idx[j]);
  }
}

inline FitResult fit_impl(const Dataset& train, const std::vector<double>* weights,
                          const TrainConfig& cfg) {
  cfg.validate();
  require(!train.empty(), Err::EmptyDataset, "fit: empty dataset");
  if (weights)
    require(weights->size() == train.size(), Err::LengthMismatch,
            "weights length != dataset size");

  SoftmaxModel model = SoftmaxModel::init(train.L, train.d, cfg.hidden, cfg.seed);
  Gradients grad;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  FitResult out;
  out.checkpoints.reserve(cfg.epochs);
  const std::size_t n = train.size();
  const std::size_t b = static_cast<std::size_t>(cfg.batch);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, cfg.seed, epoch);
    for (std::size_t start = 0; start < n; start += b) {
      const std::size_t len = std::min(b, n - start);
      loss_and_grad(model, train, {order.data() + start, len}, weights, grad);
      sgd_step(model, grad, cfg.lr, cfg.weight_decay);
    }
    out.checkpoints.push_back(model);
  }
  out.model = model;
  return out;
}

}  // namespace detail

/// Mini-batch SGD on the weighted negative log-likelihood. Deterministic
/// given the config seed; keeps a checkpoint per epoch for model picking.
inline FitResult fit_weighted(const Dataset& train, const WeightVector& weights,
                              const TrainConfig& cfg) {
  require(weights.size() == train.size(), Err::LengthMismatch,
          "weights length != dataset size");
  weights.validate();
  return detail::fit_impl(train, &weights.values, cfg);
}

/// Plain unweighted fit; follows the exact same arithmetic as fit_weighted
/// with unit weights.
inline FitResult fit_erm(const Dataset& train, const TrainConfig& cfg) {
  return detail::fit_impl(train, nullptr, cfg);
}

struct OverfitResult {
  SoftmaxModel model;
  double train_accuracy = 0.0;
  bool converged = false;  // reached the accuracy target before the epoch cap
  int epochs_run = 0;
};

/// Unweighted training pushed until the model nails its own training set
/// (accuracy target, default 99%) or the epoch cap is hit. Used by the
/// bias estimators, which rely on memorized training likelihoods.
inline OverfitResult fit_overfit(const Dataset& data, const TrainConfig& cfg,
                                 double target_accuracy = 0.99) {
  cfg.validate();
  require(!data.empty(), Err::EmptyDataset, "fit_overfit: empty dataset");

  SoftmaxModel model = SoftmaxModel::init(data.L, data.d, cfg.hidden, cfg.seed);
  Gradients grad;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = data.size();
  const std::size_t b = static_cast<std::size_t>(cfg.batch);

  OverfitResult out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    detail::shuffle_indices(order, cfg.seed, epoch);
    for (std::size_t start = 0; start < n; start += b) {
      const std::size_t len = std::min(b, n - start);
      loss_and_grad(model, data, {order.data() + start, len}, nullptr, grad);
      detail::sgd_step(model, grad, cfg.lr, cfg.weight_decay);
    }
    out.epochs_run = epoch + 1;
    out.train_accuracy = accuracy(model, data);
    if (out.train_accuracy >= target_accuracy) {
      out.converged = true;
      break;
    }
  }
  out.model = model;
  return out;
}

/// Bootstrap with probability proportional to the weights; returns a
/// dataset of the same size.
inline Dataset resample_dataset(const Dataset& train, const WeightVector& weights,
                                std::uint64_t seed) {
  require(weights.size() == train.size(), Err::LengthMismatch,
          "weights length != dataset size");
  weights.validate();
  require(!train.empty(), Err::EmptyDataset, "resample: empty dataset");

  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights.values[i];
    cdf[i] = acc;
  }
  Dataset out;
  out.role = train.role;
  out.L = train.L;
  out.d = train.d;
  out.seed = seed;
  out.spec_digest = train.spec_digest;
  out.samples.reserve(train.size());
  Rng rng(seed, 0xB0075ull);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double u = rng.uniform() * acc;
    const std::size_t j = static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    out.samples.push_back(train.samples[std::min(j, train.size() - 1)]);
  }
  return out;
}

/// Weighted mean log-likelihood of a model over a dataset; null weights
/// mean the plain average.
inline double mean_loglik(const SoftmaxModel& model, const Dataset& data,
                          const WeightVector* weights = nullptr) {
  require(!data.empty(), Err::EmptyDataset, "mean_loglik: empty dataset");
  require(model.L == data.L && model.d == data.d, Err::DimensionMismatch,
          "model shape != dataset shape");
  if (weights)
    require(weights->size() == data.size(), Err::LengthMismatch,
            "weights length != dataset size");
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double ll = log_proba(model, data.samples[i].x, data.samples[i].y);
    acc += (weights ? weights->values[i] : 1.0) * ll;
  }
  return acc / static_cast<double>(data.size());
}

/// Picks the checkpoint with the highest (optionally z-weighted) validation
/// log-likelihood. Ties keep the earliest epoch.
inline SoftmaxModel select_model(const std::vector<SoftmaxModel>& checkpoints,
                                 const Dataset& val, const WeightVector* z = nullptr) {
  require(!checkpoints.empty(), Err::EmptyCheckpoints, "no checkpoints to select from");
  std::size_t best = 0;
  double best_score = mean_loglik(checkpoints[0], val, z);
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    const double score = mean_loglik(checkpoints[i], val, z);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return checkpoints[best];
}

/// Accuracy-criterion variant of checkpoint picking, for parity runs.
inline SoftmaxModel select_model_by_accuracy(const std::vector<SoftmaxModel>& checkpoints,
                                             const Dataset& val) {
  require(!checkpoints.empty(), Err::EmptyCheckpoints, "no checkpoints to select from");
  std::size_t best = 0;
  double best_score = accuracy(checkpoints[0], val);
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    const double score = accuracy(checkpoints[i], val);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return checkpoints[best];
}

}  // namespace dba
