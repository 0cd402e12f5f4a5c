#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/model.hpp"
#include "dba/trainer.hpp"
#include "dba/weights.hpp"

namespace dba {

enum class EstimatorRegime { KnownS, SameDistVal, DiffDistVal };

inline const char* regime_name(EstimatorRegime r) {
  switch (r) {
    case EstimatorRegime::KnownS: return "known";
    case EstimatorRegime::SameDistVal: return "same";
    case EstimatorRegime::DiffDistVal: return "diff";
  }
  return "?";
}

inline EstimatorRegime regime_from_name(const std::string& s) {
  if (s == "known") return EstimatorRegime::KnownS;
  if (s == "same") return EstimatorRegime::SameDistVal;
  if (s == "diff") return EstimatorRegime::DiffDistVal;
  fail(Err::BadArgument, "unknown estimator regime '" + s + "'");
}

struct EstimatorConfig {
  EstimatorRegime regime = EstimatorRegime::KnownS;
  double tau = 1.0;
  int overfit_epochs = 500;
  double learning_rate = 0.1;
  int batch = 128;
  int hidden = 0;

  void validate() const {
    require(tau > 0.0, Err::BadArgument, "tau must be positive");
    require(overfit_epochs >= 1, Err::BadArgument, "overfit epochs must be >= 1");
    require(learning_rate > 0.0, Err::BadArgument, "learning rate must be positive");
    require(batch >= 1, Err::BadArgument, "batch must be >= 1");
    require(hidden >= 0, Err::BadArgument, "hidden width must be >= 0");
  }
};

namespace detail {

inline TrainConfig overfit_config(const EstimatorConfig& cfg, std::uint64_t seed) {
  TrainConfig tc;
  tc.lr = cfg.learning_rate;
  tc.epochs = cfg.overfit_epochs;
  tc.batch = cfg.batch;
  tc.hidden = cfg.hidden;
  tc.seed = seed;
  return tc;
}

/// Estimator-stage overfitting runs the full epoch budget. Stopping at an
/// accuracy threshold would halt as soon as the majority group is fit,
/// long before the per-sample likelihoods saturate, and the estimators
/// read those likelihoods, not the accuracy.
inline SoftmaxModel overfit_to_cap(const Dataset& data, const EstimatorConfig& cfg,
                                   std::uint64_t seed) {
  return fit_erm(data, overfit_config(cfg, seed)).model;
}

}  // namespace detail

/// Known-attribute estimator: one attribute classifier per class stratum,
/// each overfit on its stratum, read out at the sample's own label.
inline SpuriousPosteriorVector estimate_known_s(const Dataset& train,
                                                const EstimatorConfig& cfg) {
  cfg.validate();
  require(!train.empty(), Err::EmptyDataset, "estimate_known_s: empty dataset");
  require(train.attributes_known(), Err::UnknownAttributes,
          "estimate_known_s needs attributes");

  const int L = train.L;
  std::vector<std::vector<std::size_t>> strata(L);
  for (std::size_t i = 0; i < train.size(); ++i) strata[train.samples[i].y].push_back(i);

  std::vector<double> rho(train.size(), 0.0);
  for (int c = 0; c < L; ++c) {
    require(static_cast<int>(strata[c].size()) >= L, Err::StratumTooSmall,
            "class stratum " + std::to_string(c) + " has fewer than L samples");
    // Attribute-prediction dataset: same features, label = attribute.
    Dataset attr;
    attr.role = train.role;
    attr.L = L;
    attr.d = train.d;
    attr.seed = train.seed;
    attr.samples.reserve(strata[c].size());
    for (std::size_t i : strata[c]) {
      Sample s = train.samples[i];
      s.y = s.s;
      attr.samples.push_back(std::move(s));
    }
    const SoftmaxModel model =
        detail::overfit_to_cap(attr, cfg, mix64(train.seed) + 0x5A + c);
    for (std::size_t j = 0; j < strata[c].size(); ++j) {
      const std::size_t i = strata[c][j];
      const auto proba = predict_proba(model, train.samples[i].x);
      rho[i] = proba[train.samples[i].y];
    }
  }
  return SpuriousPosteriorVector(std::move(rho));
}

/// Same-law validation estimator: overfit one model per dataset, then let
/// the gap between their training-point likelihoods flag the samples whose
/// attribute disagrees with the label. rho = exp(-|delta log-lik| / tau).
inline SpuriousPosteriorVector estimate_same_dist(const Dataset& train, const Dataset& val,
                                                  const EstimatorConfig& cfg) {
  cfg.validate();
  require(!train.empty(), Err::EmptyDataset, "estimate_same_dist: empty train set");
  require(!val.empty(), Err::EmptyDataset, "estimate_same_dist: empty validation set");
  require(train.L == val.L && train.d == val.d, Err::DimensionMismatch,
          "train/val shape mismatch");

  const SoftmaxModel model_a = detail::overfit_to_cap(train, cfg, mix64(train.seed) + 0xA);
  const SoftmaxModel model_b = detail::overfit_to_cap(val, cfg, mix64(val.seed) + 0xB);

  std::vector<double> rho(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Sample& smp = train.samples[i];
    const double delta =
        std::abs(log_proba(model_a, smp.x, smp.y) - log_proba(model_b, smp.x, smp.y));
    rho[i] = std::exp(-delta / cfg.tau);
  }
  return SpuriousPosteriorVector(std::move(rho));
}

/// Single-model estimator for when no same-law validation data exists:
/// the model's own training confidence is the proxy. rho = p_hat^(1/tau).
inline SpuriousPosteriorVector estimate_diff_dist(const Dataset& train,
                                                  const EstimatorConfig& cfg) {
  cfg.validate();
  require(!train.empty(), Err::EmptyDataset, "estimate_diff_dist: empty dataset");

  const SoftmaxModel model_a = detail::overfit_to_cap(train, cfg, mix64(train.seed) + 0xA);
  std::vector<double> rho(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const Sample& smp = train.samples[i];
    rho[i] = std::exp(log_proba(model_a, smp.x, smp.y) / cfg.tau);
  }
  return SpuriousPosteriorVector(std::move(rho));
}

}  // namespace dba
