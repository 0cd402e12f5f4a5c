#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/tables.hpp"

namespace dba {

/// Floor applied to estimated posteriors before they enter a weight
/// denominator. Shared with the estimators so the closed form never
/// divides by zero.
inline constexpr double kRhoFloor = 1e-6;

enum class WeightProvenance {
  Theorem1,
  Ones,
  ClassBalance,
  GroupBalance,
  LogitAdjust,
  ExactRatio,
};

/// Per-sample importance weights attached to a dataset.
struct WeightVector {
  std::vector<double> values;
  WeightProvenance provenance = WeightProvenance::Ones;

  static WeightVector ones(std::size_t n) {
    WeightVector w;
    w.values.assign(n, 1.0);
    return w;
  }

  std::size_t size() const { return values.size(); }

  void validate() const {
    for (double v : values)
      require(std::isfinite(v) && v > 0.0, Err::DomainError,
              "weights must be finite and positive");
  }
};

/// Per-sample probability that the attribute coincides with the label,
/// clamped into [kRhoFloor, 1].
struct SpuriousPosteriorVector {
  std::vector<double> values;

  SpuriousPosteriorVector() = default;

  /// Clamps into [kRhoFloor, 1] unless clamping is disabled, in which case
  /// nonpositive or >1 entries are an error.
  explicit SpuriousPosteriorVector(std::vector<double> raw, bool clamp = true)
      : values(std::move(raw)) {
    for (double& v : values) {
      if (clamp) {
        if (v < kRhoFloor) v = kRhoFloor;
        if (v > 1.0) v = 1.0;
      } else {
        require(v > 0.0 && v <= 1.0, Err::DomainError,
                "posterior entries must lie in (0,1] when clamping is off");
      }
    }
  }

  std::size_t size() const { return values.size(); }
};

/// Which algebraic form of the closed-form correction weight to evaluate.
/// `Corrected` carries the majority-share factor inside the bracket and is
/// the form that matches exact enumeration; `MainText` drops that factor
/// and is kept only so its failure can be demonstrated.
enum class WeightForm { Corrected, MainText };

namespace detail {

inline double theorem1_weight_scalar(double rho, double p_class, const TrainStats& stats,
                                     WeightForm form) {
  // Exact branch: an all-minority training set already follows the test law.
  if (stats.p_m0 == 1.0) return 1.0;

  // p_m0 = 0 is handled as a limit by flooring the minority share.
  const double p_m0 = std::max(stats.p_m0, 1e-12);
  const double p_m1 = 1.0 - p_m0;
  const double L = static_cast<double>(stats.L);

  const double a = (p_class - p_m0 * p_class) / (1.0 - p_m0);  // majority-group class prior
  const double c = p_m0 * p_class / L;
  const double bracket =
      (form == WeightForm::Corrected) ? (c + p_m1 * a) / c : (c + a) / c;
  const double numer = p_m1 * (L / p_class) * a;
  const double inv_g = p_m0 + numer / (1.0 + bracket * (1.0 - rho) / rho);
  return 1.0 / inv_g;
}

}  // namespace detail

/// Closed-form train-to-test correction weight per sample, driven by the
/// spurious posterior and the training composition statistics.
inline WeightVector theorem1_weight(const SpuriousPosteriorVector& rho,
                                    std::span<const int> y, const TrainStats& stats,
                                    WeightForm form = WeightForm::Corrected) {
  stats.validate();
  require(rho.size() == y.size(), Err::LengthMismatch, "rho length != label length");
  for (double v : rho.values)
    require(v > 0.0, Err::DomainError, "posterior entries must be positive");

  WeightVector w;
  w.provenance = WeightProvenance::Theorem1;
  w.values.reserve(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    require(y[i] >= 0 && y[i] < stats.L, Err::BadArgument, "label out of range");
    w.values.push_back(
        detail::theorem1_weight_scalar(rho.values[i], stats.p_y[y[i]], stats, form));
  }
  w.validate();
  return w;
}

/// Entrywise test-to-validation density ratio used for model picking.
/// Cells outside the test support get ratio 0.
inline RatioTable z_ratio(const JointTable& p_va, const JointTable& p_te) {
  require(p_va.K == p_te.K && p_va.L == p_te.L, Err::DimensionMismatch,
          "table shapes differ");
  RatioTable z(p_va.K, p_va.L);
  for (std::size_t i = 0; i < z.g.size(); ++i) {
    if (p_te.p[i] == 0.0) {
      z.g[i] = 0.0;
    } else {
      require(p_va.p[i] > 0.0, Err::SupportViolation,
              "validation mass zero on a test-support cell");
      z.g[i] = p_te.p[i] / p_va.p[i];
    }
  }
  return z;
}

/// 1 / (L * empirical class frequency); recovers a class-balanced target.
inline WeightVector class_balance_weight(const Dataset& dataset) {
  require(!dataset.empty(), Err::EmptyDataset, "class_balance_weight: empty dataset");
  std::vector<std::int64_t> counts(dataset.L, 0);
  for (const Sample& s : dataset.samples) ++counts[s.y];
  const double n = static_cast<double>(dataset.size());
  std::vector<double> per_class(dataset.L);
  for (int c = 0; c < dataset.L; ++c) {
    require(counts[c] > 0, Err::ZeroCountClass,
            "class " + std::to_string(c) + " has no samples");
    per_class[c] = n / (static_cast<double>(dataset.L) * static_cast<double>(counts[c]));
  }
  WeightVector w;
  w.provenance = WeightProvenance::ClassBalance;
  w.values.reserve(dataset.size());
  for (const Sample& s : dataset.samples) w.values.push_back(per_class[s.y]);
  return w;
}

/// 1 / (L^2 * empirical (y, s) cell frequency); recovers a group-balanced
/// target. Requires attributes.
inline WeightVector group_balance_weight(const Dataset& dataset) {
  require(!dataset.empty(), Err::EmptyDataset, "group_balance_weight: empty dataset");
  require(dataset.attributes_known(), Err::UnknownAttributes,
          "group_balance_weight needs attributes");
  const int L = dataset.L;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(L) * L, 0);
  for (const Sample& s : dataset.samples) ++counts[static_cast<std::size_t>(s.y) * L + s.s];
  const double n = static_cast<double>(dataset.size());
  std::vector<double> per_cell(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    require(counts[i] > 0, Err::ZeroCountGroup,
            "group cell (y=" + std::to_string(i / L) + ",s=" + std::to_string(i % L) +
                ") has no samples");
    per_cell[i] = n / (static_cast<double>(L) * L * static_cast<double>(counts[i]));
  }
  WeightVector w;
  w.provenance = WeightProvenance::GroupBalance;
  w.values.reserve(dataset.size());
  for (const Sample& s : dataset.samples)
    w.values.push_back(per_cell[static_cast<std::size_t>(s.y) * L + s.s]);
  return w;
}

/// Weight implied by an estimated joint posterior p(y, s=y | x) under a
/// uniform-label, majority-only composition: g = 1 / (L * p).
/// Entries below the floor are clamped; `clamped_out` reports how many.
inline WeightVector logit_adjust_weight(std::span<const double> p_joint_posterior, int L,
                                        std::size_t* clamped_out = nullptr) {
  require(L >= 2, Err::BadArgument, "need L >= 2");
  WeightVector w;
  w.provenance = WeightProvenance::LogitAdjust;
  w.values.reserve(p_joint_posterior.size());
  std::size_t clamped = 0;
  for (double p : p_joint_posterior) {
    require(p > 0.0, Err::DomainError, "joint posterior entries must be positive");
    require(p <= 1.0, Err::DomainError, "joint posterior entries must be <= 1");
    if (p < kRhoFloor) {
      p = kRhoFloor;
      ++clamped;
    }
    w.values.push_back(1.0 / (static_cast<double>(L) * p));
  }
  if (clamped_out) *clamped_out = clamped;
  w.validate();
  return w;
}

/// Three-term decomposition of the weighted likelihood under the
/// logit-adjustment weight: g*(log q + log p) + g*log(L*g). Algebraically
/// identical to g*log q; the function exists so that identity can be
/// asserted numerically.
inline std::vector<double> decomposed_objective(std::span<const double> q_loglik,
                                                std::span<const double> p_joint_posterior,
                                                int L) {
  require(q_loglik.size() == p_joint_posterior.size(), Err::LengthMismatch,
          "loglik / posterior length mismatch");
  const WeightVector g = logit_adjust_weight(p_joint_posterior, L);
  std::vector<double> out(q_loglik.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double p = std::max(p_joint_posterior[i], kRhoFloor);
    const double gi = g.values[i];
    out[i] = gi * (q_loglik[i] + std::log(p)) + gi * std::log(static_cast<double>(L) * gi);
  }
  return out;
}

/// Weight of the two-coefficient mixture form: g = 1 / ((lam0+lam1) * p(x)).
inline double augmentation_weight(double lam0, double lam1, double p_x_tr) {
  require(lam0 >= 0.0 && lam1 >= 0.0, Err::DomainError, "lambdas must be nonnegative");
  require(lam0 + lam1 > 0.0, Err::DomainError, "lambdas must not both be zero");
  require(p_x_tr > 0.0, Err::DomainError, "p(x) must be positive");
  return 1.0 / ((lam0 + lam1) * p_x_tr);
}

/// (1/n) * sum w_i * loglik_i — the weighted training objective.
inline double weighted_loglik(std::span<const double> loglik, const WeightVector& weights) {
  require(!loglik.empty(), Err::LengthMismatch, "empty input");
  require(loglik.size() == weights.size(), Err::LengthMismatch,
          "loglik / weight length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < loglik.size(); ++i) acc += weights.values[i] * loglik[i];
  return acc / static_cast<double>(loglik.size());
}

/// Rescale to mean 1. Off by default everywhere; exposed for optimizer
/// stability experiments.
inline WeightVector self_normalized(const WeightVector& w) {
  require(!w.values.empty(), Err::LengthMismatch, "empty weight vector");
  double mean = 0.0;
  for (double v : w.values) mean += v;
  mean /= static_cast<double>(w.values.size());
  WeightVector out = w;
  for (double& v : out.values) v /= mean;
  return out;
}

}  // namespace dba
