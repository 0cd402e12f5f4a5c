#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/rng.hpp"

namespace dba {

/// Linear softmax classifier, optionally with one ReLU hidden layer.
/// Parameters are row-major with a trailing bias column per row:
///   linear:  w  is L x (d+1)
///   hidden:  w1 is h x (d+1), w2 is L x (h+1)
struct SoftmaxModel {
  int L = 0;
  int d = 0;
  int hidden = 0;
  std::vector<double> w;
  std::vector<double> w1;
  std::vector<double> w2;

  static SoftmaxModel zeros(int L, int d, int hidden = 0) {
    SoftmaxModel m;
    m.L = L;
    m.d = d;
    m.hidden = hidden;
    if (hidden > 0) {
      m.w1.assign(static_cast<std::size_t>(hidden) * (d + 1), 0.0);
      m.w2.assign(static_cast<std::size_t>(L) * (hidden + 1), 0.0);
    } else {
      m.w.assign(static_cast<std::size_t>(L) * (d + 1), 0.0);
    }
    return m;
  }

  /// Small random init for the hidden layer; the linear model starts at
  /// zero (its loss is convex, so the start point is irrelevant).
  static SoftmaxModel init(int L, int d, int hidden, std::uint64_t seed) {
    SoftmaxModel m = zeros(L, d, hidden);
    if (hidden > 0) {
      Rng rng(seed, 0x1217ull);
      const double scale1 = std::sqrt(2.0 / (d + 1));
      const double scale2 = std::sqrt(2.0 / (hidden + 1));
      for (double& v : m.w1) v = scale1 * rng.normal();
      for (double& v : m.w2) v = scale2 * rng.normal();
    }
    return m;
  }

  std::size_t param_count() const { return w.size() + w1.size() + w2.size(); }

  /// Pre-softmax scores; fills `hidden_out` with the post-ReLU activations
  /// when a hidden layer is present (needed for backprop).
  void logits(std::span<const double> x, std::vector<double>& out,
              std::vector<double>* hidden_out = nullptr) const {
    require(static_cast<int>(x.size()) == d, Err::DimensionMismatch,
            "input dimension != model d");
    out.assign(L, 0.0);
    if (hidden == 0) {
      for (int c = 0; c < L; ++c) {
        const double* row = w.data() + static_cast<std::size_t>(c) * (d + 1);
        double z = row[d];
        for (int j = 0; j < d; ++j) z += row[j] * x[j];
        out[c] = z;
      }
      return;
    }
    std::vector<double> local;
    std::vector<double>& h = hidden_out ? *hidden_out : local;
    h.assign(hidden, 0.0);
    for (int u = 0; u < hidden; ++u) {
      const double* row = w1.data() + static_cast<std::size_t>(u) * (d + 1);
      double z = row[d];
      for (int j = 0; j < d; ++j) z += row[j] * x[j];
      h[u] = z > 0.0 ? z : 0.0;
    }
    for (int c = 0; c < L; ++c) {
      const double* row = w2.data() + static_cast<std::size_t>(c) * (hidden + 1);
      double z = row[hidden];
      for (int u = 0; u < hidden; ++u) z += row[u] * h[u];
      out[c] = z;
    }
  }
};

namespace detail {

/// In-place softmax with max subtraction; returns log(sum exp(z - max)) + max.
inline double softmax_inplace(std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return std::log(sum) + zmax;
}

inline double log_sum_exp(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return std::log(sum) + zmax;
}

}  // namespace detail

inline std::vector<double> predict_proba(const SoftmaxModel& model, std::span<const double> x) {
  std::vector<double> z;
  model.logits(x, z);
  detail::softmax_inplace(z);
  return z;
}

/// log q(y | x), computed from logits directly so it never underflows.
inline double log_proba(const SoftmaxModel& model, std::span<const double> x, int y) {
  std::vector<double> z;
  model.logits(x, z);
  return z[y] - detail::log_sum_exp(z);
}

inline int predict_class(const SoftmaxModel& model, std::span<const double> x) {
  std::vector<double> z;
  model.logits(x, z);
  int best = 0;
  for (int c = 1; c < model.L; ++c)
    if (z[c] > z[best]) best = c;  // ties keep the smallest index
  return best;
}

/// Parameter-shaped gradient container.
struct Gradients {
  std::vector<double> w, w1, w2;

  static Gradients zeros_like(const SoftmaxModel& m) {
    Gradients g;
    g.w.assign(m.w.size(), 0.0);
    g.w1.assign(m.w1.size(), 0.0);
    g.w2.assign(m.w2.size(), 0.0);
    return g;
  }
};

/// Weighted negative log-likelihood over a batch of dataset rows, averaged
/// by batch size, with its analytic gradient. A null `weights` means the
/// plain unweighted objective.
inline double loss_and_grad(const SoftmaxModel& model, const Dataset& data,
                            std::span<const std::size_t> batch,
                            const std::vector<double>* weights, Gradients& grad) {
  require(!batch.empty(), Err::BadArgument, "empty batch");
  require(model.L == data.L && model.d == data.d, Err::DimensionMismatch,
          "model shape != dataset shape");
  if (weights)
    require(weights->size() == data.size(), Err::LengthMismatch,
            "weights length != dataset size");

  grad = Gradients::zeros_like(model);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  std::vector<double> q, h, dh;

  for (std::size_t i : batch) {
    const Sample& smp = data.samples[i];
    const double wgt = weights ? (*weights)[i] : 1.0;
    model.logits(smp.x, q, model.hidden > 0 ? &h : nullptr);
    const double target_logit = q[smp.y];
    const double lse = detail::softmax_inplace(q);
    loss -= wgt * (target_logit - lse);

    // d(-w log q_y)/dlogits = w (q - onehot(y)); scale by 1/|batch| here.
    for (int c = 0; c < model.L; ++c) q[c] *= wgt * inv_b;
    q[smp.y] -= wgt * inv_b;

    if (model.hidden == 0) {
      for (int c = 0; c < model.L; ++c) {
        double* grow = grad.w.data() + static_cast<std::size_t>(c) * (model.d + 1);
        const double gc = q[c];
        if (gc == 0.0) continue;
        for (int j = 0; j < model.d; ++j) grow[j] += gc * smp.x[j];
        grow[model.d] += gc;
      }
    } else {
      dh.assign(model.hidden, 0.0);
      for (int c = 0; c < model.L; ++c) {
        double* grow = grad.w2.data() + static_cast<std::size_t>(c) * (model.hidden + 1);
        const double gc = q[c];
        const double* w2row = model.w2.data() + static_cast<std::size_t>(c) * (model.hidden + 1);
        for (int u = 0; u < model.hidden; ++u) {
          grow[u] += gc * h[u];
          dh[u] += gc * w2row[u];
        }
        grow[model.hidden] += gc;
      }
      for (int u = 0; u < model.hidden; ++u) {
        if (h[u] <= 0.0) continue;  // ReLU gate
        double* grow = grad.w1.data() + static_cast<std::size_t>(u) * (model.d + 1);
        const double gu = dh[u];
        for (int j = 0; j < model.d; ++j) grow[j] += gu * smp.x[j];
        grow[model.d] += gu;
      }
    }
  }
  return loss * inv_b;
}

/// Log-likelihood of a logit vector evaluated exactly (no exp of the target).
inline double loglik_from_logits(std::span<const double> z, int y) {
  return z[y] - detail::log_sum_exp(z);
}

inline double accuracy(const SoftmaxModel& model, const Dataset& data) {
  require(!data.empty(), Err::EmptyDataset, "accuracy: empty dataset");
  std::size_t correct = 0;
  for (const Sample& smp : data.samples)
    if (predict_class(model, smp.x) == smp.y) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace dba
