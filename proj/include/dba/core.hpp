#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dba/error.hpp"
#include "dba/rng.hpp"

namespace dba {

enum class DatasetRole { Train, Val, Test };

inline const char* role_name(DatasetRole r) {
  switch (r) {
    case DatasetRole::Train: return "train";
    case DatasetRole::Val: return "val";
    case DatasetRole::Test: return "test";
  }
  return "?";
}

inline DatasetRole role_from_name(const std::string& s) {
  if (s == "train") return DatasetRole::Train;
  if (s == "val") return DatasetRole::Val;
  if (s == "test") return DatasetRole::Test;
  fail(Err::BadArgument, "unknown dataset role '" + s + "'");
}

/// Sentinel for an absent attribute or group tag.
inline constexpr int kUnknown = -1;

/// Group tags: 0 = minority (test-like statistics), 1 = majority
/// (attribute locked to the label).
inline constexpr int kGroupMinority = 0;
inline constexpr int kGroupMajority = 1;

struct Sample {
  std::vector<double> x;
  int y = 0;
  int s = kUnknown;
  int m = kUnknown;
};

struct Dataset {
  std::vector<Sample> samples;
  DatasetRole role = DatasetRole::Train;
  int L = 0;
  int d = 0;
  std::uint64_t seed = 0;
  std::string spec_digest;  // optional content hash of the generating spec

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  bool attributes_known() const { return !samples.empty() && samples.front().s != kUnknown; }

  /// Field-level sanity: shared dimension, labels in range, attributes
  /// homogeneous (all known or all unknown), finite features. Attribute
  /// alphabets larger than the label alphabet are rejected.
  void validate() const {
    require(L >= 2, Err::BadArgument, "dataset needs L >= 2");
    require(d >= 1, Err::BadArgument, "dataset needs d >= 1");
    bool first = true;
    bool s_known = false;
    for (const Sample& smp : samples) {
      require(static_cast<int>(smp.x.size()) == d, Err::DimensionMismatch,
              "sample feature dimension != dataset d");
      require(smp.y >= 0 && smp.y < L, Err::BadArgument, "label out of range");
      require(smp.s == kUnknown || (smp.s >= 0 && smp.s < L), Err::BadArgument,
              "attribute out of range");
      require(smp.m == kUnknown || smp.m == kGroupMinority || smp.m == kGroupMajority,
              Err::BadArgument, "group tag out of range");
      for (double v : smp.x)
        require(std::isfinite(v), Err::BadArgument, "non-finite feature value");
      if (first) {
        s_known = smp.s != kUnknown;
        first = false;
      } else {
        require((smp.s != kUnknown) == s_known, Err::BadArgument,
                "mixed known/unknown attributes in one dataset");
      }
    }
  }
};

/// Copy with the attribute column blanked; used to run the unknown-attribute
/// regimes on data that was generated with attributes.
inline Dataset strip_attributes(const Dataset& ds) {
  Dataset out = ds;
  for (Sample& s : out.samples) {
    s.s = kUnknown;
    s.m = kUnknown;
  }
  return out;
}

/// Scalar/vector inputs of the closed-form correction weight: minority
/// share of the training composition, empirical class prior, class count,
/// and the estimator temperature.
struct TrainStats {
  double p_m0 = 0.85;
  std::vector<double> p_y;
  int L = 0;
  double tau = 1.0;

  void validate() const {
    require(L >= 2, Err::BadArgument, "TrainStats needs L >= 2");
    require(static_cast<int>(p_y.size()) == L, Err::DimensionMismatch, "p_y length != L");
    require(p_m0 >= 0.0 && p_m0 <= 1.0, Err::BadArgument, "p_m0 outside [0,1]");
    require(tau > 0.0, Err::BadArgument, "tau must be positive");
    double sum = 0.0;
    for (double v : p_y) {
      require(v > 0.0, Err::BadArgument, "p_y entries must be positive");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-12, Err::BadArgument, "p_y must sum to 1");
  }
};

/// Empirical class frequencies of a dataset, packaged with the caller's
/// minority-share prior. Frequencies are exact counts over n; a class
/// with zero support is an error rather than a smoothed zero.
inline TrainStats compute_label_stats(const Dataset& dataset, double p_m0, double tau) {
  require(!dataset.empty(), Err::EmptyDataset, "compute_label_stats: empty dataset");
  require(p_m0 >= 0.0 && p_m0 <= 1.0, Err::BadArgument, "p_m0 outside [0,1]");
  require(tau > 0.0, Err::BadArgument, "tau must be positive");

  std::vector<std::int64_t> counts(dataset.L, 0);
  for (const Sample& s : dataset.samples) ++counts[s.y];

  TrainStats stats;
  stats.p_m0 = p_m0;
  stats.tau = tau;
  stats.L = dataset.L;
  stats.p_y.resize(dataset.L);
  const double n = static_cast<double>(dataset.size());
  for (int c = 0; c < dataset.L; ++c) {
    require(counts[c] > 0, Err::ZeroCountClass,
            "class " + std::to_string(c) + " has no samples");
    stats.p_y[c] = static_cast<double>(counts[c]) / n;
  }
  return stats;
}

/// Disjoint partition by a seeded permutation. Part sizes are the largest-
/// remainder apportionment of n * fractions, so each differs from the exact
/// target by less than 1.
inline std::vector<Dataset> split_dataset(const Dataset& dataset,
                                          const std::vector<double>& fractions,
                                          std::uint64_t seed) {
  require(!fractions.empty(), Err::BadFractions, "no fractions given");
  double sum = 0.0;
  for (double f : fractions) {
    require(f > 0.0, Err::BadFractions, "fractions must be positive");
    sum += f;
  }
  require(std::abs(sum - 1.0) <= 1e-9, Err::BadFractions, "fractions must sum to 1");

  const std::size_t n = dataset.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, 0x5C11Dull);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
    std::swap(perm[i - 1], perm[j]);
  }

  const std::size_t k = fractions.size();
  std::vector<std::size_t> sizes(k);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double target = static_cast<double>(n) * fractions[i];
    sizes[i] = static_cast<std::size_t>(std::floor(target));
    remainders[i] = {target - std::floor(target), i};
    assigned += sizes[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[remainders[i % k].second];

  std::vector<Dataset> parts(k);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < k; ++i) {
    parts[i].role = dataset.role;
    parts[i].L = dataset.L;
    parts[i].d = dataset.d;
    parts[i].seed = seed;
    parts[i].spec_digest = dataset.spec_digest;
    parts[i].samples.reserve(sizes[i]);
    for (std::size_t j = 0; j < sizes[i]; ++j)
      parts[i].samples.push_back(dataset.samples[perm[cursor++]]);
  }
  return parts;
}

/// Run outcome for one (method, seed) cell; metrics are attached per role
/// by the evaluation layer.
struct RunRecord {
  std::string method;
  std::string config_echo;   // JSON text of the config that produced the run
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

}  // namespace dba
