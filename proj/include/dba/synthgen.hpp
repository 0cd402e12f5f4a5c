#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/rng.hpp"

namespace dba {

/// Fully enumerable generative family: a finite feature alphabet of size K,
/// a class prior, a minority share for the training composition, and one
/// conditional table p(x | y, s) shared by every role. Emitted features are
/// one-hot over the alphabet.
struct DiscreteGenSpec {
  int L = 2;
  int K = 2;
  double p_m0 = 0.5;
  std::vector<double> p_y;
  std::vector<double> cond;  // (y*L + s)*K + k  ->  p(x = k | y, s)
  std::uint64_t seed = 0;

  double cond_at(int k, int y, int s) const {
    return cond[(static_cast<std::size_t>(y) * L + s) * K + k];
  }
  double& cond_at(int k, int y, int s) {
    return cond[(static_cast<std::size_t>(y) * L + s) * K + k];
  }
  std::span<const double> cond_column(int y, int s) const {
    return {cond.data() + (static_cast<std::size_t>(y) * L + s) * K,
            static_cast<std::size_t>(K)};
  }

  void validate() const {
    require(L >= 2, Err::BadArgument, "spec needs L >= 2");
    require(K >= 2, Err::BadArgument, "spec needs K >= 2");
    require(p_m0 >= 0.0 && p_m0 <= 1.0, Err::BadArgument, "p_m0 outside [0,1]");
    require(static_cast<int>(p_y.size()) == L, Err::DimensionMismatch, "p_y length != L");
    double sum = 0.0;
    for (double v : p_y) {
      require(v >= 0.0, Err::BadArgument, "p_y entries must be nonnegative");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-12, Err::BadArgument, "p_y must sum to 1");
    require(cond.size() == static_cast<std::size_t>(K) * L * L, Err::DimensionMismatch,
            "cond table size != K*L*L");
    for (int y = 0; y < L; ++y)
      for (int s = 0; s < L; ++s) {
        double col = 0.0;
        for (int k = 0; k < K; ++k) {
          const double v = cond_at(k, y, s);
          require(v >= 0.0, Err::BadArgument, "cond entries must be nonnegative");
          col += v;
        }
        require(std::abs(col - 1.0) <= 1e-12, Err::BadArgument,
                "cond column (y=" + std::to_string(y) + ",s=" + std::to_string(s) +
                    ") must sum to 1");
      }
  }
};

/// Continuous analogue used for end-to-end training runs: the feature is a
/// label-driven core block concatenated with an attribute-driven block.
/// A small sigma_spur makes the attribute channel the easier signal, which
/// is what pulls an uncorrected trainer off the labels.
struct GaussianGenSpec {
  int L = 2;
  int d_core = 2;
  int d_spur = 2;
  std::vector<std::vector<double>> core_means;  // L x d_core
  std::vector<std::vector<double>> spur_means;  // L x d_spur
  double sigma_core = 1.0;
  double sigma_spur = 0.1;
  double p_m0 = 0.5;
  std::vector<double> p_y;
  std::uint64_t seed = 0;

  void validate() const {
    require(L >= 2, Err::BadArgument, "spec needs L >= 2");
    require(d_core >= 1 && d_spur >= 1, Err::BadArgument, "block dims must be >= 1");
    require(sigma_core > 0.0 && sigma_spur > 0.0, Err::BadArgument, "sigmas must be positive");
    require(p_m0 >= 0.0 && p_m0 <= 1.0, Err::BadArgument, "p_m0 outside [0,1]");
    require(static_cast<int>(p_y.size()) == L, Err::DimensionMismatch, "p_y length != L");
    double sum = 0.0;
    for (double v : p_y) {
      require(v >= 0.0, Err::BadArgument, "p_y entries must be nonnegative");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-12, Err::BadArgument, "p_y must sum to 1");
    require(static_cast<int>(core_means.size()) == L &&
                static_cast<int>(spur_means.size()) == L,
            Err::DimensionMismatch, "means need one row per class");
    for (const auto& m : core_means) {
      require(static_cast<int>(m.size()) == d_core, Err::DimensionMismatch,
              "core mean dimension != d_core");
      for (double v : m) require(std::isfinite(v), Err::BadArgument, "non-finite mean");
    }
    for (const auto& m : spur_means) {
      require(static_cast<int>(m.size()) == d_spur, Err::DimensionMismatch,
              "spur mean dimension != d_spur");
      for (double v : m) require(std::isfinite(v), Err::BadArgument, "non-finite mean");
    }
  }
};

namespace detail {

inline std::uint64_t role_salt(DatasetRole role) {
  switch (role) {
    case DatasetRole::Train: return 0x7261696Eull;
    case DatasetRole::Val: return 0x76616C00ull;
    case DatasetRole::Test: return 0x74657374ull;
  }
  return 0;
}

/// (m, y, s) law shared by both families. Training and validation draw the
/// group first; the test law is all-minority with a uniform attribute.
struct GroupDraw {
  int m, y, s;
};

inline GroupDraw draw_group(Rng& rng, double p_m0, std::span<const double> p_y, int L,
                            DatasetRole role) {
  GroupDraw out{};
  if (role == DatasetRole::Test) {
    out.m = kGroupMinority;
    out.y = rng.categorical(p_y);
    out.s = rng.uniform_int(L);
    return out;
  }
  out.m = (rng.uniform() < p_m0) ? kGroupMinority : kGroupMajority;
  out.y = rng.categorical(p_y);
  out.s = (out.m == kGroupMajority) ? out.y : rng.uniform_int(L);
  return out;
}

}  // namespace detail

/// Draw sample #index of the discrete family. Each sample owns one RNG
/// stream keyed by (seed, role, index), so generation order is irrelevant.
inline Sample gen_discrete_sample(const DiscreteGenSpec& spec, std::uint64_t seed,
                                  DatasetRole role, std::uint64_t index) {
  Rng rng(mix64(seed) ^ detail::role_salt(role), index);
  const auto draw = detail::draw_group(rng, spec.p_m0, spec.p_y, spec.L, role);
  const int k = rng.categorical(spec.cond_column(draw.y, draw.s));
  Sample smp;
  smp.x.assign(spec.K, 0.0);
  smp.x[k] = 1.0;
  smp.y = draw.y;
  smp.s = draw.s;
  smp.m = draw.m;
  return smp;
}

inline Dataset gen_discrete(const DiscreteGenSpec& spec, std::size_t n, DatasetRole role,
                            std::uint64_t seed_override = 0, bool use_override = false) {
  spec.validate();
  require(n >= 1, Err::BadArgument, "need n >= 1");
  const std::uint64_t seed = use_override ? seed_override : spec.seed;
  Dataset ds;
  ds.role = role;
  ds.L = spec.L;
  ds.d = spec.K;
  ds.seed = seed;
  ds.samples.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i)
    ds.samples.push_back(gen_discrete_sample(spec, seed, role, i));
  return ds;
}

/// Draw sample #index of the Gaussian family; same stream keying as the
/// discrete generator.
inline Sample gen_gaussian_sample(const GaussianGenSpec& spec, std::uint64_t seed,
                                  DatasetRole role, std::uint64_t index) {
  Rng rng(mix64(seed) ^ detail::role_salt(role), index);
  const auto draw = detail::draw_group(rng, spec.p_m0, spec.p_y, spec.L, role);
  Sample smp;
  smp.x.resize(static_cast<std::size_t>(spec.d_core) + spec.d_spur);
  for (int j = 0; j < spec.d_core; ++j)
    smp.x[j] = spec.core_means[draw.y][j] + spec.sigma_core * rng.normal();
  for (int j = 0; j < spec.d_spur; ++j)
    smp.x[spec.d_core + j] = spec.spur_means[draw.s][j] + spec.sigma_spur * rng.normal();
  smp.y = draw.y;
  smp.s = draw.s;
  smp.m = draw.m;
  return smp;
}

inline Dataset gen_gaussian(const GaussianGenSpec& spec, std::size_t n, DatasetRole role,
                            std::uint64_t seed_override = 0, bool use_override = false) {
  spec.validate();
  require(n >= 1, Err::BadArgument, "need n >= 1");
  const std::uint64_t seed = use_override ? seed_override : spec.seed;
  Dataset ds;
  ds.role = role;
  ds.L = spec.L;
  ds.d = spec.d_core + spec.d_spur;
  ds.seed = seed;
  ds.samples.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i)
    ds.samples.push_back(gen_gaussian_sample(spec, seed, role, i));
  return ds;
}

}  // namespace dba
