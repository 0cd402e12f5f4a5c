#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/rng.hpp"
#include "dba/synthgen.hpp"
#include "dba/tables.hpp"
#include "dba/weights.hpp"

namespace dba {

/// Exact joint p(x, y) of the discrete family for one role, by direct
/// summation over the attribute. Tables are tiny, so everything stays in
/// plain double sums.
inline JointTable exact_joint(const DiscreteGenSpec& spec, DatasetRole role) {
  spec.validate();
  JointTable t(spec.K, spec.L, role);
  for (int k = 0; k < spec.K; ++k)
    for (int y = 0; y < spec.L; ++y) {
      double p = 0.0;
      if (role == DatasetRole::Test) {
        for (int s = 0; s < spec.L; ++s) p += spec.cond_at(k, y, s);
        p *= spec.p_y[y] / spec.L;
      } else {
        for (int s = 0; s < spec.L; ++s) {
          const double mass = (1.0 - spec.p_m0) * spec.p_y[y] * (s == y ? 1.0 : 0.0) +
                              spec.p_m0 * spec.p_y[y] / spec.L;
          p += spec.cond_at(k, y, s) * mass;
        }
      }
      t.at(k, y) = p;
    }
  return t;
}

/// Exact rho(x, y) = p(s = y | y, x) under the training law.
inline PosteriorTable exact_spurious_posterior(const DiscreteGenSpec& spec) {
  spec.validate();
  PosteriorTable t(spec.K, spec.L);
  for (int k = 0; k < spec.K; ++k)
    for (int y = 0; y < spec.L; ++y) {
      double num = 0.0, den = 0.0;
      for (int s = 0; s < spec.L; ++s) {
        const double mass = (1.0 - spec.p_m0) * spec.p_y[y] * (s == y ? 1.0 : 0.0) +
                            spec.p_m0 * spec.p_y[y] / spec.L;
        const double joint = spec.cond_at(k, y, s) * mass;
        den += joint;
        if (s == y) num = joint;
      }
      require(den > 0.0, Err::ZeroDenominator,
              "training mass zero at cell (x=" + std::to_string(k) +
                  ",y=" + std::to_string(y) + ")");
      t.at(k, y) = num / den;
    }
  return t;
}

/// Exact train-to-test density ratio per cell; 0 outside the test support.
inline RatioTable exact_weight(const DiscreteGenSpec& spec) {
  const JointTable tr = exact_joint(spec, DatasetRole::Train);
  const JointTable te = exact_joint(spec, DatasetRole::Test);
  RatioTable g(tr.K, tr.L);
  for (std::size_t i = 0; i < g.g.size(); ++i) {
    if (te.p[i] == 0.0) {
      g.g[i] = 0.0;
    } else {
      require(tr.p[i] > 0.0, Err::SupportViolation,
              "test mass on a cell with zero training mass");
      g.g[i] = te.p[i] / tr.p[i];
    }
  }
  return g;
}

/// Comparison outcome of a closed form against exact enumeration.
struct CheckReport {
  std::string check;
  int trials = 1;
  double max_rel_err = 0.0;
  double max_identity_err = 0.0;  // used by checks that also verify an objective identity
  int worst_k = -1;
  int worst_y = -1;
  bool pass = false;
};

/// Closed-form correction weight at the exact posterior versus the exact
/// density ratio, over the test support.
inline CheckReport check_theorem1(const DiscreteGenSpec& spec, double tol,
                                  WeightForm form = WeightForm::Corrected) {
  const RatioTable exact = exact_weight(spec);
  const PosteriorTable rho = exact_spurious_posterior(spec);

  TrainStats stats;
  stats.p_m0 = spec.p_m0;
  stats.p_y = spec.p_y;
  stats.L = spec.L;
  stats.tau = 1.0;

  std::vector<double> rho_cells;
  std::vector<int> y_cells;
  std::vector<std::size_t> cell_index;
  for (int k = 0; k < spec.K; ++k)
    for (int y = 0; y < spec.L; ++y) {
      if (exact.at(k, y) == 0.0) continue;
      rho_cells.push_back(rho.at(k, y));
      y_cells.push_back(y);
      cell_index.push_back(static_cast<std::size_t>(k) * spec.L + y);
    }

  const WeightVector closed =
      theorem1_weight(SpuriousPosteriorVector(rho_cells, /*clamp=*/false), y_cells, stats, form);

  CheckReport rep;
  rep.check = form == WeightForm::Corrected ? "theorem1" : "theorem1-maintext";
  for (std::size_t i = 0; i < closed.size(); ++i) {
    const double ref = exact.g[cell_index[i]];
    const double err = std::abs(closed.values[i] - ref) / ref;
    if (err > rep.max_rel_err) {
      rep.max_rel_err = err;
      rep.worst_k = static_cast<int>(cell_index[i] / spec.L);
      rep.worst_y = static_cast<int>(cell_index[i] % spec.L);
    }
  }
  rep.pass = rep.max_rel_err <= tol;
  return rep;
}

/// Closed form g = 1 / (L * p(y, s=y | x)) versus the exact ratio, on the
/// subfamily where it is exact: uniform class prior, majority-only
/// training composition, and a conditional table that depends on the
/// attribute alone. Also asserts the three-term objective decomposition
/// against g * log q for an arbitrary seeded q table.
inline CheckReport check_theorem2(const DiscreteGenSpec& spec, double tol,
                                  std::uint64_t q_seed = 17) {
  spec.validate();
  for (double v : spec.p_y)
    require(std::abs(v - 1.0 / spec.L) <= 1e-12, Err::PreconditionViolation,
            "check_theorem2 needs a uniform class prior");
  require(spec.p_m0 == 0.0, Err::PreconditionViolation,
          "check_theorem2 needs a majority-only training composition");
  for (int k = 0; k < spec.K; ++k)
    for (int s = 0; s < spec.L; ++s)
      for (int y = 1; y < spec.L; ++y)
        require(std::abs(spec.cond_at(k, y, s) - spec.cond_at(k, 0, s)) <= 1e-12,
                Err::PreconditionViolation,
                "check_theorem2 needs a conditional table that depends on the attribute only");

  const RatioTable exact = exact_weight(spec);

  // Training marginal p(x); with a majority-only composition only s = y
  // carries mass.
  std::vector<double> p_x(spec.K, 0.0);
  for (int k = 0; k < spec.K; ++k)
    for (int y = 0; y < spec.L; ++y) p_x[k] += spec.cond_at(k, y, y) * spec.p_y[y];

  // Arbitrary predictive table for the objective identity.
  Rng rng(q_seed, 0x9ull);
  std::vector<double> q_table(static_cast<std::size_t>(spec.K) * spec.L);
  for (int k = 0; k < spec.K; ++k) {
    double col = 0.0;
    for (int y = 0; y < spec.L; ++y) {
      const double v = 0.05 + rng.uniform();
      q_table[static_cast<std::size_t>(k) * spec.L + y] = v;
      col += v;
    }
    for (int y = 0; y < spec.L; ++y) q_table[static_cast<std::size_t>(k) * spec.L + y] /= col;
  }

  CheckReport rep;
  rep.check = "theorem2";
  for (int k = 0; k < spec.K; ++k)
    for (int y = 0; y < spec.L; ++y) {
      const double ref = exact.at(k, y);
      if (ref == 0.0) continue;
      const double joint_sy = spec.cond_at(k, y, y) * spec.p_y[y];  // p(x, y, s=y)
      require(p_x[k] > 0.0, Err::ZeroDenominator, "zero training marginal");
      const double p_joint = joint_sy / p_x[k];  // p(y, s=y | x)
      const double g_closed = 1.0 / (spec.L * p_joint);
      const double err = std::abs(g_closed - ref) / ref;
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_k = k;
        rep.worst_y = y;
      }

      const double logq = std::log(q_table[static_cast<std::size_t>(k) * spec.L + y]);
      const double direct = g_closed * logq;
      const double three_term = g_closed * (logq + std::log(p_joint)) +
                                g_closed * std::log(spec.L * g_closed);
      rep.max_identity_err = std::max(rep.max_identity_err, std::abs(direct - three_term));
    }
  rep.pass = rep.max_rel_err <= tol && rep.max_identity_err <= 1e-12;
  return rep;
}

/// Two-group family for the mixture-weight check: both groups share one
/// feature marginal, the test law equals the minority group's law.
struct TwoGroupSpec {
  int K = 2;
  int L = 2;
  double p_m0 = 0.5;
  std::vector<double> p_x;    // shared feature marginal, length K
  std::vector<double> cond0;  // k*L + y -> p(y | x=k, minority)
  std::vector<double> cond1;  // k*L + y -> p(y | x=k, majority)

  double cond0_at(int k, int y) const { return cond0[static_cast<std::size_t>(k) * L + y]; }
  double cond1_at(int k, int y) const { return cond1[static_cast<std::size_t>(k) * L + y]; }

  void validate() const {
    require(K >= 1 && L >= 2, Err::BadArgument, "TwoGroupSpec needs K >= 1, L >= 2");
    require(p_m0 >= 0.0 && p_m0 <= 1.0, Err::BadArgument, "p_m0 outside [0,1]");
    require(static_cast<int>(p_x.size()) == K, Err::DimensionMismatch, "p_x length != K");
    double sum = 0.0;
    for (double v : p_x) {
      require(v > 0.0, Err::BadArgument, "p_x entries must be positive");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-12, Err::BadArgument, "p_x must sum to 1");
    require(cond0.size() == static_cast<std::size_t>(K) * L &&
                cond1.size() == static_cast<std::size_t>(K) * L,
            Err::DimensionMismatch, "conditional tables must be K*L");
    for (int k = 0; k < K; ++k) {
      double c0 = 0.0, c1 = 0.0;
      for (int y = 0; y < L; ++y) {
        require(cond0_at(k, y) > 0.0 && cond1_at(k, y) > 0.0, Err::BadArgument,
                "conditional entries must be positive");
        c0 += cond0_at(k, y);
        c1 += cond1_at(k, y);
      }
      require(std::abs(c0 - 1.0) <= 1e-12 && std::abs(c1 - 1.0) <= 1e-12, Err::BadArgument,
              "conditional columns must sum to 1");
    }
  }
};

/// Mixture-coefficient closed form versus the exact two-group ratio. Also
/// reports whether some cell has lam0 + lam1 != 1, which the closed form
/// does not require.
inline CheckReport check_theorem3(const TwoGroupSpec& spec, double tol) {
  spec.validate();
  CheckReport rep;
  rep.check = "theorem3";
  bool lambda_sum_off_one = false;
  for (int k = 0; k < spec.K; ++k)
    for (int y = 0; y < spec.L; ++y) {
      // Exact route: enumerate both joints. Test law = minority law.
      const double p_tr = spec.p_x[k] * (spec.p_m0 * spec.cond0_at(k, y) +
                                         (1.0 - spec.p_m0) * spec.cond1_at(k, y));
      const double p_te = spec.p_x[k] * spec.cond0_at(k, y);
      const double g_exact = p_te / p_tr;

      // Closed-form route through the mixture coefficients.
      const double lam0 = spec.p_m0 / spec.p_x[k];
      const double lam1 =
          (1.0 - spec.p_m0) * spec.cond1_at(k, y) / (spec.cond0_at(k, y) * spec.p_x[k]);
      const double g_closed = augmentation_weight(lam0, lam1, spec.p_x[k]);

      const double err = std::abs(g_closed - g_exact) / g_exact;
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_k = k;
        rep.worst_y = y;
      }
      if (std::abs(lam0 + lam1 - 1.0) > 1e-9) lambda_sum_off_one = true;
    }
  rep.max_identity_err = lambda_sum_off_one ? 1.0 : 0.0;  // repurposed as a flag
  rep.pass = rep.max_rel_err <= tol;
  return rep;
}

/// Importance-sampling identity: sum p_src * w * f == sum p_dst * f for
/// `trials` random bounded test functions. Returns the max absolute gap.
inline double identity_max_abs_err(const JointTable& p_src, const RatioTable& w,
                                   const JointTable& p_dst, int trials, std::uint64_t seed) {
  require(p_src.K == p_dst.K && p_src.L == p_dst.L && w.K == p_src.K && w.L == p_src.L,
          Err::DimensionMismatch, "table shapes differ");
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed, static_cast<std::uint64_t>(t));
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < p_src.p.size(); ++i) {
      const double f = 2.0 * rng.uniform() - 1.0;
      lhs += p_src.p[i] * w.g[i] * f;
      rhs += p_dst.p[i] * f;
    }
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

/// Random conforming spec for randomized oracle sweeps. Conditional columns
/// are interior simplex points, so every cell carries mass and the support
/// ordering holds by construction.
inline DiscreteGenSpec random_discrete_spec(std::uint64_t seed, int max_L = 5, int max_K = 64) {
  Rng rng(seed, 0xD15Cull);
  DiscreteGenSpec spec;
  spec.L = 2 + rng.uniform_int(max_L - 1);
  spec.K = 2 + rng.uniform_int(max_K - 1);
  spec.p_m0 = 0.001 + 0.998 * rng.uniform();
  spec.seed = seed;

  auto simplex = [&rng](int n) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (double& e : v) {
      e = 0.05 + rng.uniform();
      sum += e;
    }
    double acc = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      v[i] /= sum;
      acc += v[i];
    }
    v[n - 1] = 1.0 - acc;  // exact simplex closure
    return v;
  };

  spec.p_y = simplex(spec.L);
  spec.cond.resize(static_cast<std::size_t>(spec.K) * spec.L * spec.L);
  for (int y = 0; y < spec.L; ++y)
    for (int s = 0; s < spec.L; ++s) {
      const auto col = simplex(spec.K);
      for (int k = 0; k < spec.K; ++k) spec.cond_at(k, y, s) = col[k];
    }
  return spec;
}

/// Random spec on the subfamily where the logit-adjustment closed form is
/// exact (attribute-only conditionals, uniform classes, no minority mass).
inline DiscreteGenSpec random_attribute_only_spec(std::uint64_t seed, int max_L = 5,
                                                  int max_K = 16) {
  DiscreteGenSpec spec = random_discrete_spec(seed, max_L, max_K);
  spec.p_m0 = 0.0;
  for (int y = 0; y < spec.L; ++y) spec.p_y[y] = 1.0 / spec.L;
  // Collapse the label axis: p(x | y, s) := p(x | 0, s).
  for (int y = 1; y < spec.L; ++y)
    for (int s = 0; s < spec.L; ++s)
      for (int k = 0; k < spec.K; ++k) spec.cond_at(k, y, s) = spec.cond_at(k, 0, s);
  return spec;
}

inline TwoGroupSpec random_two_group_spec(std::uint64_t seed, int max_L = 5, int max_K = 16) {
  Rng rng(seed, 0x2612ull);
  TwoGroupSpec spec;
  spec.L = 2 + rng.uniform_int(max_L - 1);
  spec.K = 2 + rng.uniform_int(max_K - 1);
  spec.p_m0 = 0.05 + 0.9 * rng.uniform();

  auto simplex = [&rng](int n) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (double& e : v) {
      e = 0.05 + rng.uniform();
      sum += e;
    }
    double acc = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      v[i] /= sum;
      acc += v[i];
    }
    v[n - 1] = 1.0 - acc;
    return v;
  };

  spec.p_x = simplex(spec.K);
  spec.cond0.resize(static_cast<std::size_t>(spec.K) * spec.L);
  spec.cond1.resize(static_cast<std::size_t>(spec.K) * spec.L);
  for (int k = 0; k < spec.K; ++k) {
    const auto c0 = simplex(spec.L);
    const auto c1 = simplex(spec.L);
    for (int y = 0; y < spec.L; ++y) {
      spec.cond0[static_cast<std::size_t>(k) * spec.L + y] = c0[y];
      spec.cond1[static_cast<std::size_t>(k) * spec.L + y] = c1[y];
    }
  }
  return spec;
}

}  // namespace dba
