#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dba/oracle.hpp"
#include "dba/synthgen.hpp"
#include "test_support.hpp"

using namespace dba;

namespace {

DiscreteGenSpec four_class_spec(double p_m0) {
  DiscreteGenSpec spec;
  spec.L = 4;
  spec.K = 4;
  spec.p_m0 = p_m0;
  spec.p_y = {0.25, 0.25, 0.25, 0.25};
  spec.seed = 31;
  spec.cond.resize(static_cast<std::size_t>(spec.K) * spec.L * spec.L);
  for (int y = 0; y < spec.L; ++y)
    for (int s = 0; s < spec.L; ++s)
      for (int k = 0; k < spec.K; ++k) spec.cond_at(k, y, s) = (k == s) ? 0.7 : 0.1;
  return spec;
}

GaussianGenSpec small_gaussian_spec() {
  GaussianGenSpec spec;
  spec.L = 3;
  spec.d_core = 2;
  spec.d_spur = 2;
  spec.sigma_core = 1.0;
  spec.sigma_spur = 0.2;
  spec.p_m0 = 0.1;
  spec.p_y = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  spec.seed = 5;
  for (int c = 0; c < 3; ++c) {
    spec.core_means.push_back({2.0 * std::cos(2.1 * c), 2.0 * std::sin(2.1 * c)});
    spec.spur_means.push_back({1.5 * std::cos(2.1 * c + 1.0), 1.5 * std::sin(2.1 * c + 1.0)});
  }
  return spec;
}

}  // namespace

TEST_CASE("all-minority training set has uniform attributes per class") {
  // chi-square against uniform, pooled over class strata; 99% quantile for
  // L*(L-1) = 12 degrees of freedom is 26.217.
  auto spec = four_class_spec(1.0);
  const Dataset ds = gen_discrete(spec, 100000, DatasetRole::Train);
  std::vector<std::vector<int>> counts(spec.L, std::vector<int>(spec.L, 0));
  std::vector<int> class_totals(spec.L, 0);
  for (const Sample& smp : ds.samples) {
    ++counts[smp.y][smp.s];
    ++class_totals[smp.y];
  }
  double chi2 = 0.0;
  for (int y = 0; y < spec.L; ++y)
    for (int s = 0; s < spec.L; ++s) {
      const double expected = static_cast<double>(class_totals[y]) / spec.L;
      const double diff = counts[y][s] - expected;
      chi2 += diff * diff / expected;
    }
  CHECK(chi2 < 26.216967305535853);
}

TEST_CASE("no-minority training set locks the attribute to the label") {
  auto spec = four_class_spec(0.0);
  const Dataset ds = gen_discrete(spec, 5000, DatasetRole::Train);
  for (const Sample& smp : ds.samples) {
    CHECK(smp.s == smp.y);
    CHECK(smp.m == kGroupMajority);
  }
}

TEST_CASE("test role draws attributes uniformly") {
  auto spec = four_class_spec(0.3);
  const std::size_t n = 100000;
  const Dataset ds = gen_discrete(spec, n, DatasetRole::Test);
  std::vector<int> s_counts(spec.L, 0);
  for (const Sample& smp : ds.samples) {
    ++s_counts[smp.s];
    CHECK(smp.m == kGroupMinority);
  }
  const double p = 1.0 / spec.L;
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
  for (int s = 0; s < spec.L; ++s) {
    const double freq = static_cast<double>(s_counts[s]) / static_cast<double>(n);
    CHECK(std::abs(freq - p) < 3 * se);
  }
}

TEST_CASE("majority group tags imply s == y") {
  auto spec = four_class_spec(0.4);
  for (const DatasetRole role : {DatasetRole::Train, DatasetRole::Val}) {
    const Dataset ds = gen_discrete(spec, 20000, role);
    for (const Sample& smp : ds.samples)
      if (smp.m == kGroupMajority) CHECK(smp.s == smp.y);
  }
}

TEST_CASE("empirical joint matches the exact enumeration table") {
  auto spec = four_class_spec(0.35);
  const std::size_t n = 100000;
  for (const DatasetRole role : {DatasetRole::Train, DatasetRole::Test}) {
    const Dataset ds = gen_discrete(spec, n, role);
    const JointTable exact = exact_joint(spec, role);
    std::vector<double> emp(static_cast<std::size_t>(spec.K) * spec.L, 0.0);
    for (const Sample& smp : ds.samples) {
      int k = 0;
      while (smp.x[k] == 0.0) ++k;
      emp[static_cast<std::size_t>(k) * spec.L + smp.y] += 1.0;
    }
    for (std::size_t i = 0; i < emp.size(); ++i) {
      const double freq = emp[i] / static_cast<double>(n);
      const double p = exact.p[i];
      const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
      CHECK(std::abs(freq - p) < 4 * se + 1e-12);
    }
  }
}

TEST_CASE("discrete generation is bit-identical given seed and spec") {
  auto spec = four_class_spec(0.25);
  const Dataset a = gen_discrete(spec, 4096, DatasetRole::Train);
  const Dataset b = gen_discrete(spec, 4096, DatasetRole::Train);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].x == b.samples[i].x);
    CHECK(a.samples[i].y == b.samples[i].y);
    CHECK(a.samples[i].s == b.samples[i].s);
    CHECK(a.samples[i].m == b.samples[i].m);
  }
}

TEST_CASE("per-sample streams make generation order irrelevant") {
  auto spec = four_class_spec(0.25);
  const Dataset forward = gen_discrete(spec, 512, DatasetRole::Train);
  // Draw the same indices in reverse; each must reproduce its row exactly.
  for (std::size_t i = 512; i-- > 0;) {
    const Sample smp = gen_discrete_sample(spec, spec.seed, DatasetRole::Train, i);
    CHECK(smp.x == forward.samples[i].x);
    CHECK(smp.y == forward.samples[i].y);
    CHECK(smp.s == forward.samples[i].s);
    CHECK(smp.m == forward.samples[i].m);
  }
}

TEST_CASE("roles draw from distinct streams") {
  auto spec = four_class_spec(0.25);
  const Dataset tr = gen_discrete(spec, 256, DatasetRole::Train);
  const Dataset va = gen_discrete(spec, 256, DatasetRole::Val);
  int diff = 0;
  for (std::size_t i = 0; i < 256; ++i)
    if (tr.samples[i].y != va.samples[i].y || tr.samples[i].s != va.samples[i].s) ++diff;
  CHECK(diff > 0);
}

TEST_CASE("gaussian spur block collapses onto the label mean when p_m0 = 0") {
  auto spec = small_gaussian_spec();
  spec.p_m0 = 0.0;
  spec.sigma_spur = 1e-12;
  const Dataset ds = gen_gaussian(spec, 500, DatasetRole::Train);
  for (const Sample& smp : ds.samples) {
    CHECK(smp.s == smp.y);
    for (int j = 0; j < spec.d_spur; ++j)
      CHECK(std::abs(smp.x[spec.d_core + j] - spec.spur_means[smp.y][j]) < 1e-9);
  }
}

TEST_CASE("vanishing noise makes a nearest-mean rule on the core block exact") {
  auto spec = small_gaussian_spec();
  spec.sigma_core = 1e-9;
  spec.sigma_spur = 1e-9;
  for (const DatasetRole role : {DatasetRole::Train, DatasetRole::Test}) {
    const Dataset ds = gen_gaussian(spec, 2000, role);
    for (const Sample& smp : ds.samples) {
      int best = 0;
      double best_d = 1e300;
      for (int c = 0; c < spec.L; ++c) {
        double d2 = 0.0;
        for (int j = 0; j < spec.d_core; ++j) {
          const double diff = smp.x[j] - spec.core_means[c][j];
          d2 += diff * diff;
        }
        if (d2 < best_d) {
          best_d = d2;
          best = c;
        }
      }
      CHECK(best == smp.y);
    }
  }
}

TEST_CASE("gaussian generation is bit-identical given seed and spec") {
  auto spec = small_gaussian_spec();
  const Dataset a = gen_gaussian(spec, 1024, DatasetRole::Test);
  const Dataset b = gen_gaussian(spec, 1024, DatasetRole::Test);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.samples[i].x == b.samples[i].x);
}
