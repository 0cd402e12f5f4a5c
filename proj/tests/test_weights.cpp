#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dba/oracle.hpp"
#include "dba/rng.hpp"
#include "dba/synthgen.hpp"
#include "dba/weights.hpp"
#include "test_support.hpp"

using namespace dba;

namespace {

TrainStats stats_of(double p_m0, std::vector<double> p_y, double tau = 1.0) {
  TrainStats s;
  s.p_m0 = p_m0;
  s.p_y = std::move(p_y);
  s.L = static_cast<int>(s.p_y.size());
  s.tau = tau;
  return s;
}

double weight_at(double rho, int y, const TrainStats& stats,
                 WeightForm form = WeightForm::Corrected, bool clamp = false) {
  return theorem1_weight(SpuriousPosteriorVector({rho}, clamp), std::vector<int>{y}, stats,
                         form)
      .values[0];
}

Dataset labeled_dataset(const std::vector<int>& ys, int L,
                        const std::vector<int>& ss = {}) {
  Dataset ds;
  ds.L = L;
  ds.d = 1;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    Sample s;
    s.x = {0.0};
    s.y = ys[i];
    s.s = ss.empty() ? kUnknown : ss[i];
    ds.samples.push_back(s);
  }
  return ds;
}

}  // namespace

TEST_CASE("closed-form weight at full spurious alignment") {
  // rho = 1 collapses the denominator to 1: 1/g = p_m0 + (1-p_m0) * L.
  const auto stats = stats_of(0.005, std::vector<double>(10, 0.1));
  const double g = weight_at(1.0, 3, stats);
  CHECK_THAT(1.0 / g, Catch::Matchers::WithinRel(9.955, 1e-12));
  CHECK_THAT(g, Catch::Matchers::WithinRel(0.10045203415369161, 1e-12));
}

TEST_CASE("all-minority composition gives exactly unit weights") {
  const auto stats = stats_of(1.0, {0.3, 0.7});
  for (double rho : {1e-6, 0.3, 0.9, 1.0}) CHECK(weight_at(rho, 0, stats) == 1.0);
}

TEST_CASE("closed-form weight matches the worked enumeration cell") {
  const auto stats = stats_of(0.2, {0.5, 0.5});
  const double g = weight_at(0.405 / 0.41, 0, stats);
  CHECK_THAT(1.0 / g, Catch::Matchers::WithinRel(1.64, 1e-12));
  CHECK_THAT(g, Catch::Matchers::WithinRel(0.6097560975609756, 1e-12));
}

TEST_CASE("weight is strictly decreasing in the spurious posterior") {
  Rng rng(404, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int L = 2 + rng.uniform_int(4);
    std::vector<double> p_y(L);
    double sum = 0.0;
    for (double& v : p_y) {
      v = 0.1 + rng.uniform();
      sum += v;
    }
    double acc = 0.0;
    for (int i = 0; i + 1 < L; ++i) {
      p_y[i] /= sum;
      acc += p_y[i];
    }
    p_y[L - 1] = 1.0 - acc;
    const auto stats = stats_of(0.01 + 0.98 * rng.uniform(), p_y);
    const int y = rng.uniform_int(L);

    double prev = weight_at(1e-6, y, stats);
    for (int i = 1; i < 1000; ++i) {
      const double rho = 1e-6 + (1.0 - 1e-6) * i / 999.0;
      const double g = weight_at(rho, y, stats);
      CHECK(g < prev);
      prev = g;
    }
  }
}

TEST_CASE("weight endpoints match the analytic limits") {
  Rng rng(808, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const double p_m0 = 0.01 + 0.9 * rng.uniform();
    const double py = 0.2 + 0.6 * rng.uniform();
    const auto stats = stats_of(p_m0, {py, 1.0 - py});
    const double a = (py - p_m0 * py) / (1.0 - p_m0);

    // rho -> 0: the correction term vanishes and g -> 1/p_m0.
    const double g_lo = weight_at(1e-15, 0, stats);
    CHECK_THAT(g_lo, Catch::Matchers::WithinRel(1.0 / p_m0, 1e-9));

    // rho = 1: 1/g = p_m0 + (1-p_m0) * L * a / p_y.
    const double g_hi = weight_at(1.0, 0, stats);
    CHECK_THAT(g_hi, Catch::Matchers::WithinRel(
                         1.0 / (p_m0 + (1.0 - p_m0) * 2.0 * a / py), 1e-9));
  }
}

TEST_CASE("closed form at exact posteriors reproduces exact ratios") {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    const auto spec = random_discrete_spec(seed);
    CHECK(check_theorem1(spec, 1e-9).pass);
  }
}

TEST_CASE("posterior clamping keeps weights finite") {
  const auto stats = stats_of(0.1, {0.5, 0.5});
  const SpuriousPosteriorVector rho({0.0, -3.0, 2.0});  // clamped to [1e-6, 1]
  CHECK(rho.values[0] == kRhoFloor);
  CHECK(rho.values[1] == kRhoFloor);
  CHECK(rho.values[2] == 1.0);
  const WeightVector w = theorem1_weight(rho, std::vector<int>{0, 1, 0}, stats);
  for (double v : w.values) CHECK(std::isfinite(v));
  // Unclamped construction refuses out-of-range values instead.
  CHECK_THROWS_AS(SpuriousPosteriorVector({0.0}, /*clamp=*/false), Error);
}

TEST_CASE("z_ratio table behavior") {
  const auto spec = testsupport::worked_spec();
  const JointTable te = exact_joint(spec, DatasetRole::Test);

  const RatioTable unit = z_ratio(te, te);
  for (double v : unit.g) CHECK(v == 1.0);

  const JointTable tr = exact_joint(spec, DatasetRole::Train);
  const RatioTable z = z_ratio(tr, te);
  CHECK_THAT(z.at(0, 0), Catch::Matchers::WithinRel(0.25 / 0.41, 1e-15));

  JointTable te_zero = te;
  te_zero.at(0, 0) = 0.0;
  CHECK(z_ratio(tr, te_zero).at(0, 0) == 0.0);

  JointTable va_zero = tr;
  va_zero.at(0, 0) = 0.0;
  CHECK_THROWS_MATCHES(z_ratio(va_zero, te), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == Err::SupportViolation; }));
}

TEST_CASE("class-balance weights") {
  const auto uniform = labeled_dataset({0, 1, 0, 1}, 2);
  for (double v : class_balance_weight(uniform).values) CHECK(v == 1.0);

  std::vector<int> ys(4, 0);
  ys[3] = 1;
  const WeightVector w = class_balance_weight(labeled_dataset(ys, 2));
  CHECK_THAT(w.values[0], Catch::Matchers::WithinRel(1.0 / (2.0 * 0.75), 1e-15));
  CHECK_THAT(w.values[3], Catch::Matchers::WithinRel(2.0, 1e-15));

  CHECK_THROWS_MATCHES(class_balance_weight(labeled_dataset({0, 0}, 2)), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == Err::ZeroCountClass; }));
}

TEST_CASE("class-balance weights make the weighted class mass uniform") {
  auto spec = testsupport::worked_spec();
  spec.p_y = {0.8, 0.2};
  const Dataset ds = gen_discrete(spec, 10000, DatasetRole::Train);
  const WeightVector w = class_balance_weight(ds);
  double mass0 = 0.0, mass1 = 0.0, total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (ds.samples[i].y == 0 ? mass0 : mass1) += w.values[i];
    total += w.values[i];
  }
  CHECK_THAT(total, Catch::Matchers::WithinRel(static_cast<double>(ds.size()), 1e-9));
  CHECK(std::abs(mass0 - mass1) <= 1e-9 * static_cast<double>(ds.size()));
}

TEST_CASE("group-balance weights") {
  // Cell counts (45, 5, 5, 45) out of 100.
  std::vector<int> ys, ss;
  auto push = [&](int y, int s, int count) {
    for (int i = 0; i < count; ++i) {
      ys.push_back(y);
      ss.push_back(s);
    }
  };
  push(0, 0, 45);
  push(0, 1, 5);
  push(1, 0, 5);
  push(1, 1, 45);
  const WeightVector w = group_balance_weight(labeled_dataset(ys, 2, ss));
  CHECK_THAT(w.values[0], Catch::Matchers::WithinRel(1.0 / (4.0 * 0.45), 1e-15));
  CHECK_THAT(w.values[45], Catch::Matchers::WithinRel(5.0, 1e-15));

  const auto uniform = labeled_dataset({0, 0, 1, 1}, 2, {0, 1, 0, 1});
  for (double v : group_balance_weight(uniform).values) CHECK(v == 1.0);

  CHECK_THROWS_MATCHES(group_balance_weight(labeled_dataset({0, 1}, 2)), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.kind() == Err::UnknownAttributes;
                       }));
  CHECK_THROWS_MATCHES(
      group_balance_weight(labeled_dataset({0, 0, 1}, 2, {0, 1, 0})), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.kind() == Err::ZeroCountGroup; }));
}

TEST_CASE("logit-adjustment weights") {
  const std::vector<double> uniform_joint{0.1};
  CHECK(logit_adjust_weight(uniform_joint, 10).values[0] == 1.0);

  const std::vector<double> p09{0.9};
  CHECK_THAT(logit_adjust_weight(p09, 2).values[0],
             Catch::Matchers::WithinRel(1.0 / 1.8, 1e-15));

  std::size_t clamped = 0;
  const std::vector<double> tiny{1e-9};
  const WeightVector w = logit_adjust_weight(tiny, 2, &clamped);
  CHECK(clamped == 1);
  CHECK_THAT(w.values[0], Catch::Matchers::WithinRel(5e5, 1e-12));

  CHECK_THROWS_MATCHES(logit_adjust_weight(std::vector<double>{0.0}, 2), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == Err::DomainError; }));
}

TEST_CASE("decomposed objective equals g log q") {
  // p = 1/L gives g = 1 and a vanishing regularizer.
  CHECK_THAT(decomposed_objective(std::vector<double>{-1.0}, std::vector<double>{0.5}, 2)[0],
             Catch::Matchers::WithinAbs(-1.0, 1e-15));

  const double g = 1.0 / 1.8;
  CHECK_THAT(decomposed_objective(std::vector<double>{-0.5}, std::vector<double>{0.9}, 2)[0],
             Catch::Matchers::WithinAbs(g * -0.5, 1e-12));

  Rng rng(31337, 0);
  for (int i = 0; i < 200; ++i) {
    const int L = 2 + rng.uniform_int(9);
    const double p = 0.01 + 0.99 * rng.uniform();
    const double logq = -5.0 * rng.uniform();
    const double direct = logit_adjust_weight(std::vector<double>{p}, L).values[0] * logq;
    const double three_term =
        decomposed_objective(std::vector<double>{logq}, std::vector<double>{p}, L)[0];
    CHECK_THAT(three_term, Catch::Matchers::WithinAbs(direct, 1e-12));
  }
}

TEST_CASE("mixture weight domain errors") {
  CHECK(augmentation_weight(1.0, 0.0, 1.0) == 1.0);
  CHECK_THROWS_MATCHES(augmentation_weight(0.0, 0.0, 0.5), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == Err::DomainError; }));
  CHECK_THROWS_AS(augmentation_weight(-0.1, 0.5, 0.5), Error);
  CHECK_THROWS_AS(augmentation_weight(0.5, 0.5, 0.0), Error);
}

TEST_CASE("weighted log-likelihood") {
  WeightVector ones = WeightVector::ones(3);
  const std::vector<double> ll{-1.0, -2.0, -3.0};
  CHECK_THAT(weighted_loglik(ll, ones), Catch::Matchers::WithinAbs(-2.0, 1e-15));

  WeightVector w;
  w.values = {2.0, 0.0};
  const std::vector<double> two{-1.0, -2.0};
  CHECK_THAT(weighted_loglik(two, w), Catch::Matchers::WithinAbs(-1.0, 1e-15));

  CHECK_THROWS_MATCHES(weighted_loglik(std::vector<double>{}, WeightVector::ones(0)), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == Err::LengthMismatch; }));
  CHECK_THROWS_AS(weighted_loglik(two, ones), Error);
}

TEST_CASE("self-normalization rescales to mean one") {
  WeightVector w;
  w.values = {1.0, 3.0, 8.0};
  const WeightVector n = self_normalized(w);
  double mean = 0.0;
  for (double v : n.values) mean += v;
  CHECK_THAT(mean / 3.0, Catch::Matchers::WithinRel(1.0, 1e-15));
  CHECK_THAT(n.values[2] / n.values[0], Catch::Matchers::WithinRel(8.0, 1e-15));
}
