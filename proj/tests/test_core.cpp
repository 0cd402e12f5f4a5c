#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "dba/core.hpp"
#include "dba/io.hpp"
#include "dba/rng.hpp"
#include "test_support.hpp"

using namespace dba;

namespace {

Dataset toy_dataset(const std::vector<int>& labels, int L, int d = 1) {
  Dataset ds;
  ds.L = L;
  ds.d = d;
  ds.seed = 42;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Sample s;
    s.x.assign(d, static_cast<double>(i));
    s.y = labels[i];
    ds.samples.push_back(s);
  }
  return ds;
}

}  // namespace

TEST_CASE("compute_label_stats on balanced labels") {
  const auto ds = toy_dataset({0, 0, 1, 1}, 2);
  const TrainStats stats = compute_label_stats(ds, 0.5, 1.0);
  CHECK(stats.p_y[0] == 0.5);
  CHECK(stats.p_y[1] == 0.5);
  CHECK(stats.L == 2);
  CHECK(stats.p_m0 == 0.5);
  stats.validate();
}

TEST_CASE("compute_label_stats frequencies are exact counts over n") {
  std::vector<int> labels(10, 0);
  labels[9] = 1;
  const TrainStats stats = compute_label_stats(toy_dataset(labels, 2), 0.85, 1.0);
  CHECK(stats.p_y[0] == 0.9);
  CHECK(stats.p_y[1] == 0.1);
}

TEST_CASE("compute_label_stats rejects degenerate inputs") {
  CHECK_THROWS_MATCHES(compute_label_stats(toy_dataset({0, 0, 0}, 2), 0.5, 1.0), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == Err::ZeroCountClass; }));
  Dataset empty;
  empty.L = 2;
  empty.d = 1;
  CHECK_THROWS_MATCHES(compute_label_stats(empty, 0.5, 1.0), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == Err::EmptyDataset; }));
  CHECK_THROWS_AS(compute_label_stats(toy_dataset({0, 1}, 2), 1.5, 1.0), Error);
  CHECK_THROWS_AS(compute_label_stats(toy_dataset({0, 1}, 2), 0.5, 0.0), Error);
}

TEST_CASE("split_dataset sizes and determinism") {
  const auto ds = toy_dataset({0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2);

  const auto halves = split_dataset(ds, {0.5, 0.5}, 1);
  REQUIRE(halves.size() == 2);
  CHECK(halves[0].size() == 5);
  CHECK(halves[1].size() == 5);

  const auto seventy = split_dataset(ds, {0.7, 0.3}, 1);
  CHECK(seventy[0].size() == 7);
  CHECK(seventy[1].size() == 3);

  const auto again = split_dataset(ds, {0.5, 0.5}, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(again[0].samples[i].x == halves[0].samples[i].x);
    CHECK(again[1].samples[i].x == halves[1].samples[i].x);
  }
}

TEST_CASE("split_dataset is a disjoint partition") {
  const auto ds = toy_dataset(std::vector<int>(103, 0), 2);
  // x carries the original index, so multiset equality can be checked on x.
  const auto parts = split_dataset(ds, {0.3, 0.45, 0.25}, 99);
  std::multiset<double> seen;
  std::size_t total = 0;
  for (const auto& part : parts) {
    total += part.size();
    for (const auto& s : part.samples) seen.insert(s.x[0]);
  }
  CHECK(total == ds.size());
  CHECK(seen.size() == ds.size());  // multiset equality with 0..n-1
  std::size_t i = 0;
  for (double v : seen) CHECK(v == static_cast<double>(i++));
}

TEST_CASE("split_dataset rejects bad fractions") {
  const auto ds = toy_dataset({0, 1}, 2);
  CHECK_THROWS_MATCHES(split_dataset(ds, {0.5, 0.4}, 0), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == Err::BadFractions; }));
  CHECK_THROWS_AS(split_dataset(ds, {1.2, -0.2}, 0), Error);
}

TEST_CASE("dataset validation catches mixed attribute availability") {
  Dataset ds = toy_dataset({0, 1}, 2);
  ds.samples[0].s = 1;
  CHECK_THROWS_AS(ds.validate(), Error);
  ds.samples[1].s = 0;
  CHECK_NOTHROW(ds.validate());
}

TEST_CASE("dataset validation rejects out-of-range attributes") {
  Dataset ds = toy_dataset({0, 1}, 2);
  ds.samples[0].s = 2;  // attribute alphabet must match the label alphabet
  ds.samples[1].s = 0;
  CHECK_THROWS_AS(ds.validate(), Error);
}

TEST_CASE("dataset CSV round-trip preserves every field") {
  const auto dir = testsupport::fresh_dir("core_roundtrip");
  auto spec = testsupport::worked_spec();
  const Dataset ds = gen_discrete(spec, 257, DatasetRole::Val);

  const auto path = dir / "data.csv";
  write_dataset(ds, path);
  const Dataset back = read_dataset(path);

  REQUIRE(back.size() == ds.size());
  CHECK(back.L == ds.L);
  CHECK(back.d == ds.d);
  CHECK(back.role == ds.role);
  CHECK(back.seed == ds.seed);
  CHECK(back.spec_digest == ds.spec_digest);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].x == ds.samples[i].x);  // bit-exact floats
    CHECK(back.samples[i].y == ds.samples[i].y);
    CHECK(back.samples[i].s == ds.samples[i].s);
    CHECK(back.samples[i].m == ds.samples[i].m);
  }
}

TEST_CASE("unknown attributes round-trip as -1") {
  const auto dir = testsupport::fresh_dir("core_unknown");
  Dataset ds = strip_attributes(gen_discrete(testsupport::worked_spec(), 31, DatasetRole::Train));
  const auto path = dir / "data.csv";
  write_dataset(ds, path);
  const Dataset back = read_dataset(path);
  CHECK_FALSE(back.attributes_known());
  for (const auto& s : back.samples) {
    CHECK(s.s == kUnknown);
    CHECK(s.m == kUnknown);
  }
}

TEST_CASE("rng streams are order-independent") {
  Rng a(123, 5);
  Rng b(123, 5);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  // Different streams from the same seed diverge immediately.
  Rng c(123, 6);
  CHECK(Rng(123, 5).next_u64() != c.next_u64());
}

TEST_CASE("rng categorical respects the distribution") {
  Rng rng(2024, 0);
  const std::vector<double> p = {0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.categorical(p)];
  for (int k = 0; k < 3; ++k) {
    const double freq = static_cast<double>(counts[k]) / n;
    const double se = std::sqrt(p[k] * (1 - p[k]) / n);
    CHECK(std::abs(freq - p[k]) < 4 * se);
  }
}
