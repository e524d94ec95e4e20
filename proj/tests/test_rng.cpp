#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "rflab/rng.hpp"

using namespace rflab;

TEST_CASE("same seed reproduces the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42), d(43);
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) any_diff |= c.next_u64() != d.next_u64();
  CHECK(any_diff);
}

TEST_CASE("uniform doubles stay in their half-open ranges") {
  Rng r(7);
  for (int i = 0; i < 20000; ++i) {
    double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double v = r.next_double_pos();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("derive is pure and independent of consumption order") {
  Rng parent(9001);
  Rng c1 = parent.derive("tree", 5);
  // Consuming the parent must not change later derivations.
  (void)parent.next_u64();
  (void)parent.next_u64();
  Rng c2 = Rng(9001).derive("tree", 5);
  for (int i = 0; i < 10; ++i) CHECK(c1.next_u64() == c2.next_u64());

  // Different tags and indices give different streams.
  CHECK(Rng(1).derive("a", 0).next_u64() != Rng(1).derive("b", 0).next_u64());
  CHECK(Rng(1).derive("a", 0).next_u64() != Rng(1).derive("a", 1).next_u64());
  CHECK(Rng(1).derive("a", 0).next_u64() != Rng(2).derive("a", 0).next_u64());
}

TEST_CASE("next_below stays in range and covers small supports") {
  Rng r(3);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) {
    std::uint64_t v = r.next_below(5);
    REQUIRE(v < 5);
    ++counts[v];
  }
  // Each value should appear roughly 1000 times; 5 sigma ~ 140.
  for (int c : counts) {
    CHECK(c > 800);
    CHECK(c < 1200);
  }
  CHECK(r.next_below(1) == 0);
}

TEST_CASE("gaussian moments match the standard normal") {
  Rng r(11);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = r.next_gaussian();
    sum += g;
    sum2 += g * g;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);      // ~6 sigma of the MC error
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("sample_without_replacement draws distinct in-range indices") {
  Rng r(5);
  std::vector<std::uint32_t> out(10);
  r.sample_without_replacement(100, 10, out.data());
  std::set<std::uint32_t> seen(out.begin(), out.end());
  CHECK(seen.size() == 10);
  for (std::uint32_t v : out) CHECK(v < 100);

  // k == n yields a permutation.
  std::vector<std::uint32_t> perm(30);
  r.sample_without_replacement(30, 30, perm.data());
  std::set<std::uint32_t> all(perm.begin(), perm.end());
  CHECK(all.size() == 30);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 29);
}

TEST_CASE("mix64 is deterministic and spreads nearby inputs") {
  CHECK(mix64(123) == mix64(123));
  CHECK(mix64(1) != mix64(2));
  CHECK(mix64(0) != mix64(1));
}
