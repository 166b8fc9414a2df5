#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "morphx/rng.hpp"

using morphx::RngStream;
using morphx::StreamKind;
using morphx::derive_stream;

TEST_CASE("same seed reproduces the same sequence") {
  RngStream a(12345);
  RngStream b(12345);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different sequences") {
  RngStream a(1);
  RngStream b(2);
  int equal = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++equal;
  REQUIRE(equal == 0);
}

TEST_CASE("derived streams are reproducible and distinct per tag and key") {
  RngStream a = derive_stream(7, StreamKind::Controller, 42);
  RngStream b = derive_stream(7, StreamKind::Controller, 42);
  REQUIRE(a.next_u64() == b.next_u64());

  std::set<std::uint64_t> firsts;
  for (std::uint64_t key = 0; key < 100; ++key)
    firsts.insert(derive_stream(7, StreamKind::Controller, key).next_u64());
  REQUIRE(firsts.size() == 100);

  const auto design = derive_stream(7, StreamKind::DesignInit, 42).next_u64();
  const auto mutation =
      derive_stream(7, StreamKind::DesignMutation, 42).next_u64();
  const auto controller =
      derive_stream(7, StreamKind::Controller, 42).next_u64();
  REQUIRE(design != mutation);
  REQUIRE(design != controller);
  REQUIRE(mutation != controller);
}

TEST_CASE("uniform stays in range and is roughly centred") {
  RngStream rng(99);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  REQUIRE(std::abs(sum / n - 0.5) < 0.01);

  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(-3.0, 5.0);
    REQUIRE(v >= -3.0);
    REQUIRE(v < 5.0);
  }
}

TEST_CASE("normal has unit variance and zero mean") {
  RngStream rng(4242);
  double sum = 0.0;
  double sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double variance = sum_sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(std::abs(variance - 1.0) < 0.02);
}

TEST_CASE("below covers all residues without exceeding the bound") {
  RngStream rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const std::uint64_t v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) REQUIRE(c > 0);
  REQUIRE(rng.below(1) == 0);
}

TEST_CASE("bernoulli respects its probability at the extremes") {
  RngStream rng(6);
  for (int i = 0; i < 100; ++i) {
    REQUIRE_FALSE(rng.bernoulli(0.0));
    REQUIRE(rng.bernoulli(1.0));
  }
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += rng.bernoulli(0.3) ? 1 : 0;
  REQUIRE(std::abs(hits / 100000.0 - 0.3) < 0.01);
}
