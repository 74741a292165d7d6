#include <algorithm>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "femda/rng.hpp"

using femda::SplitMix64;

TEST_CASE("identical seeds give identical streams", "[rng]") {
  SplitMix64 a(123), b(123), c(124);
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a();
    CHECK(va == b());
    any_diff |= (va != c());
  }
  CHECK(any_diff);
}

TEST_CASE("split is pure and key-sensitive", "[rng]") {
  const SplitMix64 root(9001);
  SplitMix64 s0 = root.split(0);
  SplitMix64 s0_again = root.split(0);
  SplitMix64 s1 = root.split(1);
  CHECK(s0() == s0_again());
  CHECK(s0.state() != s1.state());

  // nested keys give distinct substreams
  std::set<std::uint64_t> states;
  for (std::uint64_t i = 0; i < 100; ++i) {
    states.insert(root.split(i).split(7).state());
  }
  CHECK(states.size() == 100);
}

TEST_CASE("bounded draws stay in range", "[rng]") {
  SplitMix64 rng(5);
  for (std::uint64_t n : {1ULL, 2ULL, 7ULL, 1000ULL}) {
    for (int i = 0; i < 200; ++i) {
      CHECK(femda::bounded(rng, n) < n);
    }
  }
}

TEST_CASE("sampling without replacement", "[rng]") {
  SplitMix64 rng(17);
  const auto idx = femda::sample_without_replacement(100, 25, rng);
  CHECK(idx.size() == 25);
  std::set<std::size_t> unique(idx.begin(), idx.end());
  CHECK(unique.size() == 25);
  CHECK(*std::max_element(idx.begin(), idx.end()) < 100);

  // k = n is a permutation
  SplitMix64 rng2(18);
  auto perm = femda::sample_without_replacement(10, 10, rng2);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(perm[i] == i);
}

TEST_CASE("shuffle is deterministic given the stream", "[rng]") {
  std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> v2 = v1;
  SplitMix64 a(3), b(3);
  femda::shuffle(v1, a);
  femda::shuffle(v2, b);
  CHECK(v1 == v2);
}
