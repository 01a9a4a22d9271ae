#include <gtest/gtest.h>

#include <set>

#include "lmstat/rng.hpp"

namespace {

using namespace lmstat;

TEST(Mix64, SplitMixReferenceOutputs) {
  // First outputs of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(mix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
}

TEST(DeriveStream, DistinctAndDeterministic) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t master : {0ULL, 1ULL, 2ULL}) {
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_stream(master, i));
  }
  EXPECT_EQ(seen.size(), 3000u);
  static_assert(derive_stream(5, 9) == derive_stream(5, 9));
  EXPECT_NE(derive_stream(1, 2), derive_stream(2, 1));
}

TEST(MakeStream, SeedsEngineWithDerivedSeed) {
  Engine a = make_stream(11, 4);
  Engine b(derive_stream(11, 4));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
}

}  // namespace
