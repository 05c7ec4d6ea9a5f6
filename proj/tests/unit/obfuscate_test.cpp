#include <gtest/gtest.h>

#include <algorithm>

#include "malfew/error.hpp"
#include "malfew/obfuscate.hpp"
#include "malfew/random.hpp"

using namespace malfew;
using namespace malfew::obfuscate;
using binfeed::Bytes;
using binfeed::RawBinary;

namespace {

RawBinary random_binary(std::size_t len, std::uint64_t seed, const std::string& id = "s.0") {
  RawBinary raw;
  raw.bytes.resize(len);
  Rng rng(seed);
  for (auto& b : raw.bytes) b = static_cast<std::uint8_t>(rng.next_u64());
  raw.family = "fam";
  raw.origin_id = id;
  return raw;
}

// Replays a plan without inserting: original byte i must sit at i + #{p <= i},
// every other slot is a NOP.
bool replay_matches(const Bytes& original, const NopPlan& plan, const Bytes& out) {
  if (out.size() != original.size() + plan.positions.size()) return false;
  std::vector<bool> is_original(out.size(), false);
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto before = static_cast<std::size_t>(
        std::count_if(plan.positions.begin(), plan.positions.end(), [&](std::size_t p) { return p <= i; }));
    if (out[i + before] != original[i]) return false;
    is_original[i + before] = true;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!is_original[k] && out[k] != plan.nop_byte) return false;
  }
  return true;
}

}  // namespace

TEST(PlanNops, ZeroFrequencyIsEmpty) {
  EXPECT_TRUE(plan_nops(random_binary(100, 1), 0, 5).positions.empty());
}

TEST(PlanNops, Deterministic) {
  const auto raw = random_binary(4096, 2);
  const auto a = plan_nops(raw, 200, 1);
  const auto b = plan_nops(raw, 200, 1);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_EQ(a.positions.size(), 200u);
  EXPECT_TRUE(std::is_sorted(a.positions.begin(), a.positions.end()));
  EXPECT_NE(a.positions, plan_nops(raw, 200, 2).positions);
}

TEST(PlanNops, PositionsUniformOverTenBuckets) {
  const auto raw = random_binary(10 * 1024, 3);
  const std::size_t slots = raw.bytes.size() + 1;
  std::array<double, 10> counts{};
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (auto p : plan_nops(raw, 200, seed).positions) {
      ASSERT_LE(p, raw.bytes.size());
      counts[p * 10 / slots] += 1;
      ++total;
    }
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(total) / 10.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Critical value of chi-square with 9 degrees of freedom at alpha = 0.01.
  EXPECT_LT(chi2, 21.666);
}

TEST(ApplyNops, SingleInsertion) {
  RawBinary raw;
  raw.bytes = {'A', 'B', 'C'};
  raw.origin_id = "abc";
  raw.family = "f";
  NopPlan plan;
  plan.frequency = 1;
  plan.positions = {1};
  const auto out = apply_nops(raw, plan);
  EXPECT_EQ(out.bytes, (Bytes{'A', 0x90, 'B', 'C'}));
  EXPECT_EQ(out.lineage.kind, binfeed::LineageKind::Obfuscated);
  EXPECT_EQ(out.lineage.frequency, 1u);
  EXPECT_EQ(out.lineage.parent_id, "abc");
}

TEST(ApplyNops, EndPositionAppends) {
  RawBinary raw;
  raw.bytes = {1, 2};
  NopPlan plan;
  plan.frequency = 2;
  plan.positions = {2, 2};
  plan.nop_byte = 0xCC;
  EXPECT_EQ(apply_nops(raw, plan).bytes, (Bytes{1, 2, 0xCC, 0xCC}));
}

TEST(ApplyNops, OutOfRangePosition) {
  RawBinary raw;
  raw.bytes = {1, 2};
  NopPlan plan;
  plan.frequency = 1;
  plan.positions = {3};
  try {
    apply_nops(raw, plan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PositionOutOfRange);
  }
}

TEST(ApplyNops, FrequencyTwoHundredGrowsByTwoHundred) {
  const auto raw = random_binary(5000, 4);
  const auto plan = plan_nops(raw, 200, 9);
  const auto out = apply_nops(raw, plan);
  EXPECT_EQ(out.bytes.size() - raw.bytes.size(), 200u);
  EXPECT_TRUE(replay_matches(raw.bytes, plan, out.bytes));
}

TEST(ApplyNops, ReplayOracleOverRandomTriples) {
  Rng rng(77);
  const std::uint32_t freqs[] = {0, 200, 400, 600};
  for (int t = 0; t < 40; ++t) {
    const auto raw = random_binary(1 + rng.uniform_below(3000), rng.next_u64());
    const auto f = freqs[rng.uniform_below(4)];
    const auto plan = plan_nops(raw, f, rng.next_u64());
    const auto out = apply_nops(raw, plan);
    ASSERT_TRUE(replay_matches(raw.bytes, plan, out.bytes)) << "trial " << t;
    // Byte multiset preserved except for the added NOPs.
    std::array<std::size_t, 256> a{}, b{};
    for (auto v : raw.bytes) ++a[v];
    for (auto v : out.bytes) ++b[v];
    a[plan.nop_byte] += f;
    EXPECT_EQ(a, b);
  }
}

TEST(ObfuscateCorpus, CountsAndReproducibility) {
  binfeed::Manifest m;
  for (int i = 0; i < 6; ++i) {
    binfeed::ManifestEntry e;
    e.origin_id = "o" + std::to_string(i);
    e.family = i < 3 ? "a" : "b";
    e.inline_bytes = std::make_shared<const Bytes>(random_binary(300 + i, i).bytes);
    m.add(e);
  }
  const std::uint32_t f200[] = {200};
  const auto one = obfuscate_corpus(m, f200, 5);
  EXPECT_EQ(one.size(), 12u);

  binfeed::Manifest single;
  single.add(m.at(0));
  const std::uint32_t f3[] = {200, 400, 600};
  const auto three = obfuscate_corpus(single, f3, 5);
  ASSERT_EQ(three.size(), 4u);
  EXPECT_EQ(three.at(3).origin_id, variant_id("o0", 600));
  EXPECT_EQ(three.at(3).inline_bytes->size(), 300u + 600u);

  const auto again = obfuscate_corpus(m, f200, 5);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(*one.at(i).inline_bytes, *again.at(i).inline_bytes);
  const auto other = obfuscate_corpus(m, f200, 6);
  EXPECT_NE(*one.at(6).inline_bytes, *other.at(6).inline_bytes);
}

TEST(ObfuscateCorpus, DerivedEntriesAreNotReobfuscated) {
  binfeed::Manifest m;
  binfeed::ManifestEntry e;
  e.origin_id = "o";
  e.family = "a";
  e.inline_bytes = std::make_shared<const Bytes>(random_binary(64, 1).bytes);
  m.add(e);
  const std::uint32_t f[] = {10};
  const auto twice = obfuscate_corpus(obfuscate_corpus(m, f, 1), f, 1);
  // The second pass only sees the original; its variant id already exists.
  EXPECT_EQ(twice.size(), 2u);
}
