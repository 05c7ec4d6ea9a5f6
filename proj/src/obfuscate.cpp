#include "malfew/obfuscate.hpp"

#include <algorithm>

#include "malfew/error.hpp"
#include "malfew/random.hpp"

namespace malfew::obfuscate {

using binfeed::Lineage;
using binfeed::LineageKind;
using binfeed::RawBinary;

NopPlan plan_nops(const RawBinary& original, std::uint32_t frequency, std::uint64_t seed,
                  std::uint8_t nop_byte) {
  NopPlan plan;
  plan.frequency = frequency;
  plan.nop_byte = nop_byte;
  plan.seed = seed;
  // Mix the content in so the plan is a function of (bytes, frequency, seed).
  const auto content = sha256_hex(original.bytes);
  Rng rng(derive_seed(seed, "obfuscate", content + "/" + std::to_string(frequency)));
  const std::uint64_t slots = original.bytes.size() + 1;
  plan.positions.reserve(frequency);
  for (std::uint32_t i = 0; i < frequency; ++i) plan.positions.push_back(rng.uniform_below(slots));
  std::sort(plan.positions.begin(), plan.positions.end());
  return plan;
}

RawBinary apply_nops(const RawBinary& original, const NopPlan& plan) {
  if (plan.positions.size() != plan.frequency) {
    throw Error(ErrorCode::InvalidArgument, "plan has " + std::to_string(plan.positions.size()) +
                                                " positions for frequency " + std::to_string(plan.frequency));
  }
  const auto& in = original.bytes;
  for (auto p : plan.positions) {
    if (p > in.size()) {
      throw Error(ErrorCode::PositionOutOfRange,
                  "position " + std::to_string(p) + " beyond length " + std::to_string(in.size()));
    }
  }
  if (!std::is_sorted(plan.positions.begin(), plan.positions.end())) {
    throw Error(ErrorCode::InvalidArgument, "plan positions must be sorted");
  }

  RawBinary out;
  out.family = original.family;
  out.origin_id = variant_id(original.origin_id, plan.frequency);
  out.lineage = Lineage::obfuscated(original.origin_id, plan.frequency);
  out.bytes.reserve(in.size() + plan.positions.size());
  auto next = plan.positions.begin();
  for (std::size_t i = 0; i <= in.size(); ++i) {
    while (next != plan.positions.end() && *next == i) {
      out.bytes.push_back(plan.nop_byte);
      ++next;
    }
    if (i < in.size()) out.bytes.push_back(in[i]);
  }
  return out;
}

std::uint64_t entry_seed(std::uint64_t seed, std::string_view origin_id, std::uint32_t frequency) {
  return derive_seed(seed, "obfuscate-entry", std::string(origin_id) + "/" + std::to_string(frequency));
}

std::string variant_id(std::string_view parent_id, std::uint32_t frequency) {
  return std::string(parent_id) + ".nop" + std::to_string(frequency);
}

binfeed::Manifest obfuscate_corpus(const binfeed::Manifest& manifest, std::span<const std::uint32_t> frequencies,
                                   std::uint64_t seed, std::uint8_t nop_byte) {
  if (manifest.empty()) throw Error(ErrorCode::EmptyCorpus, "obfuscate_corpus on empty manifest");
  binfeed::Manifest out = manifest;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest.at(i);
    if (e.lineage.kind != LineageKind::Original) continue;
    const RawBinary original = binfeed::load_entry(manifest, i);
    for (auto frequency : frequencies) {
      if (out.find(variant_id(e.origin_id, frequency))) continue;  // already derived
      const auto plan = plan_nops(original, frequency, entry_seed(seed, e.origin_id, frequency), nop_byte);
      auto variant = apply_nops(original, plan);
      binfeed::ManifestEntry entry;
      entry.origin_id = variant.origin_id;
      entry.family = variant.family;
      entry.lineage = variant.lineage;
      entry.inline_bytes = std::make_shared<const binfeed::Bytes>(std::move(variant.bytes));
      out.add(std::move(entry));
    }
  }
  return out;
}

}  // namespace malfew::obfuscate
