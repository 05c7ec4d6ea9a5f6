#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "malfew/binfeed.hpp"

namespace malfew::obfuscate {

inline constexpr std::uint8_t kDefaultNopByte = 0x90;

/// Where single NOP bytes go. positions index the original sequence:
/// a NOP at position p is inserted before original byte p (p == len appends).
/// Sorted; repeats mean consecutive NOPs at the same offset.
struct NopPlan {
  std::uint32_t frequency = 0;
  std::uint8_t nop_byte = kDefaultNopByte;
  std::vector<std::size_t> positions;
  std::uint64_t seed = 0;
};

/// Positions drawn uniformly with replacement over [0, len].
NopPlan plan_nops(const binfeed::RawBinary& original, std::uint32_t frequency, std::uint64_t seed,
                  std::uint8_t nop_byte = kDefaultNopByte);

binfeed::RawBinary apply_nops(const binfeed::RawBinary& original, const NopPlan& plan);

/// Per-entry seed: derived from (seed, origin_id, frequency).
std::uint64_t entry_seed(std::uint64_t seed, std::string_view origin_id, std::uint32_t frequency);

/// One obfuscated sibling per (original entry, frequency), with inline bytes.
/// Variants already present in the manifest are kept as they are.
/// Originals and existing entries are retained in order.
binfeed::Manifest obfuscate_corpus(const binfeed::Manifest& manifest,
                                   std::span<const std::uint32_t> frequencies, std::uint64_t seed,
                                   std::uint8_t nop_byte = kDefaultNopByte);

/// Origin id of the variant of `parent_id` at `frequency`.
std::string variant_id(std::string_view parent_id, std::uint32_t frequency);

}  // namespace malfew::obfuscate
