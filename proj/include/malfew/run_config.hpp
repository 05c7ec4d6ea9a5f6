#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "malfew/episodes.hpp"
#include "malfew/obfuscate.hpp"
#include "malfew/trainer.hpp"

namespace malfew::cli {

/// Every setting a pipeline stage can read, after merging the config file
/// and command-line flags.
struct RunConfig {
  trainer::TrainConfig train;

  std::string root;        // corpus directory (ingest, synth)
  std::string manifest;    // manifest file
  std::string out;         // primary output of the subcommand
  std::string checkpoint;
  std::string stats;       // normalization stats file written by render
  std::string loss_log;

  std::size_t block_size = entropix::kDefaultBlockSize;
  std::size_t width_blocks = entropix::kDefaultWidthBlocks;

  std::uint8_t nop_byte = obfuscate::kDefaultNopByte;
  std::vector<std::uint32_t> frequencies;

  std::size_t families = 8;
  std::size_t per_family = 40;
  std::size_t min_per_class = 0;  // 0 disables rotation augmentation

  std::size_t train_classes = 0;  // 0: 60% of families
  std::size_t test_classes = 0;   // 0: the rest

  bool eval_obfuscated = false;
  bool randomize_labels = false;

  /// Resolved settings as sorted "key=value" lines.
  std::vector<std::string> echo() const;
  trainer::RenderOptions render() const { return {block_size, width_blocks}; }
};

/// Two hex digits, e.g. "90" or "0x90".
std::uint8_t parse_nop_byte(std::string_view text);

/// Train/test family split derived from the root seed.
episodes::ClassSplit resolve_split(const binfeed::Manifest& manifest, const RunConfig& config);

}  // namespace malfew::cli
