#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "malfew/binfeed.hpp"
#include "malfew/entropix.hpp"

namespace malfew::trainer {

struct RenderOptions {
  std::size_t block_size = entropix::kDefaultBlockSize;
  std::size_t width_blocks = entropix::kDefaultWidthBlocks;
};

/// Rendered entropy images for every manifest entry. Augmented entries hold
/// the rotated parent image; obfuscated entries are rendered from their own
/// bytes. Immutable after build.
class ImageBank {
 public:
  static ImageBank build(binfeed::Manifest manifest, RenderOptions options = {});

  const binfeed::Manifest& manifest() const { return manifest_; }
  const RenderOptions& options() const { return options_; }
  const entropix::EntropyImage& image(std::size_t entry) const { return images_.at(entry); }

  /// Obfuscated descendants of a root original, optionally at one frequency.
  std::vector<std::size_t> variants(std::size_t root, std::optional<std::uint32_t> frequency = std::nullopt) const;

  /// The obfuscated counterpart of a sampling unit: the chosen variant of
  /// its root, rotated like the unit.
  entropix::EntropyImage obfuscated_image(std::size_t unit, std::size_t variant) const;

 private:
  binfeed::Manifest manifest_;
  RenderOptions options_;
  std::vector<entropix::EntropyImage> images_;
  std::vector<std::vector<std::size_t>> variants_;  // by root index
};

}  // namespace malfew::trainer
