#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "malfew/binfeed.hpp"

namespace malfew::entropix {

inline constexpr std::size_t kDefaultBlockSize = 256;
inline constexpr std::size_t kDefaultWidthBlocks = 105;
inline constexpr std::size_t kImageSide = 105;

/// Normalization constants measured on the VUW ransomware corpus.
inline constexpr double kDefaultMean = 0.52206;
inline constexpr double kDefaultStd = 0.08426;

struct Histogram {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;

  static Histogram of(std::span<const std::uint8_t> bytes);
  double probability(std::uint8_t v) const { return static_cast<double>(counts[v]) / static_cast<double>(total); }
};

struct EntropySequence {
  std::vector<double> values;  // bits, each in [0, 8]
  std::size_t block_size = kDefaultBlockSize;
  std::size_t source_len = 0;
};

/// Row-major grayscale grid.
struct EntropyImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
  std::size_t width_blocks = kDefaultWidthBlocks;

  std::uint8_t at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  bool operator==(const EntropyImage&) const = default;
};

struct NormalizedImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
  double mean_used = kDefaultMean;
  double std_used = kDefaultStd;
};

/// Shannon entropy (base 2) of the block's byte histogram; 0 log 0 = 0.
double block_entropy(std::span<const std::uint8_t> block);

/// Blocks of block_size bytes; a trailing partial block uses its actual bytes.
EntropySequence entropy_sequence(std::span<const std::uint8_t> bytes, std::size_t block_size = kDefaultBlockSize);

/// round(2^ent - 1) clamped to [0, 255].
std::uint8_t entropy_to_pixel(double ent);

/// Lays the entropy stream out row-major, width_blocks pixels per row; the
/// final partial row is padded with zeros. No resize.
EntropyImage layout_entropy(const EntropySequence& seq, std::size_t width_blocks = kDefaultWidthBlocks);

/// Nearest-neighbor resample: source index = floor(i * src / dst) per axis.
EntropyImage resize_nearest(const EntropyImage& img, std::size_t target = kImageSide);

/// Full pipeline: bytes -> entropy sequence -> layout -> 105x105.
EntropyImage render_entropy_image(const binfeed::RawBinary& raw, std::size_t block_size = kDefaultBlockSize,
                                  std::size_t width_blocks = kDefaultWidthBlocks);

/// Clockwise rotation of a square image. 90 degrees maps (r, c) -> (c, H-1-r).
EntropyImage rotate(const EntropyImage& img, int degrees);

struct CorpusStats {
  double mean = 0.0;
  double std = 0.0;
  std::string corpus_hash;
  std::size_t images = 0;
};

/// Population mean/std of pixel/255 across all images, reduced in order.
CorpusStats corpus_stats(std::span<const EntropyImage> images);

/// Renders every non-obfuscated entry (augmented entries are rotated) and
/// reduces over the result.
CorpusStats corpus_stats(const binfeed::Manifest& manifest, std::size_t block_size = kDefaultBlockSize,
                         std::size_t width_blocks = kDefaultWidthBlocks);

NormalizedImage normalize(const EntropyImage& img, double mean = kDefaultMean, double std = kDefaultStd);
/// Inverse of normalize, back to (real-valued) pixel units.
std::vector<double> denormalize(const NormalizedImage& img);

/// 8-bit binary PGM with a comment line "# origin_id=<id> lineage=<lineage>".
void write_pgm(const std::filesystem::path& path, const EntropyImage& img, const std::string& origin_id,
               const std::string& lineage);
EntropyImage read_pgm(const std::filesystem::path& path);

/// Small key/value record: mean, std, images, corpus_hash, plus any extra lines.
void write_stats(const std::filesystem::path& path, const CorpusStats& stats,
                 std::span<const std::string> comments = {});
CorpusStats read_stats(const std::filesystem::path& path);

}  // namespace malfew::entropix
