#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace malfew::binfeed {

using Bytes = std::vector<std::uint8_t>;

enum class LineageKind { Original, Obfuscated, Augmented };

/// How a sample was derived. Derived samples record exactly one step.
struct Lineage {
  LineageKind kind = LineageKind::Original;
  std::uint32_t frequency = 0;  // obfuscated only
  int rotation = 0;             // augmented only: 90, 180 or 270
  std::string parent_id;        // empty for originals

  static Lineage original() { return {}; }
  static Lineage obfuscated(std::string parent, std::uint32_t frequency);
  static Lineage augmented(std::string parent, int rotation);

  bool operator==(const Lineage&) const = default;
};

/// Compact text form: "original", "obfuscated:<freq>", "augmented:<deg>".
std::string to_string(const Lineage& lineage);

struct RawBinary {
  Bytes bytes;
  std::string family;
  std::string origin_id;
  Lineage lineage;
};

struct ManifestEntry {
  std::string origin_id;
  std::string family;
  std::string path;  // relative to the manifest root; empty when bytes are inline
  Lineage lineage;
  std::shared_ptr<const Bytes> inline_bytes;
};

/// Ordered list of corpus entries with a family -> entry-index partition.
class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::filesystem::path root) : root_(std::move(root)) {}

  /// Appends an entry. Rejects duplicate or malformed ids.
  std::size_t add(ManifestEntry entry);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  const ManifestEntry& at(std::size_t i) const { return entries_.at(i); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const std::map<std::string, std::vector<std::size_t>>& class_index() const { return class_index_; }
  std::vector<std::string> families() const;

  std::optional<std::size_t> find(std::string_view origin_id) const;

  /// Walks parent links to the original ancestor.
  std::size_t root_of(std::size_t index) const;

  const std::filesystem::path& root() const { return root_; }
  void set_root(std::filesystem::path root) { root_ = std::move(root); }

 private:
  std::filesystem::path root_;
  std::vector<ManifestEntry> entries_;
  std::map<std::string, std::vector<std::size_t>> class_index_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

/// Ids and family names are restricted to [A-Za-z0-9._-].
bool is_valid_id(std::string_view id);
std::string sanitize_id(std::string_view raw);

RawBinary load_binary(const std::filesystem::path& path, std::string family);

/// Loads an entry's bytes, from the inline buffer or from root/path.
RawBinary load_entry(const Manifest& manifest, std::size_t index);

struct ScanResult {
  Manifest manifest;
  std::vector<std::string> warnings;
};

/// One subdirectory per family. Subdirectories beginning with '_' or '.'
/// are reserved for derived artifacts and skipped.
ScanResult scan_corpus(const std::filesystem::path& root);

struct SynthOptions {
  std::size_t n_families = 8;
  std::size_t n_per_family = 40;
  std::size_t min_len = 96 * 1024;
  std::size_t max_len = 160 * 1024;
};

/// Deterministic synthetic corpus with inline bytes. Each family has its own
/// segment layout of low- and high-entropy regions.
Manifest synth_corpus(const SynthOptions& options, std::uint64_t seed);

/// Adds rotation entries (90, 180, 270) until every class has at least
/// min_per_class non-obfuscated entries. Parents are the class's originals.
Manifest augment_to_minimum(const Manifest& manifest, std::size_t min_per_class);

/// Writes inline entries under root at <family>/<origin_id>.bin (or
/// _variants/<family>/<origin_id>.bin for derived bytes) and returns the
/// manifest rebased onto root with file paths instead of inline buffers.
Manifest write_corpus(const Manifest& manifest, const std::filesystem::path& root);

inline constexpr std::string_view kManifestSchema = "v1";

/// Tab-separated manifest, one entry per line. Lines starting with '#' are
/// comments. The write is atomic (temp file + rename).
void write_manifest(const std::filesystem::path& path, const Manifest& manifest,
                    std::span<const std::string> comments = {});
Manifest read_manifest(const std::filesystem::path& path);

/// Atomic file write shared by every artifact writer.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
Bytes read_file(const std::filesystem::path& path);

}  // namespace malfew::binfeed
