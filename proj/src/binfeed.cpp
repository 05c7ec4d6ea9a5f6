#include "malfew/binfeed.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "malfew/error.hpp"
#include "malfew/random.hpp"

namespace malfew::binfeed {

namespace fs = std::filesystem;

Lineage Lineage::obfuscated(std::string parent, std::uint32_t frequency) {
  Lineage l;
  l.kind = LineageKind::Obfuscated;
  l.frequency = frequency;
  l.parent_id = std::move(parent);
  return l;
}

Lineage Lineage::augmented(std::string parent, int rotation) {
  Lineage l;
  l.kind = LineageKind::Augmented;
  l.rotation = rotation;
  l.parent_id = std::move(parent);
  return l;
}

std::string to_string(const Lineage& lineage) {
  switch (lineage.kind) {
    case LineageKind::Original: return "original";
    case LineageKind::Obfuscated: return "obfuscated:" + std::to_string(lineage.frequency);
    case LineageKind::Augmented: return "augmented:" + std::to_string(lineage.rotation);
  }
  return "original";
}

bool is_valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
  });
}

std::string sanitize_id(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    out.push_back(is_valid_id(std::string_view(&c, 1)) ? c : '_');
  }
  if (out.empty()) out = "_";
  return out;
}

std::size_t Manifest::add(ManifestEntry entry) {
  if (!is_valid_id(entry.origin_id)) {
    throw Error(ErrorCode::InvalidArgument, "invalid origin_id '" + entry.origin_id + "'");
  }
  if (!is_valid_id(entry.family)) {
    throw Error(ErrorCode::InvalidArgument, "invalid family '" + entry.family + "'");
  }
  if (by_id_.contains(entry.origin_id)) {
    throw Error(ErrorCode::InvalidArgument, "duplicate origin_id '" + entry.origin_id + "'");
  }
  if (entry.lineage.kind != LineageKind::Original && !by_id_.contains(entry.lineage.parent_id)) {
    throw Error(ErrorCode::InvalidArgument,
                "entry '" + entry.origin_id + "' references unknown parent '" +
                    entry.lineage.parent_id + "'");
  }
  const std::size_t index = entries_.size();
  by_id_.emplace(entry.origin_id, index);
  class_index_[entry.family].push_back(index);
  entries_.push_back(std::move(entry));
  return index;
}

std::vector<std::string> Manifest::families() const {
  std::vector<std::string> out;
  out.reserve(class_index_.size());
  for (const auto& [family, _] : class_index_) out.push_back(family);
  return out;
}

std::optional<std::size_t> Manifest::find(std::string_view origin_id) const {
  auto it = by_id_.find(origin_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t Manifest::root_of(std::size_t index) const {
  std::size_t current = index;
  while (entries_.at(current).lineage.kind != LineageKind::Original) {
    current = by_id_.at(entries_[current].lineage.parent_id);
  }
  return current;
}

Bytes read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::MissingFile, path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "rename failed: " + path.string());
  }
}

RawBinary load_binary(const fs::path& path, std::string family) {
  RawBinary raw;
  raw.bytes = read_file(path);
  if (raw.bytes.empty()) throw Error(ErrorCode::ZeroLength, path.string());
  raw.origin_id = sanitize_id(family) + "." + sanitize_id(path.filename().string());
  raw.family = std::move(family);
  return raw;
}

RawBinary load_entry(const Manifest& manifest, std::size_t index) {
  const auto& e = manifest.at(index);
  RawBinary raw;
  if (e.inline_bytes) {
    raw.bytes = *e.inline_bytes;
  } else {
    raw.bytes = read_file(manifest.root() / e.path);
  }
  if (raw.bytes.empty()) throw Error(ErrorCode::ZeroLength, e.origin_id);
  raw.family = e.family;
  raw.origin_id = e.origin_id;
  raw.lineage = e.lineage;
  return raw;
}

ScanResult scan_corpus(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::MissingFile, root.string());

  std::vector<fs::path> family_dirs;
  for (const auto& d : fs::directory_iterator(root)) {
    if (!d.is_directory()) continue;
    const auto name = d.path().filename().string();
    if (name.empty() || name[0] == '_' || name[0] == '.') continue;
    family_dirs.push_back(d.path());
  }
  std::sort(family_dirs.begin(), family_dirs.end());
  if (family_dirs.empty()) throw Error(ErrorCode::EmptyCorpus, "no family directories under " + root.string());

  ScanResult result{Manifest(root), {}};
  for (const auto& dir : family_dirs) {
    const auto dir_name = dir.filename().string();
    const std::string family = sanitize_id(dir_name);
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.is_regular_file()) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    std::size_t kept = 0;
    for (const auto& file : files) {
      if (fs::file_size(file) == 0) {
        result.warnings.push_back("skipping zero-length file " + file.string());
        continue;
      }
      std::string id = family + "." + sanitize_id(file.filename().string());
      // Sanitizing can collide distinct names; disambiguate with a counter.
      for (int k = 1; result.manifest.find(id); ++k) {
        id = family + "." + sanitize_id(file.filename().string()) + "-" + std::to_string(k);
      }
      ManifestEntry entry;
      entry.origin_id = id;
      entry.family = family;
      entry.path = (fs::path(dir_name) / file.filename()).generic_string();
      result.manifest.add(std::move(entry));
      ++kept;
    }
    if (kept == 0) result.warnings.push_back("family '" + dir_name + "' has no files; excluded");
  }
  if (result.manifest.empty()) throw Error(ErrorCode::EmptyCorpus, "no files under " + root.string());
  return result;
}

namespace {

struct Segment {
  double weight;
  std::vector<std::uint8_t> alphabet;
};

std::vector<Segment> family_template(Rng& rng) {
  const std::size_t n_segments = 4 + rng.uniform_below(6);
  std::vector<Segment> segments;
  int previous_bits = -1;
  for (std::size_t s = 0; s < n_segments; ++s) {
    int bits;
    do {
      bits = static_cast<int>(rng.uniform_below(9));
    } while (std::abs(bits - previous_bits) < 2);
    previous_bits = bits;

    std::vector<std::uint8_t> all(256);
    for (int v = 0; v < 256; ++v) all[v] = static_cast<std::uint8_t>(v);
    rng.shuffle(all);
    all.resize(std::size_t{1} << bits);
    segments.push_back({rng.uniform(0.5, 2.0), std::move(all)});
  }
  return segments;
}

Bytes synth_sample(const std::vector<Segment>& segments, std::size_t length, Rng& rng) {
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& s : segments) {
    weights.push_back(s.weight * rng.uniform(0.85, 1.15));
    total += weights.back();
  }
  Bytes bytes;
  bytes.reserve(length);
  double cumulative = 0.0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    cumulative += weights[s];
    const std::size_t end = s + 1 == segments.size()
                                ? length
                                : static_cast<std::size_t>(cumulative / total * static_cast<double>(length));
    const auto& alphabet = segments[s].alphabet;
    while (bytes.size() < end) {
      bytes.push_back(alphabet[rng.uniform_below(alphabet.size())]);
    }
  }
  return bytes;
}

}  // namespace

Manifest synth_corpus(const SynthOptions& options, std::uint64_t seed) {
  if (options.n_families < 2) throw Error(ErrorCode::TooFewFamilies, "synth_corpus needs at least 2 families");
  if (options.n_per_family < 1) throw Error(ErrorCode::InvalidArgument, "n_per_family must be >= 1");
  if (options.min_len < 1 || options.max_len < options.min_len) {
    throw Error(ErrorCode::InvalidArgument, "invalid length range");
  }

  Manifest manifest;
  for (std::size_t f = 0; f < options.n_families; ++f) {
    char family_buf[16];
    std::snprintf(family_buf, sizeof family_buf, "fam%02zu", f);
    const std::string family = family_buf;
    Rng template_rng(derive_seed(seed, "synth", "family/" + family));
    const auto segments = family_template(template_rng);

    for (std::size_t i = 0; i < options.n_per_family; ++i) {
      char id_buf[32];
      std::snprintf(id_buf, sizeof id_buf, "%s.%04zu", family.c_str(), i);
      Rng rng(derive_seed(seed, "synth", std::string("sample/") + id_buf));
      const std::size_t length =
          options.min_len + rng.uniform_below(options.max_len - options.min_len + 1);
      ManifestEntry entry;
      entry.origin_id = id_buf;
      entry.family = family;
      entry.inline_bytes = std::make_shared<const Bytes>(synth_sample(segments, length, rng));
      manifest.add(std::move(entry));
    }
  }
  return manifest;
}

Manifest augment_to_minimum(const Manifest& manifest, std::size_t min_per_class) {
  if (manifest.empty()) throw Error(ErrorCode::EmptyCorpus, "augment_to_minimum on empty manifest");
  static constexpr std::array<int, 3> kRotations{90, 180, 270};

  std::vector<std::string> failures;
  std::vector<ManifestEntry> additions;
  for (const auto& [family, indices] : manifest.class_index()) {
    std::vector<std::size_t> originals;
    std::set<std::pair<std::string, int>> existing;
    std::size_t count = 0;
    for (auto i : indices) {
      const auto& e = manifest.at(i);
      if (e.lineage.kind == LineageKind::Obfuscated) continue;
      ++count;
      if (e.lineage.kind == LineageKind::Original) originals.push_back(i);
      if (e.lineage.kind == LineageKind::Augmented) existing.emplace(e.lineage.parent_id, e.lineage.rotation);
    }
    if (count >= min_per_class) continue;
    if (originals.size() * (kRotations.size() + 1) < min_per_class) {
      failures.push_back(family + " (" + std::to_string(originals.size()) + " originals)");
      continue;
    }
    // Rotation outer, parent inner: (parent, rotation) pairs never repeat.
    for (int rotation : kRotations) {
      for (auto p : originals) {
        if (count >= min_per_class) break;
        const auto& parent = manifest.at(p);
        if (existing.contains({parent.origin_id, rotation})) continue;
        ManifestEntry entry;
        entry.origin_id = parent.origin_id + ".rot" + std::to_string(rotation);
        entry.family = parent.family;
        entry.path = parent.path;
        entry.inline_bytes = parent.inline_bytes;
        entry.lineage = Lineage::augmented(parent.origin_id, rotation);
        additions.push_back(std::move(entry));
        ++count;
      }
    }
  }
  if (!failures.empty()) {
    std::string msg = "cannot reach " + std::to_string(min_per_class) + " samples for:";
    for (const auto& f : failures) msg += " " + f;
    throw Error(ErrorCode::InsufficientAugmentation, msg);
  }

  Manifest out = manifest;
  for (auto& e : additions) out.add(std::move(e));
  return out;
}

Manifest write_corpus(const Manifest& manifest, const fs::path& root) {
  Manifest out(root);
  for (const auto& e : manifest.entries()) {
    ManifestEntry copy = e;
    if (e.lineage.kind == LineageKind::Augmented) {
      // Augmented entries reuse the parent's file.
      copy.path = out.at(*out.find(e.lineage.parent_id)).path;
      copy.inline_bytes.reset();
    } else if (e.inline_bytes) {
      const bool derived = e.lineage.kind == LineageKind::Obfuscated;
      const fs::path rel = derived ? fs::path("_variants") / e.family / (e.origin_id + ".bin")
                                   : fs::path(e.family) / (e.origin_id + ".bin");
      const auto& bytes = *e.inline_bytes;
      write_file_atomic(root / rel, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      copy.path = rel.generic_string();
      copy.inline_bytes.reset();
    } else if (manifest.root() != root) {
      const auto src = manifest.root() / e.path;
      const auto dst = root / e.path;
      if (fs::weakly_canonical(src) != fs::weakly_canonical(dst)) {
        fs::create_directories(dst.parent_path());
        fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
      }
    }
    out.add(std::move(copy));
  }
  return out;
}

void write_manifest(const fs::path& path, const Manifest& manifest, std::span<const std::string> comments) {
  std::ostringstream os;
  for (const auto& c : comments) os << "# " << c << '\n';
  for (const auto& e : manifest.entries()) {
    if (e.inline_bytes && e.path.empty()) {
      throw Error(ErrorCode::InvalidArgument, "entry '" + e.origin_id + "' has no file path; call write_corpus first");
    }
    os << kManifestSchema << '\t' << e.origin_id << '\t' << e.family << '\t' << e.path << '\t'
       << to_string(e.lineage) << '\t' << (e.lineage.parent_id.empty() ? "-" : e.lineage.parent_id) << '\t'
       << (e.lineage.kind == LineageKind::Augmented ? std::to_string(e.lineage.rotation) : "-") << '\n';
  }
  write_file_atomic(path, os.str());
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

template <class T>
T parse_number(const std::string& s, const std::string& context) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, "bad number '" + s + "' in " + context);
  }
  return value;
}

Lineage parse_lineage(const std::string& text, const std::string& parent, const std::string& rotation,
                      const std::string& context) {
  if (text == "original") return Lineage::original();
  if (text.starts_with("obfuscated:")) {
    return Lineage::obfuscated(parent, parse_number<std::uint32_t>(text.substr(11), context));
  }
  if (text.starts_with("augmented:")) {
    const int deg = parse_number<int>(text.substr(10), context);
    if (rotation != std::to_string(deg)) throw Error(ErrorCode::ParseError, "rotation mismatch in " + context);
    return Lineage::augmented(parent, deg);
  }
  throw Error(ErrorCode::ParseError, "unknown lineage '" + text + "' in " + context);
}

}  // namespace

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  Manifest manifest(path.parent_path());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::string context = path.string() + ":" + std::to_string(line_no);
    auto f = split_tabs(line);
    if (f.size() != 7) throw Error(ErrorCode::ParseError, "expected 7 fields at " + context);
    if (f[0] != kManifestSchema) throw Error(ErrorCode::VersionMismatch, "schema '" + f[0] + "' at " + context);
    ManifestEntry e;
    e.origin_id = f[1];
    e.family = f[2];
    e.path = f[3];
    e.lineage = parse_lineage(f[4], f[5] == "-" ? "" : f[5], f[6], context);
    manifest.add(std::move(e));
  }
  return manifest;
}

}  // namespace malfew::binfeed
