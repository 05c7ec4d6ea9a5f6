#include "malfew/entropix.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "malfew/error.hpp"
#include "malfew/random.hpp"

namespace malfew::entropix {

Histogram Histogram::of(std::span<const std::uint8_t> bytes) {
  Histogram h;
  for (auto b : bytes) ++h.counts[b];
  h.total = bytes.size();
  return h;
}

double block_entropy(std::span<const std::uint8_t> block) {
  if (block.empty()) throw Error(ErrorCode::EmptyBlock, "block_entropy of empty block");
  const auto h = Histogram::of(block);
  const double total = static_cast<double>(h.total);
  double ent = 0.0;
  for (auto c : h.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    ent -= p * std::log2(p);
  }
  // Rounding can leave -0 or a hair above 8.
  return std::clamp(ent, 0.0, 8.0);
}

EntropySequence entropy_sequence(std::span<const std::uint8_t> bytes, std::size_t block_size) {
  if (block_size == 0) throw Error(ErrorCode::InvalidArgument, "block_size must be >= 1");
  if (bytes.empty()) throw Error(ErrorCode::EmptyBlock, "entropy_sequence of empty input");
  EntropySequence seq;
  seq.block_size = block_size;
  seq.source_len = bytes.size();
  seq.values.reserve((bytes.size() + block_size - 1) / block_size);
  for (std::size_t off = 0; off < bytes.size(); off += block_size) {
    seq.values.push_back(block_entropy(bytes.subspan(off, std::min(block_size, bytes.size() - off))));
  }
  return seq;
}

std::uint8_t entropy_to_pixel(double ent) {
  if (!(ent >= 0.0 && ent <= 8.0)) {
    throw Error(ErrorCode::EntropyOutOfRange, "entropy " + std::to_string(ent) + " outside [0, 8]");
  }
  const double p = std::round(std::exp2(ent) - 1.0);
  return static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0));
}

EntropyImage layout_entropy(const EntropySequence& seq, std::size_t width_blocks) {
  if (width_blocks == 0) throw Error(ErrorCode::InvalidArgument, "width_blocks must be >= 1");
  if (seq.values.empty()) throw Error(ErrorCode::EmptyBlock, "empty entropy sequence");
  EntropyImage img;
  img.width = width_blocks;
  img.width_blocks = width_blocks;
  img.height = (seq.values.size() + width_blocks - 1) / width_blocks;
  img.pixels.assign(img.height * img.width, 0);
  for (std::size_t i = 0; i < seq.values.size(); ++i) img.pixels[i] = entropy_to_pixel(seq.values[i]);
  return img;
}

EntropyImage resize_nearest(const EntropyImage& img, std::size_t target) {
  if (img.height == 0 || img.width == 0) throw Error(ErrorCode::InvalidArgument, "resize of empty image");
  if (target == 0) throw Error(ErrorCode::InvalidArgument, "resize target must be >= 1");
  EntropyImage out;
  out.height = target;
  out.width = target;
  out.width_blocks = img.width_blocks;
  out.pixels.resize(target * target);
  for (std::size_t r = 0; r < target; ++r) {
    const std::size_t sr = r * img.height / target;
    for (std::size_t c = 0; c < target; ++c) {
      out.pixels[r * target + c] = img.at(sr, c * img.width / target);
    }
  }
  return out;
}

EntropyImage render_entropy_image(const binfeed::RawBinary& raw, std::size_t block_size, std::size_t width_blocks) {
  if (block_size == 0 || width_blocks == 0) {
    throw Error(ErrorCode::InvalidArgument, "block_size and width_blocks must be >= 1");
  }
  return resize_nearest(layout_entropy(entropy_sequence(raw.bytes, block_size), width_blocks), kImageSide);
}

EntropyImage rotate(const EntropyImage& img, int degrees) {
  if (degrees != 90 && degrees != 180 && degrees != 270) {
    throw Error(ErrorCode::UnsupportedAngle, std::to_string(degrees) + " degrees");
  }
  if (img.height != img.width) throw Error(ErrorCode::ShapeMismatch, "rotate requires a square image");
  const std::size_t n = img.height;
  EntropyImage out = img;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto v = img.at(r, c);
      switch (degrees) {
        case 90: out.at(c, n - 1 - r) = v; break;
        case 180: out.at(n - 1 - r, n - 1 - c) = v; break;
        case 270: out.at(n - 1 - c, r) = v; break;
      }
    }
  }
  return out;
}

CorpusStats corpus_stats(std::span<const EntropyImage> images) {
  if (images.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus_stats of empty corpus");
  // Integer accumulation keeps the result independent of summation order.
  std::uint64_t n = 0, sum = 0, sum_sq = 0;
  std::vector<std::uint8_t> digest_input;
  for (const auto& img : images) {
    for (auto p : img.pixels) {
      sum += p;
      sum_sq += static_cast<std::uint64_t>(p) * p;
    }
    n += img.pixels.size();
    digest_input.insert(digest_input.end(), img.pixels.begin(), img.pixels.end());
  }
  if (n == 0) throw Error(ErrorCode::EmptyCorpus, "corpus_stats over zero pixels");
  CorpusStats stats;
  const long double N = static_cast<long double>(n);
  const long double mean = static_cast<long double>(sum) / N;
  const long double var = std::max<long double>(0.0L, static_cast<long double>(sum_sq) / N - mean * mean);
  stats.mean = static_cast<double>(mean / 255.0L);
  stats.std = static_cast<double>(std::sqrt(var) / 255.0L);
  stats.corpus_hash = sha256_hex(digest_input);
  stats.images = images.size();
  return stats;
}

CorpusStats corpus_stats(const binfeed::Manifest& manifest, std::size_t block_size, std::size_t width_blocks) {
  std::vector<EntropyImage> images;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest.at(i);
    if (e.lineage.kind == binfeed::LineageKind::Obfuscated) continue;
    if (e.lineage.kind == binfeed::LineageKind::Augmented) {
      const auto parent = *manifest.find(e.lineage.parent_id);
      images.push_back(rotate(render_entropy_image(binfeed::load_entry(manifest, parent), block_size, width_blocks),
                              e.lineage.rotation));
    } else {
      images.push_back(render_entropy_image(binfeed::load_entry(manifest, i), block_size, width_blocks));
    }
  }
  return corpus_stats(images);
}

NormalizedImage normalize(const EntropyImage& img, double mean, double std) {
  if (!(std > 0.0)) throw Error(ErrorCode::DegenerateStd, "std must be positive, got " + std::to_string(std));
  NormalizedImage out;
  out.height = img.height;
  out.width = img.width;
  out.mean_used = mean;
  out.std_used = std;
  out.values.reserve(img.pixels.size());
  for (auto p : img.pixels) out.values.push_back((static_cast<double>(p) / 255.0 - mean) / std);
  return out;
}

std::vector<double> denormalize(const NormalizedImage& img) {
  std::vector<double> out;
  out.reserve(img.values.size());
  for (double v : img.values) out.push_back((v * img.std_used + img.mean_used) * 255.0);
  return out;
}

void write_pgm(const std::filesystem::path& path, const EntropyImage& img, const std::string& origin_id,
               const std::string& lineage) {
  std::ostringstream os;
  os << "P5\n# origin_id=" << origin_id << " lineage=" << lineage << '\n'
     << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  binfeed::write_file_atomic(path, os.str());
}

EntropyImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = binfeed::read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  if (next_token() != "P5") throw Error(ErrorCode::ParseError, "not a P5 PGM: " + path.string());
  EntropyImage img;
  try {
    img.width = std::stoul(next_token());
    img.height = std::stoul(next_token());
    if (std::stoul(next_token()) != 255) throw Error(ErrorCode::ParseError, "maxval must be 255");
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ParseError, "bad PGM header: " + path.string());
  }
  ++pos;  // single whitespace after maxval
  if (bytes.size() - pos != img.width * img.height) throw Error(ErrorCode::ParseError, "truncated PGM");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  img.width_blocks = img.width;
  return img;
}

void write_stats(const std::filesystem::path& path, const CorpusStats& stats, std::span<const std::string> comments) {
  std::ostringstream os;
  for (const auto& c : comments) os << "# " << c << '\n';
  os << std::setprecision(17);
  os << "mean\t" << stats.mean << '\n'
     << "std\t" << stats.std << '\n'
     << "images\t" << stats.images << '\n'
     << "corpus_hash\t" << stats.corpus_hash << '\n';
  binfeed::write_file_atomic(path, os.str());
}

CorpusStats read_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  CorpusStats stats;
  bool have_mean = false, have_std = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::ParseError, "bad stats line: " + line);
    const auto key = line.substr(0, tab);
    const auto value = line.substr(tab + 1);
    try {
      if (key == "mean") {
        stats.mean = std::stod(value);
        have_mean = true;
      } else if (key == "std") {
        stats.std = std::stod(value);
        have_std = true;
      } else if (key == "images") {
        stats.images = std::stoul(value);
      } else if (key == "corpus_hash") {
        stats.corpus_hash = value;
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "bad stats value: " + line);
    }
  }
  if (!have_mean || !have_std) throw Error(ErrorCode::ParseError, "stats file lacks mean/std: " + path.string());
  return stats;
}

}  // namespace malfew::entropix
