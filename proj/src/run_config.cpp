#include "malfew/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <type_traits>

#include "malfew/error.hpp"

namespace malfew::cli {

std::vector<std::string> RunConfig::echo() const {
  std::vector<std::string> lines;
  auto add = [&](const std::string& k, const auto& v) {
    std::ostringstream os;
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, v);
      os << k << '=' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
    } else {
      os << k << '=' << v;
    }
    lines.push_back(os.str());
  };
  const auto& t = train;
  add("way", t.ways);
  add("shot", t.shots);
  add("queries", t.queries);
  add("episodes", t.episodes_train);
  add("eval_episodes", t.episodes_eval);
  add("runs", t.runs);
  add("lambda", t.lambda);
  add("lr", t.lr);
  add("optimizer", t.optimizer == gradcore::OptimizerKind::Adam ? "adam" : "sgd");
  add("pooling", sdae::to_string(t.pooling));
  add("head_dim", t.head_dim);
  add("channels", t.channels);
  add("seed", t.seed);
  add("obfuscate_train", t.obfuscation_enabled);
  add("decoder", t.decoder_enabled);
  add("augmented", t.include_augmented);
  add("norm_mean", t.norm_mean);
  add("norm_std", t.norm_std);
  add("block_size", block_size);
  add("width_blocks", width_blocks);
  char hex[3];
  std::snprintf(hex, sizeof hex, "%02x", nop_byte);
  add("nop_byte", hex);
  std::string freqs;
  for (auto f : frequencies) freqs += (freqs.empty() ? "" : ",") + std::to_string(f);
  add("frequency", freqs);
  add("families", families);
  add("per_family", per_family);
  add("min_per_class", min_per_class);
  add("train_classes", train_classes);
  add("test_classes", test_classes);
  add("manifest", manifest);
  std::sort(lines.begin(), lines.end());
  return lines;
}

std::uint8_t parse_nop_byte(std::string_view text) {
  if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
  auto digit = [&](char ch) -> int {
    if (ch >= '0' && ch <= '9') return ch - '0';
    if (ch >= 'a' && ch <= 'f') return ch - 'a' + 10;
    if (ch >= 'A' && ch <= 'F') return ch - 'A' + 10;
    return -1;
  };
  if (text.size() != 2 || digit(text[0]) < 0 || digit(text[1]) < 0) {
    throw Error(ErrorCode::InvalidArgument, "nop byte must be two hex digits, got '" + std::string(text) + "'");
  }
  return static_cast<std::uint8_t>(digit(text[0]) * 16 + digit(text[1]));
}

episodes::ClassSplit resolve_split(const binfeed::Manifest& manifest, const RunConfig& config) {
  const std::size_t total = manifest.families().size();
  std::size_t n_train = config.train_classes;
  std::size_t n_test = config.test_classes;
  if (n_train == 0) {
    n_train = static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(total)));
    if (n_test != 0 && n_test < total) n_train = total - n_test;
  }
  if (n_test == 0) n_test = total > n_train ? total - n_train : 0;
  return episodes::split_classes(manifest, n_train, n_test, config.train.seed);
}

}  // namespace malfew::cli
