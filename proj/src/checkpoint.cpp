#include <cstring>

#include <json.hpp>

#include "malfew/error.hpp"
#include "malfew/random.hpp"
#include "malfew/trainer.hpp"

namespace malfew::trainer {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'L', 'F', 'E', 'W', 'C', 'K'};
constexpr std::size_t kDigest = 32;

template <class U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

template <class U>
U get(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(U) > bytes.size()) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
  U v;
  std::memcpy(&v, bytes.data() + pos, sizeof(U));
  pos += sizeof(U);
  return v;
}

std::string digest_of(std::string_view body) {
  const auto d = sha256(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
  return std::string(reinterpret_cast<const char*>(d.data()), d.size());
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  const auto& a = ck.model.config;
  nlohmann::json header;
  header["arch"] = {{"input_side", a.input_side},   {"channels", a.channels},
                    {"decoder_channels", a.decoder_channels}, {"head_dim", a.head_dim},
                    {"pooling", sdae::to_string(a.pooling)}, {"lambda", a.lambda},
                    {"decoder_enabled", a.decoder_enabled}};
  header["norm"] = {{"mean", ck.norm_mean}, {"std", ck.norm_std}};
  header["render"] = {{"block_size", ck.render.block_size}, {"width_blocks", ck.render.width_blocks}};
  header["config"] = ck.config_echo;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : ck.model.state()) {
    const auto& s = t->shape();
    tensors.push_back({{"name", name}, {"shape", {s.n, s.c, s.h, s.w}}});
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& [name, t] : ck.model.state()) {
    out.append(reinterpret_cast<const char*>(t->data()), t->size() * sizeof(float));
  }
  out += digest_of(out);
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic + 12 + kDigest || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::CorruptCheckpoint, "not a checkpoint file");
  }
  std::size_t pos = sizeof kMagic;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                                std::to_string(kCheckpointVersion));
  }
  const auto body = bytes.substr(0, bytes.size() - kDigest);
  if (digest_of(body) != bytes.substr(bytes.size() - kDigest)) {
    throw Error(ErrorCode::CorruptCheckpoint, "checkpoint checksum mismatch");
  }
  const auto header_len = get<std::uint64_t>(bytes, pos);
  if (header_len > body.size() - pos) throw Error(ErrorCode::CorruptCheckpoint, "header length out of range");

  Checkpoint ck{sdae::Model<float>{}, 0.0, 0.0, {}, {}};
  try {
    const auto header = nlohmann::json::parse(body.substr(pos, header_len));
    pos += header_len;
    const auto& j = header.at("arch");
    sdae::ArchConfig a;
    a.input_side = j.at("input_side");
    a.channels = j.at("channels");
    a.decoder_channels = j.at("decoder_channels").get<std::vector<std::size_t>>();
    a.head_dim = j.at("head_dim");
    a.pooling = sdae::parse_pooling(j.at("pooling").get<std::string>());
    a.lambda = j.at("lambda");
    a.decoder_enabled = j.at("decoder_enabled");
    ck.model = sdae::Model<float>::make(a, 0);
    ck.norm_mean = header.at("norm").at("mean");
    ck.norm_std = header.at("norm").at("std");
    ck.render.block_size = header.at("render").at("block_size");
    ck.render.width_blocks = header.at("render").at("width_blocks");
    ck.config_echo = header.at("config").get<std::vector<std::string>>();

    const auto& tensors = header.at("tensors");
    auto state = ck.model.state();
    if (tensors.size() != state.size()) throw Error(ErrorCode::CorruptCheckpoint, "tensor count mismatch");
    for (std::size_t i = 0; i < state.size(); ++i) {
      auto& [name, t] = state[i];
      const auto shape = tensors[i].at("shape").get<std::vector<std::size_t>>();
      const auto& s = t->shape();
      if (tensors[i].at("name") != name || shape != std::vector<std::size_t>{s.n, s.c, s.h, s.w}) {
        throw Error(ErrorCode::CorruptCheckpoint, "unexpected tensor '" + tensors[i].at("name").get<std::string>() + "'");
      }
      const std::size_t n = t->size() * sizeof(float);
      if (pos + n > body.size()) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
      std::memcpy(t->data(), body.data() + pos, n);
      pos += n;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("bad checkpoint header: ") + e.what());
  }
  if (pos != body.size()) throw Error(ErrorCode::CorruptCheckpoint, "trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  binfeed::write_file_atomic(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = binfeed::read_file(path);
  return deserialize_checkpoint(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string parameter_hash(const sdae::Model<float>& model) {
  std::string buf;
  for (const auto& [name, t] : model.state()) {
    buf += name;
    buf.push_back('\0');
    buf.append(reinterpret_cast<const char*>(t->data()), t->size() * sizeof(float));
  }
  return sha256_hex(std::string_view(buf));
}

}  // namespace malfew::trainer
