#include "afguide/nn/checkpoint.hpp"

#include <cstring>

#include "afguide/binary_io.hpp"

namespace afguide::nn {

namespace {

using Kind = CheckpointError::Kind;

[[noreturn]] void truncated(std::size_t index) {
  throw CheckpointError(Kind::kTruncated,
                        "truncated payload in checkpoint tensor " + std::to_string(index));
}

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  io::ByteWriter w;
  w.put_bytes(std::string_view(kCheckpointMagic, 4));
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    std::size_t expected = 1;
    for (auto d : t.shape) expected *= d;
    if (expected != t.values.size()) {
      throw std::invalid_argument("encode_checkpoint: payload of '" + t.name +
                                  "' does not match its shape");
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.put_bytes(t.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.put<std::uint32_t>(d);
    for (float v : t.values) w.put<float>(v);
  }
  return w.take();
}

std::vector<NamedTensor> decode_checkpoint(std::string_view bytes) {
  io::ByteReader r(bytes);
  std::string magic;
  if (!r.get_bytes(4, magic) || std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError(Kind::kBadMagic, "bad magic: not an AFGC checkpoint");
  }
  std::uint16_t version = 0;
  if (!r.get(version)) truncated(0);
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::kBadVersion,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  std::uint32_t count = 0;
  if (!r.get(count)) truncated(0);
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    std::uint32_t name_len = 0;
    if (!r.get(name_len) || !r.get_bytes(name_len, t.name)) truncated(i);
    std::uint32_t rank = 0;
    if (!r.get(rank) || rank > 8) truncated(i);
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      std::uint32_t d = 0;
      if (!r.get(d)) truncated(i);
      t.shape.push_back(d);
      n *= d;
    }
    if (r.remaining() < n * sizeof(float)) truncated(i);
    t.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) r.get(t.values[k]);
    out.push_back(std::move(t));
  }
  return out;
}

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  io::write_file(path, encode_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::string bytes;
  try {
    bytes = io::read_file(path);
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::kIo, e.what());
  }
  return decode_checkpoint(bytes);
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, std::string_view name) {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw CheckpointError(Kind::kMissingTensor,
                        "checkpoint is missing tensor '" + std::string(name) + "'");
}

}  // namespace afguide::nn
