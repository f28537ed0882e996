#include <algorithm>
#include <cmath>
#include <cstring>

#include "afguide/binary_io.hpp"
#include "afguide/dataset/dataset.hpp"

namespace afguide::data {

namespace {

using Kind = DatasetError::Kind;

[[noreturn]] void truncated(std::uint32_t trajectory) {
  throw DatasetError(Kind::kTruncated,
                     "truncated payload in trajectory " + std::to_string(trajectory));
}

}  // namespace

std::string encode_dataset(const ActionFreeDataset& dataset) {
  io::ByteWriter w;
  w.put_bytes(std::string_view(kDatasetMagic, 4));
  w.put<std::uint16_t>(kDatasetVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.state_dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.size()));
  for (const auto& traj : dataset.trajectories()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.length()));
    for (float v : traj.states) w.put<float>(v);
    for (float v : traj.rewards) w.put<float>(v);
  }
  return w.take();
}

ActionFreeDataset decode_dataset(std::string_view bytes) {
  io::ByteReader r(bytes);
  std::string magic;
  if (!r.get_bytes(4, magic) || std::memcmp(magic.data(), kDatasetMagic, 4) != 0) {
    throw DatasetError(Kind::kBadMagic, "bad magic: not an AFD1 dataset");
  }
  std::uint16_t version = 0;
  std::uint32_t state_dim = 0;
  std::uint32_t count = 0;
  if (!r.get(version)) throw DatasetError(Kind::kTruncated, "truncated header");
  if (version != kDatasetVersion) {
    throw DatasetError(Kind::kBadVersion, "unsupported dataset version " + std::to_string(version));
  }
  if (!r.get(state_dim) || !r.get(count)) throw DatasetError(Kind::kTruncated, "truncated header");
  if (state_dim == 0) throw DatasetError(Kind::kInvalid, "state_dim is zero");
  std::vector<Trajectory> trajs;
  trajs.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t length = 0;
    if (!r.get(length)) truncated(i);
    const std::size_t n_states = static_cast<std::size_t>(length) * state_dim;
    if (r.remaining() < (n_states + length) * sizeof(float)) truncated(i);
    Trajectory traj;
    traj.states.resize(n_states);
    traj.rewards.resize(length);
    for (auto& v : traj.states) r.get(v);
    for (auto& v : traj.rewards) r.get(v);
    const auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(traj.states.begin(), traj.states.end(), finite) ||
        !std::all_of(traj.rewards.begin(), traj.rewards.end(), finite)) {
      throw DatasetError(Kind::kNonFinite,
                         "non-finite value in trajectory " + std::to_string(i));
    }
    if (length < 2) {
      throw DatasetError(Kind::kInvalid,
                         "trajectory " + std::to_string(i) + " is shorter than 2 steps");
    }
    trajs.push_back(std::move(traj));
  }
  if (r.remaining() != 0) {
    throw DatasetError(Kind::kInvalid, "trailing bytes after the last trajectory");
  }
  if (trajs.empty()) throw DatasetError(Kind::kInvalid, "dataset has no trajectories");
  return ActionFreeDataset(static_cast<int>(state_dim), std::move(trajs));
}

void save_dataset(const ActionFreeDataset& dataset, const std::string& path) {
  io::write_file(path, encode_dataset(dataset));
}

ActionFreeDataset load_dataset(const std::string& path) {
  std::string bytes;
  try {
    bytes = io::read_file(path);
  } catch (const std::exception& e) {
    throw DatasetError(Kind::kIo, e.what());
  }
  return decode_dataset(bytes);
}

}  // namespace afguide::data
