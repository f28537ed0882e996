#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "afguide/nn/tensor.hpp"

namespace afguide::nn {

/// One entry of an "AFGC" checkpoint: a name, a shape and float32 payload.
struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;

  bool operator==(const NamedTensor&) const = default;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kTruncated, kMissingTensor, kShapeMismatch };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr char kCheckpointMagic[4] = {'A', 'F', 'G', 'C'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Layout: magic "AFGC", u16 version, u32 count, then per tensor:
/// u32 name length, utf-8 name, u32 rank, rank x u32 dims, f32 payload.
std::string encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

template <typename T>
std::vector<NamedTensor> export_params(const ParamList<T>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto* p : params) {
    NamedTensor t{p->name, p->shape, {}};
    t.values.resize(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      t.values[static_cast<std::size_t>(i)] = static_cast<float>(p->value.data()[i]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

/// Fills `params` by name. Every parameter must be present with exactly the
/// expected shape; extra tensors in the checkpoint are ignored.
template <typename T>
void import_params(const std::vector<NamedTensor>& tensors, const ParamList<T>& params) {
  for (auto* p : params) {
    const NamedTensor* found = nullptr;
    for (const auto& t : tensors) {
      if (t.name == p->name) {
        found = &t;
        break;
      }
    }
    if (found == nullptr) {
      throw CheckpointError(CheckpointError::Kind::kMissingTensor,
                            "checkpoint is missing tensor '" + p->name + "'");
    }
    if (found->shape != p->shape) {
      throw CheckpointError(CheckpointError::Kind::kShapeMismatch,
                            "checkpoint tensor '" + p->name + "' has the wrong shape");
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      p->value.data()[i] = static_cast<T>(found->values[static_cast<std::size_t>(i)]);
    }
  }
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors, std::string_view name);

}  // namespace afguide::nn
