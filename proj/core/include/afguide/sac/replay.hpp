#pragma once

#include <cstdint>
#include <vector>

#include "afguide/sac/agent.hpp"

namespace afguide::sac {

/// One environment step as stored for replay. `r_g` is fixed at
/// collection time and never recomputed.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r_e = 0.0;
  double r_g = 0.0;
  bool terminated = false;  // goal reached; step-limit truncation is not terminal
  bool truncated = false;
  std::vector<double> s2;
};

/// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  ReplayBuffer(int state_dim, int action_dim, std::int64_t capacity);

  void add(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Stored copy of the i-th oldest transition still in the buffer.
  Transition get(std::size_t i) const;

  template <typename T>
  TransitionBatch<T> sample(int batch, Rng& rng) const;
  template <typename T>
  TransitionBatch<T> gather(const std::vector<std::size_t>& slots) const;

 private:
  int sd_;
  int ad_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<float> s_, a_, s2_, r_e_, r_g_, term_;
};

extern template TransitionBatch<float> ReplayBuffer::sample(int, Rng&) const;
extern template TransitionBatch<double> ReplayBuffer::sample(int, Rng&) const;

}  // namespace afguide::sac
