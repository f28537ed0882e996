#include "afguide/sac/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace afguide::sac {

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim, std::int64_t capacity)
    : sd_(state_dim), ad_(action_dim), capacity_(static_cast<std::size_t>(capacity)) {
  if (state_dim < 1 || action_dim < 1 || capacity < 1) {
    throw std::invalid_argument("ReplayBuffer: dims and capacity must be >= 1");
  }
  // Grow lazily; a 1e6 capacity should not cost memory until it is used.
}

void ReplayBuffer::add(const Transition& t) {
  if (static_cast<int>(t.s.size()) != sd_ || static_cast<int>(t.s2.size()) != sd_ ||
      static_cast<int>(t.a.size()) != ad_) {
    throw std::invalid_argument("ReplayBuffer::add: transition has the wrong shape");
  }
  const auto sd = static_cast<std::size_t>(sd_);
  const auto ad = static_cast<std::size_t>(ad_);
  if (size_ < capacity_ && next_ == size_) {
    for (double v : t.s) s_.push_back(static_cast<float>(v));
    for (double v : t.a) a_.push_back(static_cast<float>(v));
    for (double v : t.s2) s2_.push_back(static_cast<float>(v));
    r_e_.push_back(static_cast<float>(t.r_e));
    r_g_.push_back(static_cast<float>(t.r_g));
    term_.push_back(t.terminated ? 1.0f : 0.0f);
  } else {
    for (std::size_t i = 0; i < sd; ++i) {
      s_[next_ * sd + i] = static_cast<float>(t.s[i]);
      s2_[next_ * sd + i] = static_cast<float>(t.s2[i]);
    }
    for (std::size_t i = 0; i < ad; ++i) a_[next_ * ad + i] = static_cast<float>(t.a[i]);
    r_e_[next_] = static_cast<float>(t.r_e);
    r_g_[next_] = static_cast<float>(t.r_g);
    term_[next_] = t.terminated ? 1.0f : 0.0f;
  }
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Transition ReplayBuffer::get(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::get: index out of range");
  const std::size_t slot = size_ < capacity_ ? i : (next_ + i) % capacity_;
  const auto sd = static_cast<std::size_t>(sd_);
  const auto ad = static_cast<std::size_t>(ad_);
  Transition t;
  t.s.assign(s_.begin() + static_cast<std::ptrdiff_t>(slot * sd),
             s_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * sd));
  t.s2.assign(s2_.begin() + static_cast<std::ptrdiff_t>(slot * sd),
              s2_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * sd));
  t.a.assign(a_.begin() + static_cast<std::ptrdiff_t>(slot * ad),
             a_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * ad));
  t.r_e = r_e_[slot];
  t.r_g = r_g_[slot];
  t.terminated = term_[slot] != 0.0f;
  return t;
}

template <typename T>
TransitionBatch<T> ReplayBuffer::gather(const std::vector<std::size_t>& slots) const {
  const auto n = static_cast<Eigen::Index>(slots.size());
  TransitionBatch<T> b;
  b.s.resize(n, sd_);
  b.s2.resize(n, sd_);
  b.a.resize(n, ad_);
  b.r_e.resize(n, 1);
  b.r_g.resize(n, 1);
  b.terminated.resize(n, 1);
  const auto sd = static_cast<std::size_t>(sd_);
  const auto ad = static_cast<std::size_t>(ad_);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t k = slots[static_cast<std::size_t>(r)];
    if (k >= size_) throw std::out_of_range("ReplayBuffer::gather: slot out of range");
    for (std::size_t i = 0; i < sd; ++i) {
      b.s(r, static_cast<Eigen::Index>(i)) = static_cast<T>(s_[k * sd + i]);
      b.s2(r, static_cast<Eigen::Index>(i)) = static_cast<T>(s2_[k * sd + i]);
    }
    for (std::size_t i = 0; i < ad; ++i) {
      b.a(r, static_cast<Eigen::Index>(i)) = static_cast<T>(a_[k * ad + i]);
    }
    b.r_e(r, 0) = static_cast<T>(r_e_[k]);
    b.r_g(r, 0) = static_cast<T>(r_g_[k]);
    b.terminated(r, 0) = static_cast<T>(term_[k]);
  }
  return b;
}

template <typename T>
TransitionBatch<T> ReplayBuffer::sample(int batch, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
  std::vector<std::size_t> slots(static_cast<std::size_t>(batch));
  for (auto& k : slots) k = static_cast<std::size_t>(rng.index(size_));
  return gather<T>(slots);
}

template TransitionBatch<float> ReplayBuffer::gather(const std::vector<std::size_t>&) const;
template TransitionBatch<double> ReplayBuffer::gather(const std::vector<std::size_t>&) const;
template TransitionBatch<float> ReplayBuffer::sample(int, Rng&) const;
template TransitionBatch<double> ReplayBuffer::sample(int, Rng&) const;

}  // namespace afguide::sac
