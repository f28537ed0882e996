#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

namespace afguide::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

/// Appends little-endian scalars to a byte string.
class ByteWriter {
 public:
  template <typename V>
  void put(V value) {
    static_assert(std::is_trivially_copyable_v<V>);
    char raw[sizeof(V)];
    std::memcpy(raw, &value, sizeof(V));
    bytes_.append(raw, sizeof(V));
  }
  void put_bytes(std::string_view data) { bytes_.append(data); }

  const std::string& bytes() const { return bytes_; }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

/// Sequential little-endian reader; get() returns false on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename V>
  bool get(V& out) {
    static_assert(std::is_trivially_copyable_v<V>);
    if (remaining() < sizeof(V)) return false;
    std::memcpy(&out, data_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return true;
  }

  bool get_bytes(std::size_t n, std::string& out) {
    if (remaining() < n) return false;
    out.assign(data_.data() + pos_, n);
    pos_ += n;
    return true;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace afguide::io
