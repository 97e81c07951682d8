#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nftm {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Hash32 = std::array<std::uint8_t, 32>;

std::string to_hex(ByteView data);
/// Lowercase or uppercase digits accepted; throws Error(Validation) on odd length or bad digit.
Bytes from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

Hash32 sha256(ByteView data);
inline Hash32 sha256(std::string_view s) { return sha256(as_bytes(s)); }

/// Fills `out` from the OS CSPRNG.
void random_bytes(std::span<std::uint8_t> out);

/// Big-endian, length-prefixed encoder used for every signing preimage and hash input.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void raw(ByteView data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
  /// 4-byte length prefix followed by the bytes.
  void blob(ByteView data);
  void str(std::string_view s) { blob(as_bytes(s)); }

  const Bytes& bytes() const& { return buf_; }
  Bytes take() && { return std::move(buf_); }

 private:
  Bytes buf_;
};

/// Reader counterpart of ByteWriter. Any short read throws Error(Validation).
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView raw(std::size_t n);
  Bytes blob();
  std::string str();

  template <std::size_t N>
  std::array<std::uint8_t, N> fixed() {
    std::array<std::uint8_t, N> out{};
    auto v = raw(N);
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }

  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  /// Throws unless every byte was consumed.
  void expect_done() const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace nftm
