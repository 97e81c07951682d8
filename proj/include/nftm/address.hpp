#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace nftm {

/// 20-byte account identifier, rendered as "0x" + 40 lowercase hex digits.
class Address {
 public:
  static constexpr std::size_t kSize = 20;

  Address() = default;
  explicit Address(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

  /// Strict: exactly "0x" followed by 40 lowercase hex digits, so parse/render round-trips
  /// byte-identically. Throws Error(Validation).
  static Address parse(std::string_view text);

  std::string hex() const;
  const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
  bool is_zero() const;

  auto operator<=>(const Address&) const = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

}  // namespace nftm

template <>
struct std::hash<nftm::Address> {
  std::size_t operator()(const nftm::Address& a) const noexcept {
    std::size_t h = 0;
    for (auto b : a.bytes()) h = h * 131 + b;
    return h;
  }
};
