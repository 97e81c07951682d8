#include "nftm/address.hpp"

#include <algorithm>

#include "nftm/bytes.hpp"
#include "nftm/error.hpp"

namespace nftm {

Address Address::parse(std::string_view text) {
  if (text.size() != 2 + 2 * kSize || text.substr(0, 2) != "0x") {
    throw Error(ErrorCode::Validation, "address must be 0x followed by 40 hex digits");
  }
  auto digits = text.substr(2);
  bool lower = std::all_of(digits.begin(), digits.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
  });
  if (!lower) throw Error(ErrorCode::Validation, "address must use lowercase hex digits");
  auto raw = from_hex(digits);
  std::array<std::uint8_t, kSize> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return Address(out);
}

std::string Address::hex() const { return "0x" + to_hex(bytes_); }

bool Address::is_zero() const {
  return std::all_of(bytes_.begin(), bytes_.end(), [](auto b) { return b == 0; });
}

}  // namespace nftm
