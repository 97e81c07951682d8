#pragma once

#include <sodium.h>

#include <stdexcept>

namespace nftm::detail {

inline void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium failed to initialize");
}

}  // namespace nftm::detail
