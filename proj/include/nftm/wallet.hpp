#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "nftm/address.hpp"
#include "nftm/bytes.hpp"
#include "nftm/clock.hpp"

namespace nftm::wallet {

struct PublicKey {
  static constexpr std::size_t kSize = 32;
  std::array<std::uint8_t, kSize> bytes{};

  /// Throws Error(Validation) unless exactly 32 bytes.
  static PublicKey from_bytes(ByteView raw);
  static PublicKey from_hex(std::string_view hex);
  std::string hex() const { return to_hex(bytes); }
  auto operator<=>(const PublicKey&) const = default;
};

struct Signature {
  static constexpr std::size_t kSize = 64;
  std::array<std::uint8_t, kSize> bytes{};

  static Signature from_bytes(ByteView raw);
  static Signature from_hex(std::string_view hex);
  std::string hex() const { return to_hex(bytes); }
  auto operator<=>(const Signature&) const = default;
};

/// Ed25519 key pair. The seed is wiped on destruction and is only reachable through
/// `seed_hex()`, which exists for the keystore writer.
class KeyPair {
 public:
  KeyPair(const KeyPair&);
  KeyPair& operator=(const KeyPair&);
  ~KeyPair();

  const PublicKey& public_key() const { return public_key_; }
  Address address() const;
  std::string seed_hex() const;

 private:
  friend KeyPair generate_keypair(std::optional<ByteView> seed);
  friend Signature sign(const KeyPair& keys, ByteView message);
  KeyPair() = default;

  std::array<std::uint8_t, 32> seed_{};
  std::array<std::uint8_t, 64> secret_{};  // libsodium expanded form: seed || public key
  PublicKey public_key_;
};

/// Deterministic for a given 32-byte seed, random otherwise.
KeyPair generate_keypair(std::optional<ByteView> seed = std::nullopt);

/// "0x" + hex of the first 20 bytes of SHA-256(public key).
Address derive_address(const PublicKey& key);

Signature sign(const KeyPair& keys, ByteView message);
bool verify(const PublicKey& key, ByteView message, const Signature& signature);

/// Keystore: one line of 64 hex chars, file mode 0600. Not encrypted.
void write_keystore(const std::filesystem::path& path, const KeyPair& keys);
KeyPair read_keystore(const std::filesystem::path& path);

struct Challenge {
  Address address;
  std::string nonce;  // 16 random bytes, hex
  std::uint64_t issued_at = 0;
  std::uint64_t ttl = 0;

  std::uint64_t expires_at() const { return issued_at + ttl; }
};

/// The exact bytes a wallet signs to answer a challenge.
std::string login_message(std::string_view nonce_hex);

/// Outstanding connect challenges. Each challenge validates at most once, and only before
/// `issued_at + ttl`. Thread-safe; consumption is atomic.
class ChallengeRegistry {
 public:
  static constexpr std::uint64_t kDefaultTtl = 120;

  explicit ChallengeRegistry(std::shared_ptr<const Clock> clock, std::uint64_t ttl = kDefaultTtl);

  Challenge issue(const Address& address);

  /// Most recent challenge issued to `address`, consumed or not.
  std::optional<Challenge> latest_for(const Address& address) const;

  /// Verifies the signature over login_message(nonce) and that `key` derives the
  /// challenged address. Consumes the challenge on success. Errors: UnknownChallenge,
  /// AlreadyUsed, Expired, BadSignature.
  Address prove(std::string_view nonce, const PublicKey& key, const Signature& signature);

  std::uint64_t ttl() const { return ttl_; }

 private:
  struct Entry {
    Challenge challenge;
    bool consumed = false;
  };

  void prune_locked(std::uint64_t now);

  std::shared_ptr<const Clock> clock_;
  std::uint64_t ttl_;
  mutable std::mutex mu_;
  std::map<std::string, Entry, std::less<>> by_nonce_;
  std::map<Address, std::string> latest_;
};

}  // namespace nftm::wallet
