#include "nftm/wallet.hpp"

#include <sodium.h>
#include <sys/stat.h>

#include <fstream>

#include "nftm/error.hpp"
#include "sodium_init.hpp"

namespace nftm::wallet {

PublicKey PublicKey::from_bytes(ByteView raw) {
  if (raw.size() != kSize) throw Error(ErrorCode::Validation, "public key must be 32 bytes");
  PublicKey out;
  std::copy(raw.begin(), raw.end(), out.bytes.begin());
  return out;
}

PublicKey PublicKey::from_hex(std::string_view hex) { return from_bytes(nftm::from_hex(hex)); }

Signature Signature::from_bytes(ByteView raw) {
  if (raw.size() != kSize) throw Error(ErrorCode::Validation, "signature must be 64 bytes");
  Signature out;
  std::copy(raw.begin(), raw.end(), out.bytes.begin());
  return out;
}

Signature Signature::from_hex(std::string_view hex) { return from_bytes(nftm::from_hex(hex)); }

KeyPair::KeyPair(const KeyPair&) = default;
KeyPair& KeyPair::operator=(const KeyPair&) = default;

KeyPair::~KeyPair() {
  sodium_memzero(seed_.data(), seed_.size());
  sodium_memzero(secret_.data(), secret_.size());
}

Address KeyPair::address() const { return derive_address(public_key_); }

std::string KeyPair::seed_hex() const { return to_hex(seed_); }

KeyPair generate_keypair(std::optional<ByteView> seed) {
  detail::ensure_sodium();
  KeyPair keys;
  if (seed) {
    if (seed->size() != keys.seed_.size()) {
      throw Error(ErrorCode::Validation, "seed must be exactly 32 bytes");
    }
    std::copy(seed->begin(), seed->end(), keys.seed_.begin());
  } else {
    randombytes_buf(keys.seed_.data(), keys.seed_.size());
  }
  crypto_sign_seed_keypair(keys.public_key_.bytes.data(), keys.secret_.data(), keys.seed_.data());
  return keys;
}

Address derive_address(const PublicKey& key) {
  auto digest = sha256(key.bytes);
  std::array<std::uint8_t, Address::kSize> out{};
  std::copy_n(digest.begin(), out.size(), out.begin());
  return Address(out);
}

Signature sign(const KeyPair& keys, ByteView message) {
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                       keys.secret_.data());
  return sig;
}

bool verify(const PublicKey& key, ByteView message, const Signature& signature) {
  detail::ensure_sodium();
  return crypto_sign_verify_detached(signature.bytes.data(), message.data(), message.size(),
                                     key.bytes.data()) == 0;
}

void write_keystore(const std::filesystem::path& path, const KeyPair& keys) {
  // Create with 0600 before any secret bytes are written.
  {
    std::ofstream create(path, std::ios::trunc);
    if (!create) throw Error(ErrorCode::Io, "cannot write keystore " + path.string());
  }
  ::chmod(path.c_str(), S_IRUSR | S_IWUSR);
  std::ofstream out(path, std::ios::trunc);
  out << keys.seed_hex() << '\n';
  if (!out) throw Error(ErrorCode::Io, "cannot write keystore " + path.string());
}

KeyPair read_keystore(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read keystore " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() != 64) {
    throw Error(ErrorCode::Validation, "keystore " + path.string() + " must hold 64 hex chars");
  }
  auto seed = from_hex(line);
  auto keys = generate_keypair(ByteView(seed));
  sodium_memzero(seed.data(), seed.size());
  return keys;
}

std::string login_message(std::string_view nonce_hex) {
  return "login:" + std::string(nonce_hex);
}

ChallengeRegistry::ChallengeRegistry(std::shared_ptr<const Clock> clock, std::uint64_t ttl)
    : clock_(std::move(clock)), ttl_(ttl) {}

Challenge ChallengeRegistry::issue(const Address& address) {
  std::array<std::uint8_t, 16> nonce{};
  random_bytes(nonce);
  Challenge c{address, to_hex(nonce), clock_->now(), ttl_};

  std::lock_guard lock(mu_);
  prune_locked(c.issued_at);
  by_nonce_[c.nonce] = Entry{c, false};
  latest_[address] = c.nonce;
  return c;
}

std::optional<Challenge> ChallengeRegistry::latest_for(const Address& address) const {
  std::lock_guard lock(mu_);
  auto it = latest_.find(address);
  if (it == latest_.end()) return std::nullopt;
  auto entry = by_nonce_.find(it->second);
  if (entry == by_nonce_.end()) return std::nullopt;
  return entry->second.challenge;
}

Address ChallengeRegistry::prove(std::string_view nonce, const PublicKey& key,
                                 const Signature& signature) {
  auto now = clock_->now();
  std::lock_guard lock(mu_);
  auto it = by_nonce_.find(nonce);
  if (it == by_nonce_.end()) throw Error(ErrorCode::UnknownChallenge, "no such challenge");
  auto& entry = it->second;
  if (entry.consumed) throw Error(ErrorCode::AlreadyUsed, "challenge already used");
  if (now >= entry.challenge.expires_at()) throw Error(ErrorCode::Expired, "challenge expired");
  if (derive_address(key) != entry.challenge.address ||
      !verify(key, as_bytes(login_message(entry.challenge.nonce)), signature)) {
    throw Error(ErrorCode::BadSignature, "challenge signature does not verify");
  }
  entry.consumed = true;
  return entry.challenge.address;
}

void ChallengeRegistry::prune_locked(std::uint64_t now) {
  // Entries linger one extra ttl so late proofs still report Expired/AlreadyUsed.
  for (auto it = by_nonce_.begin(); it != by_nonce_.end();) {
    if (it->second.challenge.expires_at() + ttl_ < now) {
      auto latest = latest_.find(it->second.challenge.address);
      if (latest != latest_.end() && latest->second == it->first) latest_.erase(latest);
      it = by_nonce_.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace nftm::wallet
