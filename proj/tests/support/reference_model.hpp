#pragma once

// Brute-force reference interpreter for the chain + marketplace rules. It shares no code
// with nftm::ledger or nftm::market: plain maps, its own state encoding, OpenSSL hashing.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace oracle {

using Addr = std::array<std::uint8_t, 20>;

enum class UriKind { Valid, Unknown, Invalid };

class ReferenceModel {
 public:
  struct Acct {
    std::uint64_t balance = 0;
    std::uint64_t nonce = 0;
  };
  struct Token {
    Addr owner{};
    Addr creator{};
    std::string uri;
    std::uint64_t price = 0;
    bool listed = true;
    int sales = 0;
  };

  std::map<Addr, Acct> accounts;
  std::vector<Token> tokens;
  std::uint64_t issuance = 0;

  // --- submission-time admission ---
  std::map<Addr, std::uint64_t> pending;

  /// "" if admitted; otherwise the rejection name.
  std::string admit(const Addr& from, std::uint64_t nonce) {
    auto it = accounts.find(from);
    if (it == accounts.end()) return "UnknownSender";
    if (nonce != it->second.nonce + pending[from]) return "NonceMismatch";
    pending[from]++;
    return "";
  }
  void sealed() { pending.clear(); }

  // --- execution; return "" on success or the revert reason ---
  void faucet(const Addr& to, std::uint64_t amount) {
    accounts[to].balance += amount;
    issuance += amount;
  }

  std::string transfer(const Addr& from, std::uint64_t nonce, const Addr& to, std::uint64_t value) {
    if (auto r = precheck(from, nonce); !r.empty()) return r;
    if (accounts[from].balance < value) return "InsufficientFunds";
    accounts[from].balance -= value;
    accounts[to].balance += value;
    accounts[from].nonce++;
    return "";
  }

  std::string mint(const Addr& from, std::uint64_t nonce, const std::string& uri, UriKind kind,
                   std::uint64_t price, std::uint64_t value) {
    if (auto r = precheck(from, nonce); !r.empty()) return r;
    if (price == 0) return "ZeroPrice";
    if (value != 0) return "UnexpectedValue";
    if (kind == UriKind::Unknown) return "UnknownUri";
    if (kind == UriKind::Invalid) return "MetadataInvalid";
    tokens.push_back(Token{from, from, uri, price, true, 0});
    accounts[from].nonce++;
    return "";
  }

  std::string buy(const Addr& from, std::uint64_t nonce, std::uint64_t id, std::uint64_t payment) {
    if (auto r = precheck(from, nonce); !r.empty()) return r;
    if (id == 0 || id > tokens.size()) return "UnknownToken";
    auto& t = tokens[id - 1];
    if (!t.listed) return "NotListed";
    if (t.owner == from) return "SelfPurchase";
    if (payment != t.price) return "WrongPayment";
    if (accounts[from].balance < payment) return "InsufficientFunds";
    accounts[from].balance -= payment;
    accounts[t.owner].balance += payment;
    t.owner = from;
    t.listed = false;
    t.sales++;
    accounts[from].nonce++;
    return "";
  }

  std::uint64_t balance(const Addr& a) const {
    auto it = accounts.find(a);
    return it == accounts.end() ? 0 : it->second.balance;
  }
  std::uint64_t nonce(const Addr& a) const {
    auto it = accounts.find(a);
    return it == accounts.end() ? 0 : it->second.nonce;
  }

  /// Same layout the ledger documents for its state hash, re-encoded here by hand.
  std::string state_hash_hex() const {
    std::vector<std::uint8_t> b;
    auto u64 = [&](std::uint64_t v) {
      for (int s = 56; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
    };
    auto u32 = [&](std::uint32_t v) {
      for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
    };
    u64(accounts.size());
    for (const auto& [a, acc] : accounts) {
      b.insert(b.end(), a.begin(), a.end());
      u64(acc.balance);
      u64(acc.nonce);
    }
    u64(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto& t = tokens[i];
      u64(i + 1);
      b.insert(b.end(), t.owner.begin(), t.owner.end());
      b.insert(b.end(), t.creator.begin(), t.creator.end());
      u32(static_cast<std::uint32_t>(t.uri.size()));
      b.insert(b.end(), t.uri.begin(), t.uri.end());
      u64(t.price);
      b.push_back(t.listed ? 1 : 0);
    }
    return hex(sha256(b));
  }

 private:
  std::string precheck(const Addr& from, std::uint64_t nonce) {
    auto it = accounts.find(from);
    if (it == accounts.end()) return "UnknownSender";
    if (it->second.nonce != nonce) return "NonceMismatch";
    return "";
  }
};

}  // namespace oracle
