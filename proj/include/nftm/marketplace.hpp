#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "nftm/address.hpp"
#include "nftm/bytes.hpp"
#include "nftm/content_store.hpp"

namespace nftm::market {

using content::Cid;

struct TokenId {
  std::uint64_t value = 0;
  auto operator<=>(const TokenId&) const = default;
};

struct NFTRecord {
  TokenId token_id;
  Address owner;
  Address creator;
  Cid token_uri;
  std::uint64_t price = 0;
  bool listed = false;

  bool operator==(const NFTRecord&) const = default;
};

// Contract calls carried inside a ledger transaction.
struct Mint {
  Cid token_uri;
  std::uint64_t price = 0;
  bool operator==(const Mint&) const = default;
};

struct BuyToken {
  TokenId token_id;
  bool operator==(const BuyToken&) const = default;
};

struct Minted {
  TokenId token_id;
  Address creator;
  Cid token_uri;
  std::uint64_t price = 0;
  bool operator==(const Minted&) const = default;
};

struct Sold {
  TokenId token_id;
  Address seller;
  Address buyer;
  std::uint64_t price = 0;
  bool operator==(const Sold&) const = default;
};

using Event = std::variant<Minted, Sold>;

enum class Revert {
  UnknownUri,
  MetadataInvalid,
  ZeroPrice,
  UnexpectedValue,
  UnknownToken,
  NotListed,
  SelfPurchase,
  WrongPayment,
  InsufficientFunds,
};

std::string_view revert_name(Revert r);

enum class UriStatus { Valid, Unknown, Invalid };
/// Checks that a token URI names a pinned, canonical metadata document.
using UriResolver = std::function<UriStatus(const Cid&)>;

/// Ownership transfer approved by check_buy, applied by apply_buy.
struct Sale {
  TokenId token_id;
  Address seller;
  Address buyer;
  std::uint64_t price = 0;
};

/// The marketplace contract's storage and rules. Every mutation is split into a const
/// check step and an infallible apply step so that a failed check leaves state untouched.
///
/// Tokens are minted already listed; a sale unlists permanently (no resale entry point).
class Marketplace {
 public:
  std::optional<Revert> check_mint(const Mint& call, std::uint64_t value,
                                   const UriResolver& resolve) const;
  Minted apply_mint(const Address& caller, const Mint& call);

  std::variant<Sale, Revert> check_buy(const Address& caller, const BuyToken& call,
                                       std::uint64_t payment,
                                       std::uint64_t caller_balance) const;
  Sold apply_buy(const Sale& sale);

  /// Listed tokens, ascending id.
  std::vector<NFTRecord> listings() const;
  std::vector<NFTRecord> tokens_of(const Address& owner) const;
  std::optional<NFTRecord> find(TokenId id) const;
  /// Throws Error(UnknownToken).
  const NFTRecord& get(TokenId id) const;
  Address owner_of(TokenId id) const { return get(id).owner; }
  Cid token_uri(TokenId id) const { return get(id).token_uri; }

  /// Running count of minted tokens; also the highest id.
  std::uint64_t total_minted() const { return tokens_.size(); }
  const std::vector<NFTRecord>& tokens() const { return tokens_; }

  /// Canonical bytes of the token table, ascending id, for the ledger state hash.
  void write_state(ByteWriter& w) const;

 private:
  std::vector<NFTRecord> tokens_;  // tokens_[i].token_id == i + 1
};

}  // namespace nftm::market
