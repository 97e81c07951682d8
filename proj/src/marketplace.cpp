#include "nftm/marketplace.hpp"

#include "nftm/error.hpp"

namespace nftm::market {

std::string_view revert_name(Revert r) {
  switch (r) {
    case Revert::UnknownUri: return "UnknownUri";
    case Revert::MetadataInvalid: return "MetadataInvalid";
    case Revert::ZeroPrice: return "ZeroPrice";
    case Revert::UnexpectedValue: return "UnexpectedValue";
    case Revert::UnknownToken: return "UnknownToken";
    case Revert::NotListed: return "NotListed";
    case Revert::SelfPurchase: return "SelfPurchase";
    case Revert::WrongPayment: return "WrongPayment";
    case Revert::InsufficientFunds: return "InsufficientFunds";
  }
  return "Unknown";
}

std::optional<Revert> Marketplace::check_mint(const Mint& call, std::uint64_t value,
                                              const UriResolver& resolve) const {
  if (call.price == 0) return Revert::ZeroPrice;
  // Minting is free; value sent with a mint would have nowhere to go.
  if (value != 0) return Revert::UnexpectedValue;
  switch (resolve(call.token_uri)) {
    case UriStatus::Valid: break;
    case UriStatus::Unknown: return Revert::UnknownUri;
    case UriStatus::Invalid: return Revert::MetadataInvalid;
  }
  return std::nullopt;
}

Minted Marketplace::apply_mint(const Address& caller, const Mint& call) {
  TokenId id{tokens_.size() + 1};
  tokens_.push_back(NFTRecord{id, caller, caller, call.token_uri, call.price, true});
  return Minted{id, caller, call.token_uri, call.price};
}

std::variant<Sale, Revert> Marketplace::check_buy(const Address& caller, const BuyToken& call,
                                                  std::uint64_t payment,
                                                  std::uint64_t caller_balance) const {
  auto id = call.token_id.value;
  if (id == 0 || id > tokens_.size()) return Revert::UnknownToken;
  const auto& token = tokens_[id - 1];
  if (!token.listed) return Revert::NotListed;
  if (token.owner == caller) return Revert::SelfPurchase;
  if (payment != token.price) return Revert::WrongPayment;
  if (caller_balance < payment) return Revert::InsufficientFunds;
  return Sale{token.token_id, token.owner, caller, token.price};
}

Sold Marketplace::apply_buy(const Sale& sale) {
  auto& token = tokens_[sale.token_id.value - 1];
  token.owner = sale.buyer;
  token.listed = false;
  return Sold{sale.token_id, sale.seller, sale.buyer, sale.price};
}

std::vector<NFTRecord> Marketplace::listings() const {
  std::vector<NFTRecord> out;
  for (const auto& t : tokens_) {
    if (t.listed) out.push_back(t);
  }
  return out;
}

std::vector<NFTRecord> Marketplace::tokens_of(const Address& owner) const {
  std::vector<NFTRecord> out;
  for (const auto& t : tokens_) {
    if (t.owner == owner) out.push_back(t);
  }
  return out;
}

std::optional<NFTRecord> Marketplace::find(TokenId id) const {
  if (id.value == 0 || id.value > tokens_.size()) return std::nullopt;
  return tokens_[id.value - 1];
}

const NFTRecord& Marketplace::get(TokenId id) const {
  if (id.value == 0 || id.value > tokens_.size()) {
    throw Error(ErrorCode::UnknownToken, "no token with id " + std::to_string(id.value));
  }
  return tokens_[id.value - 1];
}

void Marketplace::write_state(ByteWriter& w) const {
  w.u64(tokens_.size());
  for (const auto& t : tokens_) {
    w.u64(t.token_id.value);
    w.raw(t.owner.bytes());
    w.raw(t.creator.bytes());
    w.str(t.token_uri.str());
    w.u64(t.price);
    w.u8(t.listed ? 1 : 0);
  }
}

}  // namespace nftm::market
