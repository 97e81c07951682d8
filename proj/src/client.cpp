#include "nftm/client.hpp"

#include <httplib.h>

namespace nftm::client {

using nlohmann::json;

ApiResponse InProcessClient::request(const std::string& method, const std::string& target,
                                     const std::string& body,
                                     const std::map<std::string, std::string>& headers) {
  std::map<std::string, std::string> lowered;
  for (const auto& [k, v] : headers) {
    std::string key = k;
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    lowered[key] = v;
  }
  auto res = api_.handle(service::HttpRequest::make(method, target, body, std::move(lowered)));
  return {res.status, res.content_type, std::move(res.body)};
}

struct HttpClient::Impl {
  explicit Impl(const std::string& url) : base(url), client(url) {
    client.set_connection_timeout(std::chrono::seconds(5));
    client.set_read_timeout(std::chrono::seconds(120));
  }
  std::string base;
  httplib::Client client;
};

HttpClient::HttpClient(std::string base_url) {
  while (!base_url.empty() && base_url.back() == '/') base_url.pop_back();
  impl_ = std::make_unique<Impl>(base_url);
}

HttpClient::~HttpClient() = default;

ApiResponse HttpClient::request(const std::string& method, const std::string& target,
                                const std::string& body,
                                const std::map<std::string, std::string>& headers) {
  httplib::Headers h(headers.begin(), headers.end());
  httplib::Result res = method == "GET"
                            ? impl_->client.Get(target, h)
                            : impl_->client.Post(target, h, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::TargetUnreachable,
                impl_->base + " unreachable: " + httplib::to_string(res.error()));
  }
  return {res->status, res->get_header_value("Content-Type"), res->body};
}

LocalStack::LocalStack(const service::ServiceConfig& config, std::shared_ptr<const Clock> clock)
    : node_(config.data_dir, std::move(clock)),
      api_(node_, config, genart::make_provider(config.genart)),
      client_(api_) {}

json make_envelope(const ledger::Transaction& signed_tx) {
  return json{{"tx", to_hex(signed_tx.unsigned_bytes())},
              {"signature", signed_tx.signature.hex()},
              {"public_key", signed_tx.public_key.hex()}};
}

const ApiResponse& MarketClient::expect_ok(const ApiResponse& res) {
  if (res.ok()) return res;
  std::string reason = "HTTP " + std::to_string(res.status);
  std::string message = reason;
  try {
    auto j = json::parse(res.body);
    if (j.contains("error") && j["error"].is_string()) reason = j["error"].get<std::string>();
    if (j.contains("message") && j["message"].is_string()) message = j["message"].get<std::string>();
  } catch (const json::exception&) {
  }
  throw ApiError(res.status, reason, reason + ": " + message);
}

ApiResponse MarketClient::healthz() { return api_.request("GET", "/healthz"); }

ApiResponse MarketClient::faucet(const Address& to, std::uint64_t amount) {
  return api_.request("POST", "/faucet", json{{"address", to.hex()}, {"amount", amount}}.dump());
}

std::string MarketClient::connect(const wallet::KeyPair& keys) {
  auto address = keys.address().hex();
  auto challenge =
      expect_ok(api_.request("POST", "/wallet/challenge", json{{"address", address}}.dump())).json();
  auto nonce = challenge.at("nonce").get<std::string>();
  auto sig = wallet::sign(keys, as_bytes(wallet::login_message(nonce)));
  auto res = expect_ok(api_.request("POST", "/wallet/connect",
                                    json{{"address", address},
                                         {"public_key", keys.public_key().hex()},
                                         {"signature", sig.hex()},
                                         {"nonce", nonce}}
                                        .dump()));
  return res.json().at("session_token").get<std::string>();
}

ApiResponse MarketClient::generate(const std::string& session, const std::string& prompt,
                                   std::uint32_t size) {
  return api_.request("POST", "/generate",
                      json{{"prompt", prompt}, {"width", size}, {"height", size}}.dump(),
                      {{"Authorization", "Bearer " + session}});
}

ApiResponse MarketClient::mint(const wallet::KeyPair& keys, const content::MetadataDocument& doc,
                               std::uint64_t price) {
  ledger::Transaction tx;
  tx.from = keys.address();
  tx.nonce = nonce_of(tx.from);
  tx.call = market::Mint{content::Cid::of(as_bytes(doc.to_canonical_json())), price};
  tx.sign_with(keys);
  return submit(tx, doc);
}

ApiResponse MarketClient::buy(const wallet::KeyPair& keys, market::TokenId id,
                              std::uint64_t payment) {
  ledger::Transaction tx;
  tx.from = keys.address();
  tx.nonce = nonce_of(tx.from);
  tx.value = payment;
  tx.call = market::BuyToken{id};
  tx.sign_with(keys);
  return submit(tx);
}

ApiResponse MarketClient::transfer(const wallet::KeyPair& keys, const Address& to,
                                   std::uint64_t amount) {
  ledger::Transaction tx;
  tx.from = keys.address();
  tx.nonce = nonce_of(tx.from);
  tx.value = amount;
  tx.call = ledger::Transfer{to};
  tx.sign_with(keys);
  return submit(tx);
}

ApiResponse MarketClient::submit(const ledger::Transaction& signed_tx,
                                 const std::optional<content::MetadataDocument>& metadata) {
  json body{{"envelope", make_envelope(signed_tx)}};
  if (metadata) body["metadata"] = json::parse(metadata->to_canonical_json());
  return api_.request("POST", "/tx", body.dump());
}

ApiResponse MarketClient::listings(std::uint64_t offset, std::uint64_t limit) {
  return api_.request("GET", "/market/listings?offset=" + std::to_string(offset) +
                                 "&limit=" + std::to_string(limit));
}

ApiResponse MarketClient::nft(market::TokenId id) {
  return api_.request("GET", "/nft/" + std::to_string(id.value));
}

ApiResponse MarketClient::profile(const Address& address) {
  return api_.request("GET", "/profile/" + address.hex());
}

ApiResponse MarketClient::object(const content::Cid& cid) {
  return api_.request("GET", "/cid/" + cid.str());
}

std::uint64_t MarketClient::nonce_of(const Address& address) {
  return expect_ok(profile(address)).json().at("nonce").get<std::uint64_t>();
}

}  // namespace nftm::client
