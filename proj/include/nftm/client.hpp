#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include <json.hpp>

#include "nftm/content_store.hpp"
#include "nftm/error.hpp"
#include "nftm/ledger.hpp"
#include "nftm/service.hpp"
#include "nftm/wallet.hpp"

namespace nftm::client {

struct ApiResponse {
  int status = 0;
  std::string content_type;
  std::string body;

  bool ok() const { return status >= 200 && status < 300; }
  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// Raised for non-2xx responses; `reason` is the API's machine-readable error name.
class ApiError : public Error {
 public:
  ApiError(int status, std::string reason, const std::string& message)
      : Error(status == 400 ? ErrorCode::Validation : ErrorCode::Remote, message),
        status_(status),
        reason_(std::move(reason)) {}

  int status() const noexcept { return status_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  int status_;
  std::string reason_;
};

/// Transport to a running API: in-process or over HTTP.
class ApiClient {
 public:
  virtual ~ApiClient() = default;
  virtual ApiResponse request(const std::string& method, const std::string& target,
                              const std::string& body = {},
                              const std::map<std::string, std::string>& headers = {}) = 0;
};

class InProcessClient final : public ApiClient {
 public:
  explicit InProcessClient(service::Api& api) : api_(api) {}
  ApiResponse request(const std::string& method, const std::string& target,
                      const std::string& body,
                      const std::map<std::string, std::string>& headers) override;

 private:
  service::Api& api_;
};

/// Throws Error(TargetUnreachable) when no response arrives.
class HttpClient final : public ApiClient {
 public:
  explicit HttpClient(std::string base_url);
  ~HttpClient() override;
  ApiResponse request(const std::string& method, const std::string& target,
                      const std::string& body,
                      const std::map<std::string, std::string>& headers) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Everything needed to run the service in-process: node, API and a client bound to it.
class LocalStack {
 public:
  explicit LocalStack(const service::ServiceConfig& config,
                      std::shared_ptr<const Clock> clock = std::make_shared<SystemClock>());

  service::Node& node() { return node_; }
  service::Api& api() { return api_; }
  InProcessClient& client() { return client_; }

 private:
  service::Node node_;
  service::Api api_;
  InProcessClient client_;
};

/// The wire form of a signed transaction: {tx, signature, public_key}, all hex.
nlohmann::json make_envelope(const ledger::Transaction& signed_tx);

/// Client-side flows: builds and signs transactions locally, so keys never leave the caller.
/// Methods return the raw response; `expect_ok` turns failures into ApiError.
class MarketClient {
 public:
  explicit MarketClient(ApiClient& api) : api_(api) {}

  static const ApiResponse& expect_ok(const ApiResponse& res);

  ApiResponse healthz();
  ApiResponse faucet(const Address& to, std::uint64_t amount);
  /// Challenge + connect; returns the session token. Throws ApiError on failure.
  std::string connect(const wallet::KeyPair& keys);
  ApiResponse generate(const std::string& session, const std::string& prompt,
                       std::uint32_t size = 512);
  ApiResponse mint(const wallet::KeyPair& keys, const content::MetadataDocument& doc,
                   std::uint64_t price);
  ApiResponse buy(const wallet::KeyPair& keys, market::TokenId id, std::uint64_t payment);
  ApiResponse transfer(const wallet::KeyPair& keys, const Address& to, std::uint64_t amount);
  ApiResponse submit(const ledger::Transaction& signed_tx,
                     const std::optional<content::MetadataDocument>& metadata = std::nullopt);
  ApiResponse listings(std::uint64_t offset = 0, std::uint64_t limit = 50);
  ApiResponse nft(market::TokenId id);
  ApiResponse profile(const Address& address);
  ApiResponse object(const content::Cid& cid);

  /// Next usable nonce, read from the profile endpoint.
  std::uint64_t nonce_of(const Address& address);

 private:
  ApiClient& api_;
};

}  // namespace nftm::client
