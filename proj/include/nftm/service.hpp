#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "nftm/clock.hpp"
#include "nftm/error.hpp"
#include "nftm/content_store.hpp"
#include "nftm/genart.hpp"
#include "nftm/ledger.hpp"
#include "nftm/wallet.hpp"

namespace httplib {
class Server;
}

namespace nftm::service {

/// key=value settings; '#' starts a comment line.
///
///   port, bind, data_dir, challenge_ttl_s, session_ttl_s, faucet.enabled, ui_dir,
///   provider = procedural | remote, provider.remote.endpoint,
///   provider.remote.credential_env, provider.remote.timeout_ms,
///   provider.remote.max_in_flight
struct ServiceConfig {
  std::uint16_t port = 8545;
  std::string bind = "127.0.0.1";
  std::filesystem::path data_dir;  // empty: in-memory
  genart::GenArtConfig genart;
  std::uint64_t challenge_ttl_s = wallet::ChallengeRegistry::kDefaultTtl;
  std::uint64_t session_ttl_s = 3600;
  bool faucet_enabled = true;
  std::filesystem::path ui_dir;

  /// Throws Error(Validation) for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  static ServiceConfig load(const std::filesystem::path& path);
};

/// Ledger + content store, optionally persisted under a data directory as
/// `objects.log` (content store) and `chain.log` (ledger log, appended per block).
class Node {
 public:
  /// Replays any existing logs. A corrupt log throws Error(CorruptData) naming the file.
  Node(const std::filesystem::path& data_dir, std::shared_ptr<const Clock> clock);
  explicit Node(std::shared_ptr<const Clock> clock) : Node({}, std::move(clock)) {}
  ~Node();
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  content::ContentStore& store() { return *store_; }
  const content::ContentStore& store() const { return *store_; }
  ledger::Ledger& ledger() { return *ledger_; }
  const ledger::Ledger& ledger() const { return *ledger_; }
  const std::shared_ptr<const Clock>& clock() const { return clock_; }

 private:
  std::shared_ptr<const Clock> clock_;
  std::unique_ptr<content::ContentStore> store_;
  std::unique_ptr<ledger::Ledger> ledger_;
  std::FILE* chain_file_ = nullptr;
};

struct Session {
  std::string token;  // 32 random bytes, hex
  Address address;
  std::uint64_t expires_at = 0;
};

class SessionStore {
 public:
  SessionStore(std::shared_ptr<const Clock> clock, std::uint64_t ttl)
      : clock_(std::move(clock)), ttl_(ttl) {}

  Session issue(const Address& address);
  /// Unknown or expired tokens yield nullopt.
  std::optional<Session> validate(std::string_view token) const;

 private:
  std::shared_ptr<const Clock> clock_;
  std::uint64_t ttl_;
  mutable std::mutex mu_;
  std::map<std::string, Session, std::less<>> sessions_;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lowercase names
  std::string body;

  /// Splits "path?k=v&..." into path and query.
  static HttpRequest make(std::string method, std::string_view target, std::string body = {},
                          std::map<std::string, std::string> headers = {});
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

/// Maps HTTP status codes onto error codes; contract reverts are 422.
int http_status_for(ErrorCode code);

/// The JSON API, independent of any transport. Mutating requests are serialized and each
/// accepted transaction is sealed into its own block before the response is built.
///
///   GET  /healthz                      {status, height, state_hash}
///   POST /wallet/challenge             {address} -> {nonce, ttl_s, expires_at}
///   POST /wallet/connect               {address, public_key, signature[, nonce]}
///                                      -> {session_token, expires_at, address}
///   POST /generate      [session]      {prompt, width, height} -> {image_cid, ...}
///   POST /tx                           {envelope: {tx, signature, public_key}[, metadata]}
///                                      -> {tx_hash, receipt[, token_id]}
///   POST /faucet                       {address, amount} -> {tx_hash, receipt, balance}
///   GET  /market/listings?offset&limit {items, total, offset, limit}
///   GET  /nft/{id}                     NFTRecord + metadata
///   GET  /profile/{address}            {address, nft_count, total_value, balance, nonce, tokens}
///   GET  /cid/{cid}                    raw bytes, stored media type
///
/// Errors are {error, message} with the machine-readable name in `error`.
class Api {
 public:
  Api(Node& node, const ServiceConfig& config, std::unique_ptr<genart::ImageProvider> provider);

  HttpResponse handle(const HttpRequest& request);

  const SessionStore& sessions() const { return sessions_; }

 private:
  HttpResponse route(const HttpRequest& request);
  HttpResponse healthz();
  HttpResponse challenge(const HttpRequest& request);
  HttpResponse connect(const HttpRequest& request);
  HttpResponse generate(const HttpRequest& request);
  HttpResponse submit_tx(const HttpRequest& request);
  HttpResponse faucet(const HttpRequest& request);
  HttpResponse listings(const HttpRequest& request);
  HttpResponse nft(std::string_view id);
  HttpResponse profile(std::string_view address);
  HttpResponse cid(std::string_view cid);

  Node& node_;
  ServiceConfig config_;
  std::unique_ptr<genart::ImageProvider> provider_;
  wallet::ChallengeRegistry challenges_;
  SessionStore sessions_;
  std::mutex mutate_mu_;
};

/// cpp-httplib front end for an Api. Serves `ui_dir` under /ui when configured.
class HttpServer {
 public:
  HttpServer(Api& api, const ServiceConfig& config);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port). Throws Error(Io) if the port is busy.
  std::uint16_t bind();
  /// Blocks until stop().
  void listen();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  Api& api_;
  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::uint16_t port_ = 0;
};

}  // namespace nftm::service
