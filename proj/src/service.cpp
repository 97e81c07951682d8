#include "nftm/service.hpp"

#include <unistd.h>

#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nftm/error.hpp"

namespace nftm::service {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::Validation, std::string(what) + " must be an unsigned integer");
  }
  return v;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::Validation, "expected a boolean, got " + std::string(v));
}

json metadata_json(const content::MetadataDocument& d) {
  json j;
  j["name"] = d.name;
  j["description"] = d.description;
  j["price"] = d.price;
  j["image"] = d.image;
  return j;
}

json event_json(const market::Event& e) {
  return std::visit(Overloaded{
                        [](const market::Minted& m) {
                          return json{{"type", "Minted"},
                                      {"token_id", m.token_id.value},
                                      {"creator", m.creator.hex()},
                                      {"token_uri", m.token_uri.str()},
                                      {"price", m.price}};
                        },
                        [](const market::Sold& s) {
                          return json{{"type", "Sold"},
                                      {"token_id", s.token_id.value},
                                      {"seller", s.seller.hex()},
                                      {"buyer", s.buyer.hex()},
                                      {"price", s.price}};
                        },
                    },
                    e);
}

json receipt_json(const ledger::Receipt& r) {
  json events = json::array();
  for (const auto& e : r.events) events.push_back(event_json(e));
  return json{{"tx_hash", to_hex(r.tx_hash)},
              {"status", r.success ? "success" : "reverted"},
              {"revert_reason", r.success ? json(nullptr) : json(r.revert_reason)},
              {"block_height", r.block_height},
              {"events", std::move(events)}};
}

json resolved_metadata(const content::ContentStore& store, const content::Cid& cid) {
  try {
    return metadata_json(store.fetch_metadata(cid));
  } catch (const Error&) {
    return nullptr;
  }
}

json record_json(const market::NFTRecord& r, const content::ContentStore& store) {
  return json{{"token_id", r.token_id.value},
              {"owner", r.owner.hex()},
              {"creator", r.creator.hex()},
              {"token_uri", r.token_uri.str()},
              {"price", r.price},
              {"listed", r.listed},
              {"metadata", resolved_metadata(store, r.token_uri)}};
}

HttpResponse json_response(int status, const json& body) {
  HttpResponse res;
  res.status = status;
  res.body = body.dump();
  return res;
}

HttpResponse error_response(int status, std::string_view name, std::string_view message) {
  return json_response(status, json{{"error", name}, {"message", message}});
}

json parse_body(const HttpRequest& req) {
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::Validation, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("request body is not JSON: ") + e.what());
  }
}

const json& require(const json& body, const char* key) {
  if (!body.contains(key)) throw Error(ErrorCode::Validation, std::string("missing field ") + key);
  return body.at(key);
}

std::string require_string(const json& body, const char* key) {
  const auto& v = require(body, key);
  if (!v.is_string()) throw Error(ErrorCode::Validation, std::string(key) + " must be a string");
  return v.get<std::string>();
}

std::uint64_t require_u64(const json& body, const char* key) {
  const auto& v = require(body, key);
  if (!v.is_number_unsigned()) {
    throw Error(ErrorCode::Validation, std::string(key) + " must be an unsigned integer");
  }
  return v.get<std::uint64_t>();
}

market::UriResolver make_resolver(const content::ContentStore& store) {
  return [&store](const content::Cid& cid) {
    try {
      store.fetch_metadata(cid);
      return market::UriStatus::Valid;
    } catch (const Error& e) {
      return e.code() == ErrorCode::NotFound ? market::UriStatus::Unknown
                                             : market::UriStatus::Invalid;
    }
  };
}

}  // namespace

void ServiceConfig::set(std::string_view key, std::string_view value) {
  if (key == "port") {
    auto v = parse_u64(value, "port");
    if (v > 65535) throw Error(ErrorCode::Validation, "port out of range");
    port = static_cast<std::uint16_t>(v);
  } else if (key == "bind") {
    bind = std::string(value);
  } else if (key == "data_dir") {
    data_dir = std::string(value);
  } else if (key == "challenge_ttl_s") {
    challenge_ttl_s = parse_u64(value, key);
  } else if (key == "session_ttl_s") {
    session_ttl_s = parse_u64(value, key);
  } else if (key == "faucet.enabled") {
    faucet_enabled = parse_bool(value);
  } else if (key == "ui_dir") {
    ui_dir = std::string(value);
  } else if (key == "provider") {
    if (value == "procedural") {
      genart.provider = genart::ProviderKind::Procedural;
    } else if (value == "remote") {
      genart.provider = genart::ProviderKind::Remote;
    } else {
      throw Error(ErrorCode::Validation, "provider must be procedural or remote");
    }
  } else if (key == "provider.remote.endpoint") {
    genart.remote.endpoint = std::string(value);
  } else if (key == "provider.remote.credential_env") {
    genart.remote.credential_env = std::string(value);
  } else if (key == "provider.remote.timeout_ms") {
    genart.remote.timeout = std::chrono::milliseconds(parse_u64(value, key));
  } else if (key == "provider.remote.max_in_flight") {
    genart.remote.max_in_flight = static_cast<std::ptrdiff_t>(parse_u64(value, key));
  } else {
    throw Error(ErrorCode::Validation, "unknown config key " + std::string(key));
  }
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  ServiceConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Validation,
                  path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

Node::Node(const std::filesystem::path& data_dir, std::shared_ptr<const Clock> clock)
    : clock_(std::move(clock)) {
  if (data_dir.empty()) {
    store_ = std::make_unique<content::ContentStore>(clock_);
    ledger_ = std::make_unique<ledger::Ledger>(clock_, make_resolver(*store_));
    return;
  }

  std::filesystem::create_directories(data_dir);
  store_ = content::ContentStore::open(data_dir / "objects.log", clock_);
  ledger_ = std::make_unique<ledger::Ledger>(clock_, make_resolver(*store_));

  auto chain_path = data_dir / "chain.log";
  if (std::filesystem::exists(chain_path)) {
    std::ifstream in(chain_path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    auto text = ss.str();
    if (!text.empty() && text.back() != '\n') {
      throw Error(ErrorCode::CorruptData, "chain log " + chain_path.string() + " is truncated");
    }
    try {
      ledger_->import_log(text);
    } catch (const Error& e) {
      throw Error(ErrorCode::CorruptData, "chain log " + chain_path.string() + ": " + e.what());
    }
  }

  chain_file_ = std::fopen(chain_path.c_str(), "ab");
  if (chain_file_ == nullptr) throw Error(ErrorCode::Io, "cannot open " + chain_path.string());
  ledger_->set_log_sink([file = chain_file_](std::string_view lines) {
    std::fwrite(lines.data(), 1, lines.size(), file);
    std::fflush(file);
    ::fdatasync(::fileno(file));
  });
}

Node::~Node() {
  if (ledger_) ledger_->set_log_sink(nullptr);
  if (chain_file_ != nullptr) std::fclose(chain_file_);
}

Session SessionStore::issue(const Address& address) {
  std::array<std::uint8_t, 32> raw{};
  random_bytes(raw);
  Session s{to_hex(raw), address, clock_->now() + ttl_};
  std::lock_guard lock(mu_);
  sessions_[s.token] = s;
  return s;
}

std::optional<Session> SessionStore::validate(std::string_view token) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(token);
  if (it == sessions_.end() || clock_->now() >= it->second.expires_at) return std::nullopt;
  return it->second;
}

HttpRequest HttpRequest::make(std::string method, std::string_view target, std::string body,
                              std::map<std::string, std::string> headers) {
  HttpRequest req;
  req.method = std::move(method);
  req.body = std::move(body);
  req.headers = std::move(headers);
  auto q = target.find('?');
  req.path = std::string(target.substr(0, q));
  if (q != std::string_view::npos) {
    std::istringstream params(std::string(target.substr(q + 1)));
    std::string kv;
    while (std::getline(params, kv, '&')) {
      if (kv.empty()) continue;
      auto eq = kv.find('=');
      if (eq == std::string::npos) {
        req.query[kv] = "";
      } else {
        req.query[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    }
  }
  return req;
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation:
    case ErrorCode::EmptyPrompt:
    case ErrorCode::UnknownSender: return 400;
    case ErrorCode::Unauthorized:
    case ErrorCode::Expired:
    case ErrorCode::AlreadyUsed:
    case ErrorCode::UnknownChallenge: return 401;
    case ErrorCode::BadSignature: return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownToken: return 404;
    case ErrorCode::NonceMismatch: return 409;
    case ErrorCode::DecodeFailure: return 502;
    case ErrorCode::ProviderUnavailable: return 503;
    default: return 500;
  }
}

Api::Api(Node& node, const ServiceConfig& config,
         std::unique_ptr<genart::ImageProvider> provider)
    : node_(node),
      config_(config),
      provider_(std::move(provider)),
      challenges_(node.clock(), config.challenge_ttl_s),
      sessions_(node.clock(), config.session_ttl_s) {}

HttpResponse Api::handle(const HttpRequest& request) {
  try {
    return route(request);
  } catch (const ProviderUnavailable& e) {
    auto res = json_response(503, json{{"error", e.name()},
                                       {"message", e.what()},
                                       {"retry_after_s", e.retry_after_s()}});
    if (e.retry_after_s() >= 0) res.headers["Retry-After"] = std::to_string(e.retry_after_s());
    return res;
  } catch (const Error& e) {
    return error_response(http_status_for(e.code()), e.name(), e.what());
  } catch (const json::exception& e) {
    return error_response(400, error_name(ErrorCode::Validation), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "InternalError", e.what());
  }
}

HttpResponse Api::route(const HttpRequest& req) {
  const std::string_view path = req.path;
  auto tail = [&](std::string_view prefix) -> std::optional<std::string_view> {
    if (path.size() > prefix.size() && path.substr(0, prefix.size()) == prefix) {
      return path.substr(prefix.size());
    }
    return std::nullopt;
  };

  if (req.method == "GET") {
    if (path == "/healthz") return healthz();
    if (path == "/market/listings") return listings(req);
    if (auto id = tail("/nft/")) return nft(*id);
    if (auto addr = tail("/profile/")) return profile(*addr);
    if (auto c = tail("/cid/")) return cid(*c);
  } else if (req.method == "POST") {
    if (path == "/wallet/challenge") return challenge(req);
    if (path == "/wallet/connect") return connect(req);
    if (path == "/generate") return generate(req);
    if (path == "/tx") return submit_tx(req);
    if (path == "/faucet") return faucet(req);
  }
  return error_response(404, "NotFound", "no route for " + req.method + " " + req.path);
}

HttpResponse Api::healthz() {
  const auto& l = node_.ledger();
  return json_response(200, json{{"status", "ok"},
                                 {"height", l.height()},
                                 {"state_hash", to_hex(l.state_hash())}});
}

HttpResponse Api::challenge(const HttpRequest& req) {
  auto body = parse_body(req);
  auto address = Address::parse(require_string(body, "address"));
  auto c = challenges_.issue(address);
  return json_response(200, json{{"nonce", c.nonce},
                                 {"ttl_s", c.ttl},
                                 {"expires_at", c.expires_at()},
                                 {"message", wallet::login_message(c.nonce)}});
}

HttpResponse Api::connect(const HttpRequest& req) {
  auto body = parse_body(req);
  auto address = Address::parse(require_string(body, "address"));
  auto key = wallet::PublicKey::from_hex(require_string(body, "public_key"));
  auto sig = wallet::Signature::from_hex(require_string(body, "signature"));

  std::string nonce;
  if (body.contains("nonce")) {
    nonce = require_string(body, "nonce");
  } else {
    auto latest = challenges_.latest_for(address);
    if (!latest) throw Error(ErrorCode::UnknownChallenge, "no challenge issued to " + address.hex());
    nonce = latest->nonce;
  }
  auto proven = challenges_.prove(nonce, key, sig);
  if (proven != address) throw Error(ErrorCode::BadSignature, "challenge was issued to another address");
  auto session = sessions_.issue(proven);
  return json_response(200, json{{"session_token", session.token},
                                 {"expires_at", session.expires_at},
                                 {"address", proven.hex()}});
}

HttpResponse Api::generate(const HttpRequest& req) {
  auto auth = req.headers.find("authorization");
  constexpr std::string_view kBearer = "Bearer ";
  if (auth == req.headers.end() || auth->second.rfind(kBearer, 0) != 0 ||
      !sessions_.validate(std::string_view(auth->second).substr(kBearer.size()))) {
    throw Error(ErrorCode::Unauthorized, "a valid session token is required");
  }
  auto body = parse_body(req);
  std::uint32_t width = 512, height = 512;
  if (body.contains("width")) width = static_cast<std::uint32_t>(require_u64(body, "width"));
  if (body.contains("height")) height = static_cast<std::uint32_t>(require_u64(body, "height"));
  auto prompt = genart::Prompt::make(require_string(body, "prompt"), width, height);

  auto image = provider_->generate(prompt);
  auto cid = node_.store().pin_bytes(image.png, "image/png");
  json out{{"image_cid", cid.str()},
           {"width", image.width},
           {"height", image.height},
           {"provider", genart::provider_name(image.provider)}};
  if (image.seed) out["seed"] = to_hex(*image.seed);
  return json_response(200, out);
}

HttpResponse Api::submit_tx(const HttpRequest& req) {
  auto body = parse_body(req);
  const auto& envelope = require(body, "envelope");
  if (!envelope.is_object()) throw Error(ErrorCode::Validation, "envelope must be an object");

  auto tx = ledger::Transaction::decode_unsigned(from_hex(require_string(envelope, "tx")));
  tx.public_key = wallet::PublicKey::from_hex(require_string(envelope, "public_key"));
  tx.signature = wallet::Signature::from_hex(require_string(envelope, "signature"));
  if (wallet::derive_address(tx.public_key) != tx.from ||
      !wallet::verify(tx.public_key, tx.unsigned_bytes(), tx.signature)) {
    throw Error(ErrorCode::BadSignature, "envelope signature does not verify for " + tx.from.hex());
  }

  if (body.contains("metadata")) {
    const auto* mint = std::get_if<market::Mint>(&tx.call);
    if (mint == nullptr) throw Error(ErrorCode::Validation, "metadata is only accepted with a mint");
    auto doc = content::MetadataDocument::from_json(require(body, "metadata").dump());
    auto cid = content::Cid::of(as_bytes(doc.to_canonical_json()));
    if (cid != mint->token_uri) {
      throw Error(ErrorCode::Validation, "metadata CID " + cid.str() + " does not match token_uri");
    }
    node_.store().pin_json(doc);
  }

  ledger::Receipt receipt;
  {
    std::lock_guard lock(mutate_mu_);
    auto hash = node_.ledger().submit_transaction(tx);
    node_.ledger().seal_block();
    receipt = node_.ledger().get_receipt(hash);
  }

  json out{{"tx_hash", to_hex(receipt.tx_hash)}, {"receipt", receipt_json(receipt)}};
  if (!receipt.success) {
    out["error"] = receipt.revert_reason;
    out["message"] = "transaction reverted: " + receipt.revert_reason;
    return json_response(422, out);
  }
  for (const auto& e : receipt.events) {
    if (const auto* m = std::get_if<market::Minted>(&e)) out["token_id"] = m->token_id.value;
  }
  return json_response(200, out);
}

HttpResponse Api::faucet(const HttpRequest& req) {
  if (!config_.faucet_enabled) return error_response(404, "NotFound", "faucet is disabled");
  auto body = parse_body(req);
  auto address = Address::parse(require_string(body, "address"));
  auto amount = require_u64(body, "amount");
  std::lock_guard lock(mutate_mu_);
  auto receipt = node_.ledger().faucet(address, amount);
  return json_response(200, json{{"tx_hash", to_hex(receipt.tx_hash)},
                                 {"receipt", receipt_json(receipt)},
                                 {"balance", node_.ledger().get_balance(address)}});
}

HttpResponse Api::listings(const HttpRequest& req) {
  std::uint64_t offset = 0, limit = 50;
  if (auto it = req.query.find("offset"); it != req.query.end()) offset = parse_u64(it->second, "offset");
  if (auto it = req.query.find("limit"); it != req.query.end()) limit = parse_u64(it->second, "limit");
  auto all = node_.ledger().get_all_listings();
  json items = json::array();
  for (std::uint64_t i = offset; i < all.size() && i < offset + limit; ++i) {
    items.push_back(record_json(all[i], node_.store()));
  }
  return json_response(200, json{{"items", std::move(items)},
                                 {"total", all.size()},
                                 {"offset", offset},
                                 {"limit", limit}});
}

HttpResponse Api::nft(std::string_view id_text) {
  auto id = parse_u64(id_text, "token id");
  auto record = node_.ledger().find_token(market::TokenId{id});
  if (!record) throw Error(ErrorCode::UnknownToken, "no token with id " + std::string(id_text));
  return json_response(200, record_json(*record, node_.store()));
}

HttpResponse Api::profile(std::string_view address_text) {
  auto address = Address::parse(address_text);
  const auto& l = node_.ledger();
  auto owned = l.get_tokens_of(address);
  std::uint64_t total = 0;
  json tokens = json::array();
  for (const auto& t : owned) {
    total += t.price;
    tokens.push_back(json{{"token_id", t.token_id.value},
                          {"token_uri", t.token_uri.str()},
                          {"metadata", resolved_metadata(node_.store(), t.token_uri)},
                          {"price", t.price},
                          {"listed", t.listed}});
  }
  auto account = l.account(address);
  return json_response(200, json{{"address", address.hex()},
                                 {"nft_count", owned.size()},
                                 {"total_value", total},
                                 {"balance", account ? account->balance : 0},
                                 {"nonce", account ? account->nonce : 0},
                                 {"tokens", std::move(tokens)}});
}

HttpResponse Api::cid(std::string_view text) {
  auto c = content::Cid::parse(text);
  auto obj = node_.store().fetch(c);
  HttpResponse res;
  res.content_type = obj.media_type;
  res.body.assign(obj.bytes.begin(), obj.bytes.end());
  return res;
}

}  // namespace nftm::service
