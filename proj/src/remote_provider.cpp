#include <sodium.h>

#include <cctype>
#include <cstdlib>
#include <httplib.h>
#include <json.hpp>

#include "nftm/error.hpp"
#include "nftm/genart.hpp"
#include "sodium_init.hpp"

namespace nftm::genart {

namespace {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::Validation, "URL lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

HttpResult to_result(const httplib::Result& res) {
  HttpResult out;
  if (!res) {
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  for (const auto& [k, v] : res->headers) out.headers[lower(k)] = v;
  return out;
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpResult post_json(const std::string& url, const std::string& body,
                       const std::map<std::string, std::string>& headers,
                       std::chrono::milliseconds timeout) override {
    auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h(headers.begin(), headers.end());
    return to_result(client.Post(parts.path, h, body, "application/json"));
  }

  HttpResult get(const std::string& url, std::chrono::milliseconds timeout) override {
    auto parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_follow_location(true);
    return to_result(client.Get(parts.path));
  }
};

long retry_after(const HttpResult& res) {
  auto it = res.headers.find("retry-after");
  if (it == res.headers.end()) return -1;
  char* end = nullptr;
  long v = std::strtol(it->second.c_str(), &end, 10);
  return (end != it->second.c_str() && v >= 0) ? v : -1;
}

ProviderUnavailable unavailable(const std::string& what, const HttpResult& res) {
  auto msg = res.status == 0 ? what + ": " + res.error
                             : what + ": HTTP " + std::to_string(res.status);
  return ProviderUnavailable(msg, retry_after(res));
}

Bytes base64_decode(const std::string& text) {
  detail::ensure_sodium();
  Bytes out(text.size() * 3 / 4 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \r\n", &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw Error(ErrorCode::DecodeFailure, "provider returned invalid base64 image data");
  }
  out.resize(len);
  return out;
}

// Semaphore release on scope exit.
class InFlight {
 public:
  explicit InFlight(std::counting_semaphore<64>& sem) : sem_(sem) { sem_.acquire(); }
  ~InFlight() { sem_.release(); }
  InFlight(const InFlight&) = delete;
  InFlight& operator=(const InFlight&) = delete;

 private:
  std::counting_semaphore<64>& sem_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

RemoteProvider::RemoteProvider(RemoteConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      in_flight_(std::clamp<std::ptrdiff_t>(config_.max_in_flight, 1, 64)) {}

GeneratedImage RemoteProvider::generate(const Prompt& prompt) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::Validation, "remote.endpoint is not configured");
  const char* credential = std::getenv(config_.credential_env.c_str());
  if (credential == nullptr || *credential == '\0') {
    throw Error(ErrorCode::Validation,
                "remote credential variable " + config_.credential_env + " is not set");
  }

  nlohmann::json request = {
      {"prompt", prompt.text},
      {"size", std::to_string(prompt.width) + "x" + std::to_string(prompt.height)}};

  InFlight slot(in_flight_);
  auto res = transport_->post_json(config_.endpoint, request.dump(),
                                   {{"Authorization", std::string("Bearer ") + credential}},
                                   config_.timeout);
  if (res.status != 200) throw unavailable("image provider request failed", res);

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::DecodeFailure, "image provider returned non-JSON response");
  }
  const nlohmann::json* item = &body;
  if (body.contains("data") && body["data"].is_array() && !body["data"].empty()) {
    item = &body["data"][0];
  }

  Bytes image;
  if (item->contains("b64_json") && (*item)["b64_json"].is_string()) {
    image = base64_decode((*item)["b64_json"].get<std::string>());
  } else if (item->contains("url") && (*item)["url"].is_string()) {
    auto fetched = transport_->get((*item)["url"].get<std::string>(), config_.timeout);
    if (fetched.status != 200) throw unavailable("image download failed", fetched);
    image.assign(fetched.body.begin(), fetched.body.end());
  } else {
    throw Error(ErrorCode::DecodeFailure, "image provider response has no b64_json or url");
  }

  auto raster = decode_png(image);
  return {encode_png(raster), raster.width, raster.height, ProviderKind::Remote, std::nullopt};
}

}  // namespace nftm::genart
