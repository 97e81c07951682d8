#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include "nftm/bytes.hpp"

namespace nftm::genart {

enum class ProviderKind { Procedural, Remote };

std::string_view provider_name(ProviderKind kind);

/// Validated generation request: trimmed text of 1..1000 chars, square 256/512/1024 output.
struct Prompt {
  std::string text;
  std::uint32_t width = 512;
  std::uint32_t height = 512;

  /// Errors: EmptyPrompt, Validation.
  static Prompt make(std::string text, std::uint32_t width = 512, std::uint32_t height = 512);
};

struct Raster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  bool operator==(const Raster&) const = default;
};

using Seed = std::array<std::uint8_t, 8>;

struct GeneratedImage {
  Bytes png;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  ProviderKind provider = ProviderKind::Procedural;
  std::optional<Seed> seed;
};

/// First 8 bytes of SHA-256 of the prompt text.
Seed prompt_seed(std::string_view text);

/// Seeded palette gradient over two octaves of value noise, overlaid with discs and bars.
/// Integer arithmetic only, so output depends on nothing but the arguments.
Raster render_procedural(const Seed& seed, std::uint32_t width, std::uint32_t height);

/// 8-bit RGB, no interlace, Paeth filter on every row, zlib level 6, no ancillary chunks.
Bytes encode_png(const Raster& raster);
/// Any PNG libpng understands, converted to 8-bit RGB. Throws Error(DecodeFailure).
Raster decode_png(ByteView png);

class ImageProvider {
 public:
  virtual ~ImageProvider() = default;
  virtual GeneratedImage generate(const Prompt& prompt) = 0;
  virtual ProviderKind kind() const = 0;
};

class ProceduralProvider final : public ImageProvider {
 public:
  GeneratedImage generate(const Prompt& prompt) override;
  ProviderKind kind() const override { return ProviderKind::Procedural; }
};

struct HttpResult {
  int status = 0;  // 0 when no response arrived (connect failure, timeout)
  std::string body;
  std::map<std::string, std::string> headers;  // lowercase names
  std::string error;
};

/// Outbound HTTP used by the remote provider; swapped out in tests.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post_json(const std::string& url, const std::string& body,
                               const std::map<std::string, std::string>& headers,
                               std::chrono::milliseconds timeout) = 0;
  virtual HttpResult get(const std::string& url, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport (http and https).
std::shared_ptr<HttpTransport> make_http_transport();

struct RemoteConfig {
  std::string endpoint;                           // remote.endpoint
  std::string credential_env = "NFTM_REMOTE_API_KEY";  // remote.credential_env
  std::chrono::milliseconds timeout{30000};       // remote.timeout_ms
  std::ptrdiff_t max_in_flight = 2;
};

/// Text-to-image over HTTP. Request: POST endpoint, JSON {"prompt": text, "size": "WxH"},
/// header "Authorization: Bearer $credential_env". Response JSON may carry the image as
/// "b64_json" or "url", either at top level or in data[0]; URLs are fetched with GET.
/// Returned bytes must be PNG and are re-encoded with encode_png.
class RemoteProvider final : public ImageProvider {
 public:
  RemoteProvider(RemoteConfig config, std::shared_ptr<HttpTransport> transport);

  /// Errors: ProviderUnavailable (with retry-after), DecodeFailure, Validation (no endpoint
  /// or credential configured).
  GeneratedImage generate(const Prompt& prompt) override;
  ProviderKind kind() const override { return ProviderKind::Remote; }

 private:
  RemoteConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::counting_semaphore<64> in_flight_;
};

struct GenArtConfig {
  ProviderKind provider = ProviderKind::Procedural;
  RemoteConfig remote;
};

std::unique_ptr<ImageProvider> make_provider(const GenArtConfig& config,
                                             std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace nftm::genart
