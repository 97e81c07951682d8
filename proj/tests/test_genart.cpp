#include <doctest.h>

#include <openssl/evp.h>

#include <atomic>
#include <cstdlib>
#include <random>
#include <set>

#include "nftm/client.hpp"
#include "nftm/error.hpp"
#include "nftm/genart.hpp"
#include "nftm/service.hpp"

using namespace nftm;
using namespace nftm::genart;

namespace {

std::string b64(ByteView data) {
  std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
  auto n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                           static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes tiny_png() {
  Raster r{2, 2, {255, 0, 0, 0, 255, 0, 0, 0, 255, 9, 9, 9}};
  return encode_png(r);
}

/// Scripted transport that records what it was asked.
class FakeTransport : public HttpTransport {
 public:
  HttpResult post_reply;
  HttpResult get_reply;
  std::atomic<int> posts{0}, gets{0};
  std::string last_body;
  std::map<std::string, std::string> last_headers;

  HttpResult post_json(const std::string&, const std::string& body,
                       const std::map<std::string, std::string>& headers,
                       std::chrono::milliseconds) override {
    ++posts;
    last_body = body;
    last_headers = headers;
    return post_reply;
  }
  HttpResult get(const std::string&, std::chrono::milliseconds) override {
    ++gets;
    return get_reply;
  }
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Validation;
}

RemoteConfig remote_config() {
  ::setenv("NFTM_TEST_KEY", "sekret", 1);
  RemoteConfig cfg;
  cfg.endpoint = "https://images.invalid/v1/generate";
  cfg.credential_env = "NFTM_TEST_KEY";
  return cfg;
}

}  // namespace

TEST_CASE("prompt seed is the SHA-256 prefix") {
  CHECK(to_hex(prompt_seed("test")) == "9f86d081884c7d65");
}

TEST_CASE("prompt validation") {
  CHECK(code_of([] { Prompt::make(""); }) == ErrorCode::EmptyPrompt);
  CHECK(code_of([] { Prompt::make("  \t\n "); }) == ErrorCode::EmptyPrompt);
  CHECK(Prompt::make("  sunset  ").text == "sunset");
  CHECK(code_of([] { Prompt::make("x", 300, 300); }) == ErrorCode::Validation);
  CHECK(code_of([] { Prompt::make("x", 256, 512); }) == ErrorCode::Validation);
  CHECK_NOTHROW(Prompt::make(std::string(1000, 'a')));
  CHECK(code_of([] { Prompt::make(std::string(1001, 'a')); }) == ErrorCode::Validation);
  // Limit counts characters, not bytes.
  std::string accents;
  for (int i = 0; i < 1000; ++i) accents += "é";
  CHECK_NOTHROW(Prompt::make(accents));
}

TEST_CASE("procedural output is deterministic and sized") {
  ProceduralProvider p;
  auto a1 = p.generate(Prompt::make("a", 256, 256));
  auto a2 = p.generate(Prompt::make("a", 256, 256));
  auto b = p.generate(Prompt::make("b", 256, 256));
  CHECK(a1.png == a2.png);
  CHECK(a1.png != b.png);
  CHECK(a1.seed == prompt_seed("a"));
  CHECK(a1.provider == ProviderKind::Procedural);

  auto raster = decode_png(a1.png);
  CHECK(raster.width == 256);
  CHECK(raster.height == 256);
  CHECK(raster == render_procedural(prompt_seed("a"), 256, 256));
  CHECK(encode_png(raster) == a1.png);
}

TEST_CASE("PNG bytes carry the expected signature and header") {
  Seed zero{};
  auto png = encode_png(render_procedural(zero, 256, 256));
  REQUIRE(png.size() > 33);
  CHECK(to_hex(ByteView(png.data(), 8)) == "89504e470d0a1a0a");
  CHECK(to_hex(ByteView(png.data() + 12, 4)) == to_hex(as_bytes("IHDR")));
  CHECK(to_hex(ByteView(png.data() + 16, 8)) == "0000010000000100");
  CHECK(png[24] == 8);  // bit depth
  CHECK(png[25] == 2);  // truecolor
}

TEST_CASE("distinct seeds render distinct images") {
  std::set<Bytes> seen;
  for (std::uint8_t i = 0; i < 16; ++i) {
    Seed s{};
    s[7] = i;
    seen.insert(encode_png(render_procedural(s, 256, 256)));
  }
  CHECK(seen.size() == 16);
}

TEST_CASE("generated images pin and fetch byte-identically") {
  content::ContentStore store(std::make_shared<FixedClock>());
  ProceduralProvider p;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    std::string text = "prompt " + std::to_string(rng());
    auto img = p.generate(Prompt::make(text, 256, 256));
    auto cid = store.pin_bytes(img.png, "image/png");
    REQUIRE(store.fetch(cid).bytes == img.png);
    REQUIRE(cid == content::compute_cid(img.png));
  }
}

TEST_CASE("decode_png rejects non-PNG input") {
  CHECK(code_of([] { decode_png(as_bytes("GIF89a not a png")); }) == ErrorCode::DecodeFailure);
  CHECK(code_of([] { decode_png({}); }) == ErrorCode::DecodeFailure);
}

TEST_CASE("procedural mode never touches the network transport") {
  auto transport = std::make_shared<FakeTransport>();
  GenArtConfig cfg;
  auto provider = make_provider(cfg, transport);
  provider->generate(Prompt::make("offline"));
  CHECK(provider->kind() == ProviderKind::Procedural);
  CHECK(transport->posts == 0);
  CHECK(transport->gets == 0);
}

TEST_CASE("remote provider: inline base64 image") {
  auto transport = std::make_shared<FakeTransport>();
  transport->post_reply = {200, nlohmann::json{{"data", {{{"b64_json", b64(tiny_png())}}}}}.dump(), {}, {}};
  RemoteProvider p(remote_config(), transport);
  auto img = p.generate(Prompt::make("cat", 256, 256));
  CHECK(img.provider == ProviderKind::Remote);
  CHECK(img.width == 2);
  CHECK(img.png == tiny_png());
  auto sent = nlohmann::json::parse(transport->last_body);
  CHECK(sent["prompt"] == "cat");
  CHECK(sent["size"] == "256x256");
  CHECK(transport->last_headers["Authorization"] == "Bearer sekret");
}

TEST_CASE("remote provider: image by URL") {
  auto transport = std::make_shared<FakeTransport>();
  transport->post_reply = {200, R"({"url":"https://cdn.invalid/x.png"})", {}, {}};
  auto png = tiny_png();
  transport->get_reply = {200, std::string(png.begin(), png.end()), {}, {}};
  RemoteProvider p(remote_config(), transport);
  CHECK(p.generate(Prompt::make("dog")).png == png);
  CHECK(transport->gets == 1);
}

TEST_CASE("remote provider: failures map to ProviderUnavailable and DecodeFailure") {
  auto transport = std::make_shared<FakeTransport>();
  RemoteProvider p(remote_config(), transport);

  transport->post_reply = {429, "slow down", {{"retry-after", "7"}}, {}};
  try {
    p.generate(Prompt::make("x"));
    FAIL("expected ProviderUnavailable");
  } catch (const ProviderUnavailable& e) {
    CHECK(e.retry_after_s() == 7);
  }

  transport->post_reply = {0, "", {}, "Connection timed out"};
  CHECK(code_of([&] { p.generate(Prompt::make("x")); }) == ErrorCode::ProviderUnavailable);

  transport->post_reply = {200, nlohmann::json{{"b64_json", b64(as_bytes("<html>"))}}.dump(), {}, {}};
  CHECK(code_of([&] { p.generate(Prompt::make("x")); }) == ErrorCode::DecodeFailure);

  transport->post_reply = {200, "not json", {}, {}};
  CHECK(code_of([&] { p.generate(Prompt::make("x")); }) == ErrorCode::DecodeFailure);

  RemoteConfig no_key = remote_config();
  no_key.credential_env = "NFTM_TEST_KEY_UNSET";
  RemoteProvider q(no_key, transport);
  CHECK(code_of([&] { q.generate(Prompt::make("x")); }) == ErrorCode::Validation);
}

TEST_CASE("failed remote generation through the API pins nothing") {
  auto transport = std::make_shared<FakeTransport>();
  transport->post_reply = {503, "", {{"retry-after", "3"}}, {}};
  auto clock = std::make_shared<FixedClock>();
  service::Node node(clock);
  service::ServiceConfig cfg;
  service::Api api(node, cfg, std::make_unique<RemoteProvider>(remote_config(), transport));
  client::InProcessClient in(api);
  client::MarketClient mc(in);
  auto keys = wallet::generate_keypair();
  auto session = mc.connect(keys);

  auto res = mc.generate(session, "storm");
  CHECK(res.status == 503);
  CHECK(res.json()["error"] == "ProviderUnavailable");
  CHECK(res.json()["retry_after_s"] == 3);

  transport->post_reply = {200, R"({"b64_json":"aGVsbG8="})", {}, {}};
  res = mc.generate(session, "storm");
  CHECK(res.status == 502);
  CHECK(res.json()["error"] == "DecodeFailure");
  CHECK(node.store().object_count() == 0);
}
