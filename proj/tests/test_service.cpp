#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "nftm/client.hpp"
#include "nftm/error.hpp"
#include "nftm/service.hpp"

using namespace nftm;
using namespace nftm::client;
using nlohmann::json;

namespace {

wallet::KeyPair key(std::uint8_t tag) {
  std::array<std::uint8_t, 32> seed{};
  seed.fill(tag);
  return wallet::generate_keypair(ByteView(seed));
}

std::filesystem::path fresh_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p;
}

struct Stack {
  std::shared_ptr<FixedClock> clock = std::make_shared<FixedClock>();
  service::ServiceConfig cfg;
  std::unique_ptr<LocalStack> stack;
  std::unique_ptr<MarketClient> mc;
  std::vector<std::string> transcript;  // every response body, for leak scans

  explicit Stack(std::filesystem::path dir = {}) {
    cfg.data_dir = std::move(dir);
    stack = std::make_unique<LocalStack>(cfg, clock);
    mc = std::make_unique<MarketClient>(stack->client());
  }

  ApiResponse rec(ApiResponse r) {
    transcript.push_back(r.body);
    return r;
  }

  ApiResponse raw(const std::string& method, const std::string& target, const std::string& body = {}) {
    return rec(stack->client().request(method, target, body, {}));
  }
};

content::MetadataDocument doc_for(const std::string& image_cid, std::uint64_t price) {
  return {"Sunset", "orange sky", price, "cid:" + image_cid};
}

}  // namespace

TEST_CASE("healthz on a fresh node") {
  Stack s;
  auto r = s.mc->healthz();
  CHECK(r.status == 200);
  CHECK(r.json()["height"] == 0);
  CHECK(r.json()["status"] == "ok");
}

TEST_CASE("connect, generate, mint, list, buy, profile") {
  Stack s;
  auto seller = key(1), buyer = key(2);
  s.rec(MarketClient::expect_ok(s.mc->faucet(seller.address(), 1000)));
  s.rec(MarketClient::expect_ok(s.mc->faucet(buyer.address(), 1000)));

  auto session = s.mc->connect(seller);
  CHECK(session.size() == 64);
  auto gen = s.rec(s.mc->generate(session, "A sunset over mountains", 256));
  REQUIRE(gen.status == 200);
  auto image_cid = gen.json()["image_cid"].get<std::string>();

  auto obj = s.rec(s.mc->object(content::Cid::parse(image_cid)));
  CHECK(obj.status == 200);
  CHECK(obj.content_type == "image/png");
  CHECK(content::compute_cid(as_bytes(obj.body)).str() == image_cid);

  auto mint = s.rec(s.mc->mint(seller, doc_for(image_cid, 100), 100));
  REQUIRE(mint.status == 200);
  CHECK(mint.json()["token_id"] == 1);
  CHECK(mint.json()["receipt"]["events"][0]["type"] == "Minted");

  auto listings = s.rec(s.mc->listings()).json();
  REQUIRE(listings["items"].size() == 1);
  auto item = listings["items"][0];
  CHECK(item["owner"] == seller.address().hex());
  CHECK(item["price"] == 100);
  CHECK(item["metadata"]["name"] == "Sunset");
  CHECK(item["metadata"]["image"] == "cid:" + image_cid);

  auto buy = s.rec(s.mc->buy(buyer, {1}, 100));
  REQUIRE(buy.status == 200);
  auto ev = buy.json()["receipt"]["events"][0];
  CHECK(ev["type"] == "Sold");
  CHECK(ev["seller"] == seller.address().hex());
  CHECK(ev["buyer"] == buyer.address().hex());

  CHECK(s.rec(s.mc->listings()).json()["items"].empty());
  auto profile = s.rec(s.mc->profile(buyer.address())).json();
  CHECK(profile["nft_count"] == 1);
  CHECK(profile["total_value"] == 100);
  CHECK(profile["balance"] == 900);
  CHECK(profile["tokens"][0]["token_id"] == 1);
  CHECK(s.rec(s.mc->profile(seller.address())).json()["balance"] == 1100);

  // API reads equal module reads.
  auto& l = s.stack->node().ledger();
  CHECK(l.owner_of({1}) == buyer.address());
  CHECK(l.get_balance(buyer.address()) == 900);
  CHECK(s.rec(s.mc->nft({1})).json()["owner"] == l.owner_of({1}).hex());
  CHECK(s.rec(s.mc->healthz()).json()["state_hash"] == to_hex(l.state_hash()));

  // No response ever contains private key material.
  for (const auto& body : s.transcript) {
    CHECK(body.find(seller.seed_hex()) == std::string::npos);
    CHECK(body.find(buyer.seed_hex()) == std::string::npos);
  }
}

TEST_CASE("reverts come back as 422 with the reason") {
  Stack s;
  auto seller = key(1), buyer = key(2);
  s.mc->faucet(seller.address(), 1000);
  s.mc->faucet(buyer.address(), 1000);
  REQUIRE(s.mc->mint(seller, doc_for("QmdfTbBqBPQ7VNxZEYEj14VmRuZBkqFbiwReogJgS1zR1n", 50), 50).status == 200);

  auto before = s.mc->healthz().json()["state_hash"];
  auto r = s.mc->buy(buyer, {1}, 49);
  CHECK(r.status == 422);
  CHECK(r.json()["error"] == "WrongPayment");
  CHECK(r.json()["receipt"]["status"] == "reverted");
  CHECK(r.json()["receipt"]["events"].empty());
  CHECK(s.mc->healthz().json()["state_hash"] == before);

  r = s.mc->buy(seller, {1}, 50);
  CHECK(r.json()["error"] == "SelfPurchase");
  r = s.mc->mint(seller, doc_for("x", 1), 0);
  CHECK(r.json()["error"] == "ZeroPrice");
}

TEST_CASE("unknown token and route are 404") {
  Stack s;
  auto r = s.mc->nft({999});
  CHECK(r.status == 404);
  CHECK(r.json()["error"] == "UnknownToken");
  CHECK(s.raw("GET", "/nope").status == 404);
  CHECK(s.raw("GET", "/cid/QmdfTbBqBPQ7VNxZEYEj14VmRuZBkqFbiwReogJgS1zR1n").status == 404);
  CHECK(s.raw("GET", "/profile/0xABC").status == 400);
}

TEST_CASE("auth failures: missing session, bad signature, reused challenge") {
  Stack s;
  auto k = key(1), other = key(2);
  auto r = s.mc->generate("deadbeef", "x");
  CHECK(r.status == 401);
  CHECK(r.json()["error"] == "Unauthorized");

  auto ch = s.raw("POST", "/wallet/challenge", json{{"address", k.address().hex()}}.dump()).json();
  auto nonce = ch["nonce"].get<std::string>();
  auto forged = wallet::sign(other, as_bytes(wallet::login_message(nonce)));
  r = s.raw("POST", "/wallet/connect",
            json{{"address", k.address().hex()}, {"public_key", k.public_key().hex()},
                 {"signature", forged.hex()}, {"nonce", nonce}}.dump());
  CHECK(r.status == 403);
  CHECK(r.json()["error"] == "BadSignature");

  auto good = wallet::sign(k, as_bytes(wallet::login_message(nonce)));
  json body{{"address", k.address().hex()}, {"public_key", k.public_key().hex()},
            {"signature", good.hex()}, {"nonce", nonce}};
  CHECK(s.raw("POST", "/wallet/connect", body.dump()).status == 200);
  r = s.raw("POST", "/wallet/connect", body.dump());
  CHECK(r.status == 401);
  CHECK(r.json()["error"] == "AlreadyUsed");

  auto ch2 = s.raw("POST", "/wallet/challenge", json{{"address", k.address().hex()}}.dump()).json();
  s.clock->advance(ch2["ttl_s"].get<std::uint64_t>());
  auto sig2 = wallet::sign(k, as_bytes(wallet::login_message(ch2["nonce"].get<std::string>())));
  r = s.raw("POST", "/wallet/connect",
            json{{"address", k.address().hex()}, {"public_key", k.public_key().hex()},
                 {"signature", sig2.hex()}}.dump());
  CHECK(r.json()["error"] == "Expired");

  // Sessions expire too.
  auto token = s.mc->connect(k);
  CHECK(s.mc->generate(token, "x", 256).status == 200);
  s.clock->advance(s.cfg.session_ttl_s);
  CHECK(s.mc->generate(token, "x", 256).status == 401);
}

TEST_CASE("generate validates prompts") {
  Stack s;
  auto token = s.mc->connect(key(1));
  auto r = s.mc->generate(token, "   ");
  CHECK(r.status == 400);
  CHECK(r.json()["error"] == "EmptyPrompt");
  CHECK(s.mc->generate(token, "x", 300).status == 400);
}

TEST_CASE("nonce conflicts are 409, unknown senders 400") {
  Stack s;
  auto k = key(1);
  ledger::Transaction tx{k.address(), 0, 1, ledger::Transfer{key(2).address()}, {}, {}};
  tx.sign_with(k);
  auto r = s.mc->submit(tx);
  CHECK(r.status == 400);
  CHECK(r.json()["error"] == "UnknownSender");

  s.mc->faucet(k.address(), 10);
  CHECK(s.mc->submit(tx).status == 200);
  r = s.mc->submit(tx);
  CHECK(r.status == 409);
  CHECK(r.json()["error"] == "NonceMismatch");
}

TEST_CASE("adversarial envelopes are rejected before touching state") {
  Stack s;
  auto k = key(1), mallory = key(3);
  s.mc->faucet(k.address(), 100);
  s.mc->faucet(mallory.address(), 100);
  auto before = s.mc->healthz().json()["state_hash"];

  ledger::Transaction tx{k.address(), 0, 50, ledger::Transfer{mallory.address()}, {}, {}};
  tx.sign_with(k);
  auto env = make_envelope(tx);

  auto post = [&](const json& e) { return s.raw("POST", "/tx", json{{"envelope", e}}.dump()); };

  auto swapped_key = env;
  swapped_key["public_key"] = mallory.public_key().hex();
  CHECK(post(swapped_key).status == 403);

  auto resigned = env;
  resigned["signature"] = wallet::sign(mallory, from_hex(env["tx"].get<std::string>())).hex();
  resigned["public_key"] = mallory.public_key().hex();
  CHECK(post(resigned).status == 403);

  auto bumped = env;
  auto raw = from_hex(env["tx"].get<std::string>());
  raw[1 + 20 + 8 + 7] ^= 0x01;  // value
  bumped["tx"] = to_hex(raw);
  CHECK(post(bumped).status == 403);

  auto trunc = env;
  trunc["signature"] = env["signature"].get<std::string>().substr(2);
  CHECK(post(trunc).status == 400);
  CHECK(post(json{{"tx", "zz"}}).status == 400);
  CHECK(s.raw("POST", "/tx", "{not json").status == 400);
  CHECK(s.raw("POST", "/tx", "[]").status == 400);

  // Metadata whose CID doesn't match token_uri is refused.
  ledger::Transaction mint{k.address(), 0, 0,
                           market::Mint{content::Cid::of(as_bytes("other")), 5}, {}, {}};
  mint.sign_with(k);
  auto r = s.mc->submit(mint, doc_for("x", 5));
  CHECK(r.status == 400);

  CHECK(s.mc->healthz().json()["state_hash"] == before);
  CHECK(s.stack->node().ledger().get_nonce(k.address()) == 0);
}

TEST_CASE("read endpoints are idempotent") {
  Stack s;
  auto k = key(1);
  s.mc->faucet(k.address(), 100);
  s.mc->mint(k, doc_for("x", 5), 5);
  for (const char* target : {"/market/listings", "/nft/1", "/healthz"}) {
    auto a = s.raw("GET", target).body;
    auto b = s.raw("GET", target).body;
    CHECK(a == b);
  }
  auto p = "/profile/" + k.address().hex();
  CHECK(s.raw("GET", p).body == s.raw("GET", p).body);
}

TEST_CASE("listings pagination") {
  Stack s;
  auto k = key(1);
  s.mc->faucet(k.address(), 100);
  for (int i = 1; i <= 5; ++i) REQUIRE(s.mc->mint(k, doc_for("x", i), i).status == 200);
  auto page = s.mc->listings(1, 2).json();
  CHECK(page["total"] == 5);
  REQUIRE(page["items"].size() == 2);
  CHECK(page["items"][0]["token_id"] == 2);
  CHECK(page["items"][1]["token_id"] == 3);
  CHECK(s.mc->listings(10, 2).json()["items"].empty());
}

TEST_CASE("state survives a restart; corrupt logs refuse to start") {
  auto dir = fresh_dir("nftm_service_restart");
  std::string hash;
  std::uint64_t height = 0;
  auto k = key(1), b = key(2);
  {
    Stack s(dir);
    s.mc->faucet(k.address(), 1000);
    s.mc->faucet(b.address(), 1000);
    REQUIRE(s.mc->mint(k, doc_for("x", 7), 7).status == 200);
    REQUIRE(s.mc->buy(b, {1}, 7).status == 200);
    REQUIRE(s.mc->transfer(b, k.address(), 3).status == 200);
    auto h = s.mc->healthz().json();
    hash = h["state_hash"];
    height = h["height"];
  }
  {
    Stack s(dir);
    auto h = s.mc->healthz().json();
    CHECK(h["state_hash"] == hash);
    CHECK(h["height"] == height);
    CHECK(s.mc->nft({1}).json()["metadata"]["name"] == "Sunset");
    CHECK(s.mc->nonce_of(b.address()) == 2);
  }

  // Truncated chain log.
  auto chain = dir / "chain.log";
  std::filesystem::resize_file(chain, std::filesystem::file_size(chain) - 3);
  try {
    Stack s(dir);
    FAIL("truncated chain log accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptData);
    CHECK(std::string(e.what()).find("chain.log") != std::string::npos);
  }
  std::filesystem::remove(chain);

  // Truncated object log.
  auto objects = dir / "objects.log";
  std::filesystem::resize_file(objects, std::filesystem::file_size(objects) - 1);
  try {
    Stack s(dir);
    FAIL("truncated object log accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptData);
    CHECK(std::string(e.what()).find("objects.log") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("config file parsing") {
  auto path = std::filesystem::temp_directory_path() / "nftm_test.conf";
  {
    std::ofstream out(path);
    out << "# comment\nport = 9000\nprovider=remote\nprovider.remote.endpoint=https://x.invalid/gen\n"
           "faucet.enabled=false\n";
  }
  auto cfg = service::ServiceConfig::load(path);
  CHECK(cfg.port == 9000);
  CHECK(cfg.genart.provider == genart::ProviderKind::Remote);
  CHECK(cfg.genart.remote.endpoint == "https://x.invalid/gen");
  CHECK_FALSE(cfg.faucet_enabled);
  {
    std::ofstream out(path);
    out << "colour=blue\n";
  }
  CHECK_THROWS_AS(service::ServiceConfig::load(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("faucet can be disabled") {
  service::ServiceConfig cfg;
  cfg.faucet_enabled = false;
  LocalStack stack(cfg, std::make_shared<FixedClock>());
  MarketClient mc(stack.client());
  CHECK(mc.faucet(key(1).address(), 5).status == 404);
}

TEST_CASE("the HTTP front end serves the same API") {
  service::ServiceConfig cfg;
  cfg.port = 0;
  LocalStack stack(cfg, std::make_shared<FixedClock>());
  service::HttpServer server(stack.api(), cfg);
  auto port = server.bind();
  REQUIRE(port != 0);
  std::thread t([&] { server.listen(); });

  HttpClient http("http://127.0.0.1:" + std::to_string(port));
  MarketClient mc(http);
  auto k = key(1);
  CHECK(mc.healthz().status == 200);
  CHECK(mc.faucet(k.address(), 100).status == 200);
  auto r = mc.mint(k, doc_for("x", 9), 9);
  CHECK(r.status == 200);
  CHECK(mc.nft({1}).json()["price"] == 9);
  CHECK(mc.nft({2}).status == 404);
  CHECK(http.request("GET", "/nothing", {}, {}).json()["error"] == "NotFound");
  auto token = mc.connect(k);
  auto gen = mc.generate(token, "over the wire", 256);
  CHECK(gen.status == 200);
  auto png = mc.object(content::Cid::parse(gen.json()["image_cid"].get<std::string>()));
  CHECK(png.content_type == "image/png");
  CHECK(content::compute_cid(as_bytes(png.body)).str() == gen.json()["image_cid"]);

  server.stop();
  t.join();

  HttpClient dead("http://127.0.0.1:" + std::to_string(port));
  try {
    dead.request("GET", "/healthz", {}, {});
    FAIL("expected TargetUnreachable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TargetUnreachable);
  }
}
