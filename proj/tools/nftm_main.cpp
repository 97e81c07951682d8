// nftm: command-line front end for the marketplace node.
//
// Every command runs either against a live service (--target http://host:port) or against
// an embedded stack over a local data directory (--target inproc, the default).

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "nftm/client.hpp"
#include "nftm/error.hpp"
#include "nftm/perf.hpp"
#include "nftm/service.hpp"
#include "nftm/wallet.hpp"

namespace {

using nftm::client::ApiResponse;
using nftm::client::MarketClient;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRemote = 2;

struct CliConfig {
  std::string target = "inproc";
  std::string data_dir;
  std::string keystore = "nftm.key";
  std::string config_path;
  bool json_output = false;
};

class Runner {
 public:
  explicit Runner(CliConfig cfg) : cfg_(std::move(cfg)) {}

  nftm::service::ServiceConfig service_config() const {
    auto sc = cfg_.config_path.empty() ? nftm::service::ServiceConfig{}
                                       : nftm::service::ServiceConfig::load(cfg_.config_path);
    if (!cfg_.data_dir.empty()) sc.data_dir = cfg_.data_dir;
    if (sc.data_dir.empty()) sc.data_dir = "nftm-data";
    if (sc.data_dir == ":memory:") sc.data_dir.clear();
    return sc;
  }

  nftm::client::ApiClient& api() {
    if (client_) return *client_;
    if (cfg_.target == "inproc") {
      stack_.emplace(service_config());
      client_ = &stack_->client();
    } else {
      http_.emplace(cfg_.target);
      client_ = &*http_;
    }
    return *client_;
  }

  MarketClient market() { return MarketClient(api()); }
  nftm::wallet::KeyPair keys() const { return nftm::wallet::read_keystore(cfg_.keystore); }
  const CliConfig& cfg() const { return cfg_; }

  /// Prints the body (json mode) or calls `human` with the parsed body. Failures throw.
  int finish(const ApiResponse& res, const std::function<void(const json&)>& human) {
    if (cfg_.json_output) std::cout << res.body << "\n";
    MarketClient::expect_ok(res);
    if (!cfg_.json_output) human(res.json());
    return kExitOk;
  }

 private:
  CliConfig cfg_;
  std::optional<nftm::client::LocalStack> stack_;
  std::optional<nftm::client::HttpClient> http_;
  nftm::client::ApiClient* client_ = nullptr;
};

std::string short_addr(const std::string& a) { return a.size() > 12 ? a.substr(0, 8) + ".." + a.substr(a.size() - 4) : a; }

std::string meta_field(const json& record, const char* key) {
  if (!record.contains("metadata") || record["metadata"].is_null()) return "?";
  const auto& v = record["metadata"][key];
  return v.is_string() ? v.get<std::string>() : v.dump();
}

void print_records(const json& items) {
  std::printf("%-6s %-24s %10s %-14s %s\n", "ID", "NAME", "PRICE", "OWNER", "URI");
  for (const auto& r : items) {
    std::printf("%-6llu %-24s %10llu %-14s %s\n",
                static_cast<unsigned long long>(r["token_id"].get<std::uint64_t>()),
                meta_field(r, "name").c_str(),
                static_cast<unsigned long long>(r["price"].get<std::uint64_t>()),
                short_addr(r.value("owner", std::string("-"))).c_str(),
                r["token_uri"].get<std::string>().c_str());
  }
}

void print_receipt(const json& body) {
  const auto& r = body["receipt"];
  std::printf("tx %s  block %llu  %s\n", body["tx_hash"].get<std::string>().c_str(),
              static_cast<unsigned long long>(r["block_height"].get<std::uint64_t>()),
              r["status"].get<std::string>().c_str());
  if (body.contains("token_id")) {
    std::printf("token id %llu\n", static_cast<unsigned long long>(body["token_id"].get<std::uint64_t>()));
  }
}

nftm::service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int exit_code_for(const nftm::Error& e) {
  switch (e.code()) {
    case nftm::ErrorCode::Validation:
    case nftm::ErrorCode::EmptyPrompt: return kExitValidation;
    default: return kExitRemote;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nftm: NFT marketplace node, wallet and benchmark tool"};
  app.require_subcommand(1);
  app.fallthrough();

  CliConfig cfg;
  app.add_option("--target", cfg.target, "Service URL, or 'inproc' for an embedded stack");
  app.add_option("--data-dir", cfg.data_dir, "Data directory for inproc mode (':memory:' for none)");
  app.add_option("--keystore", cfg.keystore, "Keystore file (64 hex chars)");
  app.add_option("--config", cfg.config_path, "Service config file (key=value)");
  app.add_flag("--json", cfg.json_output, "Print raw API response bodies");

  // keygen
  auto* keygen = app.add_subcommand("keygen", "Create a keystore with a new Ed25519 key");
  std::string seed_hex;
  bool force = false;
  keygen->add_option("--seed", seed_hex, "Deterministic 32-byte seed, hex");
  keygen->add_flag("--force", force, "Overwrite an existing keystore");

  // faucet
  auto* faucet = app.add_subcommand("faucet", "Credit test currency to an address");
  std::uint64_t faucet_amount = 0;
  std::string faucet_address;
  faucet->add_option("--amount", faucet_amount, "Amount in smallest units")->required();
  faucet->add_option("--address", faucet_address, "Recipient (default: keystore address)");

  // generate
  auto* generate = app.add_subcommand("generate", "Generate and pin an image from a prompt");
  std::string gen_prompt;
  std::uint32_t gen_size = 512;
  generate->add_option("--prompt", gen_prompt, "Prompt text")->required();
  generate->add_option("--size", gen_size, "256, 512 or 1024");

  // mint
  auto* mint = app.add_subcommand("mint", "Mint and list a token");
  std::string mint_name, mint_description, mint_prompt, mint_image_cid;
  std::uint64_t mint_price = 0;
  std::uint32_t mint_size = 512;
  mint->add_option("--name", mint_name)->required();
  mint->add_option("--description", mint_description)->required();
  mint->add_option("--price", mint_price, "Integer smallest units")->required();
  auto* opt_prompt = mint->add_option("--prompt", mint_prompt, "Generate the image first");
  auto* opt_cid = mint->add_option("--image-cid", mint_image_cid, "Use an already pinned image");
  opt_prompt->excludes(opt_cid);
  mint->add_option("--size", mint_size, "Image size when generating");

  // listings / show / buy / profile
  auto* listings = app.add_subcommand("listings", "Show tokens for sale");
  std::uint64_t offset = 0, limit = 50;
  listings->add_option("--offset", offset);
  listings->add_option("--limit", limit);

  auto* show = app.add_subcommand("show", "Show one token with its metadata");
  std::uint64_t show_id = 0;
  show->add_option("token_id", show_id)->required();

  auto* buy = app.add_subcommand("buy", "Buy a listed token at its price");
  std::uint64_t buy_id = 0;
  buy->add_option("token_id", buy_id)->required();

  auto* profile = app.add_subcommand("profile", "Show owned tokens and their total value");
  std::string profile_address;
  profile->add_option("address", profile_address, "Default: keystore address");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::optional<std::uint16_t> serve_port;
  std::string serve_bind;
  serve->add_option("--port", serve_port);
  serve->add_option("--bind", serve_bind);

  // bench
  auto* bench = app.add_subcommand("bench", "Per-request latency series");
  std::string bench_phase = "e2e", bench_out, bench_format = "csv";
  std::size_t bench_n = 20;
  std::uint64_t bench_price = 10;
  std::uint32_t bench_size = 512;
  bench->add_option("--phase", bench_phase, "generate|mint|buy|e2e");
  bench->add_option("--n", bench_n, "Number of sequential requests");
  bench->add_option("--out", bench_out, "Output file")->required();
  bench->add_option("--format", bench_format, "csv|plotdata");
  bench->add_option("--price", bench_price);
  bench->add_option("--size", bench_size);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  Runner run(cfg);
  try {
    if (*keygen) {
      if (std::filesystem::exists(cfg.keystore) && !force) {
        throw nftm::Error(nftm::ErrorCode::Validation,
                          cfg.keystore + " exists; pass --force to overwrite");
      }
      std::optional<nftm::Bytes> seed;
      if (!seed_hex.empty()) seed = nftm::from_hex(seed_hex);
      auto keys = seed ? nftm::wallet::generate_keypair(nftm::ByteView(*seed))
                       : nftm::wallet::generate_keypair();
      nftm::wallet::write_keystore(cfg.keystore, keys);
      if (cfg.json_output) {
        std::cout << json{{"address", keys.address().hex()},
                          {"public_key", keys.public_key().hex()},
                          {"keystore", cfg.keystore}}
                         .dump()
                  << "\n";
      } else {
        std::cout << "address    " << keys.address().hex() << "\n"
                  << "public key " << keys.public_key().hex() << "\n"
                  << "keystore   " << cfg.keystore << "\n";
      }
      return kExitOk;
    }

    if (*faucet) {
      auto to = faucet_address.empty() ? run.keys().address() : nftm::Address::parse(faucet_address);
      return run.finish(run.market().faucet(to, faucet_amount), [&](const json& b) {
        std::cout << "credited " << faucet_amount << " to " << to.hex() << "; balance "
                  << b["balance"].get<std::uint64_t>() << "\n";
      });
    }

    if (*generate) {
      auto keys = run.keys();
      auto market = run.market();
      auto session = market.connect(keys);
      return run.finish(market.generate(session, gen_prompt, gen_size), [](const json& b) {
        std::cout << "image cid " << b["image_cid"].get<std::string>() << "\n";
      });
    }

    if (*mint) {
      if (mint_prompt.empty() && mint_image_cid.empty()) {
        throw nftm::Error(nftm::ErrorCode::Validation, "mint needs --prompt or --image-cid");
      }
      auto keys = run.keys();
      auto market = run.market();
      std::string image_cid = mint_image_cid;
      if (!mint_prompt.empty()) {
        auto session = market.connect(keys);
        auto res = MarketClient::expect_ok(market.generate(session, mint_prompt, mint_size));
        image_cid = res.json().at("image_cid").get<std::string>();
      } else {
        nftm::content::Cid::parse(image_cid);
      }
      nftm::content::MetadataDocument doc{mint_name, mint_description, mint_price, "cid:" + image_cid};
      return run.finish(market.mint(keys, doc, mint_price), print_receipt);
    }

    if (*listings) {
      return run.finish(run.market().listings(offset, limit), [](const json& b) {
        print_records(b["items"]);
        std::cout << b["total"].get<std::uint64_t>() << " listed\n";
      });
    }

    if (*show) {
      return run.finish(run.market().nft(nftm::market::TokenId{show_id}), [](const json& b) {
        std::cout << "token     " << b["token_id"] << "\n"
                  << "name      " << meta_field(b, "name") << "\n"
                  << "desc      " << meta_field(b, "description") << "\n"
                  << "image     " << meta_field(b, "image") << "\n"
                  << "price     " << b["price"] << "\n"
                  << "owner     " << b["owner"].get<std::string>() << "\n"
                  << "creator   " << b["creator"].get<std::string>() << "\n"
                  << "uri       " << b["token_uri"].get<std::string>() << "\n"
                  << "listed    " << (b["listed"].get<bool>() ? "yes" : "no") << "\n";
      });
    }

    if (*buy) {
      auto keys = run.keys();
      auto market = run.market();
      auto token = MarketClient::expect_ok(market.nft(nftm::market::TokenId{buy_id})).json();
      auto price = token.at("price").get<std::uint64_t>();
      return run.finish(market.buy(keys, nftm::market::TokenId{buy_id}, price), print_receipt);
    }

    if (*profile) {
      auto address = profile_address.empty() ? run.keys().address()
                                             : nftm::Address::parse(profile_address);
      return run.finish(run.market().profile(address), [](const json& b) {
        std::cout << "address     " << b["address"].get<std::string>() << "\n"
                  << "nft count   " << b["nft_count"] << "\n"
                  << "total value " << b["total_value"] << "\n"
                  << "balance     " << b["balance"] << "\n";
        if (!b["tokens"].empty()) print_records(b["tokens"]);
      });
    }

    if (*serve) {
      auto sc = run.service_config();
      if (serve_port) sc.port = *serve_port;
      if (!serve_bind.empty()) sc.bind = serve_bind;
      nftm::service::Node node(sc.data_dir, std::make_shared<nftm::SystemClock>());
      nftm::service::Api api(node, sc, nftm::genart::make_provider(sc.genart));
      nftm::service::HttpServer server(api, sc);
      auto port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << sc.bind << ":" << port << " (height "
                << node.ledger().height() << ")" << std::endl;
      server.listen();
      g_server = nullptr;
      return kExitOk;
    }

    if (*bench) {
      auto phase = nftm::perf::parse_phase(bench_phase);
      auto format = nftm::perf::parse_format(bench_format);
      auto report = nftm::perf::run_bench(phase, bench_n, run.api(), {bench_price, bench_size});
      nftm::perf::emit(report, format, bench_out);
      if (cfg.json_output) {
        std::cout << nftm::perf::report_json(report).dump() << "\n";
      } else {
        std::printf("%s n=%zu failures=%zu mean=%.3fms min=%.3fms p50=%.3fms p95=%.3fms max=%.3fms\n",
                    std::string(nftm::perf::phase_name(report.phase)).c_str(), report.n,
                    report.failures, report.mean_ms, report.min_ms, report.p50_ms, report.p95_ms,
                    report.max_ms);
        std::printf("wrote %s\n", bench_out.c_str());
      }
      return kExitOk;
    }
  } catch (const nftm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRemote;
  }
  return kExitOk;
}
