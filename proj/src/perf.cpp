#include "nftm/perf.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nftm/error.hpp"

namespace nftm::perf {

using nlohmann::json;

namespace {

std::string format_ms(std::uint64_t us) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu.%03llu", static_cast<unsigned long long>(us / 1000),
                static_cast<unsigned long long>(us % 1000));
  return buf;
}

wallet::KeyPair bench_wallet(std::string_view label) {
  auto seed = sha256(label);
  return wallet::generate_keypair(ByteView(seed));
}

std::uint64_t minted_id(const client::ApiResponse& res) {
  return client::MarketClient::expect_ok(res).json().at("token_id").get<std::uint64_t>();
}

}  // namespace

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::Generate: return "generate";
    case Phase::Mint: return "mint";
    case Phase::Buy: return "buy";
    case Phase::EndToEnd: return "end_to_end";
  }
  return "unknown";
}

Phase parse_phase(std::string_view text) {
  if (text == "generate") return Phase::Generate;
  if (text == "mint") return Phase::Mint;
  if (text == "buy") return Phase::Buy;
  if (text == "e2e" || text == "end_to_end") return Phase::EndToEnd;
  throw Error(ErrorCode::Validation, "unknown phase " + std::string(text));
}

Format parse_format(std::string_view text) {
  if (text == "csv") return Format::Csv;
  if (text == "plotdata") return Format::PlotData;
  throw Error(ErrorCode::Validation, "unknown format " + std::string(text));
}

double nearest_rank(std::span<const double> sorted, unsigned pct) {
  if (sorted.empty()) return 0;
  // ceil(pct * n / 100) in integers, clamped to rank 1.
  std::size_t rank = (static_cast<std::size_t>(pct) * sorted.size() + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Stats compute_stats(std::span<const double> values) {
  Stats s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = sum / static_cast<double>(values.size());
  s.min = sorted.front();
  s.max = sorted.back();
  s.p50 = nearest_rank(sorted, 50);
  s.p95 = nearest_rank(sorted, 95);
  return s;
}

BenchReport summarize(Phase phase, std::vector<LatencySample> samples) {
  BenchReport r;
  r.phase = phase;
  r.n = samples.size();
  std::vector<double> ok;
  for (const auto& s : samples) {
    if (s.ok) {
      ok.push_back(s.elapsed_ms());
    } else {
      ++r.failures;
    }
  }
  if (ok.empty()) {
    throw Error(ErrorCode::AllRequestsFailed,
                "all " + std::to_string(samples.size()) + " requests failed" +
                    (samples.empty() ? "" : ": " + samples.front().error));
  }
  auto st = compute_stats(ok);
  r.mean_ms = st.mean;
  r.min_ms = st.min;
  r.max_ms = st.max;
  r.p50_ms = st.p50;
  r.p95_ms = st.p95;
  r.samples = std::move(samples);
  return r;
}

BenchReport run_bench(Phase phase, std::size_t n, client::ApiClient& target,
                      const BenchOptions& options) {
  if (n == 0) throw Error(ErrorCode::Validation, "n must be at least 1");
  client::MarketClient api(target);
  if (!api.healthz().ok()) throw Error(ErrorCode::TargetUnreachable, "target is not healthy");

  auto seller = bench_wallet("nftm-bench-seller");
  auto buyer = bench_wallet("nftm-bench-buyer");
  client::MarketClient::expect_ok(api.faucet(seller.address(), 1));
  client::MarketClient::expect_ok(api.faucet(buyer.address(), options.price * n));
  auto session = api.connect(seller);

  auto generate = [&](std::size_t i) {
    auto res = client::MarketClient::expect_ok(
        api.generate(session, "bench request " + std::to_string(i), options.image_size));
    return res.json().at("image_cid").get<std::string>();
  };
  auto mint = [&](std::size_t i, const std::string& image_cid) {
    content::MetadataDocument doc{"bench #" + std::to_string(i), "latency benchmark token",
                                  options.price, "cid:" + image_cid};
    return minted_id(api.mint(seller, doc, options.price));
  };
  auto buy = [&](std::uint64_t id) {
    client::MarketClient::expect_ok(api.buy(buyer, market::TokenId{id}, options.price));
  };

  std::string shared_image;
  if (phase == Phase::Mint) shared_image = generate(0);

  std::vector<LatencySample> samples;
  samples.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    LatencySample s;
    s.request_index = i;
    s.phase = phase;
    try {
      std::uint64_t prepared = 0;
      if (phase == Phase::Buy) prepared = mint(i, generate(i));

      auto start = std::chrono::steady_clock::now();
      switch (phase) {
        case Phase::Generate: generate(i); break;
        case Phase::Mint: mint(i, shared_image); break;
        case Phase::Buy: buy(prepared); break;
        case Phase::EndToEnd: buy(mint(i, generate(i))); break;
      }
      auto elapsed = std::chrono::steady_clock::now() - start;
      s.elapsed_us = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::microseconds>(elapsed).count());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::TargetUnreachable) throw;
      s.ok = false;
      s.error = e.what();
    }
    samples.push_back(std::move(s));
  }
  return summarize(phase, std::move(samples));
}

std::string render(const BenchReport& report, Format format) {
  if (report.samples.empty()) throw Error(ErrorCode::Validation, "report has no samples");
  std::string out;
  if (format == Format::Csv) {
    out = "request_index,phase,elapsed_ms,ok\n";
    for (const auto& s : report.samples) {
      out += std::to_string(s.request_index) + "," + std::string(phase_name(s.phase)) + "," +
             format_ms(s.elapsed_us) + "," + (s.ok ? "1" : "0") + "\n";
    }
  } else {
    out = "# phase=" + std::string(phase_name(report.phase)) + "\n# x=request_index y=elapsed_ms\n";
    for (const auto& s : report.samples) {
      if (s.ok) out += std::to_string(s.request_index) + " " + format_ms(s.elapsed_us) + "\n";
    }
  }
  return out;
}

void emit(const BenchReport& report, Format format, const std::filesystem::path& path) {
  auto text = render(report, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "request_index,phase,elapsed_ms,ok") {
    throw Error(ErrorCode::Validation, "missing CSV header");
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string idx, phase, ms, ok;
    if (!std::getline(fields, idx, ',') || !std::getline(fields, phase, ',') ||
        !std::getline(fields, ms, ',') || !std::getline(fields, ok)) {
      throw Error(ErrorCode::Validation, "malformed CSV row: " + line);
    }
    rows.push_back({std::stoull(idx), phase, std::strtod(ms.c_str(), nullptr), ok == "1"});
  }
  return rows;
}

json report_json(const BenchReport& r, bool include_samples) {
  json j{{"phase", phase_name(r.phase)}, {"n", r.n},         {"failures", r.failures},
         {"mean_ms", r.mean_ms},         {"max_ms", r.max_ms}, {"min_ms", r.min_ms},
         {"p50_ms", r.p50_ms},           {"p95_ms", r.p95_ms}};
  if (include_samples) {
    json samples = json::array();
    for (const auto& s : r.samples) {
      json row{{"request_index", s.request_index},
               {"phase", phase_name(s.phase)},
               {"elapsed_ms", s.elapsed_ms()},
               {"ok", s.ok}};
      if (!s.ok) row["error"] = s.error;
      samples.push_back(std::move(row));
    }
    j["samples"] = std::move(samples);
  }
  return j;
}

}  // namespace nftm::perf
