#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nftm/error.hpp"
#include "nftm/perf.hpp"

using namespace nftm;
using namespace nftm::perf;

namespace {

std::vector<LatencySample> samples_us(std::initializer_list<std::uint64_t> us) {
  std::vector<LatencySample> out;
  std::uint64_t i = 0;
  for (auto v : us) out.push_back({++i, Phase::Mint, v, true, {}});
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("stats over a small list") {
  std::vector<double> v{10, 20, 30};
  auto s = compute_stats(v);
  CHECK(s.mean == 20);
  CHECK(s.min == 10);
  CHECK(s.max == 30);
  CHECK(s.p50 == 20);
  CHECK(s.p95 == 30);
}

TEST_CASE("nearest-rank percentiles") {
  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(i);
  CHECK(nearest_rank(v, 50) == 10);
  CHECK(nearest_rank(v, 95) == 19);
  CHECK(nearest_rank(v, 100) == 20);
  CHECK(nearest_rank(v, 0) == 1);
  std::vector<double> one{7};
  CHECK(nearest_rank(one, 95) == 7);
  CHECK(compute_stats({}).n == 0);
}

TEST_CASE("summaries skip failures; all failing is an error") {
  auto s = samples_us({1000, 3000, 2000});
  s[1].ok = false;
  auto r = summarize(Phase::Mint, s);
  CHECK(r.n == 3);
  CHECK(r.failures == 1);
  CHECK(r.mean_ms == 1.5);
  CHECK(r.max_ms == 2.0);

  for (auto& x : s) x.ok = false;
  try {
    summarize(Phase::Mint, s);
    FAIL("expected AllRequestsFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllRequestsFailed);
  }
}

TEST_CASE("CSV layout and plot data") {
  auto r = summarize(Phase::Mint, samples_us({10000, 20500, 30001}));
  auto csv = render(r, Format::Csv);
  CHECK(csv ==
        "request_index,phase,elapsed_ms,ok\n"
        "1,mint,10.000,1\n"
        "2,mint,20.500,1\n"
        "3,mint,30.001,1\n");
  auto plot = render(r, Format::PlotData);
  CHECK(plot == "# phase=mint\n# x=request_index y=elapsed_ms\n1 10.000\n2 20.500\n3 30.001\n");
}

TEST_CASE("emit is byte-stable and the CSV recomputes the report exactly") {
  auto r = summarize(Phase::EndToEnd, samples_us({1, 999, 123456, 7, 5000001, 42}));
  auto p1 = std::filesystem::temp_directory_path() / "nftm_perf_a.csv";
  auto p2 = std::filesystem::temp_directory_path() / "nftm_perf_b.csv";
  emit(r, Format::Csv, p1);
  emit(r, Format::Csv, p2);
  CHECK(slurp(p1) == slurp(p2));

  std::vector<double> ms;
  for (const auto& row : parse_csv(slurp(p1))) ms.push_back(row.elapsed_ms);
  auto s = compute_stats(ms);
  CHECK(s.mean == r.mean_ms);
  CHECK(s.max == r.max_ms);
  CHECK(s.min == r.min_ms);
  CHECK(s.p50 == r.p50_ms);
  CHECK(s.p95 == r.p95_ms);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("parse helpers") {
  CHECK(parse_phase("e2e") == Phase::EndToEnd);
  CHECK(parse_phase("end_to_end") == Phase::EndToEnd);
  CHECK_THROWS_AS(parse_phase("deploy"), Error);
  CHECK(parse_format("plotdata") == Format::PlotData);
  CHECK_THROWS_AS(parse_csv("x,y\n"), Error);
}

TEST_CASE("in-process bench runs every phase") {
  for (auto phase : {Phase::Generate, Phase::Mint, Phase::Buy, Phase::EndToEnd}) {
    client::LocalStack stack({});
    auto r = run_bench(phase, 2, stack.client(), {10, 256});
    CHECK(r.n == 2);
    CHECK(r.failures == 0);
    CHECK(r.samples.size() == 2);
    CHECK(r.min_ms <= r.p50_ms);
    CHECK(r.p50_ms <= r.max_ms);
    if (phase == Phase::Buy || phase == Phase::EndToEnd) {
      CHECK(stack.node().ledger().get_all_listings().empty());
    }
  }
}

TEST_CASE("bench against an unreachable target fails fast") {
  client::HttpClient dead("http://127.0.0.1:1");
  try {
    run_bench(Phase::Generate, 1, dead);
    FAIL("expected TargetUnreachable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TargetUnreachable);
  }
}
