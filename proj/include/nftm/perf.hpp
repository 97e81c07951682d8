#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nftm/client.hpp"

namespace nftm::perf {

enum class Phase { Generate, Mint, Buy, EndToEnd };

std::string_view phase_name(Phase p);
/// Accepts generate, mint, buy, e2e and end_to_end.
Phase parse_phase(std::string_view text);

/// One timed request. Durations are whole microseconds so the CSV text is exact.
struct LatencySample {
  std::uint64_t request_index = 0;  // 1-based
  Phase phase = Phase::Generate;
  std::uint64_t elapsed_us = 0;
  bool ok = true;
  std::string error;

  double elapsed_ms() const { return static_cast<double>(elapsed_us) / 1000.0; }
};

struct Stats {
  std::size_t n = 0;
  double mean = 0, min = 0, max = 0, p50 = 0, p95 = 0;
};

/// Nearest-rank percentile: the value at 1-based rank ceil(pct/100 * n) of the sorted list.
double nearest_rank(std::span<const double> sorted, unsigned pct);

/// Mean accumulates in input order. Empty input yields n = 0 and zeros.
Stats compute_stats(std::span<const double> values);

struct BenchReport {
  Phase phase = Phase::Generate;
  std::size_t n = 0;         // requests issued
  std::size_t failures = 0;  // excluded from the statistics
  double mean_ms = 0, max_ms = 0, min_ms = 0, p50_ms = 0, p95_ms = 0;
  std::vector<LatencySample> samples;
};

/// Statistics over successful samples. Throws Error(AllRequestsFailed) if there are none.
BenchReport summarize(Phase phase, std::vector<LatencySample> samples);

struct BenchOptions {
  std::uint64_t price = 10;
  std::uint32_t image_size = 512;
};

/// Issues `n` sequential requests of one phase against the API and times each on a
/// monotonic clock. Bench wallets are derived from fixed seeds and funded via the faucet.
///
///   generate    POST /generate
///   mint        pin metadata + mint transaction (image generated once up front)
///   buy         buy transaction for a token minted untimed just before
///   e2e         generate, mint and buy back to back
///
/// Errors: TargetUnreachable, AllRequestsFailed.
BenchReport run_bench(Phase phase, std::size_t n, client::ApiClient& target,
                      const BenchOptions& options = {});

enum class Format { Csv, PlotData };
Format parse_format(std::string_view text);

/// csv: "request_index,phase,elapsed_ms,ok" then one row per sample.
/// plotdata: "# phase=<p>" header, then "x y" rows (request index, ms) for successful samples.
std::string render(const BenchReport& report, Format format);
void emit(const BenchReport& report, Format format, const std::filesystem::path& path);

struct CsvRow {
  std::uint64_t request_index = 0;
  std::string phase;
  double elapsed_ms = 0;
  bool ok = false;
};
std::vector<CsvRow> parse_csv(std::string_view text);

nlohmann::json report_json(const BenchReport& report, bool include_samples = false);

}  // namespace nftm::perf
