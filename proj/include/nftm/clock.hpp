#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace nftm {

/// Wall-clock source in whole seconds since the epoch. Injected everywhere a timestamp is
/// recorded so tests can pin block and challenge times.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::uint64_t now() const = 0;
};

class SystemClock final : public Clock {
 public:
  std::uint64_t now() const override {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
  }
};

class FixedClock final : public Clock {
 public:
  explicit FixedClock(std::uint64_t t = 1'700'000'000) : t_(t) {}
  std::uint64_t now() const override { return t_.load(); }
  void set(std::uint64_t t) { t_.store(t); }
  void advance(std::uint64_t dt) { t_.fetch_add(dt); }

 private:
  std::atomic<std::uint64_t> t_;
};

}  // namespace nftm
