#pragma once

#include <array>
#include <cstdint>

namespace karma {

/// Philox4x32-10 counter-based generator. Every (key, counter) pair maps to an
/// independent block, so draws do not depend on evaluation order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream of uniforms keyed by (seed, entity, time, stream).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t entity, std::uint32_t time,
             std::uint32_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        entity_(entity),
        time_(time),
        stream_(stream) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return next53(); }

  std::uint32_t nextU32() {
    if (used_ >= 4) refill();
    return buf_[used_++];
  }

  /// Uniform integer in [0, bound).
  std::uint32_t below(std::uint32_t bound) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(nextU32()) * bound) >> 32);
  }

 private:
  double next53() {
    const std::uint64_t a = nextU32() >> 5;
    const std::uint64_t b = nextU32() >> 6;
    return static_cast<double>(a * 67108864ull + b) * (1.0 / 9007199254740992.0);
  }

  void refill() {
    buf_ = Philox4x32::block({entity_, time_, stream_, draw_++}, key_);
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t entity_, time_, stream_;
  std::uint32_t draw_ = 0;
  Philox4x32::Counter buf_{};
  int used_ = 4;
};

}  // namespace karma
