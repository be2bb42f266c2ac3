#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace feller {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Maps a 128-bit counter under a 64-bit key to 128
/// pseudo-random bits.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Counter-based random stream. The stream for trajectory `trajectory` of
/// cell `cell` under master seed `seed` is a pure function of that triple:
/// draw j reads Philox block (j/2) with counter (block_lo, block_hi,
/// trajectory, cell) and key = seed. Two streams with different
/// (seed, cell, trajectory) never share a block.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint32_t cell, std::uint32_t trajectory)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        cell_(cell),
        trajectory_(trajectory) {}

  std::uint64_t next_u64() {
    if (slot_ == 2) refill();
    return buffer_[slot_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate by inverse CDF.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  std::uint64_t draws() const { return draws_; }

 private:
  void refill() {
    const auto out = philox4x32({static_cast<std::uint32_t>(block_),
                                 static_cast<std::uint32_t>(block_ >> 32), trajectory_, cell_},
                                key_);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    ++block_;
    draws_ += 2;
    slot_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t cell_;
  std::uint32_t trajectory_;
  std::uint64_t block_ = 0;
  std::uint64_t draws_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int slot_ = 2;
};

}  // namespace feller
