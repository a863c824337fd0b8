#pragma once

#include <array>
#include <cstdint>

namespace panelid {

/// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
/// Stateless: the same (key, counter) always yields the same block on every platform.
class Philox4x32 {
public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t(kM0) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(kM1) * ctr[2];
      ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ k[0], std::uint32_t(p1),
             std::uint32_t(p0 >> 32) ^ ctr[3] ^ k[1], std::uint32_t(p0)};
      k[0] += kW0;
      k[1] += kW1;
    }
    return ctr;
  }

  /// Two uniforms in [0, 1) with 53 random bits each, from block `draw` of `stream`.
  std::array<double, 2> uniforms(std::uint64_t stream, std::uint64_t draw) const {
    const Block b = (*this)({std::uint32_t(draw), std::uint32_t(draw >> 32),
                             std::uint32_t(stream), std::uint32_t(stream >> 32)});
    auto u53 = [](std::uint32_t hi, std::uint32_t lo) {
      const std::uint64_t v = ((std::uint64_t(hi) << 32) | lo) >> 11;
      return double(v) * 0x1.0p-53;
    };
    return {u53(b[0], b[1]), u53(b[2], b[3])};
  }

private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

} // namespace panelid
