#pragma once

#include <array>
#include <cstdint>

namespace hdinfer {

// Philox-4x32-10 counter-based generator. Draws are a pure function of
// (seed, stream, position), so parallel consumers that own disjoint streams
// produce bit-identical output regardless of scheduling.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// One logical stream of the counter-based generator.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  /// Uniform draw on the open interval (0, 1).
  double uniform();

  /// Standard normal via the inverse-CDF transform (bit-stable across platforms).
  double normal();

  /// Uniform integer in [0, n), n >= 1.
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t pos_ = 0;
  std::uint64_t buffered_ = 0;
  bool have_buffered_ = false;
};

/// Deterministic sub-seed derivation: mixes (base, tag, index) into a fresh seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0);

// Stream/tag labels used to keep independent random sources separate.
namespace rng_tag {
inline constexpr std::uint64_t design = 0x01;
inline constexpr std::uint64_t coefficients = 0x02;
inline constexpr std::uint64_t errors = 0x03;
inline constexpr std::uint64_t bootstrap = 0x04;
inline constexpr std::uint64_t cv_folds = 0x05;
inline constexpr std::uint64_t split = 0x06;
inline constexpr std::uint64_t column_subsample = 0x07;
inline constexpr std::uint64_t resample = 0x08;
}  // namespace rng_tag

}  // namespace hdinfer
