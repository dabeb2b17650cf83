#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace amdyn {

/// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-addressable random stream. Draw i depends only on (seed, stream_id, i),
/// so any partition of the index range across workers reproduces the serial draws.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Raw 64-bit word number `index`.
  std::uint64_t bits(std::uint64_t index) const;
  /// Uniform on the open interval (0,1).
  double uniform(std::uint64_t index) const;
  /// Standard normal draw number `index` (Box-Muller over word pairs).
  double normal(std::uint64_t index) const;
  /// Writes normals first, first+1, ..., first+n-1.
  void fill_normal(double* out, std::size_t n, std::uint64_t first = 0) const;

  /// Independent child stream with the same seed.
  RngStream derive(std::uint64_t child) const;

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t block_index) const;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace amdyn
