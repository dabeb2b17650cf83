#include "amdyn/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace amdyn {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double unit_open(std::uint64_t word) {
  return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t block_index) const {
  return philox4x32({static_cast<std::uint32_t>(block_index),
                     static_cast<std::uint32_t>(block_index >> 32),
                     static_cast<std::uint32_t>(stream_id_),
                     static_cast<std::uint32_t>(stream_id_ >> 32)},
                    {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

std::uint64_t RngStream::bits(std::uint64_t index) const {
  const auto r = block(index >> 1);
  return (index & 1u) ? (static_cast<std::uint64_t>(r[3]) << 32 | r[2])
                      : (static_cast<std::uint64_t>(r[1]) << 32 | r[0]);
}

double RngStream::uniform(std::uint64_t index) const { return unit_open(bits(index)); }

double RngStream::normal(std::uint64_t index) const {
  const auto r = block(index >> 1);
  const double u1 = unit_open(static_cast<std::uint64_t>(r[1]) << 32 | r[0]);
  const double u2 = unit_open(static_cast<std::uint64_t>(r[3]) << 32 | r[2]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index & 1u) ? radius * std::sin(angle) : radius * std::cos(angle);
}

void RngStream::fill_normal(double* out, std::size_t n, std::uint64_t first) const {
  std::size_t i = 0;
  if (n > 0 && (first & 1u)) {
    out[i++] = normal(first);
  }
  for (; i + 1 < n; i += 2) {
    const auto r = block((first + i) >> 1);
    const double u1 = unit_open(static_cast<std::uint64_t>(r[1]) << 32 | r[0]);
    const double u2 = unit_open(static_cast<std::uint64_t>(r[3]) << 32 | r[2]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = radius * std::cos(angle);
    out[i + 1] = radius * std::sin(angle);
  }
  if (i < n) out[i] = normal(first + i);
}

RngStream RngStream::derive(std::uint64_t child) const {
  return RngStream(seed_, splitmix64(stream_id_ ^ splitmix64(child + 0x632BE59BD9B4E019ull)));
}

}  // namespace amdyn
