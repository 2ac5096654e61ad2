#pragma once

#include <cstdint>
#include <string_view>

#include "mpg/grid.hpp"

namespace mpg {

/// Mixed Poisson-Gaussian corruption parameters.
///   f_i = Poisson(eta * u_i) / eta + N(0, sigma^2)
/// eta is the photon scale (larger eta = less Poisson noise).
struct NoiseSpec {
  double eta = 4.0;
  double sigma = 1e-4;
  std::uint64_t seed = 0;
};

/// Counter-based random stream. Each pixel gets its own stream keyed by
/// (seed, pixel index): the key is mixed with SplitMix64 and expanded into a
/// xoshiro256** state, so samples never depend on traversal order.
class PixelRng {
 public:
  PixelRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1).
  double uniform_open() noexcept;
  /// Standard normal via Box-Muller (one value per call).
  double normal() noexcept;
  /// Poisson(mean). Inversion by sequential search for mean < 10, Hormann's
  /// PTRS transformed rejection otherwise.
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Corrupts a clean image. Output is not clamped; negative pixels from the
/// Gaussian part are passed through. Throws ConfigError on eta <= 0 or
/// sigma < 0 and DomainError on a negative or non-finite clean pixel.
ImageGrid corrupt(const ImageGrid& clean, const NoiseSpec& spec);

enum class PhantomKind { circles, flat, ramp, checker };

PhantomKind parse_phantom_kind(std::string_view name);
std::string_view to_string(PhantomKind kind);

/// Deterministic synthetic test image with values in [0,1].
/// `block` is the checker square size in pixels; 0 picks width/8.
ImageGrid make_phantom(PhantomKind kind, int width, int height, int block = 0);
ImageGrid make_phantom(std::string_view kind, int width, int height,
                       int block = 0);

}  // namespace mpg
