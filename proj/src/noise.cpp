#include "mpg/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mpg {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

std::uint64_t poisson_inversion(PixelRng& rng, double mean) {
  const double u = rng.uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  // The cap only matters when rounding keeps cdf a hair below u.
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// W. Hormann, "The transformed rejection method for generating Poisson
// random variables", 1993 (PTRS). Valid for mean >= 10.
std::uint64_t poisson_ptrs(PixelRng& rng, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PixelRng::PixelRng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t key = seed;
  const std::uint64_t mixed_seed = splitmix64(key);
  std::uint64_t state = mixed_seed ^ (stream * 0xd1342543de82ef95ULL);
  for (auto& s : s_) s = splitmix64(state);
}

std::uint64_t PixelRng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double PixelRng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double PixelRng::uniform_open() noexcept {
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

double PixelRng::normal() noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t PixelRng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw DomainError("poisson: mean must be finite and nonnegative");
  }
  if (mean == 0.0) return 0;
  return mean < 10.0 ? poisson_inversion(*this, mean) : poisson_ptrs(*this, mean);
}

ImageGrid corrupt(const ImageGrid& clean, const NoiseSpec& spec) {
  if (!(spec.eta > 0.0) || !std::isfinite(spec.eta)) {
    throw ConfigError("corrupt: eta must be positive and finite");
  }
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
    throw ConfigError("corrupt: sigma must be nonnegative and finite");
  }
  ImageGrid out(clean.width(), clean.height());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double u = clean[i];
    if (!(u >= 0.0) || !std::isfinite(u)) {
      throw DomainError("corrupt: clean intensity at pixel " +
                        std::to_string(i) + " is negative or not finite");
    }
    PixelRng rng(spec.seed, i);
    const auto counts = rng.poisson(spec.eta * u);
    double f = static_cast<double>(counts) / spec.eta;
    if (spec.sigma > 0.0) f += spec.sigma * rng.normal();
    out[i] = f;
  }
  return out;
}

PhantomKind parse_phantom_kind(std::string_view name) {
  if (name == "circles") return PhantomKind::circles;
  if (name == "flat") return PhantomKind::flat;
  if (name == "ramp") return PhantomKind::ramp;
  if (name == "checker") return PhantomKind::checker;
  throw ConfigError("unknown phantom kind '" + std::string(name) +
                    "' (expected circles, flat, ramp or checker)");
}

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::circles: return "circles";
    case PhantomKind::flat: return "flat";
    case PhantomKind::ramp: return "ramp";
    case PhantomKind::checker: return "checker";
  }
  return "?";
}

ImageGrid make_phantom(PhantomKind kind, int width, int height, int block) {
  if (width < 8 || height < 8) {
    throw ConfigError("phantom dimensions must be at least 8x8");
  }
  ImageGrid img(width, height);
  switch (kind) {
    case PhantomKind::flat:
      for (auto& x : img) x = 0.5;
      break;
    case PhantomKind::ramp:
      for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
          img.at(r, c) = static_cast<double>(c) / (width - 1);
      break;
    case PhantomKind::checker: {
      const int b = block > 0 ? block : std::max(1, width / 8);
      for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
          img.at(r, c) = ((r / b + c / b) % 2 == 0) ? 0.8 : 0.2;
      break;
    }
    case PhantomKind::circles: {
      // Disk centres/radii in unit coordinates; the disks do not overlap.
      struct Disk { double cx, cy, r, value; };
      constexpr Disk disks[] = {{0.30, 0.30, 0.22, 1.0},
                                {0.72, 0.30, 0.18, 0.8},
                                {0.30, 0.74, 0.18, 0.6},
                                {0.70, 0.72, 0.20, 0.9}};
      constexpr double background = 0.1;
      for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
          const double x = (c + 0.5) / width;
          const double y = (r + 0.5) / height;
          double v = background;
          for (const auto& d : disks) {
            const double ex = x - d.cx, ey = y - d.cy;
            if (ex * ex + ey * ey <= d.r * d.r) v = d.value;
          }
          img.at(r, c) = v;
        }
      }
      break;
    }
  }
  return img;
}

ImageGrid make_phantom(std::string_view kind, int width, int height, int block) {
  return make_phantom(parse_phantom_kind(kind), width, height, block);
}

}  // namespace mpg
