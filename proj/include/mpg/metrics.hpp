#pragma once

#include "mpg/grid.hpp"

namespace mpg {

/// Value returned by snr() when the reconstruction matches exactly.
inline constexpr double kSnrCapDb = 300.0;

/// SNR(u, truth) = -10 log10( sum (u - truth)^2 / sum u^2 ) in dB.
/// The denominator is the energy of the reconstruction u, not of the truth.
/// Throws ShapeError on mismatched grids and DomainError when u is all zero.
double snr(const ImageGrid& u, const ImageGrid& truth);

struct SSIMConfig {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  void validate() const;
};

/// Mean structural similarity over all fully-contained Gaussian windows.
/// Throws ConfigError when the image is smaller than the window.
double ssim(const ImageGrid& a, const ImageGrid& b, const SSIMConfig& cfg = {});

/// Weights of the variational model.
struct ModelWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double epsilon = 1e-6;
};

/// Guard applied to u inside ln(u/v) when reporting objective values.
inline constexpr double kLogFloor = 1e-12;

/// H(u,v) = lambda1/2 sum (f-v)^2 + lambda2 sum (u - v ln(u/v) - v) + TV(u)
///          + indicator(v_i >= epsilon).
/// Returns +infinity when some v_i < epsilon. u is floored at kLogFloor
/// inside the logarithm only.
double objective_H(const ImageGrid& u, const ImageGrid& v, const ImageGrid& f,
                   const ModelWeights& weights);

}  // namespace mpg
