#include "mpg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mpg {

double snr(const ImageGrid& u, const ImageGrid& truth) {
  require_same_shape(u, truth, "snr");
  double err = 0.0;
  double energy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - truth[i];
    err += d * d;
    energy += u[i] * u[i];
  }
  if (energy == 0.0) throw DomainError("snr: reconstruction is identically zero");
  if (err == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, -10.0 * std::log10(err / energy));
}

void SSIMConfig::validate() const {
  if (window < 3 || window % 2 == 0) {
    throw ConfigError("ssim: window must be odd and >= 3");
  }
  if (!(k1 > 0.0 && k1 < 1.0) || !(k2 > 0.0 && k2 < 1.0)) {
    throw ConfigError("ssim: k1 and k2 must lie in (0, 1)");
  }
  if (!(dynamic_range > 0.0) || !(gaussian_sigma > 0.0)) {
    throw ConfigError("ssim: dynamic_range and gaussian_sigma must be positive");
  }
}

double ssim(const ImageGrid& a, const ImageGrid& b, const SSIMConfig& cfg) {
  cfg.validate();
  require_same_shape(a, b, "ssim");
  const int win = cfg.window;
  if (a.width() < win || a.height() < win) {
    throw ConfigError("ssim: image smaller than the window");
  }

  std::vector<double> kernel(static_cast<std::size_t>(win) * win);
  const int half = win / 2;
  double ksum = 0.0;
  for (int r = 0; r < win; ++r) {
    for (int c = 0; c < win; ++c) {
      const double dr = r - half, dc = c - half;
      const double k = std::exp(-(dr * dr + dc * dc) /
                                (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma));
      kernel[static_cast<std::size_t>(r) * win + c] = k;
      ksum += k;
    }
  }
  for (auto& k : kernel) k /= ksum;

  const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
  const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
  const int w = a.width();
  double total = 0.0;
  std::size_t count = 0;
  for (int r0 = 0; r0 + win <= a.height(); ++r0) {
    for (int c0 = 0; c0 + win <= w; ++c0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int r = 0; r < win; ++r) {
        for (int c = 0; c < win; ++c) {
          const double k = kernel[static_cast<std::size_t>(r) * win + c];
          const double x = a.at(r0 + r, c0 + c);
          const double y = b.at(r0 + r, c0 + c);
          ma += k * x;
          mb += k * y;
          saa += k * x * x;
          sbb += k * y * y;
          sab += k * x * y;
        }
      }
      const double va = saa - ma * ma;
      const double vb = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double objective_H(const ImageGrid& u, const ImageGrid& v, const ImageGrid& f,
                   const ModelWeights& weights) {
  require_same_shape(u, v, "objective_H");
  require_same_shape(u, f, "objective_H");
  double gauss = 0.0;
  double poisson = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (v[i] < weights.epsilon) return std::numeric_limits<double>::infinity();
    const double d = f[i] - v[i];
    gauss += d * d;
    const double ui = std::max(u[i], kLogFloor);
    poisson += u[i] - v[i] * std::log(ui / v[i]) - v[i];
  }
  return 0.5 * weights.lambda1 * gauss + weights.lambda2 * poisson +
         total_variation(u);
}

}  // namespace mpg
