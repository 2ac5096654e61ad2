#include "mpg/tv_inner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mpg {

void ChambolleConfig::validate() const {
  if (inner_iters < 1) {
    throw ConfigError("chambolle: inner_iters must be >= 1");
  }
  if (!(tau > 0.0) || tau > 0.25) {
    throw ConfigError("chambolle: tau must lie in (0, 0.25], got " +
                      std::to_string(tau));
  }
}

TvL2Result tv_l2_denoise(const ImageGrid& g, double weight,
                         const ChambolleConfig& cfg,
                         const VectorField* warm_dual) {
  cfg.validate();
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw ConfigError("tv_l2_denoise: weight must be positive and finite");
  }
  VectorField q = warm_dual ? *warm_dual : VectorField::zeros_like(g);
  require_same_shape(g, q, "tv_l2_denoise");

  const int w = g.width();
  const int h = g.height();
  const std::size_t n = g.size();
  ImageGrid residual(w, h);  // div q - weight * g
  auto qx = q.dx();
  auto qy = q.dy();

  for (int it = 0; it < cfg.inner_iters; ++it) {
    const ImageGrid d = divergence(q);
    for (std::size_t i = 0; i < n; ++i) residual[i] = d[i] - weight * g[i];
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        const double gx = c + 1 < w ? residual[i + 1] - residual[i] : 0.0;
        const double gy = r + 1 < h ? residual[i + w] - residual[i] : 0.0;
        const double px = qx[i] + cfg.tau * gx;
        const double py = qy[i] + cfg.tau * gy;
        const double m = std::hypot(px, py);
        const double s = m > 1.0 ? 1.0 / m : 1.0;
        qx[i] = px * s;
        qy[i] = py * s;
      }
    }
  }

  const ImageGrid d = divergence(q);
  ImageGrid u(w, h);
  for (std::size_t i = 0; i < n; ++i) u[i] = g[i] - d[i] / weight;
  return {std::move(u), std::move(q)};
}

double tv_l2_dual_energy(const ImageGrid& g, double weight,
                         const VectorField& q) {
  const ImageGrid d = divergence(q);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = d[i] - weight * g[i];
    acc += r * r;
  }
  return acc / (2.0 * weight * weight);
}

double tv_l2_energy(const ImageGrid& g, double weight, const ImageGrid& u) {
  require_same_shape(g, u, "tv_l2_energy");
  double fid = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g[i] - u[i];
    fid += r * r;
  }
  return 0.5 * weight * fid + total_variation(u);
}

VectorField soft_threshold(const VectorField& p, double threshold) {
  if (!(threshold > 0.0)) {
    throw ConfigError("soft_threshold: threshold must be positive");
  }
  VectorField out(p.width(), p.height());
  auto px = p.dx();
  auto py = p.dy();
  auto ox = out.dx();
  auto oy = out.dy();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = std::hypot(px[i], py[i]);
    if (m <= threshold) continue;
    const double s = (m - threshold) / m;
    ox[i] = s * px[i];
    oy[i] = s * py[i];
  }
  return out;
}

}  // namespace mpg
