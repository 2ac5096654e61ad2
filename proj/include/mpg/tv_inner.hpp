#pragma once

#include <optional>
#include <utility>

#include "mpg/grid.hpp"

namespace mpg {

struct ChambolleConfig {
  int inner_iters = 10;
  /// Dual step. Must not exceed 1/4 (||grad||^2 < 8 on the Neumann grid).
  double tau = 0.25;

  void validate() const;
};

struct TvL2Result {
  ImageGrid u;
  VectorField dual;
};

/// Approximately solves
///   argmin_u (weight/2) ||g - u||^2 + sum_i |grad u_i|
/// by projected gradient on the dual:
///   q <- P_{|q|<=1}(q + tau * grad(div q - weight * g)),  u = g - div(q)/weight.
/// `warm_dual` seeds q (zero field when absent); the final q is returned so
/// the caller can warm-start the next call.
TvL2Result tv_l2_denoise(const ImageGrid& g, double weight,
                         const ChambolleConfig& cfg,
                         const VectorField* warm_dual = nullptr);

/// Dual objective ||div q - weight*g||^2 / (2 weight^2) minimised by the
/// projection iteration above (monotone for tau <= 1/4).
double tv_l2_dual_energy(const ImageGrid& g, double weight, const VectorField& q);

/// Primal objective (weight/2)||g - u||^2 + TV(u).
double tv_l2_energy(const ImageGrid& g, double weight, const ImageGrid& u);

/// Per-pixel shrinkage of 2-vectors: Thresh_t(p) = max(0, |p| - t) p/|p|,
/// with p/|p| := 0 at p = 0. Throws ConfigError if t <= 0.
VectorField soft_threshold(const VectorField& p, double threshold);

}  // namespace mpg
