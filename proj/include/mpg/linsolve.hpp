#pragma once

#include "mpg/grid.hpp"

namespace mpg {

struct CGConfig {
  double tol = 1e-8;  ///< relative residual target ||r|| <= tol ||rhs||
  int max_iters = 200;

  void validate() const;
};

struct CGReport {
  int iterations = 0;
  double initial_relative_residual = 0.0;
  double final_relative_residual = 0.0;
};

/// Applies (alpha_w I - alpha_p laplacian) matrix-free.
ImageGrid apply_screened_poisson(const ImageGrid& u, double alpha_w,
                                 double alpha_p);

/// Solves (alpha_w I - alpha_p laplacian) u = rhs by unpreconditioned
/// conjugate gradients. The operator is SPD for alpha_w > 0, alpha_p >= 0.
/// Starts from `warm_start` (zero when null). On success the returned u
/// satisfies the relative residual bound, which is re-checked against the
/// explicitly recomputed residual before returning.
/// Throws ConvergenceError when max_iters is exhausted.
ImageGrid solve_screened_poisson(const ImageGrid& rhs, double alpha_w,
                                 double alpha_p, const CGConfig& cfg,
                                 const ImageGrid* warm_start = nullptr,
                                 CGReport* report = nullptr);

}  // namespace mpg
