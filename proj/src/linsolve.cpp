#include "mpg/linsolve.hpp"

#include <cmath>
#include <sstream>

namespace mpg {

void CGConfig::validate() const {
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("cg: tol must lie in (0, 1)");
  if (max_iters < 1) throw ConfigError("cg: max_iters must be >= 1");
}

ImageGrid apply_screened_poisson(const ImageGrid& u, double alpha_w,
                                 double alpha_p) {
  ImageGrid out = laplacian(u);
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = alpha_w * u[i] - alpha_p * out[i];
  }
  return out;
}

ImageGrid solve_screened_poisson(const ImageGrid& rhs, double alpha_w,
                                 double alpha_p, const CGConfig& cfg,
                                 const ImageGrid* warm_start,
                                 CGReport* report) {
  cfg.validate();
  if (!(alpha_w > 0.0)) {
    throw ConfigError("screened poisson: alpha_w must be positive");
  }
  if (!(alpha_p >= 0.0)) {
    throw ConfigError("screened poisson: alpha_p must be nonnegative");
  }

  ImageGrid u = warm_start ? *warm_start : ImageGrid::zeros_like(rhs);
  require_same_shape(rhs, u, "solve_screened_poisson");
  const std::size_t n = rhs.size();
  const double rhs_norm = norm(rhs);

  CGReport local;
  if (alpha_p == 0.0) {
    for (std::size_t i = 0; i < n; ++i) u[i] = rhs[i] / alpha_w;
    if (report) *report = local;
    return u;
  }
  if (rhs_norm == 0.0) {
    u = ImageGrid::zeros_like(rhs);
    if (report) *report = local;
    return u;
  }
  const double target = cfg.tol * rhs_norm;

  ImageGrid r = rhs - apply_screened_poisson(u, alpha_w, alpha_p);
  double rr = inner(r, r);
  local.initial_relative_residual = std::sqrt(rr) / rhs_norm;
  ImageGrid p = r;

  int it = 0;
  while (std::sqrt(rr) > target) {
    if (it == cfg.max_iters) {
      std::ostringstream msg;
      msg << "conjugate gradient did not converge in " << cfg.max_iters
          << " iterations (relative residual " << std::sqrt(rr) / rhs_norm
          << ", target " << cfg.tol << ")";
      throw ConvergenceError(msg.str(), std::sqrt(rr) / rhs_norm, it);
    }
    const ImageGrid ap = apply_screened_poisson(p, alpha_w, alpha_p);
    const double step = rr / inner(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += step * p[i];
      r[i] -= step * ap[i];
    }
    const double rr_next = inner(r, r);
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
    ++it;
  }

  // The recursive residual can drift from the true one; certify explicitly.
  const ImageGrid true_r = rhs - apply_screened_poisson(u, alpha_w, alpha_p);
  const double true_rel = norm(true_r) / rhs_norm;
  if (true_rel > cfg.tol) {
    std::ostringstream msg;
    msg << "conjugate gradient residual certificate failed (" << true_rel
        << " > " << cfg.tol << ")";
    throw ConvergenceError(msg.str(), true_rel, it);
  }
  local.iterations = it;
  local.final_relative_residual = true_rel;
  if (report) *report = local;
  return u;
}

}  // namespace mpg
