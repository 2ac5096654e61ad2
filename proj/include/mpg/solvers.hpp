#pragma once

// Solvers for the TV-regularised infimal-convolution model
//
//   min_{u,v} lambda1/2 ||f - v||^2 + lambda2 sum(u - v ln(u/v) - v) + TV(u),
//   subject to v_i >= epsilon,
//
// using the bilinear splitting u = v o w:
//   * bca_solve   - ADMM over (u, v, w; Lambda), u-step is a TV-L2 problem
//                   solved by warm-started Chambolle iterations;
//   * bcaf_solve  - additionally splits p = grad u, so the u-step is a
//                   screened Poisson solve and the p-step a shrinkage;
// plus two single-noise baselines (TV+L2 and TV+KL).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpg/grid.hpp"
#include "mpg/linsolve.hpp"
#include "mpg/metrics.hpp"
#include "mpg/tv_inner.hpp"

namespace mpg {

struct SolverConfig {
  double lambda1 = 10.0;  ///< Gaussian fidelity weight
  double lambda2 = 2.0;  ///< Poisson fidelity weight
  double alpha = 200.0;  ///< BCA penalty
  double alpha_w = 200.0;  ///< BCA_f penalty on v o w = u
  double alpha_p = 20.0;  ///< BCA_f penalty on p = grad u
  double epsilon = 1e-6;  ///< floor of the feasible set v_i >= epsilon
  double xi = 5e-4;  ///< successive-error tolerance
  int max_iters = 1000;
  ChambolleConfig chambolle;
  CGConfig cg;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  ModelWeights weights() const { return {lambda1, lambda2, epsilon}; }
};

/// Iterate tuple of one ADMM run. `lambda_mult` holds Lambda (BCA) or
/// Lambda_w (BCA_f). p / lambda_p are only populated for BCA_f and
/// chambolle_dual only for BCA.
struct SolverState {
  ImageGrid u, v, w, lambda_mult;
  std::optional<VectorField> p, lambda_p, chambolle_dual;
  int iter = 0;

  /// u = f, v = f, w = 1, Lambda = 0.
  static SolverState init_bca(const ImageGrid& f);
  /// As init_bca plus p = 0, Lambda_p = 0.
  static SolverState init_bcaf(const ImageGrid& f);
};

/// One row of per-iteration diagnostics. Optional fields are absent for
/// solvers that do not define them.
struct TraceRecord {
  int iter = 0;
  double se = 0.0;  ///< ||u^{k} - u^{k-1}|| / ||u^{k-1}||
  double objective = 0.0;  ///< model energy (H(u, max(v, eps)) for BCA/BCA_f)
  std::optional<double> lagrangian;
  std::optional<double> min_w;
  std::optional<double> identity_residual;  ///< ||Lambda o w - lambda2||_inf
  std::optional<double> constraint_residual;  ///< ||v o w - u|| / ||u||
  std::optional<double> snr;
  double seconds = 0.0;  ///< wall time since the solve started
};

struct SolveResult {
  ImageGrid u;
  std::vector<TraceRecord> trace;
  bool converged = false;  ///< stopped by SE <= xi
  /// Smallest entry of w seen over all iterations (BCA/BCA_f only).
  std::optional<double> observed_min_w;
  /// Non-fatal diagnostics (alpha condition not met, identity drift, ...).
  std::vector<std::string> warnings;
  SolverState state;
};

enum class SolverKind { bca, bcaf, tvl2, tvkl };
SolverKind parse_solver_kind(std::string_view name);
std::string_view to_string(SolverKind kind);

// Closed-form per-pixel updates.
namespace closed_form {

/// v-step: max(eps, (lambda1 f + lambda2 ln w + [lambda2 - w Lambda] + alpha w u)
///                 / (lambda1 + alpha w^2)).
/// The bracketed term is dropped when `simplified` (valid once
/// Lambda o w = lambda2 holds, i.e. from the second iteration on).
double v_update(double f, double u, double w, double lam, double lambda1,
                double lambda2, double alpha, double epsilon, bool simplified);

/// w-step: positive root of alpha v^2 w^2 + (Lambda v - alpha v u) w - lambda2 v = 0,
/// evaluated without cancellation.
double w_update(double u, double v, double lam, double lambda2, double alpha);

/// TV+KL z-step: positive root of rho z^2 + (lambda + mu - rho u) z - lambda f = 0.
double kl_z_update(double u, double mu, double f, double lambda, double rho);

}  // namespace closed_form

// BCA steps. Each reads the iterates currently held in `state`; the caller
// stores the returned value before invoking the next step, in the order
// u, v, w, multiplier.
ImageGrid bca_u_step(SolverState& state, const SolverConfig& cfg);
ImageGrid bca_v_step(const SolverState& state, const ImageGrid& f,
                     const SolverConfig& cfg);
ImageGrid bca_w_step(const SolverState& state, const SolverConfig& cfg);
ImageGrid bca_multiplier_step(const SolverState& state, const SolverConfig& cfg);

// BCA_f steps, order u, v, w, p, multipliers. The v and w steps are the BCA
// formulas with alpha replaced by alpha_w.
ImageGrid bcaf_u_step(const SolverState& state, const SolverConfig& cfg);
ImageGrid bcaf_v_step(const SolverState& state, const ImageGrid& f,
                      const SolverConfig& cfg);
ImageGrid bcaf_w_step(const SolverState& state, const SolverConfig& cfg);
VectorField bcaf_p_step(const SolverState& state, const SolverConfig& cfg);
void bcaf_multiplier_step(SolverState& state, const SolverConfig& cfg);

/// Augmented Lagrangian of the BCA splitting at `state`.
double bca_lagrangian(const SolverState& state, const ImageGrid& f,
                      const SolverConfig& cfg);
/// Augmented Lagrangian of the BCA_f splitting at `state`.
double bcaf_lagrangian(const SolverState& state, const ImageGrid& f,
                       const SolverConfig& cfg);

/// max(sqrt(2) lambda2 / (c^2 eps), lambda2 (1/c - 1)^2): the penalty above
/// which sufficient decrease of the BCA Lagrangian is guaranteed when w
/// stays above c.
double alpha_lower_bound(double lambda2, double epsilon, double c);

/// First iteration k >= 2 with L_k > L_{k-1} + rel_tol |L_{k-1}|, if any.
std::optional<int> first_lagrangian_increase(const std::vector<TraceRecord>& trace,
                                             double rel_tol);

SolveResult bca_solve(const ImageGrid& f, const SolverConfig& cfg,
                      const ImageGrid* truth = nullptr);
SolveResult bcaf_solve(const ImageGrid& f, const SolverConfig& cfg,
                       const ImageGrid* truth = nullptr);

/// TV+L2 baseline: argmin lambda/2 ||u - f||^2 + TV(u) by warm-started
/// Chambolle in chunks of kBaselineChunk inner steps; one trace row per chunk.
inline constexpr int kBaselineChunk = 100;
SolveResult tv_l2_solve(const ImageGrid& f, double lambda, const SolverConfig& cfg,
                        const ImageGrid* truth = nullptr);

/// TV+KL baseline: argmin lambda sum(u - f ln u) + TV(u) by ADMM on z = u
/// with penalty cfg.alpha. Requires f >= 0 (DomainError otherwise).
SolveResult tv_kl_solve(const ImageGrid& f, double lambda, const SolverConfig& cfg,
                        const ImageGrid* truth = nullptr);

/// Dispatches on `kind`; the baselines take lambda1 (TV+L2) or lambda2
/// (TV+KL) as their fidelity weight.
SolveResult run_solver(SolverKind kind, const ImageGrid& f, const SolverConfig& cfg,
                       const ImageGrid* truth = nullptr);

}  // namespace mpg
