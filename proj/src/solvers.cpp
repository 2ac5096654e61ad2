#include "mpg/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace mpg {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kIdentityTolerance = 1e-10;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw ConfigError(std::string(name) + " must be positive and finite");
  }
}

double successive_error(const ImageGrid& next, const ImageGrid& prev) {
  const double diff = norm(next - prev);
  const double base = norm(prev);
  return base > 0.0 ? diff / base : diff;
}

void require_finite(const ImageGrid& x, const char* name, int iter) {
  if (!x.all_finite()) {
    throw SolverError(std::string(name) + " became non-finite at iteration " +
                          std::to_string(iter),
                      iter);
  }
}

struct SplitDiagnostics {
  double min_w;
  double identity_residual;
  double constraint_residual;
};

SplitDiagnostics split_diagnostics(const SolverState& s, double lambda2) {
  SplitDiagnostics d{std::numeric_limits<double>::infinity(), 0.0, 0.0};
  double cons = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    d.min_w = std::min(d.min_w, s.w[i]);
    d.identity_residual =
        std::max(d.identity_residual, std::fabs(s.lambda_mult[i] * s.w[i] - lambda2));
    const double r = s.v[i] * s.w[i] - s.u[i];
    cons += r * r;
  }
  const double un = norm(s.u);
  d.constraint_residual = un > 0.0 ? std::sqrt(cons) / un : std::sqrt(cons);
  return d;
}

// lambda1/2 ||f - v||^2 + lambda2 sum(u - v ln w - v) + <L, vw - u> + a/2 ||vw - u||^2
double split_terms(const SolverState& s, const ImageGrid& f, double lambda1,
                   double lambda2, double penalty, double epsilon) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    if (s.v[i] < epsilon) return std::numeric_limits<double>::infinity();
    const double d = f[i] - s.v[i];
    const double r = s.v[i] * s.w[i] - s.u[i];
    acc += 0.5 * lambda1 * d * d +
           lambda2 * (s.u[i] - s.v[i] * std::log(s.w[i]) - s.v[i]) +
           s.lambda_mult[i] * r + 0.5 * penalty * r * r;
  }
  return acc;
}

ImageGrid v_step_impl(const SolverState& s, const ImageGrid& f,
                      const SolverConfig& cfg, double penalty) {
  require_same_shape(f, s.u, "v_step");
  // At the first iteration Lambda^0 o w^0 = 0, not lambda2, so the term the
  // simplified formula drops is still present.
  const bool simplified = s.iter > 0;
  ImageGrid v(f.width(), f.height());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(s.w[i] > 0.0)) {
      throw DomainError("v_step: nonpositive w at pixel " + std::to_string(i));
    }
    v[i] = closed_form::v_update(f[i], s.u[i], s.w[i], s.lambda_mult[i],
                                 cfg.lambda1, cfg.lambda2, penalty, cfg.epsilon,
                                 simplified);
  }
  return v;
}

ImageGrid w_step_impl(const SolverState& s, const SolverConfig& cfg,
                      double penalty) {
  ImageGrid w(s.u.width(), s.u.height());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = closed_form::w_update(s.u[i], s.v[i], s.lambda_mult[i], cfg.lambda2,
                                 penalty);
  }
  return w;
}

TraceRecord split_record(const SolverState& s, const ImageGrid& f,
                         const SolverConfig& cfg, double se, double lagrangian,
                         const ImageGrid* truth, Clock::time_point start,
                         SolveResult& result) {
  const auto diag = split_diagnostics(s, cfg.lambda2);
  TraceRecord rec;
  rec.iter = s.iter;
  rec.se = se;
  rec.objective = objective_H(s.u, max(s.v, cfg.epsilon), f, cfg.weights());
  rec.lagrangian = lagrangian;
  rec.min_w = diag.min_w;
  rec.identity_residual = diag.identity_residual;
  rec.constraint_residual = diag.constraint_residual;
  if (truth) rec.snr = snr(s.u, *truth);
  rec.seconds = seconds_since(start);

  result.observed_min_w =
      std::min(result.observed_min_w.value_or(diag.min_w), diag.min_w);
  if (diag.identity_residual > kIdentityTolerance * cfg.lambda2) {
    std::ostringstream msg;
    msg << "multiplier identity Lambda o w = lambda2 off by "
        << diag.identity_residual << " at iteration " << s.iter;
    if (result.warnings.empty() ||
        result.warnings.back().rfind("multiplier identity", 0) != 0) {
      result.warnings.push_back(msg.str());
    }
  }
  return rec;
}

void check_inputs(const ImageGrid& f, const ImageGrid* truth) {
  if (f.empty()) throw ShapeError("observed image is empty");
  if (!f.all_finite()) throw DomainError("observed image has non-finite pixels");
  if (truth) require_same_shape(f, *truth, "truth");
}

}  // namespace

void SolverConfig::validate() const {
  require_positive(lambda1, "lambda1");
  require_positive(lambda2, "lambda2");
  require_positive(alpha, "alpha");
  require_positive(alpha_w, "alpha_w");
  require_positive(alpha_p, "alpha_p");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1)");
  }
  if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("xi must lie in (0, 1)");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  chambolle.validate();
  cg.validate();
}

SolverState SolverState::init_bca(const ImageGrid& f) {
  SolverState s;
  s.u = f;
  s.v = f;
  s.w = ImageGrid(f.width(), f.height(), 1.0);
  s.lambda_mult = ImageGrid(f.width(), f.height(), 0.0);
  s.iter = 0;
  return s;
}

SolverState SolverState::init_bcaf(const ImageGrid& f) {
  SolverState s = init_bca(f);
  s.p = VectorField::zeros_like(f);
  s.lambda_p = VectorField::zeros_like(f);
  return s;
}

SolverKind parse_solver_kind(std::string_view name) {
  if (name == "bca") return SolverKind::bca;
  if (name == "bcaf") return SolverKind::bcaf;
  if (name == "tvl2") return SolverKind::tvl2;
  if (name == "tvkl") return SolverKind::tvkl;
  throw ConfigError("unknown solver '" + std::string(name) +
                    "' (expected bca, bcaf, tvl2 or tvkl)");
}

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::bca: return "bca";
    case SolverKind::bcaf: return "bcaf";
    case SolverKind::tvl2: return "tvl2";
    case SolverKind::tvkl: return "tvkl";
  }
  return "?";
}

namespace closed_form {

double v_update(double f, double u, double w, double lam, double lambda1,
                double lambda2, double alpha, double epsilon, bool simplified) {
  double num = lambda1 * f + lambda2 * std::log(w) + alpha * w * u;
  if (!simplified) num += lambda2 - w * lam;
  return std::max(epsilon, num / (lambda1 + alpha * w * w));
}

double w_update(double u, double v, double lam, double lambda2, double alpha) {
  const double a = u - lam / alpha;
  const double b = 4.0 * lambda2 * v / alpha;
  const double s = std::sqrt(a * a + b);
  if (a >= 0.0) return (a + s) / (2.0 * v);
  // a + s = b / (s - a), exact in exact arithmetic and free of cancellation.
  return (2.0 * lambda2 / alpha) / (s - a);
}

double kl_z_update(double u, double mu, double f, double lambda, double rho) {
  const double a = u - mu / rho - lambda / rho;
  const double b = 4.0 * lambda * f / rho;
  const double s = std::sqrt(a * a + b);
  if (a >= 0.0) return 0.5 * (a + s);
  return (2.0 * lambda * f / rho) / (s - a);
}

}  // namespace closed_form

ImageGrid bca_u_step(SolverState& state, const SolverConfig& cfg) {
  ImageGrid target(state.u.width(), state.u.height());
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = state.v[i] * state.w[i] + (state.lambda_mult[i] - cfg.lambda2) / cfg.alpha;
  }
  const VectorField* warm =
      state.chambolle_dual ? &*state.chambolle_dual : nullptr;
  auto res = tv_l2_denoise(target, cfg.alpha, cfg.chambolle, warm);
  state.chambolle_dual = std::move(res.dual);
  return std::move(res.u);
}

ImageGrid bca_v_step(const SolverState& state, const ImageGrid& f,
                     const SolverConfig& cfg) {
  return v_step_impl(state, f, cfg, cfg.alpha);
}

ImageGrid bca_w_step(const SolverState& state, const SolverConfig& cfg) {
  return w_step_impl(state, cfg, cfg.alpha);
}

ImageGrid bca_multiplier_step(const SolverState& state, const SolverConfig& cfg) {
  ImageGrid lam = state.lambda_mult;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    lam[i] += cfg.alpha * (state.v[i] * state.w[i] - state.u[i]);
  }
  return lam;
}

ImageGrid bcaf_u_step(const SolverState& state, const SolverConfig& cfg) {
  if (!state.p || !state.lambda_p) {
    throw SolverError("bcaf_u_step: state carries no p / Lambda_p", state.iter);
  }
  // div(Lambda_p + alpha_p p) = div Lambda_p + alpha_p div p by linearity.
  VectorField combined = add(*state.lambda_p, scale(*state.p, cfg.alpha_p));
  const ImageGrid div_term = divergence(combined);
  ImageGrid rhs(state.u.width(), state.u.height());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    rhs[i] = -cfg.lambda2 + state.lambda_mult[i] +
             cfg.alpha_w * state.v[i] * state.w[i] - div_term[i];
  }
  return solve_screened_poisson(rhs, cfg.alpha_w, cfg.alpha_p, cfg.cg, &state.u);
}

ImageGrid bcaf_v_step(const SolverState& state, const ImageGrid& f,
                      const SolverConfig& cfg) {
  return v_step_impl(state, f, cfg, cfg.alpha_w);
}

ImageGrid bcaf_w_step(const SolverState& state, const SolverConfig& cfg) {
  return w_step_impl(state, cfg, cfg.alpha_w);
}

VectorField bcaf_p_step(const SolverState& state, const SolverConfig& cfg) {
  if (!state.lambda_p) {
    throw SolverError("bcaf_p_step: state carries no Lambda_p", state.iter);
  }
  require_positive(cfg.alpha_p, "alpha_p");
  VectorField shifted = sub(gradient(state.u), scale(*state.lambda_p, 1.0 / cfg.alpha_p));
  return soft_threshold(shifted, 1.0 / cfg.alpha_p);
}

void bcaf_multiplier_step(SolverState& state, const SolverConfig& cfg) {
  for (std::size_t i = 0; i < state.u.size(); ++i) {
    state.lambda_mult[i] += cfg.alpha_w * (state.v[i] * state.w[i] - state.u[i]);
  }
  const VectorField g = gradient(state.u);
  auto lx = state.lambda_p->dx();
  auto ly = state.lambda_p->dy();
  auto px = state.p->dx();
  auto py = state.p->dy();
  for (std::size_t i = 0; i < state.u.size(); ++i) {
    lx[i] += cfg.alpha_p * (px[i] - g.dx()[i]);
    ly[i] += cfg.alpha_p * (py[i] - g.dy()[i]);
  }
}

double bca_lagrangian(const SolverState& state, const ImageGrid& f,
                      const SolverConfig& cfg) {
  return split_terms(state, f, cfg.lambda1, cfg.lambda2, cfg.alpha, cfg.epsilon) +
         total_variation(state.u);
}

double bcaf_lagrangian(const SolverState& state, const ImageGrid& f,
                       const SolverConfig& cfg) {
  double acc =
      split_terms(state, f, cfg.lambda1, cfg.lambda2, cfg.alpha_w, cfg.epsilon);
  const VectorField g = gradient(state.u);
  auto px = state.p->dx();
  auto py = state.p->dy();
  auto lx = state.lambda_p->dx();
  auto ly = state.lambda_p->dy();
  for (std::size_t i = 0; i < state.u.size(); ++i) {
    const double rx = px[i] - g.dx()[i];
    const double ry = py[i] - g.dy()[i];
    acc += std::hypot(px[i], py[i]) + lx[i] * rx + ly[i] * ry +
           0.5 * cfg.alpha_p * (rx * rx + ry * ry);
  }
  return acc;
}

double alpha_lower_bound(double lambda2, double epsilon, double c) {
  if (!(c > 0.0)) return std::numeric_limits<double>::infinity();
  const double a = std::sqrt(2.0) * lambda2 / (c * c * epsilon);
  const double b = lambda2 * (1.0 / c - 1.0) * (1.0 / c - 1.0);
  return std::max(a, b);
}

std::optional<int> first_lagrangian_increase(const std::vector<TraceRecord>& trace,
                                             double rel_tol) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k - 1].iter < 1) continue;
    if (!trace[k].lagrangian || !trace[k - 1].lagrangian) continue;
    const double prev = *trace[k - 1].lagrangian;
    const double cur = *trace[k].lagrangian;
    if (cur > prev + rel_tol * std::fabs(prev)) return trace[k].iter;
  }
  return std::nullopt;
}

SolveResult bca_solve(const ImageGrid& f, const SolverConfig& cfg,
                      const ImageGrid* truth) {
  cfg.validate();
  check_inputs(f, truth);
  const auto start = Clock::now();
  SolveResult result;
  SolverState s = SolverState::init_bca(f);

  while (s.iter < cfg.max_iters) {
    const ImageGrid u_prev = s.u;
    const int k = s.iter + 1;
    try {
      s.u = bca_u_step(s, cfg);
      require_finite(s.u, "u", k);
      s.v = bca_v_step(s, f, cfg);
      s.w = bca_w_step(s, cfg);
      s.lambda_mult = bca_multiplier_step(s, cfg);
    } catch (const SolverError&) {
      throw;
    } catch (const Error& e) {
      throw SolverError("bca iteration " + std::to_string(k) + ": " + e.what(), k);
    }
    s.iter = k;
    const double se = successive_error(s.u, u_prev);
    result.trace.push_back(split_record(s, f, cfg, se, bca_lagrangian(s, f, cfg),
                                        truth, start, result));
    if (se <= cfg.xi) {
      result.converged = true;
      break;
    }
  }

  if (result.observed_min_w) {
    const double bound =
        alpha_lower_bound(cfg.lambda2, cfg.epsilon, *result.observed_min_w);
    if (!(cfg.alpha > bound)) {
      std::ostringstream msg;
      msg << "alpha condition not met: alpha = " << cfg.alpha
          << " <= bound " << bound << " (observed min w = "
          << *result.observed_min_w << "); sufficient decrease not guaranteed";
      result.warnings.push_back(msg.str());
    }
  }
  result.u = s.u;
  result.state = std::move(s);
  return result;
}

SolveResult bcaf_solve(const ImageGrid& f, const SolverConfig& cfg,
                       const ImageGrid* truth) {
  cfg.validate();
  check_inputs(f, truth);
  const auto start = Clock::now();
  SolveResult result;
  SolverState s = SolverState::init_bcaf(f);

  while (s.iter < cfg.max_iters) {
    const ImageGrid u_prev = s.u;
    const int k = s.iter + 1;
    try {
      s.u = bcaf_u_step(s, cfg);
      require_finite(s.u, "u", k);
      s.v = bcaf_v_step(s, f, cfg);
      s.w = bcaf_w_step(s, cfg);
      s.p = bcaf_p_step(s, cfg);
      bcaf_multiplier_step(s, cfg);
    } catch (const ConvergenceError& e) {
      throw SolverError("bcaf iteration " + std::to_string(k) + ": " + e.what(), k);
    } catch (const SolverError&) {
      throw;
    } catch (const Error& e) {
      throw SolverError("bcaf iteration " + std::to_string(k) + ": " + e.what(), k);
    }
    s.iter = k;
    const double se = successive_error(s.u, u_prev);
    result.trace.push_back(split_record(s, f, cfg, se, bcaf_lagrangian(s, f, cfg),
                                        truth, start, result));
    if (se <= cfg.xi) {
      result.converged = true;
      break;
    }
  }
  result.u = s.u;
  result.state = std::move(s);
  return result;
}

SolveResult tv_l2_solve(const ImageGrid& f, double lambda, const SolverConfig& cfg,
                        const ImageGrid* truth) {
  cfg.validate();
  check_inputs(f, truth);
  require_positive(lambda, "lambda");
  const auto start = Clock::now();
  SolveResult result;
  ChambolleConfig chunk = cfg.chambolle;
  chunk.inner_iters = kBaselineChunk;

  ImageGrid u = f;
  std::optional<VectorField> dual;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    auto res = tv_l2_denoise(f, lambda, chunk, dual ? &*dual : nullptr);
    dual = std::move(res.dual);
    require_finite(res.u, "u", k);
    const double se = successive_error(res.u, u);
    u = std::move(res.u);
    TraceRecord rec;
    rec.iter = k;
    rec.se = se;
    rec.objective = tv_l2_energy(f, lambda, u);
    if (truth) rec.snr = snr(u, *truth);
    rec.seconds = seconds_since(start);
    result.trace.push_back(rec);
    if (se <= cfg.xi) {
      result.converged = true;
      break;
    }
  }
  result.u = u;
  result.state.u = std::move(u);
  result.state.chambolle_dual = std::move(dual);
  result.state.iter = static_cast<int>(result.trace.size());
  return result;
}

SolveResult tv_kl_solve(const ImageGrid& f, double lambda, const SolverConfig& cfg,
                        const ImageGrid* truth) {
  cfg.validate();
  check_inputs(f, truth);
  require_positive(lambda, "lambda");
  if (min_entry(f) < 0.0) {
    throw DomainError("tv_kl_solve: observed image must be nonnegative");
  }
  const auto start = Clock::now();
  const double rho = cfg.alpha;
  SolveResult result;

  ImageGrid u = f;
  ImageGrid z = f;
  ImageGrid mu(f.width(), f.height(), 0.0);
  std::optional<VectorField> dual;
  ImageGrid target(f.width(), f.height());

  for (int k = 1; k <= cfg.max_iters; ++k) {
    for (std::size_t i = 0; i < f.size(); ++i) target[i] = z[i] + mu[i] / rho;
    auto res = tv_l2_denoise(target, rho, cfg.chambolle, dual ? &*dual : nullptr);
    dual = std::move(res.dual);
    require_finite(res.u, "u", k);
    const double se = successive_error(res.u, u);
    u = std::move(res.u);
    double cons = 0.0;
    double fid = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      z[i] = closed_form::kl_z_update(u[i], mu[i], f[i], lambda, rho);
      const double r = z[i] - u[i];
      mu[i] += rho * r;
      cons += r * r;
      fid += u[i] - f[i] * std::log(std::max(u[i], kLogFloor));
    }
    TraceRecord rec;
    rec.iter = k;
    rec.se = se;
    rec.objective = lambda * fid + total_variation(u);
    const double un = norm(u);
    rec.constraint_residual = un > 0.0 ? std::sqrt(cons) / un : std::sqrt(cons);
    if (truth) rec.snr = snr(u, *truth);
    rec.seconds = seconds_since(start);
    result.trace.push_back(rec);
    if (se <= cfg.xi) {
      result.converged = true;
      break;
    }
  }
  result.u = u;
  result.state.u = std::move(u);
  result.state.v = std::move(z);
  result.state.lambda_mult = std::move(mu);
  result.state.chambolle_dual = std::move(dual);
  result.state.iter = static_cast<int>(result.trace.size());
  return result;
}

SolveResult run_solver(SolverKind kind, const ImageGrid& f, const SolverConfig& cfg,
                       const ImageGrid* truth) {
  switch (kind) {
    case SolverKind::bca: return bca_solve(f, cfg, truth);
    case SolverKind::bcaf: return bcaf_solve(f, cfg, truth);
    case SolverKind::tvl2: return tv_l2_solve(f, cfg.lambda1, cfg, truth);
    case SolverKind::tvkl: return tv_kl_solve(f, cfg.lambda2, cfg, truth);
  }
  throw ConfigError("unknown solver kind");
}

}  // namespace mpg
