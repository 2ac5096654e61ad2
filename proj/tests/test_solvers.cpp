#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mpg/error.hpp"
#include "mpg/noise.hpp"
#include "mpg/solvers.hpp"
#include "oracles.hpp"

using namespace mpg;
namespace cf = mpg::closed_form;

namespace {

SolverConfig small_cfg() {
  SolverConfig cfg;
  cfg.max_iters = 60;
  return cfg;
}

ImageGrid small_problem(std::uint64_t seed) {
  const ImageGrid clean = make_phantom(PhantomKind::circles, 16, 16);
  return corrupt(clean, {4.0, 1e-4, seed});
}

}  // namespace

TEST_CASE("v-step minimises the v-part of the Lagrangian") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double f = -0.2 + 1.7 * d(rng), u = 0.01 + 2 * d(rng), w = 0.05 + 3 * d(rng);
    const double lam = -50 + 100 * d(rng), l1 = 0.5 + 100 * d(rng), l2 = 0.5 + 50 * d(rng);
    const double a = 1 + 1000 * d(rng), eps = rep % 2 ? 1e-6 : 0.05;
    auto part = [&](double v) {
      const double r = v * w - u;
      return 0.5 * l1 * (f - v) * (f - v) + l2 * (u - v * std::log(w) - v) + lam * r +
             0.5 * a * r * r;
    };
    const double oracle_v = oracle::grid_argmin(part, eps, 1e3);
    CHECK(std::fabs(cf::v_update(f, u, w, lam, l1, l2, a, eps, false) - oracle_v) <
          1e-6 * std::max(1.0, oracle_v));
    // With lam = l2 / w the dropped bracket is zero.
    CHECK(cf::v_update(f, u, w, l2 / w, l1, l2, a, eps, true) ==
          doctest::Approx(cf::v_update(f, u, w, l2 / w, l1, l2, a, eps, false)).epsilon(1e-12));
  }
}

TEST_CASE("w-step: positive root, stable where the textbook formula cancels") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double u = 0.01 + 2 * d(rng), v = 0.01 + 2 * d(rng);
    const double lam = -50 + 100 * d(rng), l2 = 0.5 + 50 * d(rng), a = 1 + 1000 * d(rng);
    auto part = [&](double w) {
      const double r = v * w - u;
      return -l2 * v * std::log(w) + lam * r + 0.5 * a * r * r;
    };
    const double w = cf::w_update(u, v, lam, l2, a);
    CHECK(w > 0.0);
    const double ow = oracle::grid_argmin_positive(part, 1e-12, 1e6);
    CHECK(std::fabs(w - ow) < 1e-6 * std::max(1.0, ow));
    // root of the quadratic
    const double q = a * v * v * w * w + (lam * v - a * v * u) * w - l2 * v;
    CHECK(std::fabs(q) < 1e-9 * (a * v * v * w * w + std::fabs(lam * v * w) + a * v * u * w + l2 * v));
  }
  // Large negative linear coefficient: compare with extended precision.
  const long double u = 1e-3L, v = 1.0L, lam = 1e6L, l2 = 1e-3L, a = 1.0L;
  const long double A = u - lam / a;
  const long double exact = (A + std::sqrt(A * A + 4 * l2 * v / a)) / (2 * v);
  const double w = cf::w_update(1e-3, 1.0, 1e6, 1e-3, 1.0);
  CHECK(w == doctest::Approx(static_cast<double>(exact)).epsilon(1e-6));
}

TEST_CASE("z-step of the TV+KL baseline solves its optimality condition") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double u = -0.5 + 2 * d(rng), mu = -20 + 40 * d(rng), f = 2 * d(rng);
    const double lambda = 0.1 + 20 * d(rng), rho = 1 + 500 * d(rng);
    auto part = [&](double z) {
      return lambda * (z - f * std::log(z)) + mu * (z - u) + 0.5 * rho * (z - u) * (z - u);
    };
    const double z = cf::kl_z_update(u, mu, f, lambda, rho);
    CHECK(z >= 0.0);
    if (f > 0.0) {
      const double oz = oracle::grid_argmin_positive(part, 1e-12, 1e6);
      CHECK(std::fabs(z - oz) < 1e-6 * std::max(1.0, oz));
    }
  }
}

TEST_CASE("first v-step keeps the bracket the simplified form drops") {
  const ImageGrid f = small_problem(1);
  SolverConfig cfg = small_cfg();
  SolverState s = SolverState::init_bca(f);
  s.u = bca_u_step(s, cfg);
  const ImageGrid v = bca_v_step(s, f, cfg);
  for (std::size_t i = 0; i < f.size(); ++i) {
    // w = 1, Lambda = 0 at iteration 1.
    const double expect = std::max(
        cfg.epsilon, (cfg.lambda1 * f[i] + cfg.lambda2 + cfg.alpha * s.u[i]) /
                         (cfg.lambda1 + cfg.alpha));
    CHECK(v[i] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("one BCA iteration establishes Lambda o w = lambda2") {
  const ImageGrid f = small_problem(2);
  const SolverConfig cfg = small_cfg();
  SolverState s = SolverState::init_bca(f);
  s.u = bca_u_step(s, cfg);
  s.v = bca_v_step(s, f, cfg);
  s.w = bca_w_step(s, cfg);
  s.lambda_mult = bca_multiplier_step(s, cfg);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(std::fabs(s.lambda_mult[i] * s.w[i] - cfg.lambda2) <= 1e-10 * cfg.lambda2);
  }
}

TEST_CASE("p-step is the shrinkage of grad u - Lambda_p / alpha_p") {
  const ImageGrid f = small_problem(3);
  const SolverConfig cfg = small_cfg();
  SolverState s = SolverState::init_bcaf(f);
  std::mt19937_64 rng(4);
  s.lambda_p = oracle::random_field(16, 16, rng);
  const VectorField p = bcaf_p_step(s, cfg);
  const VectorField g = gradient(s.u);
  for (std::size_t i = 0; i < f.size(); i += 17) {
    const double x = g.dx()[i] - s.lambda_p->dx()[i] / cfg.alpha_p;
    const double y = g.dy()[i] - s.lambda_p->dy()[i] / cfg.alpha_p;
    const auto [ox, oy] = oracle::grid_argmin_2d(
        [&](double a, double b) {
          return std::hypot(a, b) + 0.5 * cfg.alpha_p * ((a - x) * (a - x) + (b - y) * (b - y));
        },
        x, y, 2.0);
    CHECK(std::fabs(p.dx()[i] - ox) < 1e-6);
    CHECK(std::fabs(p.dy()[i] - oy) < 1e-6);
  }
}

TEST_CASE("BCA_f u-step solves its normal equation") {
  const ImageGrid f = small_problem(5);
  SolverConfig cfg = small_cfg();
  cfg.cg.tol = 1e-12;
  cfg.cg.max_iters = 1000;
  SolverState s = SolverState::init_bcaf(f);
  std::mt19937_64 rng(6);
  s.lambda_p = oracle::random_field(16, 16, rng);
  s.p = oracle::random_field(16, 16, rng);
  s.lambda_mult = oracle::random_grid(16, 16, rng);
  const ImageGrid u = bcaf_u_step(s, cfg);
  // Dense oracle on the 256x256 system.
  const auto a = oracle::dense_screened_poisson(16, 16, cfg.alpha_w, cfg.alpha_p);
  std::vector<double> rhs(f.size());
  const ImageGrid dl = divergence(*s.lambda_p);
  const ImageGrid dp = divergence(*s.p);
  for (std::size_t i = 0; i < f.size(); ++i) {
    rhs[i] = -cfg.lambda2 + s.lambda_mult[i] + cfg.alpha_w * s.v[i] * s.w[i] - dl[i] -
             cfg.alpha_p * dp[i];
  }
  const auto x = oracle::cholesky_solve(a, rhs);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::fabs(u[i] - x[i]) < 1e-8);
}

TEST_CASE("solves: positivity, identity, stopping and determinism") {
  const ImageGrid clean = make_phantom(PhantomKind::circles, 24, 24);
  const ImageGrid f = corrupt(clean, {4.0, 1e-4, 9});
  SolverConfig cfg;
  for (auto kind : {SolverKind::bca, SolverKind::bcaf}) {
    const SolveResult r = run_solver(kind, f, cfg, &clean);
    REQUIRE_FALSE(r.trace.empty());
    CHECK(r.converged);
    CHECK(r.trace.back().se <= cfg.xi);
    CHECK(r.trace.back().constraint_residual.value() <= 10 * cfg.xi);
    CHECK(min_entry(r.state.v) >= cfg.epsilon);
    CHECK(min_entry(r.state.w) > 0.0);
    for (const auto& rec : r.trace) {
      CHECK(rec.identity_residual.value() <= 1e-10 * cfg.lambda2);
      CHECK(rec.snr.has_value());
      CHECK(rec.min_w.value() >= r.observed_min_w.value());
    }
    CHECK(r.trace.back().snr.value() > snr(f, clean) + 3.0);
    const SolveResult again = run_solver(kind, f, cfg, &clean);
    CHECK(again.u == r.u);
  }
}

TEST_CASE("max_iters bounds the trace") {
  const ImageGrid f = small_problem(10);
  SolverConfig cfg;
  cfg.max_iters = 7;
  cfg.xi = 1e-15;
  const SolveResult r = bca_solve(f, cfg);
  CHECK(r.trace.size() == 7);
  CHECK_FALSE(r.converged);
  CHECK(r.trace.back().iter == 7);
}

TEST_CASE("alpha condition is reported, not enforced") {
  const ImageGrid f = small_problem(11);
  SolverConfig cfg = small_cfg();
  const SolveResult r = bca_solve(f, cfg);
  bool flagged = false;
  for (const auto& w : r.warnings) flagged |= w.find("alpha condition") != std::string::npos;
  CHECK(flagged);
  CHECK(alpha_lower_bound(2.0, 1e-6, 0.5) ==
        doctest::Approx(std::max(std::sqrt(2.0) * 2.0 / (0.25 * 1e-6), 2.0)));
  CHECK(alpha_lower_bound(1.0, 0.5, 0.1) == doctest::Approx(std::max(std::sqrt(2.0) / 0.005, 81.0)));
  CHECK(std::isinf(alpha_lower_bound(1.0, 0.5, 0.0)));
}

TEST_CASE("first_lagrangian_increase") {
  std::vector<TraceRecord> t(4);
  const double l[] = {9.0, 8.0, 8.0, 7.0};
  for (int i = 0; i < 4; ++i) {
    t[i].iter = i + 1;
    t[i].lagrangian = l[i];
  }
  CHECK_FALSE(first_lagrangian_increase(t, 1e-8).has_value());
  t[2].lagrangian = 8.0 + 1e-9;  // inside the relative tolerance
  CHECK_FALSE(first_lagrangian_increase(t, 1e-8).has_value());
  t[2].lagrangian = 8.5;
  CHECK(first_lagrangian_increase(t, 1e-8) == 3);
}

TEST_CASE("baselines") {
  const ImageGrid clean = make_phantom(PhantomKind::circles, 24, 24);
  const ImageGrid f = corrupt(clean, {4.0, 0.0, 4});
  SolverConfig cfg;
  // Huge fidelity weight: output is the data.
  const SolveResult big = tv_l2_solve(f, 1e9, cfg);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::fabs(big.u[i] - f[i]) < 1e-6);

  const SolveResult l2 = tv_l2_solve(f, 3.0, cfg, &clean);
  CHECK(l2.converged);
  CHECK(l2.trace.back().snr.value() > snr(f, clean));

  const SolveResult kl = tv_kl_solve(f, 4.0, cfg, &clean);
  CHECK(kl.converged);
  CHECK(kl.trace.back().snr.value() > snr(f, clean));
  CHECK_THROWS_AS(tv_kl_solve(corrupt(clean, {4.0, 0.1, 4}), 4.0, cfg), DomainError);
}

TEST_CASE("input and configuration errors") {
  const ImageGrid f = small_problem(12);
  SolverConfig cfg;
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(bca_solve(f, cfg), ConfigError);
  cfg = {};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(bcaf_solve(f, cfg), ConfigError);
  ImageGrid bad = f;
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bca_solve(bad, SolverConfig{}), DomainError);
  const ImageGrid wrong(8, 8, 0.5);
  CHECK_THROWS_AS(bca_solve(f, SolverConfig{}, &wrong), ShapeError);
  CHECK_THROWS_AS(parse_solver_kind("admm"), ConfigError);
}
