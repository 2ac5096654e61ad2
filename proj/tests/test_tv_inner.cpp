#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "mpg/error.hpp"
#include "mpg/tv_inner.hpp"
#include "oracles.hpp"

using namespace mpg;

namespace {

// Brute-force minimiser of (weight/2)||g - u||^2 + TV(u) over a 1x4 signal,
// by coarse-to-fine search on a 4-D lattice.
std::array<double, 4> brute_force_1x4(const std::array<double, 4>& g, double weight) {
  auto energy = [&](const std::array<double, 4>& u) {
    double e = 0.0;
    for (int i = 0; i < 4; ++i) e += 0.5 * weight * (u[i] - g[i]) * (u[i] - g[i]);
    for (int i = 0; i < 3; ++i) e += std::fabs(u[i + 1] - u[i]);
    return e;
  };
  std::array<double, 4> centre = g;
  double half = 1.0;
  constexpr int n = 17;
  while (half > 1e-9) {
    const double step = 2.0 * half / (n - 1);
    std::array<double, 4> best = centre;
    double best_e = energy(centre);
    std::array<double, 4> u;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            u = {centre[0] - half + a * step, centre[1] - half + b * step,
                 centre[2] - half + c * step, centre[3] - half + d * step};
            const double e = energy(u);
            if (e < best_e) {
              best_e = e;
              best = u;
            }
          }
    centre = best;
    half = 2.0 * step;
  }
  return centre;
}

double primal(const ImageGrid& g, double weight, const ImageGrid& u) {
  return tv_l2_energy(g, weight, u);
}

// Fenchel dual value; a lower bound on the primal for every feasible q.
double dual_value(const ImageGrid& g, double weight, const VectorField& q) {
  return 0.5 * weight * inner(g, g) - weight * tv_l2_dual_energy(g, weight, q);
}

}  // namespace

TEST_CASE("1x4 step signal: known minimiser") {
  const ImageGrid g(4, 1, {0, 0, 1, 1});
  ChambolleConfig cfg;
  cfg.inner_iters = 5000;
  const auto res = tv_l2_denoise(g, 2.0, cfg);
  const double expect[] = {0.25, 0.25, 0.75, 0.75};
  const auto brute = brute_force_1x4({0, 0, 1, 1}, 2.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(res.u[i] == doctest::Approx(expect[i]).epsilon(1e-8));
    CHECK(std::fabs(brute[i] - expect[i]) < 1e-4);
  }
}

TEST_CASE("random 1x4 signals agree with brute force") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  ChambolleConfig cfg;
  cfg.inner_iters = 20000;
  for (int rep = 0; rep < 4; ++rep) {
    const std::array<double, 4> g{d(rng), d(rng), d(rng), d(rng)};
    const double weight = 1.0 + 4.0 * d(rng);
    const auto res = tv_l2_denoise(ImageGrid(4, 1, {g[0], g[1], g[2], g[3]}), weight, cfg);
    const auto brute = brute_force_1x4(g, weight);
    for (int i = 0; i < 4; ++i) CHECK(std::fabs(res.u[i] - brute[i]) < 1e-4);
  }
}

TEST_CASE("dual iterates stay feasible and the dual energy decreases") {
  std::mt19937_64 rng(11);
  const ImageGrid g = oracle::random_grid(20, 13, rng, 0.0, 1.0);
  ChambolleConfig one;
  one.inner_iters = 1;
  VectorField q = VectorField::zeros_like(g);
  double prev = tv_l2_dual_energy(g, 3.0, q);
  for (int k = 0; k < 300; ++k) {
    q = tv_l2_denoise(g, 3.0, one, &q).dual;
    CHECK(q.max_magnitude() <= 1.0 + 1e-12);
    const double e = tv_l2_dual_energy(g, 3.0, q);
    CHECK(e <= prev * (1.0 + 1e-14));
    prev = e;
  }
}

TEST_CASE("weak duality holds and the gap closes") {
  std::mt19937_64 rng(5);
  const ImageGrid g = oracle::random_grid(16, 16, rng, 0.0, 1.0);
  const double weight = 4.0;
  ChambolleConfig cfg;
  VectorField q = VectorField::zeros_like(g);
  double gap = 0.0;
  for (int block = 0; block < 100; ++block) {
    cfg.inner_iters = 50;
    auto res = tv_l2_denoise(g, weight, cfg, &q);
    q = res.dual;
    gap = primal(g, weight, res.u) - dual_value(g, weight, q);
    CHECK(gap >= -1e-9);
  }
  CHECK(gap <= 1e-4 * primal(g, weight, g));
}

TEST_CASE("optimality: u = g - div q / weight with q aligned to -grad u") {
  std::mt19937_64 rng(8);
  const ImageGrid g = oracle::random_grid(10, 10, rng, 0.0, 1.0);
  ChambolleConfig cfg;
  cfg.inner_iters = 20000;
  const auto res = tv_l2_denoise(g, 2.0, cfg);
  const VectorField gu = gradient(res.u);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = std::hypot(gu.dx()[i], gu.dy()[i]);
    if (m < 1e-3) continue;  // flat pixel: any |q| <= 1 is admissible
    worst = std::max(worst, std::fabs(res.dual.dx()[i] + gu.dx()[i] / m));
    worst = std::max(worst, std::fabs(res.dual.dy()[i] + gu.dy()[i] / m));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("warm start continues the same iteration") {
  std::mt19937_64 rng(2);
  const ImageGrid g = oracle::random_grid(9, 7, rng, 0.0, 1.0);
  ChambolleConfig ten;
  ChambolleConfig twenty;
  twenty.inner_iters = 20;
  const auto a = tv_l2_denoise(g, 1.5, ten);
  const auto b = tv_l2_denoise(g, 1.5, ten, &a.dual);
  const auto c = tv_l2_denoise(g, 1.5, twenty);
  CHECK(b.u == c.u);
  CHECK(b.dual == c.dual);
}

TEST_CASE("configuration checks") {
  const ImageGrid g(4, 4, 0.5);
  ChambolleConfig bad;
  bad.tau = 0.3;
  CHECK_THROWS_AS(tv_l2_denoise(g, 1.0, bad), ConfigError);
  CHECK_THROWS_AS(tv_l2_denoise(g, 0.0, ChambolleConfig{}), ConfigError);
  bad = {};
  bad.inner_iters = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("soft threshold") {
  const VectorField p(2, 1, {3.0, 0.3}, {4.0, -0.4});
  const VectorField s = soft_threshold(p, 1.0);
  CHECK(s.dx()[0] == doctest::Approx(2.4));
  CHECK(s.dy()[0] == doctest::Approx(3.2));
  CHECK(s.dx()[1] == 0.0);
  CHECK(s.dy()[1] == 0.0);
  CHECK_THROWS_AS(soft_threshold(p, 0.0), ConfigError);

  // Matches the prox of t|x| found by grid search, and is nonexpansive.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const double t = 0.05 + std::fabs(d(rng));
    const VectorField a(1, 1, {d(rng)}, {d(rng)});
    const VectorField b(1, 1, {d(rng)}, {d(rng)});
    const auto sa = soft_threshold(a, t);
    const auto sb = soft_threshold(b, t);
    const auto [ox, oy] = oracle::grid_argmin_2d(
        [&](double x, double y) {
          const double ex = x - a.dx()[0], ey = y - a.dy()[0];
          return t * std::hypot(x, y) + 0.5 * (ex * ex + ey * ey);
        },
        a.dx()[0], a.dy()[0], 4.0);
    CHECK(std::fabs(sa.dx()[0] - ox) < 1e-6);
    CHECK(std::fabs(sa.dy()[0] - oy) < 1e-6);
    CHECK(norm(sub(sa, sb)) <= norm(sub(a, b)) + 1e-12);
  }
}
