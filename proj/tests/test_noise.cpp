#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "mpg/error.hpp"
#include "mpg/metrics.hpp"
#include "mpg/noise.hpp"

using namespace mpg;

namespace {

double poisson_pmf(int k, double mean) {
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

// Upper 0.999 quantile of chi-square (Wilson-Hilferty).
double chi2_crit(int dof) {
  const double z = 3.090232;
  const double a = 2.0 / (9.0 * dof);
  return dof * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

double chi_square_poisson(double mean, int draws, std::uint64_t seed, int* dof) {
  std::map<std::uint64_t, int> counts;
  for (int i = 0; i < draws; ++i) {
    PixelRng rng(seed, static_cast<std::uint64_t>(i));
    ++counts[rng.poisson(mean)];
  }
  // Bins with expected count >= 5; the tails are pooled into the end bins.
  const int lo = static_cast<int>(std::max(0.0, std::floor(mean - 5 * std::sqrt(mean))));
  const int hi = static_cast<int>(std::ceil(mean + 5 * std::sqrt(mean)));
  std::vector<double> expected, observed;
  double below = 0.0, below_obs = 0.0;
  for (int k = 0; k < lo; ++k) {
    below += poisson_pmf(k, mean);
    below_obs += counts[k];
  }
  double e_acc = below * draws, o_acc = below_obs, covered = below;
  for (int k = lo; k <= hi; ++k) {
    e_acc += poisson_pmf(k, mean) * draws;
    o_acc += counts[k];
    covered += poisson_pmf(k, mean);
    if (e_acc >= 5.0) {
      expected.push_back(e_acc);
      observed.push_back(o_acc);
      e_acc = o_acc = 0.0;
    }
  }
  double above_obs = 0.0;
  for (const auto& [k, c] : counts) if (static_cast<int>(k) > hi) above_obs += c;
  expected.back() += e_acc + (1.0 - covered) * draws;
  observed.back() += o_acc + above_obs;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const double d = observed[i] - expected[i];
    chi2 += d * d / expected[i];
  }
  *dof = static_cast<int>(expected.size()) - 1;
  return chi2;
}

}  // namespace

TEST_CASE("Poisson sampler passes a chi-square test on both branches") {
  for (double mean : {0.3, 3.0, 9.5, 10.0, 30.0, 400.0}) {
    int dof = 0;
    const double chi2 = chi_square_poisson(mean, 40000, 77, &dof);
    INFO("mean = " << mean << ", chi2 = " << chi2 << ", dof = " << dof);
    CHECK(chi2 < chi2_crit(dof));
  }
}

TEST_CASE("normal sampler moments") {
  double s = 0, s2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    PixelRng rng(5, static_cast<std::uint64_t>(i));
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::fabs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::fabs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("corrupt: Monte Carlo mean and variance over seeds") {
  const ImageGrid clean = make_phantom(PhantomKind::ramp, 16, 8);
  const double eta = 4.0, sigma = 0.1;
  const int seeds = 200;
  std::vector<double> mean(clean.size(), 0.0), sq(clean.size(), 0.0);
  for (int s = 0; s < seeds; ++s) {
    const ImageGrid f = corrupt(clean, {eta, sigma, static_cast<std::uint64_t>(s)});
    for (std::size_t i = 0; i < f.size(); ++i) {
      mean[i] += f[i] / seeds;
      sq[i] += f[i] * f[i] / seeds;
    }
  }
  int outliers = 0;
  double total_z = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double var = clean[i] / eta + sigma * sigma;
    const double z = (mean[i] - clean[i]) / std::sqrt(var / seeds);
    total_z += z;
    if (std::fabs(z) > 4.0) ++outliers;
  }
  CHECK(outliers == 0);
  CHECK(std::fabs(total_z / std::sqrt(static_cast<double>(clean.size()))) < 4.0);
  // pooled variance
  double emp = 0.0, model = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    emp += sq[i] - mean[i] * mean[i];
    model += clean[i] / eta + sigma * sigma;
  }
  CHECK(emp == doctest::Approx(model).epsilon(0.05));
}

TEST_CASE("corrupt: determinism, seeds and limits") {
  const ImageGrid clean = make_phantom(PhantomKind::circles, 32, 32);
  const NoiseSpec a{4.0, 1e-4, 7};
  CHECK(corrupt(clean, a) == corrupt(clean, a));
  CHECK_FALSE(corrupt(clean, a) == corrupt(clean, {4.0, 1e-4, 8}));

  const ImageGrid flat = make_phantom(PhantomKind::flat, 16, 16);
  const ImageGrid f = corrupt(flat, {1e9, 0.0, 1});
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::fabs(f[i] - 0.5) < 1e-3);

  // zero intensity and no Gaussian part gives exact zeros
  const ImageGrid z = corrupt(ImageGrid(4, 4, 0.0), {4.0, 0.0, 1});
  CHECK(z == ImageGrid(4, 4, 0.0));

  CHECK_THROWS_AS(corrupt(clean, {0.0, 0.1, 1}), ConfigError);
  CHECK_THROWS_AS(corrupt(clean, {1.0, -0.1, 1}), ConfigError);
  CHECK_THROWS_AS(corrupt(ImageGrid(2, 2, -0.5), {1.0, 0.1, 1}), DomainError);
}

TEST_CASE("noisy SNR rises with eta") {
  const ImageGrid clean = make_phantom(PhantomKind::circles, 64, 64);
  double prev = -1e9;
  for (double eta : {1.0, 4.0, 16.0, 64.0}) {
    const double s = snr(corrupt(clean, {eta, 1e-4, 1}), clean);
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("phantoms") {
  for (auto kind : {PhantomKind::circles, PhantomKind::flat, PhantomKind::ramp,
                    PhantomKind::checker}) {
    const ImageGrid p = make_phantom(kind, 40, 24);
    CHECK(p.width() == 40);
    CHECK(p.height() == 24);
    CHECK(min_entry(p) >= 0.0);
    CHECK(max_entry(p) <= 1.0);
    CHECK(parse_phantom_kind(to_string(kind)) == kind);
  }
  const ImageGrid c = make_phantom("checker", 16, 16);
  CHECK(c.at(0, 0) == 0.8);
  CHECK(c.at(0, 2) == 0.2);  // default block = width / 8 = 2
  const ImageGrid circles = make_phantom(PhantomKind::circles, 64, 64);
  CHECK(circles.at(0, 0) == 0.1);
  CHECK(circles.at(19, 19) == 1.0);
  CHECK_THROWS_AS(make_phantom(PhantomKind::flat, 4, 16), ConfigError);
  CHECK_THROWS_AS(parse_phantom_kind("lena"), ConfigError);
}
