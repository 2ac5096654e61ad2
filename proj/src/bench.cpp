#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "mpg/cli.hpp"
#include "mpg/error.hpp"
#include "mpg/image_io.hpp"
#include "mpg/metrics.hpp"

namespace mpg {

namespace {

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("seeds: expected a nonnegative integer, got '" + text + "'");
  }
  return v;
}

std::vector<double> parse_numbers(const std::string& value, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number(item, what));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

bool is_phantom_name(const std::string& s) {
  try {
    parse_phantom_kind(s);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

// Sweeping "alpha" moves the BCA_f penalty alpha_w along with it.
void apply_sweep(SolverConfig& cfg, const std::string& key, double value) {
  set_config_key(cfg, key, format_double(value));
  if (key == "alpha") cfg.alpha_w = value;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + '"';
}

std::string opt(const std::optional<double>& x) {
  return x ? format_double(*x) : std::string();
}

}  // namespace

std::vector<double> logspace(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > 0.0) || n < 1) {
    throw ConfigError("logspace: bounds must be positive and n >= 1");
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out[static_cast<std::size_t>(i)] =
        std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  out.front() = lo;
  out.back() = n == 1 ? lo : hi;
  return out;
}

void ExperimentSpec::validate() const {
  if (images.empty()) throw ConfigError("spec: no images");
  if (noises.empty()) throw ConfigError("spec: no noise levels");
  if (solvers.empty()) throw ConfigError("spec: no solvers");
  if (seeds.empty()) throw ConfigError("spec: no seeds");
  if (phantom_size < 8) throw ConfigError("spec: size must be >= 8");
  for (const auto& n : noises) {
    if (!(n.eta > 0.0) || !(n.sigma >= 0.0)) {
      throw ConfigError("spec: eta must be > 0 and sigma >= 0");
    }
  }
  for (const auto& s : solvers) s.cfg.validate();
  if (!sweep_key.empty() && sweep_values.empty()) {
    throw ConfigError("spec: sweep given without values");
  }
}

ExperimentSpec parse_experiment_spec(
    const KeyValueFile& file,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentSpec spec;
  SolverConfig base;
  std::vector<std::string> solver_names{"bca", "bcaf"};
  std::vector<double> etas{4.0}, sigmas{1e-4};
  std::vector<std::pair<std::string, std::string>> scoped;
  spec.images = {"circles"};

  for (const auto& [key, value] : file.entries) {
    if (key == "images") spec.images = split_list(value);
    else if (key == "size") spec.phantom_size = static_cast<int>(parse_number(value, key));
    else if (key == "eta") etas = parse_numbers(value, key);
    else if (key == "sigma") sigmas = parse_numbers(value, key);
    else if (key == "solvers") solver_names = split_list(value);
    else if (key == "output_dir") spec.output_dir = value;
    else if (key == "sweep") spec.sweep_key = value;
    else if (key == "sweep_values") spec.sweep_values = parse_numbers(value, key);
    else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& s : split_list(value)) spec.seeds.push_back(parse_seed(s));
    } else if (key.find('.') != std::string::npos) {
      scoped.emplace_back(key, value);
    } else if (!set_config_key(base, key, value)) {
      throw ConfigError("spec: unknown key '" + key + "'");
    }
  }

  if (!spec.sweep_key.empty()) {
    SolverConfig probe;
    if (!set_config_key(probe, spec.sweep_key, "1")) {
      throw ConfigError("spec: cannot sweep unknown key '" + spec.sweep_key + "'");
    }
    if (spec.sweep_values.empty() && spec.sweep_key == "alpha") {
      spec.sweep_values = logspace(20.0, 2000.0, 5);
    }
  }

  for (double eta : etas) {
    for (double sigma : sigmas) spec.noises.push_back({eta, sigma, 0});
  }

  for (const auto& name : solver_names) {
    SolverEntry entry{parse_solver_kind(name), base};
    for (const auto& [key, value] : scoped) {
      const auto dot = key.find('.');
      if (key.substr(0, dot) != name) continue;
      const std::string field = key.substr(dot + 1);
      if (field == "lambda" && entry.kind == SolverKind::tvl2) {
        entry.cfg.lambda1 = parse_number(value, key);
      } else if (field == "lambda" && entry.kind == SolverKind::tvkl) {
        entry.cfg.lambda2 = parse_number(value, key);
      } else if (!set_config_key(entry.cfg, field, value)) {
        throw ConfigError("spec: unknown key '" + key + "'");
      }
    }
    for (const auto& [key, value] : overrides) {
      if (!set_config_key(entry.cfg, key, value)) {
        throw ConfigError("unknown override '" + key + "'");
      }
    }
    spec.solvers.push_back(std::move(entry));
  }
  for (const auto& [key, value] : scoped) {
    const std::string prefix = key.substr(0, key.find('.'));
    if (std::find(solver_names.begin(), solver_names.end(), prefix) ==
        solver_names.end()) {
      throw ConfigError("spec: '" + key + "' names a solver not in 'solvers'");
    }
  }
  spec.validate();
  return spec;
}

int resolve_thread_count(std::size_t cells) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MPG_THREADS"); env && *env) {
    const double v = parse_number(env, "MPG_THREADS");
    if (v < 1.0 || v != std::floor(v)) {
      throw ConfigError("MPG_THREADS must be a positive integer");
    }
    n = static_cast<int>(std::min(v, 1024.0));
  }
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(n, cells)));
}

std::vector<BenchRow> run_bench(const ExperimentSpec& spec, int threads) {
  spec.validate();

  struct Source {
    ImageGrid clean;
    std::string error;
  };
  std::vector<Source> sources;
  for (const auto& img : spec.images) {
    Source src;
    try {
      src.clean = is_phantom_name(img)
                      ? make_phantom(img, spec.phantom_size, spec.phantom_size)
                      : read_image(std::filesystem::path(img));
    } catch (const Error& e) {
      src.error = e.what();
    }
    sources.push_back(std::move(src));
  }

  struct Cell {
    std::size_t image, noise, solver;
    std::uint64_t seed;
    std::optional<double> sweep;
  };
  std::vector<Cell> cells;
  const std::vector<std::optional<double>> sweeps =
      spec.sweep_values.empty()
          ? std::vector<std::optional<double>>{std::nullopt}
          : std::vector<std::optional<double>>(spec.sweep_values.begin(),
                                               spec.sweep_values.end());
  for (std::size_t i = 0; i < spec.images.size(); ++i)
    for (std::size_t n = 0; n < spec.noises.size(); ++n)
      for (std::size_t s = 0; s < spec.solvers.size(); ++s)
        for (const auto& sw : sweeps)
          for (std::uint64_t seed : spec.seeds) cells.push_back({i, n, s, seed, sw});

  std::vector<BenchRow> rows(cells.size());
  const auto run_cell = [&](std::size_t idx) {
    const Cell& c = cells[idx];
    BenchRow& row = rows[idx];
    const SolverEntry& entry = spec.solvers[c.solver];
    row.image = spec.images[c.image];
    row.eta = spec.noises[c.noise].eta;
    row.sigma = spec.noises[c.noise].sigma;
    row.solver = std::string(to_string(entry.kind));
    row.seed = c.seed;
    row.sweep_value = c.sweep;
    try {
      const Source& src = sources[c.image];
      if (!src.error.empty()) throw IoError(src.error);
      NoiseSpec noise = spec.noises[c.noise];
      noise.seed = c.seed;
      const ImageGrid f = corrupt(src.clean, noise);
      SolverConfig cfg = entry.cfg;
      if (c.sweep) apply_sweep(cfg, spec.sweep_key, *c.sweep);
      const auto start = std::chrono::steady_clock::now();
      SolveResult res = run_solver(entry.kind, f, cfg);
      row.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start).count();
      row.snr_noisy = snr(f, src.clean);
      row.snr = snr(res.u, src.clean);
      const SSIMConfig sc;
      if (src.clean.width() >= sc.window && src.clean.height() >= sc.window) {
        row.ssim = ssim(res.u, src.clean, sc);
      }
      row.iterations = res.trace.empty() ? 0 : res.trace.back().iter;
      row.converged = res.converged;
      row.min_w = res.observed_min_w;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };

  threads = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) run_cell(i);
      });
    }
  }
  return rows;
}

void write_bench_cells(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "image,eta,sigma,solver,seed,sweep_value,status,snr_noisy,snr,ssim,"
         "iterations,converged,min_w,seconds,error\n";
  char secs[32];
  for (const auto& r : rows) {
    std::snprintf(secs, sizeof secs, "%.6f", r.seconds);
    out << csv_quote(r.image) << ',' << format_double(r.eta) << ','
        << format_double(r.sigma) << ',' << r.solver << ',' << r.seed << ','
        << opt(r.sweep_value) << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      out << format_double(r.snr_noisy) << ',' << format_double(r.snr) << ','
          << opt(r.ssim) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
          << ',' << opt(r.min_w) << ',' << secs << ',';
    } else {
      out << ",,,,,,,";
    }
    out << csv_quote(r.error) << '\n';
  }
}

void write_bench_summary(std::ostream& out, const std::vector<BenchRow>& rows) {
  struct Group {
    const BenchRow* first;
    int cells = 0, failed = 0, with_ssim = 0;
    double snr_noisy = 0, snr = 0, ssim = 0, iterations = 0, seconds = 0;
  };
  std::vector<Group> groups;
  const auto same = [](const BenchRow& a, const BenchRow& b) {
    return a.image == b.image && a.eta == b.eta && a.sigma == b.sigma &&
           a.solver == b.solver && a.sweep_value == b.sweep_value;
  };
  for (const auto& r : rows) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const Group& g) { return same(*g.first, r); });
    if (it == groups.end()) {
      groups.push_back({&r});
      it = groups.end() - 1;
    }
    ++it->cells;
    if (!r.ok) {
      ++it->failed;
      continue;
    }
    it->snr_noisy += r.snr_noisy;
    it->snr += r.snr;
    it->iterations += r.iterations;
    it->seconds += r.seconds;
    if (r.ssim) {
      it->ssim += *r.ssim;
      ++it->with_ssim;
    }
  }
  out << "image,eta,sigma,solver,sweep_value,cells,failed,mean_snr_noisy,"
         "mean_snr,mean_ssim,mean_iterations,mean_seconds\n";
  char secs[32];
  for (const auto& g : groups) {
    const BenchRow& r = *g.first;
    out << csv_quote(r.image) << ',' << format_double(r.eta) << ','
        << format_double(r.sigma) << ',' << r.solver << ',' << opt(r.sweep_value)
        << ',' << g.cells << ',' << g.failed << ',';
    const int ok = g.cells - g.failed;
    if (ok > 0) {
      std::snprintf(secs, sizeof secs, "%.6f", g.seconds / ok);
      out << format_double(g.snr_noisy / ok) << ',' << format_double(g.snr / ok)
          << ','
          << (g.with_ssim ? format_double(g.ssim / g.with_ssim) : std::string())
          << ',' << format_double(g.iterations / ok) << ',' << secs << '\n';
    } else {
      out << ",,,,\n";
    }
  }
}

}  // namespace mpg
