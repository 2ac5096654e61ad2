#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "mpg/cli.hpp"
#include "mpg/error.hpp"
#include "mpg/image_io.hpp"
#include "mpg/metrics.hpp"

namespace mpg {

namespace {

namespace fs = std::filesystem;

// Flags that mirror SolverConfig fields. Values are kept as text so that
// only the flags the user actually passed override lower-precedence layers.
constexpr const char* kConfigFlags[] = {
    "lambda1", "lambda2", "alpha",       "alpha-w",   "alpha-p",     "epsilon",
    "xi",      "max-iters", "inner-iters", "tau",     "cg-tol",      "cg-max-iters"};

struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app) {
    for (const char* name : kConfigFlags) {
      options[name] = app.add_option(std::string("--") + name, values[name],
                                     std::string("override the ") + name +
                                         " solver setting");
    }
  }

  std::vector<std::pair<std::string, std::string>> passed() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const char* name : kConfigFlags) {
      if (options.at(name)->count() > 0) out.emplace_back(name, values.at(name));
    }
    return out;
  }
};

ImageFormat parse_format(const std::string& name, const fs::path& path) {
  if (name.empty()) return format_for_path(path);
  if (name == "pgm8" || name == "pgm") return ImageFormat::pgm8;
  if (name == "pgm16") return ImageFormat::pgm16;
  if (name == "plain") return ImageFormat::plain;
  throw ConfigError("unknown format '" + name + "' (expected pgm8, pgm16 or plain)");
}

std::string join_names(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Mixed Poisson-Gaussian TV denoising (BCA / BCA_f) and baselines",
               "mpg"};
  app.require_subcommand(1);

  // phantom
  auto* phantom = app.add_subcommand("phantom", "write a synthetic clean image");
  std::string ph_kind = "circles", ph_format;
  int ph_width = 64, ph_height = 64, ph_block = 0;
  fs::path ph_out;
  phantom->add_option("--kind", ph_kind, "circles, flat, ramp or checker")
      ->capture_default_str();
  phantom->add_option("--width", ph_width)->capture_default_str();
  phantom->add_option("--height", ph_height)->capture_default_str();
  phantom->add_option("--block", ph_block, "checker block size (0: width/8)");
  phantom->add_option("-o,--output", ph_out)->required();
  phantom->add_option("--format", ph_format, "pgm8, pgm16 or plain");

  // corrupt
  auto* corrupt_cmd = app.add_subcommand("corrupt", "apply mixed Poisson-Gaussian noise");
  fs::path co_in, co_out;
  std::string co_phantom, co_format;
  int co_size = 64;
  NoiseSpec co_noise;
  auto* co_in_opt = corrupt_cmd->add_option("-i,--input", co_in, "clean image");
  auto* co_ph_opt = corrupt_cmd->add_option("--phantom", co_phantom,
                                            "use a phantom instead of --input");
  co_in_opt->excludes(co_ph_opt);
  corrupt_cmd->add_option("--size", co_size, "phantom side length")
      ->capture_default_str();
  corrupt_cmd->add_option("--eta", co_noise.eta)->capture_default_str();
  corrupt_cmd->add_option("--sigma", co_noise.sigma)->capture_default_str();
  corrupt_cmd->add_option("--seed", co_noise.seed)->capture_default_str();
  corrupt_cmd->add_option("-o,--output", co_out)->required();
  corrupt_cmd->add_option("--format", co_format, "pgm8, pgm16 or plain");

  // denoise
  auto* denoise = app.add_subcommand("denoise", "run a solver on a noisy image");
  fs::path de_in, de_out, de_truth, de_trace, de_config;
  std::string de_solver = "bca", de_format;
  double de_lambda = 0.0;
  ConfigFlags de_flags;
  denoise->add_option("-i,--input", de_in)->required();
  denoise->add_option("-o,--output", de_out)->required();
  denoise->add_option("--solver", de_solver, "bca, bcaf, tvl2 or tvkl")
      ->capture_default_str();
  auto* de_lambda_opt =
      denoise->add_option("--lambda", de_lambda, "fidelity weight of tvl2/tvkl");
  auto* de_truth_opt = denoise->add_option("--truth", de_truth, "clean reference");
  auto* de_trace_opt = denoise->add_option("--trace", de_trace, "CSV trace output");
  auto* de_config_opt =
      denoise->add_option("--config", de_config, "key = value solver settings");
  denoise->add_option("--format", de_format, "pgm8, pgm16 or plain");
  de_flags.attach(*denoise);

  // bench
  auto* bench = app.add_subcommand("bench", "run an experiment grid from a spec file");
  fs::path be_spec, be_outdir;
  ConfigFlags be_flags;
  bench->add_option("spec", be_spec, "spec file")->required();
  auto* be_outdir_opt = bench->add_option("--output-dir", be_outdir);
  be_flags.attach(*bench);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (phantom->parsed()) {
      const ImageGrid img = make_phantom(ph_kind, ph_width, ph_height, ph_block);
      write_image(img, ph_out, parse_format(ph_format, ph_out));
      return kExitOk;
    }

    if (corrupt_cmd->parsed()) {
      if (co_in_opt->count() == 0 && co_ph_opt->count() == 0) {
        throw ConfigError("corrupt: give --input or --phantom");
      }
      const ImageGrid clean = co_ph_opt->count()
                                  ? make_phantom(co_phantom, co_size, co_size)
                                  : read_image(co_in);
      const ImageFormat fmt = parse_format(co_format, co_out);
      const ImageGrid noisy = corrupt(clean, co_noise);
      if (fmt != ImageFormat::plain) {
        err << "warning: PGM output clamps noisy values to [0, 1]\n";
      }
      write_image(noisy, co_out, fmt);
      return kExitOk;
    }

    if (denoise->parsed()) {
      const SolverKind kind = parse_solver_kind(de_solver);
      SolverConfig cfg;
      if (de_config_opt->count()) {
        for (const auto& [k, v] : KeyValueFile::load(de_config).entries) {
          if (!set_config_key(cfg, k, v)) {
            throw ConfigError(de_config.string() + ": unknown key '" + k + "'");
          }
        }
      }
      for (const auto& [k, v] : de_flags.passed()) set_config_key(cfg, k, v);
      if (de_lambda_opt->count()) {
        if (kind == SolverKind::tvl2) cfg.lambda1 = de_lambda;
        else if (kind == SolverKind::tvkl) cfg.lambda2 = de_lambda;
        else throw ConfigError("--lambda only applies to tvl2 and tvkl");
      }
      cfg.validate();

      const ImageGrid f = read_image(de_in);
      std::optional<ImageGrid> truth;
      if (de_truth_opt->count()) truth = read_image(de_truth);
      const SolveResult res = run_solver(kind, f, cfg, truth ? &*truth : nullptr);

      write_image(res.u, de_out, parse_format(de_format, de_out));
      if (de_trace_opt->count()) {
        std::vector<std::pair<std::string, std::string>> prov{
            {"command", "denoise"},
            {"solver", std::string(to_string(kind))},
            {"input", de_in.string()},
            {"truth", truth ? de_truth.string() : std::string()}};
        for (auto& kv : describe(cfg)) prov.push_back(std::move(kv));
        std::ofstream t(de_trace, std::ios::trunc);
        if (!t) throw IoError("cannot open '" + de_trace.string() + "' for writing");
        write_trace_csv(t, res.trace, prov);
        if (!t) throw IoError("write to '" + de_trace.string() + "' failed");
      }
      for (const auto& w : res.warnings) err << "warning: " << w << '\n';
      out << "solver=" << to_string(kind)
          << " iterations=" << (res.trace.empty() ? 0 : res.trace.back().iter)
          << " converged=" << (res.converged ? "yes" : "no");
      if (truth) out << " snr=" << format_double(snr(res.u, *truth));
      out << '\n';
      return kExitOk;
    }

    if (bench->parsed()) {
      ExperimentSpec spec =
          parse_experiment_spec(KeyValueFile::load(be_spec), be_flags.passed());
      if (be_outdir_opt->count()) spec.output_dir = be_outdir;
      std::error_code ec;
      fs::create_directories(spec.output_dir, ec);
      if (ec) {
        throw IoError("cannot create '" + spec.output_dir.string() + "': " +
                      ec.message());
      }
      const std::size_t cells = spec.images.size() * spec.noises.size() *
                                spec.solvers.size() * spec.seeds.size() *
                                std::max<std::size_t>(1, spec.sweep_values.size());
      const int threads = resolve_thread_count(cells);
      const auto rows = run_bench(spec, threads);

      for (const auto& [name, writer] :
           {std::pair{"cells.csv", &write_bench_cells},
            std::pair{"summary.csv", &write_bench_summary}}) {
        const fs::path p = spec.output_dir / name;
        std::ofstream o(p, std::ios::trunc);
        if (!o) throw IoError("cannot open '" + p.string() + "' for writing");
        writer(o, rows);
        if (!o) throw IoError("write to '" + p.string() + "' failed");
      }
      const auto failed = std::count_if(rows.begin(), rows.end(),
                                        [](const BenchRow& r) { return !r.ok; });
      std::vector<std::string> images = spec.images;
      out << "bench: " << rows.size() << " cells (" << failed << " failed) over "
          << join_names(images) << " with " << threads << " worker(s); wrote "
          << (spec.output_dir / "cells.csv").string() << " and "
          << (spec.output_dir / "summary.csv").string() << '\n';
      for (const auto& r : rows) {
        if (!r.ok) err << "cell failed (" << r.image << ", " << r.solver
                       << ", seed " << r.seed << "): " << r.error << '\n';
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "mpg: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace mpg
