#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "mpg/cli.hpp"
#include "mpg/error.hpp"

namespace mpg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string normalise_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

int parse_int(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (v != std::floor(v) || std::fabs(v) > 1e9) {
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const SolverError*>(&e)) return kExitSolver;
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e)) {
    return kExitData;
  }
  return kExitSolver;
}

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  const char* last = first + t.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

bool set_config_key(SolverConfig& cfg, const std::string& raw_key,
                    const std::string& value) {
  const std::string key = normalise_key(raw_key);
  if (key == "lambda1") cfg.lambda1 = parse_number(value, key);
  else if (key == "lambda2") cfg.lambda2 = parse_number(value, key);
  else if (key == "alpha") cfg.alpha = parse_number(value, key);
  else if (key == "alpha_w") cfg.alpha_w = parse_number(value, key);
  else if (key == "alpha_p") cfg.alpha_p = parse_number(value, key);
  else if (key == "epsilon") cfg.epsilon = parse_number(value, key);
  else if (key == "xi") cfg.xi = parse_number(value, key);
  else if (key == "max_iters") cfg.max_iters = parse_int(value, key);
  else if (key == "inner_iters") cfg.chambolle.inner_iters = parse_int(value, key);
  else if (key == "tau") cfg.chambolle.tau = parse_number(value, key);
  else if (key == "cg_tol") cfg.cg.tol = parse_number(value, key);
  else if (key == "cg_max_iters") cfg.cg.max_iters = parse_int(value, key);
  else return false;
  return true;
}

std::vector<std::pair<std::string, std::string>> describe(const SolverConfig& cfg) {
  return {{"lambda1", format_double(cfg.lambda1)},
          {"lambda2", format_double(cfg.lambda2)},
          {"alpha", format_double(cfg.alpha)},
          {"alpha_w", format_double(cfg.alpha_w)},
          {"alpha_p", format_double(cfg.alpha_p)},
          {"epsilon", format_double(cfg.epsilon)},
          {"xi", format_double(cfg.xi)},
          {"max_iters", std::to_string(cfg.max_iters)},
          {"inner_iters", std::to_string(cfg.chambolle.inner_iters)},
          {"tau", format_double(cfg.chambolle.tau)},
          {"cg_tol", format_double(cfg.cg.tol)},
          {"cg_max_iters", std::to_string(cfg.cg.max_iters)}};
}

KeyValueFile KeyValueFile::parse(std::istream& in, const std::string& origin) {
  KeyValueFile file;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    auto it = std::find_if(file.entries.begin(), file.entries.end(),
                           [&](const auto& kv) { return kv.first == key; });
    if (it != file.entries.end()) {
      it->second = value;
    } else {
      file.entries.emplace_back(std::move(key), std::move(value));
    }
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return parse(in, path.string());
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  for (char c : value) {
    if (c == ',') {
      if (auto t = trim(item); !t.empty()) out.push_back(t);
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace,
                     const std::vector<std::pair<std::string, std::string>>& provenance) {
  for (const auto& [k, v] : provenance) out << "# " << k << '=' << v << '\n';
  out << kTraceHeader << '\n';
  const auto opt = [](const std::optional<double>& x) {
    return x ? format_double(*x) : std::string();
  };
  char secs[32];
  for (const auto& r : trace) {
    std::snprintf(secs, sizeof secs, "%.6f", r.seconds);
    out << r.iter << ',' << format_double(r.se) << ',' << format_double(r.objective)
        << ',' << opt(r.lagrangian) << ',' << opt(r.min_w) << ','
        << opt(r.identity_residual) << ',' << opt(r.constraint_residual) << ','
        << opt(r.snr) << ',' << secs << '\n';
  }
}

}  // namespace mpg
