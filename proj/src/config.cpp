#include "h2d/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace h2d {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw std::invalid_argument("config key '" + std::string(key) + "': expected " + expected + ", got '" +
                              std::string(value) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view text, const char* expected) {
  text = trim(text);
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) bad_value(key, text, expected);
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  return parse_number<double>(key, text, "a number");
}

template <class T>
T parse_positive(std::string_view key, std::string_view text) {
  const auto v = parse_number<T>(key, text, "an integer");
  if (v < 1) bad_value(key, text, "a positive integer");
  return v;
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_positive<T>(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  bad_value(key, text, "a boolean");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "kernel",  "a",       "beta",    "wavenumber", "N",         "sizes",   "pair",          "layout",
      "format",  "n_max",   "epsilon", "tol",        "restart",   "max_iters", "workers",     "worker_counts",
      "seed",    "points",  "out",     "json",       "depth_rule", "trials",  "p_max",         "repeats",
      "grid"};
  return keys;
}

void set_value(RunConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "kernel") {
    const auto k = parse_kernel_name(value);
    if (!k) bad_value(key, value, "one of log_r, one_over_r, hankel0, bessel_y0, thin_plate, rbf_phi1, rbf_phi2, ie");
    cfg.kernel = *k;
  } else if (key == "a") {
    cfg.a = parse_double(key, value);
  } else if (key == "beta") {
    if (value == "auto") cfg.beta.reset();
    else cfg.beta = parse_double(key, value);
  } else if (key == "wavenumber") {
    cfg.wavenumber = parse_double(key, value);
  } else if (key == "N") {
    cfg.n = parse_positive<Index>(key, value);
  } else if (key == "sizes") {
    cfg.sizes = parse_list<Index>(key, value);
  } else if (key == "pair") {
    const auto p = parse_pair(value);
    if (!p) bad_value(key, value, "edge, vertex or far");
    cfg.pair = *p;
  } else if (key == "layout") {
    if (value == "auto") {
      cfg.layout.reset();
    } else {
      const auto l = parse_layout(value);
      if (!l) bad_value(key, value, "half, level2 or auto");
      cfg.layout = *l;
    }
  } else if (key == "format") {
    if (value != "all" && !parse_format(value)) bad_value(key, value, "hodlr2d, hodlr, hmatrix or all");
    cfg.format = std::string(value);
  } else if (key == "n_max") {
    cfg.n_max = parse_positive<Index>(key, value);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_double(key, value);
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) bad_value(key, value, "a tolerance in (0, 1)");
  } else if (key == "tol") {
    cfg.tol = parse_double(key, value);
    if (!(cfg.tol > 0.0)) bad_value(key, value, "a positive tolerance");
  } else if (key == "restart") {
    cfg.restart = parse_positive<int>(key, value);
  } else if (key == "max_iters") {
    cfg.max_iters = parse_positive<int>(key, value);
  } else if (key == "workers") {
    cfg.workers = parse_positive<int>(key, value);
  } else if (key == "worker_counts") {
    cfg.worker_list = parse_list<int>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value, "an unsigned integer");
  } else if (key == "points") {
    cfg.points = std::string(value);
  } else if (key == "out") {
    cfg.out = std::string(value);
  } else if (key == "json") {
    cfg.json = parse_bool(key, value);
  } else if (key == "depth_rule") {
    if (value == "max") cfg.depth_rule = DepthRule::MaxOccupancy;
    else if (value == "mean") cfg.depth_rule = DepthRule::MeanOccupancy;
    else bad_value(key, value, "max or mean");
  } else if (key == "trials") {
    cfg.trials = parse_positive<int>(key, value);
  } else if (key == "p_max") {
    cfg.p_max = parse_positive<int>(key, value);
  } else if (key == "repeats") {
    cfg.repeats = parse_positive<int>(key, value);
  } else if (key == "grid") {
    cfg.grid = parse_positive<int>(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
  }
}

void load_config(RunConfig& cfg, const std::string& path, std::vector<std::string>* assigned) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(text.substr(0, eq));
    try {
      set_value(cfg, key, text.substr(eq + 1));
      if (assigned) assigned->emplace_back(key);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  load_config(cfg, path);
  return cfg;
}

void apply_environment(RunConfig& cfg, std::vector<std::string>* assigned) {
  for (const auto& key : config_keys()) {
    std::string var = "H2D_";
    for (char c : key) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(var.c_str())) {
      try {
        set_value(cfg, key, v);
        if (assigned) assigned->push_back(key);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(var + ": " + e.what());
      }
    }
  }
}

std::vector<std::pair<std::string, std::string>> describe(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& key : config_keys()) {
    std::string v;
    if (key == "kernel") v = std::string(to_string(cfg.kernel));
    else if (key == "a") v = format_double(cfg.a);
    else if (key == "beta") v = cfg.beta ? format_double(*cfg.beta) : "auto";
    else if (key == "wavenumber") v = format_double(cfg.wavenumber);
    else if (key == "N") v = std::to_string(cfg.n);
    else if (key == "sizes") v = join(cfg.sizes);
    else if (key == "pair") v = std::string(to_string(cfg.pair));
    else if (key == "layout") v = cfg.layout ? std::string(to_string(*cfg.layout)) : "auto";
    else if (key == "format") v = cfg.format;
    else if (key == "n_max") v = std::to_string(cfg.n_max);
    else if (key == "epsilon") v = format_double(cfg.epsilon);
    else if (key == "tol") v = format_double(cfg.tol);
    else if (key == "restart") v = std::to_string(cfg.restart);
    else if (key == "max_iters") v = std::to_string(cfg.max_iters);
    else if (key == "workers") v = std::to_string(cfg.workers);
    else if (key == "worker_counts") v = join(cfg.worker_list);
    else if (key == "seed") v = std::to_string(cfg.seed);
    else if (key == "points") v = cfg.points;
    else if (key == "out") v = cfg.out;
    else if (key == "json") v = cfg.json ? "true" : "false";
    else if (key == "depth_rule") v = cfg.depth_rule == DepthRule::MaxOccupancy ? "max" : "mean";
    else if (key == "trials") v = std::to_string(cfg.trials);
    else if (key == "p_max") v = std::to_string(cfg.p_max);
    else if (key == "repeats") v = std::to_string(cfg.repeats);
    else if (key == "grid") v = std::to_string(cfg.grid);
    out.emplace_back(key, std::move(v));
  }
  return out;
}

KernelSpec kernel_spec(const RunConfig& cfg, Index n) {
  KernelSpec spec;
  spec.name = cfg.kernel;
  spec.params.a = cfg.a;
  spec.params.wavenumber = cfg.wavenumber;
  const bool rbf = cfg.kernel == KernelName::RbfPhi1 || cfg.kernel == KernelName::RbfPhi2;
  spec.params.beta = cfg.beta.value_or(rbf ? static_cast<double>(n) : 1.0);
  return spec;
}

std::vector<Format> formats(const RunConfig& cfg) {
  if (cfg.format == "all") return {Format::Hodlr2d, Format::Hodlr, Format::HMatrix};
  const auto f = parse_format(cfg.format);
  if (!f) throw std::invalid_argument("unknown format '" + cfg.format + "'");
  return {*f};
}

Layout layout_for(const RunConfig& cfg) {
  if (cfg.layout) return *cfg.layout;
  return cfg.pair == Pair::Edge ? Layout::Half : Layout::Level2;
}

}  // namespace h2d
