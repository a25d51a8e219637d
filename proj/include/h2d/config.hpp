#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "h2d/common.hpp"
#include "h2d/experiments.hpp"
#include "h2d/geometry.hpp"
#include "h2d/hierarchical.hpp"
#include "h2d/kernels.hpp"

namespace h2d {

// Fully resolved settings of one run. Keys in the flat config file, the
// H2D_* environment variables and the command-line flags share one
// vocabulary (flag --n-max, key n_max, variable H2D_N_MAX).
struct RunConfig {
  std::string subcommand;
  KernelName kernel = KernelName::LogR;
  double a = 0.001;
  std::optional<double> beta;  // rbf solves default to N
  double wavenumber = 0.5;
  Index n = 10000;
  std::vector<Index> sizes;
  Pair pair = Pair::Edge;
  std::optional<Layout> layout;  // edge defaults to half, others to level2
  std::string format = "hodlr2d";  // hodlr2d | hodlr | hmatrix | all
  Index n_max = 500;
  double epsilon = 1e-12;
  double tol = 1e-10;
  int restart = 50;
  int max_iters = 2000;
  int workers = 1;
  std::vector<int> worker_list{2, 4, 8};  // par-bench
  std::uint64_t seed = kDefaultSeed;
  std::string points;  // optional CSV point file
  std::string out;     // output path; stdout when empty
  bool json = false;
  DepthRule depth_rule = DepthRule::MaxOccupancy;
  int trials = 1000;
  int p_max = 30;
  int repeats = 10;
  int grid = 40;
};

// Every key accepted by set_value, in output order.
const std::vector<std::string>& config_keys();

// Parses `value` into the field named by `key`. Throws std::invalid_argument
// on an unknown key or a value of the wrong type.
void set_value(RunConfig& cfg, std::string_view key, std::string_view value);

// Flat `key = value` file, '#' comments. Throws std::runtime_error naming the
// path when it cannot be read, std::invalid_argument on bad content.
// Keys that were assigned are appended to `assigned` when given.
void load_config(RunConfig& cfg, const std::string& path, std::vector<std::string>* assigned = nullptr);
RunConfig load_config(const std::string& path);

// Applies every set H2D_<KEY> variable.
void apply_environment(RunConfig& cfg, std::vector<std::string>* assigned = nullptr);

// (key, canonical text) for every config key, in config_keys() order. Feeding
// the pairs back through set_value reproduces the config.
std::vector<std::pair<std::string, std::string>> describe(const RunConfig& cfg);

// Rbf kernels take beta = N unless beta was set.
KernelSpec kernel_spec(const RunConfig& cfg, Index n);
std::vector<Format> formats(const RunConfig& cfg);
Layout layout_for(const RunConfig& cfg);

}  // namespace h2d
