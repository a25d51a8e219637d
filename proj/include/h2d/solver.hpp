#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "h2d/common.hpp"

namespace h2d {

template <Scalar T>
using LinearMap = std::function<std::vector<T>(std::span<const T>)>;

struct GmresConfig {
  double tolerance = 1e-10;  // on |b - A x|_2 / |b|_2
  int restart = 50;
  int max_iters = 2000;
};

template <Scalar T>
struct SolveReport {
  std::vector<T> solution;
  int iterations = 0;
  int restart = 0;
  std::vector<double> residual_history;  // relative residual estimate, entry 0 is the initial 1
  double final_residual = 0.0;           // true relative residual of the returned solution
  bool converged = false;
  bool breakdown = false;                // Krylov space became invariant
  std::optional<double> forward_error;
  double wall_seconds = 0.0;
};

// Restarted GMRES from a zero initial guess, no preconditioning. Arnoldi uses
// modified Gram-Schmidt with a second pass whenever the first leaves a
// component above 1e-10 relative; the small least-squares problem is reduced
// with Givens rotations.
template <Scalar T>
SolveReport<T> gmres(const LinearMap<T>& apply, std::span<const T> b, const GmresConfig& cfg = {});

inline constexpr Index kDenseOracleMaxN = 40000;

// f = A lambda with the exact kernel matrix; rejects N above kDenseOracleMaxN.
template <Scalar T>
std::vector<T> manufacture_rhs(const EntryFn<T>& entry, std::span<const T> lambda);

template <Scalar T>
double norm2(std::span<const T> x);

// |a - b|_2 / |b|_2 (0 when both vanish).
template <Scalar T>
double relative_error(std::span<const T> a, std::span<const T> b);

}  // namespace h2d
