#include "h2d/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "h2d/matvec.hpp"

namespace h2d {

namespace {

template <Scalar T>
T dot_conj(const std::vector<T>& a, const std::vector<T>& b) {
  T s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += conj_if(a[i]) * b[i];
  return s;
}

template <Scalar T>
std::vector<T> checked_apply(const LinearMap<T>& apply, std::span<const T> x) {
  auto y = apply(x);
  if (y.size() != x.size())
    throw std::invalid_argument("gmres: operator returned a vector of length " + std::to_string(y.size()) +
                                ", expected " + std::to_string(x.size()));
  return y;
}

// Rotation [c s; -conj(s) c] with real c that zeroes b in (a, b).
template <Scalar T>
void make_rotation(const T& a, const T& b, double& c, T& s) {
  const double abs_a = std::abs(a);
  const double t = std::hypot(abs_a, std::abs(b));
  if (t == 0.0) {
    c = 1.0;
    s = T{};
  } else if (abs_a == 0.0) {
    c = 0.0;
    s = conj_if(b) / std::abs(b);
  } else {
    c = abs_a / t;
    s = (a / abs_a) * conj_if(b) / t;
  }
}

template <Scalar T>
void apply_rotation(double c, const T& s, T& x, T& y) {
  const T nx = c * x + s * y;
  y = -conj_if(s) * x + c * y;
  x = nx;
}

}  // namespace

template <Scalar T>
double norm2(std::span<const T> x) {
  double s = 0.0;
  for (const auto& v : x) s += abs2(v);
  return std::sqrt(s);
}

template <Scalar T>
double relative_error(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: length mismatch");
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += abs2(a[i] - b[i]);
    ref += abs2(b[i]);
  }
  if (ref == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / ref);
}

template <Scalar T>
SolveReport<T> gmres(const LinearMap<T>& apply, std::span<const T> b, const GmresConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("gmres: tolerance must be positive");
  if (cfg.restart < 1) throw std::invalid_argument("gmres: restart must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  const auto m = static_cast<std::size_t>(cfg.restart);

  SolveReport<T> rep;
  rep.restart = cfg.restart;
  rep.solution.assign(n, T{});
  rep.residual_history.push_back(1.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    rep.converged = true;
    return rep;
  }

  std::vector<std::vector<T>> basis(m + 1);
  std::vector<std::vector<T>> hess(m + 1, std::vector<T>(m, T{}));  // hess[i][j]
  std::vector<double> cs(m);
  std::vector<T> sn(m);
  std::vector<T> g(m + 1);

  std::vector<T> r(b.begin(), b.end());  // x = 0 on entry
  while (true) {
    const double beta = norm2<T>(r);
    rep.final_residual = beta / bnorm;
    if (rep.final_residual < cfg.tolerance) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= cfg.max_iters || rep.breakdown) break;

    basis[0] = r;
    for (auto& v : basis[0]) v /= beta;
    std::fill(g.begin(), g.end(), T{});
    g[0] = beta;

    std::size_t k = 0;  // columns built this cycle
    for (std::size_t j = 0; j < m && rep.iterations < cfg.max_iters; ++j) {
      auto w = checked_apply<T>(apply, basis[j]);
      ++rep.iterations;
      for (std::size_t i = 0; i <= j; ++i) {
        hess[i][j] = dot_conj(basis[i], w);
        for (std::size_t p = 0; p < n; ++p) w[p] -= hess[i][j] * basis[i][p];
      }
      double wnorm = norm2<T>(w);
      // Second Gram-Schmidt pass if the first left a visible component behind.
      double leak = 0.0;
      std::vector<T> corr(j + 1);
      for (std::size_t i = 0; i <= j; ++i) {
        corr[i] = dot_conj(basis[i], w);
        leak = std::max(leak, std::abs(corr[i]));
      }
      if (wnorm > 0.0 && leak > 1e-10 * wnorm) {
        for (std::size_t i = 0; i <= j; ++i) {
          hess[i][j] += corr[i];
          for (std::size_t p = 0; p < n; ++p) w[p] -= corr[i] * basis[i][p];
        }
        wnorm = norm2<T>(w);
      }
      hess[j + 1][j] = wnorm;

      for (std::size_t i = 0; i < j; ++i) apply_rotation(cs[i], sn[i], hess[i][j], hess[i + 1][j]);
      make_rotation(hess[j][j], hess[j + 1][j], cs[j], sn[j]);
      apply_rotation(cs[j], sn[j], hess[j][j], hess[j + 1][j]);
      apply_rotation(cs[j], sn[j], g[j], g[j + 1]);
      k = j + 1;
      rep.residual_history.push_back(std::abs(g[j + 1]) / bnorm);

      if (wnorm == 0.0 || wnorm <= 1e-14 * std::abs(hess[j][j])) {
        rep.breakdown = true;
        break;
      }
      basis[j + 1] = std::move(w);
      for (auto& v : basis[j + 1]) v /= wnorm;
      if (rep.residual_history.back() < cfg.tolerance) break;
    }

    // Back substitution for the k x k upper-triangular system.
    std::vector<T> y(k);
    for (std::size_t i = k; i-- > 0;) {
      T acc = g[i];
      for (std::size_t c = i + 1; c < k; ++c) acc -= hess[i][c] * y[c];
      y[i] = acc / hess[i][i];
    }
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t p = 0; p < n; ++p) rep.solution[p] += y[i] * basis[i][p];

    const auto ax = checked_apply<T>(apply, rep.solution);
    for (std::size_t p = 0; p < n; ++p) r[p] = b[p] - ax[p];
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

template <Scalar T>
std::vector<T> manufacture_rhs(const EntryFn<T>& entry, std::span<const T> lambda) {
  if (static_cast<Index>(lambda.size()) > kDenseOracleMaxN)
    throw std::invalid_argument("manufacture_rhs: N = " + std::to_string(lambda.size()) +
                                " exceeds the dense oracle limit " + std::to_string(kDenseOracleMaxN));
  return dense_matvec<T>(entry, lambda);
}

#define H2D_INSTANTIATE(T)                                                                          \
  template double norm2<T>(std::span<const T>);                                                     \
  template double relative_error<T>(std::span<const T>, std::span<const T>);                        \
  template SolveReport<T> gmres<T>(const LinearMap<T>&, std::span<const T>, const GmresConfig&);    \
  template std::vector<T> manufacture_rhs<T>(const EntryFn<T>&, std::span<const T>);

H2D_INSTANTIATE(double)
H2D_INSTANTIATE(Complex)

#undef H2D_INSTANTIATE

}  // namespace h2d
