#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "h2d/common.hpp"
#include "h2d/geometry.hpp"

namespace h2d {

enum class KernelName { LogR, OneOverR, Hankel0, BesselY0, ThinPlate, RbfPhi1, RbfPhi2, IeLippmann };
enum class ScalarKind { Real, Complex };

struct KernelParams {
  double a = 0.001;          // RBF cutoff radius
  double beta = 1.0;         // RBF diagonal weight
  double wavenumber = 0.5;   // Hankel / integral-equation wavenumber
  double weight = 1.0;       // integral-equation quadrature weight
};

struct KernelSpec {
  KernelName name = KernelName::LogR;
  KernelParams params;

  ScalarKind scalar_kind() const;
  // Kernels that blow up at r = 0 reject coincident off-diagonal points.
  bool is_singular() const;
};

// CLI spelling: log_r, one_over_r, hankel0, bessel_y0, thin_plate, rbf_phi1, rbf_phi2, ie.
std::string_view to_string(KernelName name);
std::optional<KernelName> parse_kernel_name(std::string_view text);

// Throws std::invalid_argument for unusable parameters (a <= 0, a ln a - 1 ~ 0).
void validate(const KernelSpec& spec);

// Matrix entry (i, j). Real kernels are promoted when T is complex; asking for
// a real entry of a complex kernel throws std::invalid_argument, as do
// coincident points under a singular kernel.
template <Scalar T>
T eval(const KernelSpec& spec, Index i, Index j, std::span<const Point2D> points);

template <Scalar T>
EntryFn<T> kernel_entries(const KernelSpec& spec, std::span<const Point2D> points);

template <Scalar T>
struct DenseBlock {
  std::vector<Index> rows;
  std::vector<Index> cols;
  std::vector<T> entries;  // row-major |rows| x |cols|

  Index n_rows() const { return static_cast<Index>(rows.size()); }
  Index n_cols() const { return static_cast<Index>(cols.size()); }
  const T& operator()(Index p, Index q) const {
    return entries[static_cast<std::size_t>(p * n_cols() + q)];
  }
};

template <Scalar T>
DenseBlock<T> assemble_block(const EntryFn<T>& entry, std::span<const Index> rows,
                             std::span<const Index> cols);

template <Scalar T>
DenseBlock<T> assemble_block(const KernelSpec& spec, std::span<const Index> rows,
                             std::span<const Index> cols, std::span<const Point2D> points) {
  return assemble_block<T>(kernel_entries<T>(spec, points), rows, cols);
}

// Nystrom system for psi - (i k^2 / 4) q(x) int H0(k|x-y|) psi(y) dy = -k^2 q(x) exp(0.5 i x_1)
// on a quadrature grid. The self term is dropped, so the diagonal is exactly 1.
struct IeSystem {
  std::vector<Point2D> grid;
  std::vector<double> weights;
  double wavenumber = 0.5;

  Complex entry(Index i, Index j) const;
  std::vector<Complex> rhs() const;
  EntryFn<Complex> entries() const;
};

double ie_contrast(const Point2D& x);                    // q(x) = 1.5 exp(-|x|^2 / 4)
Complex ie_forcing(const Point2D& x, double wavenumber);  // -k^2 q(x) exp(0.5 i x_1)

IeSystem ie_assemble(std::vector<Point2D> grid, double wavenumber, std::vector<double> weights);

// n x n cell-centred grid on [-1,1]^2 with equal weights (2/n)^2.
IeSystem ie_uniform_system(int n, double wavenumber);

}  // namespace h2d
