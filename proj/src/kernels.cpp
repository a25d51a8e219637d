#include "h2d/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "h2d/special_functions.hpp"

namespace h2d {

namespace {

struct NameEntry {
  KernelName name;
  std::string_view text;
};

constexpr NameEntry kNames[] = {
    {KernelName::LogR, "log_r"},         {KernelName::OneOverR, "one_over_r"},
    {KernelName::Hankel0, "hankel0"},    {KernelName::BesselY0, "bessel_y0"},
    {KernelName::ThinPlate, "thin_plate"}, {KernelName::RbfPhi1, "rbf_phi1"},
    {KernelName::RbfPhi2, "rbf_phi2"},   {KernelName::IeLippmann, "ie"},
};

[[noreturn]] void coincident(Index i, Index j) {
  throw std::invalid_argument("kernel: coincident points " + std::to_string(i) + " and " + std::to_string(j) +
                              " under a singular kernel");
}

double distance(const Point2D& a, const Point2D& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Complex eval_complex(const KernelSpec& spec, Index i, Index j, std::span<const Point2D> pts) {
  const auto& p = spec.params;
  const auto& xi = pts[static_cast<std::size_t>(i)];
  const double r = distance(xi, pts[static_cast<std::size_t>(j)]);
  if (spec.name == KernelName::Hankel0) {
    if (i == j) return {0.0, 0.0};
    if (r == 0.0) coincident(i, j);
    return hankel0(p.wavenumber * r);
  }
  // IeLippmann
  if (i == j) return {1.0, 0.0};
  if (r == 0.0) coincident(i, j);
  const Complex factor{0.0, -0.25 * p.wavenumber * p.wavenumber};
  return factor * ie_contrast(xi) * hankel0(p.wavenumber * r) * p.weight;
}

double eval_real(const KernelSpec& spec, Index i, Index j, std::span<const Point2D> pts) {
  const auto& p = spec.params;
  const bool diag = i == j;
  const double r = distance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
  switch (spec.name) {
    case KernelName::LogR:
      if (diag) return 0.0;
      if (r == 0.0) coincident(i, j);
      return std::log(r);
    case KernelName::OneOverR:
      if (diag) return 0.0;
      if (r == 0.0) coincident(i, j);
      return 1.0 / r;
    case KernelName::BesselY0:
      if (diag) return 0.0;
      if (r == 0.0) coincident(i, j);
      return bessel_y0(r);
    case KernelName::ThinPlate:
      if (diag || r == 0.0) return 0.0;
      return r * r * std::log(r);
    case KernelName::RbfPhi1:
      if (diag) return p.beta;
      if (r >= p.a) return std::log(r) / std::log(p.a);
      return ((r == 0.0 ? 0.0 : r * std::log(r)) - 1.0) / (p.a * std::log(p.a) - 1.0);
    case KernelName::RbfPhi2:
      if (diag) return p.beta;
      return r >= p.a ? p.a / r : r / p.a;
    case KernelName::Hankel0:
    case KernelName::IeLippmann:
      break;
  }
  throw std::invalid_argument("kernel: " + std::string(to_string(spec.name)) + " is complex-valued");
}

}  // namespace

ScalarKind KernelSpec::scalar_kind() const {
  return name == KernelName::Hankel0 || name == KernelName::IeLippmann ? ScalarKind::Complex : ScalarKind::Real;
}

bool KernelSpec::is_singular() const {
  switch (name) {
    case KernelName::LogR:
    case KernelName::OneOverR:
    case KernelName::BesselY0:
    case KernelName::Hankel0:
    case KernelName::IeLippmann:
      return true;
    default:
      return false;
  }
}

std::string_view to_string(KernelName name) {
  for (const auto& e : kNames)
    if (e.name == name) return e.text;
  return "?";
}

std::optional<KernelName> parse_kernel_name(std::string_view text) {
  for (const auto& e : kNames)
    if (e.text == text) return e.name;
  return std::nullopt;
}

void validate(const KernelSpec& spec) {
  const auto& p = spec.params;
  if (spec.name == KernelName::RbfPhi1 || spec.name == KernelName::RbfPhi2) {
    if (!(p.a > 0.0)) throw std::invalid_argument("kernel: RBF cutoff a must be positive");
    if (spec.name == KernelName::RbfPhi1) {
      if (p.a == 1.0) throw std::invalid_argument("kernel: rbf_phi1 needs ln a != 0");
      if (std::abs(p.a * std::log(p.a) - 1.0) < 1e-12)
        throw std::invalid_argument("kernel: rbf_phi1 needs a ln a - 1 != 0");
    }
  }
  if ((spec.name == KernelName::Hankel0 || spec.name == KernelName::IeLippmann) && !(p.wavenumber > 0.0))
    throw std::invalid_argument("kernel: wavenumber must be positive");
}

template <>
double eval<double>(const KernelSpec& spec, Index i, Index j, std::span<const Point2D> points) {
  return eval_real(spec, i, j, points);
}

template <>
Complex eval<Complex>(const KernelSpec& spec, Index i, Index j, std::span<const Point2D> points) {
  if (spec.scalar_kind() == ScalarKind::Complex) return eval_complex(spec, i, j, points);
  return {eval_real(spec, i, j, points), 0.0};
}

template <Scalar T>
EntryFn<T> kernel_entries(const KernelSpec& spec, std::span<const Point2D> points) {
  validate(spec);
  if constexpr (std::is_same_v<T, double>) {
    if (spec.scalar_kind() == ScalarKind::Complex)
      throw std::invalid_argument("kernel: " + std::string(to_string(spec.name)) + " needs complex scalars");
  }
  return [spec, points](Index i, Index j) { return eval<T>(spec, i, j, points); };
}

template <Scalar T>
DenseBlock<T> assemble_block(const EntryFn<T>& entry, std::span<const Index> rows,
                             std::span<const Index> cols) {
  DenseBlock<T> block{{rows.begin(), rows.end()}, {cols.begin(), cols.end()}, {}};
  block.entries.resize(rows.size() * cols.size());
  std::size_t k = 0;
  for (Index i : rows)
    for (Index j : cols) block.entries[k++] = entry(i, j);
  return block;
}

template EntryFn<double> kernel_entries<double>(const KernelSpec&, std::span<const Point2D>);
template EntryFn<Complex> kernel_entries<Complex>(const KernelSpec&, std::span<const Point2D>);
template DenseBlock<double> assemble_block<double>(const EntryFn<double>&, std::span<const Index>,
                                                   std::span<const Index>);
template DenseBlock<Complex> assemble_block<Complex>(const EntryFn<Complex>&, std::span<const Index>,
                                                     std::span<const Index>);

double ie_contrast(const Point2D& x) { return 1.5 * std::exp(-0.25 * (x.x * x.x + x.y * x.y)); }

Complex ie_forcing(const Point2D& x, double wavenumber) {
  return -wavenumber * wavenumber * ie_contrast(x) * std::exp(Complex{0.0, 0.5 * x.x});
}

Complex IeSystem::entry(Index i, Index j) const {
  if (i == j) return {1.0, 0.0};
  const auto& xi = grid[static_cast<std::size_t>(i)];
  const auto& xj = grid[static_cast<std::size_t>(j)];
  const double r = std::hypot(xi.x - xj.x, xi.y - xj.y);
  if (r == 0.0) coincident(i, j);
  const Complex factor{0.0, -0.25 * wavenumber * wavenumber};
  return factor * ie_contrast(xi) * hankel0(wavenumber * r) * weights[static_cast<std::size_t>(j)];
}

std::vector<Complex> IeSystem::rhs() const {
  std::vector<Complex> f;
  f.reserve(grid.size());
  for (const auto& x : grid) f.push_back(ie_forcing(x, wavenumber));
  return f;
}

EntryFn<Complex> IeSystem::entries() const {
  return [this](Index i, Index j) { return entry(i, j); };
}

IeSystem ie_assemble(std::vector<Point2D> grid, double wavenumber, std::vector<double> weights) {
  if (grid.size() != weights.size()) throw std::invalid_argument("ie_assemble: one weight per grid point required");
  if (!(wavenumber > 0.0)) throw std::invalid_argument("ie_assemble: wavenumber must be positive");
  return IeSystem{std::move(grid), std::move(weights), wavenumber};
}

IeSystem ie_uniform_system(int n, double wavenumber) {
  auto grid = uniform_grid(n, unit_box());
  const double h = 2.0 / n;
  std::vector<double> weights(grid.size(), h * h);
  return ie_assemble(std::move(grid), wavenumber, std::move(weights));
}

}  // namespace h2d
