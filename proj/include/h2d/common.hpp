#pragma once

#include <complex>
#include <concepts>
#include <cstdint>
#include <functional>
#include <type_traits>

namespace h2d {

using Index = std::int64_t;
using Complex = std::complex<double>;

template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Complex>;

template <class T>
inline constexpr bool is_complex_v = std::is_same_v<T, Complex>;

// Entry accessor over global (original) point indices.
template <Scalar T>
using EntryFn = std::function<T(Index, Index)>;

inline double abs2(double v) { return v * v; }
inline double abs2(const Complex& v) { return std::norm(v); }

inline double conj_if(double v) { return v; }
inline Complex conj_if(const Complex& v) { return std::conj(v); }

// Contiguous slice of a tree's permuted index array.
struct IndexRange {
  Index offset = 0;
  Index count = 0;

  Index end() const { return offset + count; }
  bool empty() const { return count == 0; }
};

}  // namespace h2d
