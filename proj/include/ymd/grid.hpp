#pragma once

// Periodic grid and component-major lattice containers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "ymd/error.hpp"
#include "ymd/liealg.hpp"

#if defined(_OPENMP)
#include <omp.h>
#define YMD_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")
#else
#define YMD_PARALLEL_FOR
#endif

namespace ymd {

/// Caps the number of worker threads used by lattice sweeps.
inline void set_thread_count(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline constexpr std::size_t n_colors = 2;

/// N^3 periodic box of side L. Site index is x + N (y + N z).
class Grid {
 public:
  explicit Grid(int n = 16, double length = 2.0 * std::numbers::pi) : n_(n), length_(length) {
    if (n < 8 || (n & (n - 1)) != 0)
      throw Error(ErrorCode::invalid_argument, "grid N must be a power of two >= 8, got " + std::to_string(n));
    if (!(length > 0.0) || !std::isfinite(length))
      throw Error(ErrorCode::invalid_argument, "grid L must be positive");
  }

  int n() const { return n_; }
  double length() const { return length_; }
  std::size_t size() const { return std::size_t(n_) * n_ * n_; }
  double spacing() const { return length_ / n_; }
  double volume() const { return length_ * length_ * length_; }
  double k0() const { return 2.0 * std::numbers::pi / length_; }

  std::size_t index(int x, int y, int z) const { return std::size_t(x) + std::size_t(n_) * (y + std::size_t(n_) * z); }
  void coords(std::size_t idx, int& x, int& y, int& z) const {
    x = int(idx % n_);
    y = int((idx / n_) % n_);
    z = int(idx / (std::size_t(n_) * n_));
  }
  double coordinate(int i) const { return i * spacing(); }

  /// FFT index -> signed mode number in [-N/2, N/2-1].
  int signed_mode(int i) const { return i < n_ / 2 ? i : i - n_; }
  /// Index of the mode -m.
  int mirror(int i) const { return i == 0 ? 0 : n_ - i; }
  double wavenumber(int i) const { return k0() * signed_mode(i); }
  /// Wavenumber used by differential operators: the Nyquist component is
  /// dropped so every symbol is odd under m -> -m on the lattice.
  double kappa(int i) const { return i == n_ / 2 ? 0.0 : wavenumber(i); }

  friend bool operator==(const Grid& a, const Grid& b) { return a.n_ == b.n_ && a.length_ == b.length_; }

 private:
  int n_;
  double length_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b))
    throw Error(ErrorCode::grid_mismatch, std::string(what) + ": N=" + std::to_string(a.n()) + " vs N=" + std::to_string(b.n()));
}

/// C lattice functions stored one after another (component-major).
template <class T, std::size_t C>
class LatticeField {
 public:
  using value_type = T;
  static constexpr std::size_t components = C;

  LatticeField() : LatticeField(Grid()) {}
  explicit LatticeField(const Grid& g) : grid_(g), data_(C * g.size(), T{}) {}

  const Grid& grid() const { return grid_; }
  std::size_t sites() const { return grid_.size(); }

  T* component(std::size_t c) { return data_.data() + c * grid_.size(); }
  const T* component(std::size_t c) const { return data_.data() + c * grid_.size(); }
  T& operator()(std::size_t c, std::size_t site) { return data_[c * grid_.size() + site]; }
  const T& operator()(std::size_t c, std::size_t site) const { return data_[c * grid_.size() + site]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool all_finite() const {
    for (const auto& v : data_)
      if (!std::isfinite(std::abs(v))) return false;
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, double(std::abs(v)));
    return m;
  }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  LatticeField& operator+=(const LatticeField& o) {
    require_same_grid(grid_, o.grid_, "field addition");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  LatticeField& operator-=(const LatticeField& o) {
    require_same_grid(grid_, o.grid_, "field subtraction");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  template <class S>
  LatticeField& operator*=(S s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  /// this += s * o
  template <class S>
  LatticeField& axpy(S s, const LatticeField& o) {
    require_same_grid(grid_, o.grid_, "field axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    return *this;
  }

  friend LatticeField operator+(LatticeField a, const LatticeField& b) { return a += b; }
  friend LatticeField operator-(LatticeField a, const LatticeField& b) { return a -= b; }
  template <class S>
  friend LatticeField operator*(S s, LatticeField a) { return a *= s; }

 private:
  Grid grid_;
  std::vector<T> data_;
};

using ScalarField = LatticeField<double, 1>;
using ComplexScalarField = LatticeField<cplx, 1>;
/// Lie coefficient a at component a.
using LieScalarField = LatticeField<double, 3>;
using ComplexLieScalarField = LatticeField<cplx, 3>;
/// Spatial index j, Lie coefficient a at component 3 j + a.
using LieVectorField = LatticeField<double, 9>;
using ComplexLieVectorField = LatticeField<cplx, 9>;
/// Color i, spinor index s at component 4 i + s.
using SpinorField = LatticeField<cplx, 8>;

inline constexpr std::size_t vc(std::size_t j, std::size_t a) { return 3 * j + a; }
inline constexpr std::size_t sc(std::size_t color, std::size_t spin) { return 4 * color + spin; }

inline LieElement lie_at(const LieScalarField& f, std::size_t site) {
  return LieElement(f(0, site), f(1, site), f(2, site));
}
inline LieElement lie_at(const LieVectorField& f, std::size_t j, std::size_t site) {
  return LieElement(f(vc(j, 0), site), f(vc(j, 1), site), f(vc(j, 2), site));
}
inline void set_lie(LieScalarField& f, std::size_t site, const LieElement& v) {
  for (std::size_t a = 0; a < 3; ++a) f(a, site) = v[a];
}
inline void set_lie(LieVectorField& f, std::size_t j, std::size_t site, const LieElement& v) {
  for (std::size_t a = 0; a < 3; ++a) f(vc(j, a), site) = v[a];
}

template <std::size_t C>
LatticeField<double, C> real_part(const LatticeField<cplx, C>& f) {
  LatticeField<double, C> r(f.grid());
  for (std::size_t i = 0; i < f.data().size(); ++i) r.data()[i] = f.data()[i].real();
  return r;
}

template <std::size_t C>
LatticeField<cplx, C> complexify(const LatticeField<double, C>& f) {
  LatticeField<cplx, C> r(f.grid());
  for (std::size_t i = 0; i < f.data().size(); ++i) r.data()[i] = f.data()[i];
  return r;
}

/// Max absolute entry of a - b.
template <class T, std::size_t C>
double max_diff(const LatticeField<T, C>& a, const LatticeField<T, C>& b) {
  require_same_grid(a.grid(), b.grid(), "max_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, double(std::abs(a.data()[i] - b.data()[i])));
  return m;
}

}  // namespace ymd
