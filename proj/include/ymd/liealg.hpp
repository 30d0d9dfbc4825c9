#pragma once

// Pointwise algebra: su(2) / SU(2) in the basis T_a = -(i/2) sigma_a, and the
// Dirac matrix constants. Everything here is a pure value type.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "ymd/error.hpp"

namespace ymd {

using cplx = std::complex<double>;
inline constexpr cplx I_unit{0.0, 1.0};

template <std::size_t N>
struct SquareMatrix {
  std::array<std::array<cplx, N>, N> m{};

  static constexpr SquareMatrix identity() {
    SquareMatrix r;
    for (std::size_t i = 0; i < N; ++i) r.m[i][i] = 1.0;
    return r;
  }

  cplx& operator()(std::size_t i, std::size_t j) { return m[i][j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return m[i][j]; }

  SquareMatrix adjoint() const {
    SquareMatrix r;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) r.m[i][j] = std::conj(m[j][i]);
    return r;
  }

  cplx trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < N; ++i) t += m[i][i];
    return t;
  }

  /// Largest absolute entry.
  double max_abs() const {
    double r = 0.0;
    for (const auto& row : m)
      for (const auto& v : row) r = std::max(r, std::abs(v));
    return r;
  }

  SquareMatrix& operator+=(const SquareMatrix& o) {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) m[i][j] += o.m[i][j];
    return *this;
  }
  SquareMatrix& operator-=(const SquareMatrix& o) {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) m[i][j] -= o.m[i][j];
    return *this;
  }
  SquareMatrix& operator*=(cplx s) {
    for (auto& row : m)
      for (auto& v : row) v *= s;
    return *this;
  }

  friend SquareMatrix operator+(SquareMatrix a, const SquareMatrix& b) { return a += b; }
  friend SquareMatrix operator-(SquareMatrix a, const SquareMatrix& b) { return a -= b; }
  friend SquareMatrix operator*(SquareMatrix a, cplx s) { return a *= s; }
  friend SquareMatrix operator*(cplx s, SquareMatrix a) { return a *= s; }

  friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
    SquareMatrix r;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < N; ++k) {
        const cplx aik = a.m[i][k];
        if (aik == cplx{}) continue;
        for (std::size_t j = 0; j < N; ++j) r.m[i][j] += aik * b.m[k][j];
      }
    return r;
  }

  std::array<cplx, N> apply(const std::array<cplx, N>& v) const {
    std::array<cplx, N> r{};
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) r[i] += m[i][j] * v[j];
    return r;
  }
};

using Mat2 = SquareMatrix<2>;
using Mat4 = SquareMatrix<4>;

/// Pauli matrices sigma_1..sigma_3 (index 0..2).
inline const std::array<Mat2, 3>& pauli() {
  static const std::array<Mat2, 3> s = [] {
    std::array<Mat2, 3> r{};
    r[0].m = {{{0.0, 1.0}, {1.0, 0.0}}};
    r[1].m = {{{0.0, -I_unit}, {I_unit, 0.0}}};
    r[2].m = {{{1.0, 0.0}, {0.0, -1.0}}};
    return r;
  }();
  return s;
}

/// Generators T_a = -(i/2) sigma_a; trace-free and skew-hermitian.
inline const std::array<Mat2, 3>& generators() {
  static const std::array<Mat2, 3> t = [] {
    std::array<Mat2, 3> r{};
    for (std::size_t a = 0; a < 3; ++a) r[a] = pauli()[a] * cplx(0.0, -0.5);
    return r;
  }();
  return t;
}

/// Hermitian generators tau_a = sigma_a / 2 = i T_a.
inline const std::array<Mat2, 3>& hermitian_generators() {
  static const std::array<Mat2, 3> t = [] {
    std::array<Mat2, 3> r{};
    for (std::size_t a = 0; a < 3; ++a) r[a] = pauli()[a] * cplx(0.5, 0.0);
    return r;
  }();
  return t;
}

/// Totally antisymmetric f^{abc}; for su(2) in this basis f^{abc} = eps_{abc}.
struct StructureConstants {
  static constexpr double f(std::size_t a, std::size_t b, std::size_t c) {
    if (a == b || b == c || a == c) return 0.0;
    // even permutations of (0,1,2)
    if ((a == 0 && b == 1 && c == 2) || (a == 1 && b == 2 && c == 0) || (a == 2 && b == 0 && c == 1))
      return 1.0;
    return -1.0;
  }
};

/// Which generator the Dirac coupling and the matter current use.
///   paper   : the skew-hermitian T_a literally.
///   physics : the hermitian tau_a = i T_a (gauge covariant, charge conserving).
enum class Convention : unsigned char { paper = 0, physics = 1 };

inline const char* to_string(Convention c) { return c == Convention::paper ? "paper" : "physics"; }

inline Convention convention_from_string(const std::string& s) {
  if (s == "paper") return Convention::paper;
  if (s == "physics") return Convention::physics;
  throw Error(ErrorCode::invalid_argument, "unknown convention '" + s + "'");
}

inline const std::array<Mat2, 3>& coupling_generators(Convention c) {
  return c == Convention::paper ? generators() : hermitian_generators();
}

/// An element X = a^a T_a of su(2), stored by its three real coefficients.
struct LieElement {
  std::array<double, 3> c{};

  constexpr LieElement() = default;
  constexpr LieElement(double a1, double a2, double a3) : c{a1, a2, a3} {}

  static constexpr LieElement basis(std::size_t a) {
    LieElement e;
    e.c[a] = 1.0;
    return e;
  }

  double& operator[](std::size_t a) { return c[a]; }
  double operator[](std::size_t a) const { return c[a]; }

  LieElement& operator+=(const LieElement& o) {
    for (std::size_t a = 0; a < 3; ++a) c[a] += o.c[a];
    return *this;
  }
  LieElement& operator-=(const LieElement& o) {
    for (std::size_t a = 0; a < 3; ++a) c[a] -= o.c[a];
    return *this;
  }
  LieElement& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
  friend LieElement operator+(LieElement a, const LieElement& b) { return a += b; }
  friend LieElement operator-(LieElement a, const LieElement& b) { return a -= b; }
  friend LieElement operator-(LieElement a) { return a *= -1.0; }
  friend LieElement operator*(LieElement a, double s) { return a *= s; }
  friend LieElement operator*(double s, LieElement a) { return a *= s; }
  friend bool operator==(const LieElement&, const LieElement&) = default;

  /// Killing-type inner product -2 tr(XY), which is the Euclidean product of
  /// the coefficients in this basis.
  double dot(const LieElement& o) const { return c[0] * o.c[0] + c[1] * o.c[1] + c[2] * o.c[2]; }
  double norm() const { return std::sqrt(dot(*this)); }

  Mat2 matrix() const {
    Mat2 r;
    for (std::size_t a = 0; a < 3; ++a) r += generators()[a] * cplx(c[a], 0.0);
    return r;
  }

  /// Inverse of matrix(); throws when m is not trace-free skew-hermitian to
  /// within tol (relative to the size of m).
  static LieElement from_matrix(const Mat2& m, double tol = 1e-12) {
    const double scale = std::max(1.0, m.max_abs());
    if (std::abs(m.trace()) > tol * scale || (m + m.adjoint()).max_abs() > tol * scale)
      throw Error(ErrorCode::not_in_algebra, "matrix is not trace-free skew-hermitian");
    LieElement r;
    // tr(T_a T_b) = -delta_ab / 2
    for (std::size_t a = 0; a < 3; ++a) r.c[a] = -2.0 * (generators()[a] * m).trace().real();
    return r;
  }
};

/// [X, Y] in coefficients: f^{abc} X_b Y_c, i.e. the cross product.
constexpr LieElement commutator(const LieElement& x, const LieElement& y) {
  return LieElement(x.c[1] * y.c[2] - x.c[2] * y.c[1], x.c[2] * y.c[0] - x.c[0] * y.c[2],
                    x.c[0] * y.c[1] - x.c[1] * y.c[0]);
}

/// An SU(2) matrix. Products drift off the group by round-off; renormalize()
/// projects back via the polar decomposition.
class GroupElement {
 public:
  GroupElement() : m_(Mat2::identity()) {}
  explicit GroupElement(const Mat2& m) : m_(m) {}

  static GroupElement identity() { return GroupElement(); }

  const Mat2& matrix() const { return m_; }

  /// For unitary U the inverse is the adjoint.
  GroupElement inverse() const { return GroupElement(m_.adjoint()); }

  friend GroupElement operator*(const GroupElement& a, const GroupElement& b) {
    return GroupElement(a.m_ * b.m_);
  }

  cplx det() const { return m_.m[0][0] * m_.m[1][1] - m_.m[0][1] * m_.m[1][0]; }

  /// max(|U^dagger U - I|, |det U - 1|)
  double unitarity_defect() const {
    const double u = (m_.adjoint() * m_ - Mat2::identity()).max_abs();
    return std::max(u, std::abs(det() - 1.0));
  }

  /// Replace U by the unitary polar factor of U, then remove the determinant
  /// phase.
  GroupElement& renormalize() {
    // sqrt of the 2x2 positive matrix H = U^dagger U:
    //   sqrt(H) = (H + sqrt(det H) I) / sqrt(tr H + 2 sqrt(det H))
    const Mat2 h = m_.adjoint() * m_;
    const double det_h = (h.m[0][0] * h.m[1][1] - h.m[0][1] * h.m[1][0]).real();
    const double sd = std::sqrt(std::max(det_h, 0.0));
    const double denom = std::sqrt(h.trace().real() + 2.0 * sd);
    Mat2 root = h + Mat2::identity() * cplx(sd, 0.0);
    root *= cplx(1.0 / denom, 0.0);
    // inverse of the 2x2 hermitian root
    const cplx d = root.m[0][0] * root.m[1][1] - root.m[0][1] * root.m[1][0];
    Mat2 inv;
    inv.m = {{{root.m[1][1] / d, -root.m[0][1] / d}, {-root.m[1][0] / d, root.m[0][0] / d}}};
    m_ = m_ * inv;
    const cplx phase = std::sqrt(det());
    m_ *= 1.0 / phase;
    // enforce the SU(2) shape [[a, b], [-b*, a*]] exactly
    const cplx a = 0.5 * (m_.m[0][0] + std::conj(m_.m[1][1]));
    const cplx b = 0.5 * (m_.m[0][1] - std::conj(m_.m[1][0]));
    const double n = std::sqrt(std::norm(a) + std::norm(b));
    m_.m = {{{a / n, b / n}, {-std::conj(b) / n, std::conj(a) / n}}};
    return *this;
  }

 private:
  Mat2 m_;
};

/// exp(a^a T_a) = cos(|a|/2) I - i sin(|a|/2) (a/|a|).sigma
inline GroupElement exp_map(const LieElement& v) {
  const double theta = v.norm();
  const double half = 0.5 * theta;
  // sin(h)/theta with its small-angle limit 1/2
  const double s = theta > 1e-8 ? std::sin(half) / theta : 0.5 - theta * theta / 48.0;
  const double c = std::cos(half);
  Mat2 m;
  m.m[0][0] = cplx(c, -s * v.c[2]);
  m.m[1][1] = cplx(c, s * v.c[2]);
  m.m[0][1] = cplx(-s * v.c[1], -s * v.c[0]);
  m.m[1][0] = cplx(s * v.c[1], -s * v.c[0]);
  return GroupElement(m);
}

/// U X U^{-1} in coefficients. Throws if the result leaves the algebra, which
/// only happens for a corrupted (non-unitary) U.
inline LieElement adjoint(const GroupElement& u, const LieElement& x) {
  const Mat2 r = u.matrix() * x.matrix() * u.matrix().adjoint();
  return LieElement::from_matrix(r, 1e-10);
}

/// Dirac representation: gamma^0 = diag(I, -I), gamma^j = [[0, s_j], [-s_j, 0]],
/// alpha^mu = gamma^0 gamma^mu.
struct DiracConstants {
  std::array<Mat4, 4> alpha;
  std::array<Mat4, 4> gamma;
  std::array<Mat2, 3> sigma;

  static const DiracConstants& get() {
    static const DiracConstants d = build();
    return d;
  }

 private:
  static DiracConstants build() {
    DiracConstants d;
    d.sigma = pauli();
    d.gamma[0] = Mat4{};
    d.gamma[0].m[0][0] = d.gamma[0].m[1][1] = 1.0;
    d.gamma[0].m[2][2] = d.gamma[0].m[3][3] = -1.0;
    for (std::size_t j = 0; j < 3; ++j) {
      Mat4 g{};
      for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) {
          g.m[r][c + 2] = d.sigma[j].m[r][c];
          g.m[r + 2][c] = -d.sigma[j].m[r][c];
        }
      d.gamma[j + 1] = g;
    }
    for (std::size_t mu = 0; mu < 4; ++mu) d.alpha[mu] = d.gamma[0] * d.gamma[mu];
    return d;
  }
};

}  // namespace ymd
