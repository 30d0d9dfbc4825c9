#pragma once

// Curvature, the Gauss constraint, and random small initial data.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>

#include "ymd/coupling.hpp"
#include "ymd/grid.hpp"
#include "ymd/spectral.hpp"

namespace ymd {

/// Spatial pairs (i, j), i < j, in storage order.
inline constexpr std::array<std::array<int, 2>, 3> spatial_pairs{{{0, 1}, {0, 2}, {1, 2}}};

inline int pair_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return i == 0 ? (j == 1 ? 0 : 1) : 2;
}

/// F_ij for i < j (pair p at components 3 p + a) and F_j0 = -d_t A_j.
struct CurvatureField {
  LieVectorField spatial;
  LieVectorField electric;

  explicit CurvatureField(const Grid& g) : spatial(g), electric(g) {}

  LieElement f(int i, int j, std::size_t site) const {
    if (i == j) return {};
    const LieElement v = lie_at(spatial, std::size_t(pair_index(i, j)), site);
    return i < j ? v : -v;
  }
};

inline std::vector<const cplx*> component_pointers(const LatticeField<cplx, 9>& s) {
  std::vector<const cplx*> p;
  for (std::size_t c = 0; c < 9; ++c) p.push_back(s.component(c));
  return p;
}

/// sum_j [a_j, b_j], dealiased.
inline LieScalarField bracket_sum(const LieVectorField& a, const LieVectorField& b) {
  require_same_grid(a.grid(), b.grid(), "bracket_sum");
  const Dealiaser d(a.grid());
  const auto sa = to_spectral(a), sb = to_spectral(b);
  auto in = component_pointers(sa);
  for (auto* p : component_pointers(sb)) in.push_back(p);
  const auto out = dealiased_real_map(d, in, 3, [](const double* v, double* r) {
    for (int j = 0; j < 3; ++j) kernel::cross_add(v + 3 * j, v + 9 + 3 * j, 1.0, r);
  });
  LatticeField<cplx, 3> spec(a.grid());
  for (std::size_t c = 0; c < 3; ++c) std::copy(out[c].begin(), out[c].end(), spec.component(c));
  return to_real_space(spec);
}

inline CurvatureField curvature(const LieVectorField& a, const LieVectorField& dta) {
  require_same_grid(a.grid(), dta.grid(), "curvature");
  const Grid& g = a.grid();
  const Dealiaser d(g);
  const auto sa = to_spectral(a);
  const auto br = dealiased_real_map(d, component_pointers(sa), 9, [](const double* v, double* r) {
    for (int p = 0; p < 3; ++p) kernel::cross(v + 3 * spatial_pairs[p][0], v + 3 * spatial_pairs[p][1], r + 3 * p);
  });
  LatticeField<cplx, 9> spec(g);
  for (std::size_t c = 0; c < 9; ++c) std::copy(br[c].begin(), br[c].end(), spec.component(c));
  for_each_mode(g, [&](std::size_t idx, const std::array<double, 3>& k) {
    for (int p = 0; p < 3; ++p) {
      const int i = spatial_pairs[p][0], j = spatial_pairs[p][1];
      for (std::size_t c = 0; c < 3; ++c)
        spec(vc(p, c), idx) += cplx(0.0, k[i]) * sa(vc(j, c), idx) - cplx(0.0, k[j]) * sa(vc(i, c), idx);
    }
  });
  CurvatureField f(g);
  f.spatial = to_real_space(spec);
  f.electric = dta;
  f.electric *= -1.0;
  return f;
}

// ---------------------------------------------------------------------------
// Gauss constraint

struct GaussResidual {
  LieScalarField field;
  double l2 = 0.0;
  /// Size of the terms the residual balances, for relative statements.
  double scale = 0.0;
  double relative() const { return scale > 0.0 ? l2 / scale : l2; }
};

/// r = d^j F_j0 + [A^j, F_j0] - J_0 with F_j0 = -d_t A_j.
inline GaussResidual gauss_residual_with_current(const LieVectorField& a, const LieVectorField& dta,
                                                 const LieScalarField& j0) {
  const auto div = divergence(dta);
  const auto br = bracket_sum(a, dta);
  GaussResidual r{LieScalarField(a.grid())};
  for (std::size_t i = 0; i < r.field.data().size(); ++i)
    r.field.data()[i] = -div.data()[i] - br.data()[i] - j0.data()[i];
  r.l2 = l2_norm(r.field);
  r.scale = l2_norm(div) + l2_norm(br) + l2_norm(j0);
  return r;
}

inline GaussResidual gauss_residual(const LieVectorField& a, const LieVectorField& dta, const SpinorField& psi,
                                    Convention conv = Convention::physics) {
  return gauss_residual_with_current(a, dta, current(psi, conv).j[0]);
}

inline LieElement field_mean(const LieScalarField& f) {
  LieElement m;
  for (std::size_t a = 0; a < 3; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.sites(); ++i) s += f(a, i);
    m[a] = s / double(f.sites());
  }
  return m;
}

inline LieElement field_mean(const LieVectorField& f, std::size_t j) {
  LieElement m;
  for (std::size_t a = 0; a < 3; ++a) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.sites(); ++i) s += f(vc(j, a), i);
    m[a] = s / double(f.sites());
  }
  return m;
}

struct GaussProjectOptions {
  double tol = 1e-14;
  int max_iter = 100;
};

/// Replace the curl-free part of a1 by the gradient that solves the Gauss
/// constraint, a1' = P a1 + grad phi + c. The constant c absorbs the zero
/// mode of the constraint (total color charge): sum_j [mean A_j, c_j] is set
/// by a minimum-norm solve. Fixed-point iteration in (phi, c).
inline LieVectorField gauss_project(const LieVectorField& a, const LieVectorField& a1, const SpinorField& psi,
                                    const GaussProjectOptions& opt = {}) {
  require_same_grid(a.grid(), a1.grid(), "gauss_project");
  require_same_grid(a.grid(), psi.grid(), "gauss_project");
  const Grid& g = a.grid();
  const LieScalarField j0 = current(psi, Convention::physics).j[0];
  const LieVectorField base = df_part(a1);

  // minimum-norm solve of sum_j [abar_j, c_j] = b
  Eigen::Matrix<double, 3, 9> lmat = Eigen::Matrix<double, 3, 9>::Zero();
  for (int j = 0; j < 3; ++j) {
    const LieElement m = field_mean(a, j);
    // x cross y = [x]_cross y
    lmat.block<3, 3>(0, 3 * j) << 0, -m[2], m[1], m[2], 0, -m[0], -m[1], m[0], 0;
  }
  const Eigen::MatrixXd lmat_dyn = lmat;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(lmat_dyn);

  LieScalarField phi(g);
  Eigen::Matrix<double, 9, 1> c = Eigen::Matrix<double, 9, 1>::Zero();
  LieVectorField current_a1 = base;
  for (int it = 0; it < opt.max_iter; ++it) {
    LieVectorField next = base;
    next += gradient(phi);
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t q = 0; q < 3; ++q) {
        double* p = next.component(vc(j, q));
        for (std::size_t i = 0; i < g.size(); ++i) p[i] += c[3 * j + q];
      }
    const double change = l2_norm(next - current_a1);
    const double size = l2_norm(next);
    current_a1 = next;
    if (it > 0 && change <= opt.tol * size) return current_a1;

    // source S = sum_j [A_j, a1_j] + J_0 and the new potential |grad|^-2 S
    LieScalarField s = bracket_sum(a, current_a1);
    s += j0;
    auto spec = to_spectral(s);
    const Eigen::Vector3d smean(spec(0, 0).real(), spec(1, 0).real(), spec(2, 0).real());
    apply_symbol_inplace(MultiplierSpec::abs_grad(-2.0), spec);
    phi = to_real_space(spec);
    const Eigen::Vector3d b = -(smean - lmat * c);
    c = cod.solve(b);
  }
  throw Error(ErrorCode::no_convergence,
              "gauss_project did not converge in " + std::to_string(opt.max_iter) + " iterations");
}

// ---------------------------------------------------------------------------
// exponents and random data

struct Exponents {
  double s = 1.0;
  double l = 0.75;
  double delta = 0.01;
};

/// Theorem-level admissibility: s > 3/4, l > 1/4, s >= l >= s - 1,
/// 2 s - l > 1, l - s >= -1/2.
inline void check_exponents(double s, double l) {
  std::string bad;
  if (!(s > 0.75)) bad += " s>3/4";
  if (!(l > 0.25)) bad += " l>1/4";
  if (!(s >= l)) bad += " s>=l";
  if (!(l >= s - 1.0)) bad += " l>=s-1";
  if (!(2.0 * s - l > 1.0)) bad += " 2s-l>1";
  if (!(l - s >= -0.5)) bad += " l-s>=-1/2";
  if (!bad.empty())
    throw Error(ErrorCode::inadmissible_exponents,
                "s=" + std::to_string(s) + ", l=" + std::to_string(l) + " violates" + bad);
}

struct InitialData {
  LieVectorField a0df;
  LieVectorField a0cf;
  /// d_t A(0): divergence-free random part plus the Gauss correction.
  LieVectorField a1;
  SpinorField psi0;

  explicit InitialData(const Grid& g) : a0df(g), a0cf(g), a1(g), psi0(g) {}
  LieVectorField a0() const { return a0df + a0cf; }
};

inline double data_norm(const InitialData& d, double s, double l) {
  return hs_norm(d.a0(), s) + hs_norm(d.a1, s - 1.0) + hs_norm(d.psi0, l);
}

namespace detail {

/// Gaussian coefficients with |c_m| ~ <m>^-p, hermitian if `real`, no Nyquist.
template <std::size_t C>
LatticeField<cplx, C> weighted_spectrum(const Grid& g, std::mt19937_64& rng, double p, bool real,
                                        const std::array<bool, C>& active) {
  std::normal_distribution<double> n(0.0, 1.0);
  LatticeField<cplx, C> spec(g);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) {
      const cplx z(n(rng), n(rng));
      if (active[c]) spec(c, i) = z;
    }
  for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
    const double w = std::pow(1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2], -0.5 * p);
    for (std::size_t c = 0; c < C; ++c) spec(c, i) *= w;
  });
  remove_nyquist_spectral(spec);
  if (real) {
    auto sym = spec;
    const int nn = g.n();
    for (int z = 0; z < nn; ++z)
      for (int y = 0; y < nn; ++y)
        for (int x = 0; x < nn; ++x) {
          const std::size_t i = g.index(x, y, z), m = g.index(g.mirror(x), g.mirror(y), g.mirror(z));
          for (std::size_t c = 0; c < C; ++c) sym(c, i) = 0.5 * (spec(c, i) + std::conj(spec(c, m)));
        }
    spec = sym;
  }
  return spec;
}

}  // namespace detail

/// Random data with ||a0||_{H^s} + ||a1||_{H^{s-1}} + ||psi0||_{H^l} = eps,
/// a0 and the random part of a1 weighted by <xi>^{-s-2} (a1 one power
/// rougher), psi0 by <xi>^{-l-2}, a1 Gauss-projected. Abelian data live along
/// T_3 with psi0 = 0.
inline InitialData random_small_data(const Grid& g, double s, double l, double eps, std::uint64_t seed,
                                     bool abelian = false) {
  check_exponents(s, l);
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::invalid_argument, "eps must be >= 0");
  InitialData d(g);
  if (eps == 0.0) return d;

  std::mt19937_64 rng(seed);
  std::array<bool, 9> lie_active;
  for (std::size_t c = 0; c < 9; ++c) lie_active[c] = !abelian || c % 3 == 2;
  std::array<bool, 8> spin_active;
  spin_active.fill(!abelian);

  const auto a0 = to_real_space(detail::weighted_spectrum<9>(g, rng, s + 2.0, true, lie_active));
  auto a1_spec = detail::weighted_spectrum<9>(g, rng, s + 1.0, true, lie_active);
  df_project_spectral(a1_spec);
  const auto a1 = to_real_space(a1_spec);
  const auto psi = to_complex_space(detail::weighted_spectrum<8>(g, rng, l + 2.0, false, spin_active));

  const auto parts = hodge_split(a0);
  d.a0df = parts.df;
  d.a0cf = parts.cf;
  d.a1 = a1;
  d.psi0 = psi;

  // alternate rescaling and projection; the projection moves the norm by a
  // relative amount of order eps, so this settles in a few rounds
  auto rescale = [&](double f) {
    d.a0df *= f;
    d.a0cf *= f;
    d.a1 *= f;
    d.psi0 *= f;
  };
  rescale(eps / data_norm(d, s, l));
  for (int round = 0; round < 60; ++round) {
    d.a1 = gauss_project(d.a0(), d.a1, d.psi0);
    const double total = data_norm(d, s, l);
    if (std::abs(total - eps) <= 1e-13 * eps) return d;
    rescale(eps / total);
  }
  throw Error(ErrorCode::no_convergence, "random_small_data: normalization did not settle");
}

}  // namespace ymd
