#pragma once

// Time-independent gauge transformations and the iterative removal of the
// curl-free part of A(0).
//
// A transformation is stored as the site field U together with its pure-gauge
// term Omega_j = -(d_j U) U^{-1}, so that A'_j = U A_j U^{-1} + Omega_j. The
// action is taken pointwise on the lattice. Keeping Omega explicit makes the
// discrete group law exact: compose() and inverse_gauge() act on (U, Omega)
// algebraically and round trips return the input to round-off.

#include <cmath>
#include <string>
#include <vector>

#include "ymd/fields.hpp"
#include "ymd/grid.hpp"
#include "ymd/liealg.hpp"
#include "ymd/spectral.hpp"

namespace ymd {

/// Lie coefficients of the trace-free skew-hermitian part of m.
inline LieElement lie_part(const Mat2& m) {
  LieElement r;
  for (std::size_t a = 0; a < 3; ++a) r.c[a] = -2.0 * (generators()[a] * m).trace().real();
  return r;
}

/// Rotation R with U X U^{-1} = R x in coefficients.
inline std::array<std::array<double, 3>, 3> adjoint_matrix(const GroupElement& u) {
  std::array<std::array<double, 3>, 3> r{};
  for (std::size_t b = 0; b < 3; ++b) {
    const LieElement col = lie_part(u.matrix() * generators()[b] * u.matrix().adjoint());
    for (std::size_t a = 0; a < 3; ++a) r[a][b] = col[a];
  }
  return r;
}

/// (d e^V) e^{-V} for su(2) given V and dV:
///   dV_par + sin|V|/|V| dV_perp + (1 - cos|V|)/|V|^2 V x dV
inline LieElement dexp(const LieElement& v, const LieElement& dv) {
  const double t2 = v.dot(v);
  double s, c;
  if (t2 < 1e-8) {
    s = 1.0 - t2 / 6.0;
    c = 0.5 - t2 / 24.0;
  } else {
    const double t = std::sqrt(t2);
    s = std::sin(t) / t;
    c = (1.0 - std::cos(t)) / t2;
  }
  const LieElement par = t2 > 0.0 ? v * (v.dot(dv) / t2) : LieElement{};
  return par + s * (dv - par) + c * commutator(v, dv);
}

struct GaugeTransform {
  std::vector<GroupElement> u;
  /// -(d_j U) U^{-1}
  LieVectorField omega;
  /// Lie fields V_1..V_k when U was built as a product of exponentials.
  std::vector<LieScalarField> factors;

  explicit GaugeTransform(const Grid& g) : u(g.size()), omega(g) {}
  const Grid& grid() const { return omega.grid(); }

  static GaugeTransform identity(const Grid& g) { return GaugeTransform(g); }

  /// U = exp V with Omega from the exact differential of exp and the
  /// spectral gradient of V.
  static GaugeTransform exponential(const LieScalarField& v) {
    const Grid& g = v.grid();
    GaugeTransform t(g);
    const LieVectorField dv = gradient(v);
    YMD_PARALLEL_FOR
    for (std::size_t i = 0; i < g.size(); ++i) {
      const LieElement x = lie_at(v, i);
      t.u[i] = exp_map(x);
      for (std::size_t j = 0; j < 3; ++j) set_lie(t.omega, j, i, -dexp(x, lie_at(dv, j, i)));
    }
    t.factors.push_back(v);
    return t;
  }

  /// Arbitrary SU(2) site field; Omega uses spectral derivatives of the
  /// matrix entries.
  static GaugeTransform from_group_field(const Grid& g, std::vector<GroupElement> field) {
    if (field.size() != g.size())
      throw Error(ErrorCode::dimension_mismatch, "group field has " + std::to_string(field.size()) + " sites");
    GaugeTransform t(g);
    t.u = std::move(field);
    // U = [[a, b], [-b*, a*]]: four real fields
    LatticeField<double, 4> q(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Mat2& m = t.u[i].matrix();
      q(0, i) = m.m[0][0].real();
      q(1, i) = m.m[0][0].imag();
      q(2, i) = m.m[0][1].real();
      q(3, i) = m.m[0][1].imag();
    }
    for (int j = 0; j < 3; ++j) {
      const auto dq = partial(j, q);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const cplx a(dq(0, i), dq(1, i)), b(dq(2, i), dq(3, i));
        Mat2 du;
        du.m = {{{a, b}, {-std::conj(b), std::conj(a)}}};
        set_lie(t.omega, j, i, -lie_part(du * t.u[i].matrix().adjoint()));
      }
    }
    return t;
  }

  double max_unitarity_defect() const {
    double m = 0.0;
    for (const auto& x : u) m = std::max(m, x.unitarity_defect());
    return m;
  }

  /// max |U - I| over sites.
  double max_deviation_from_identity() const {
    double m = 0.0;
    for (const auto& x : u) m = std::max(m, (x.matrix() - Mat2::identity()).max_abs());
    return m;
  }

  void renormalize() {
    for (auto& x : u) x.renormalize();
  }
};

/// The transform acting as `second` after `first`: U = U2 U1,
/// Omega = U2 Omega1 U2^{-1} + Omega2.
inline GaugeTransform compose(const GaugeTransform& second, const GaugeTransform& first) {
  require_same_grid(second.grid(), first.grid(), "compose");
  const Grid& g = first.grid();
  GaugeTransform t(g);
  YMD_PARALLEL_FOR
  for (std::size_t i = 0; i < g.size(); ++i) {
    t.u[i] = second.u[i] * first.u[i];
    const auto r = adjoint_matrix(second.u[i]);
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t a = 0; a < 3; ++a) {
        double s = second.omega(vc(j, a), i);
        for (std::size_t b = 0; b < 3; ++b) s += r[a][b] * first.omega(vc(j, b), i);
        t.omega(vc(j, a), i) = s;
      }
  }
  t.factors = first.factors;
  t.factors.insert(t.factors.end(), second.factors.begin(), second.factors.end());
  return t;
}

/// U^{-1} with Omega' = -U^{-1} Omega U, i.e. T^{-1}B = U^{-1} B U + U^{-1} dU.
inline GaugeTransform inverse_gauge(const GaugeTransform& t) {
  const Grid& g = t.grid();
  GaugeTransform r(g);
  YMD_PARALLEL_FOR
  for (std::size_t i = 0; i < g.size(); ++i) {
    r.u[i] = t.u[i].inverse();
    const auto m = adjoint_matrix(r.u[i]);
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t a = 0; a < 3; ++a) {
        double s = 0.0;
        for (std::size_t b = 0; b < 3; ++b) s -= m[a][b] * t.omega(vc(j, b), i);
        r.omega(vc(j, a), i) = s;
      }
  }
  return r;
}

/// U X U^{-1} site by site.
inline LieScalarField conjugate(const GaugeTransform& t, const LieScalarField& x) {
  require_same_grid(t.grid(), x.grid(), "conjugate");
  LieScalarField out(x.grid());
  YMD_PARALLEL_FOR
  for (std::size_t i = 0; i < x.sites(); ++i) {
    const auto r = adjoint_matrix(t.u[i]);
    for (std::size_t a = 0; a < 3; ++a) out(a, i) = r[a][0] * x(0, i) + r[a][1] * x(1, i) + r[a][2] * x(2, i);
  }
  return out;
}

inline LieVectorField conjugate(const GaugeTransform& t, const LieVectorField& x) {
  require_same_grid(t.grid(), x.grid(), "conjugate");
  LieVectorField out(x.grid());
  YMD_PARALLEL_FOR
  for (std::size_t i = 0; i < x.sites(); ++i) {
    const auto r = adjoint_matrix(t.u[i]);
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t a = 0; a < 3; ++a)
        out(vc(j, a), i) = r[a][0] * x(vc(j, 0), i) + r[a][1] * x(vc(j, 1), i) + r[a][2] * x(vc(j, 2), i);
  }
  return out;
}

/// U A_j U^{-1} - (d_j U) U^{-1}
inline LieVectorField transform_connection(const GaugeTransform& t, const LieVectorField& a) {
  LieVectorField out = conjugate(t, a);
  out += t.omega;
  return out;
}

inline SpinorField transform_spinor(const GaugeTransform& t, const SpinorField& psi) {
  require_same_grid(t.grid(), psi.grid(), "transform_spinor");
  SpinorField out(psi.grid());
  YMD_PARALLEL_FOR
  for (std::size_t i = 0; i < psi.sites(); ++i) {
    const Mat2& m = t.u[i].matrix();
    for (std::size_t s = 0; s < 4; ++s) {
      const cplx p0 = psi(sc(0, s), i), p1 = psi(sc(1, s), i);
      out(sc(0, s), i) = m.m[0][0] * p0 + m.m[0][1] * p1;
      out(sc(1, s), i) = m.m[1][0] * p0 + m.m[1][1] * p1;
    }
  }
  return out;
}

struct GaugedFields {
  LieVectorField a;
  LieVectorField dta;
  SpinorField psi;
};

/// (A, d_t A, psi) -> (U A U^{-1} - (dU) U^{-1}, U d_t A U^{-1}, U psi).
/// U is time-independent, so A'_0 = -(d_t U) U^{-1} = 0 and temporal gauge
/// is kept.
inline GaugedFields apply_gauge(const GaugeTransform& t, const LieVectorField& a, const LieVectorField& dta,
                                const SpinorField& psi) {
  require_same_grid(t.grid(), a.grid(), "apply_gauge");
  require_same_grid(t.grid(), dta.grid(), "apply_gauge");
  require_same_grid(t.grid(), psi.grid(), "apply_gauge");
  return {transform_connection(t, a), conjugate(t, dta), transform_spinor(t, psi)};
}

// ---------------------------------------------------------------------------
// removal of the curl-free part

struct GaugeFixOptions {
  double s = 1.0;
  double tol = 1e-10;
  int max_iter = 30;
  /// polar renormalization of the running product every this many factors
  int renormalize_every = 8;
};

struct GaugeFixStep {
  int iteration = 0;
  double v_norm = 0.0;
  double cf_norm = 0.0;
};

struct GaugeFixResult {
  GaugeTransform transform;
  GaugedFields fields;
  double initial_cf_norm = 0.0;
  std::vector<GaugeFixStep> history;
  std::vector<std::string> warnings;
  /// ||Omega||_{H^s} of the composite, the discrete ||dU||.
  double omega_norm = 0.0;
  double unitarity_defect = 0.0;

  int iterations() const { return int(history.size()); }
  double final_cf_norm() const { return history.empty() ? initial_cf_norm : history.back().cf_norm; }
};

/// V = -|grad|^{-2} div A with zero mean; grad V is the curl-free part of A.
inline LieScalarField cf_potential(const LieVectorField& a) {
  const auto spec = to_spectral(a);
  LatticeField<cplx, 3> v(a.grid());
  for_each_mode(a.grid(), [&](std::size_t i, const std::array<double, 3>& k) {
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (k2 == 0.0) return;
    for (std::size_t c = 0; c < 3; ++c) {
      const cplx div = I_unit * (k[0] * spec(vc(0, c), i) + k[1] * spec(vc(1, c), i) + k[2] * spec(vc(2, c), i));
      v(c, i) = -div / k2;
    }
  });
  return to_real_space(v);
}

inline double cf_norm(const LieVectorField& a, double s) {
  auto spec = to_spectral(a);
  cf_project_spectral(spec);
  return hs_norm_spectral(spec, s);
}

/// Iterates V_k = -|grad|^{-2} div(T_{k-1} A), U_k = exp(V_k) U_{k-1} until
/// ||(T_k A)^cf||_{H^s} <= tol.
inline GaugeFixResult gauge_fix(const LieVectorField& a, const LieVectorField& dta, const SpinorField& psi,
                                const GaugeFixOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "gauge_fix: tol must be > 0");
  if (opt.max_iter < 0) throw Error(ErrorCode::invalid_argument, "gauge_fix: max_iter must be >= 0");
  const Grid& g = a.grid();
  GaugeFixResult r{GaugeTransform::identity(g), {a, dta, psi}, 0.0, {}, {}, 0.0, 0.0};
  r.initial_cf_norm = cf_norm(a, opt.s);
  double cf = r.initial_cf_norm;
  while (cf > opt.tol) {
    if (r.iterations() >= opt.max_iter)
      throw Error(ErrorCode::max_iterations, "gauge_fix: ||A^cf||_H^s = " + std::to_string(cf) + " after " +
                                                 std::to_string(opt.max_iter) +
                                                 " iterations; data outside the contraction regime");
    const LieScalarField v = cf_potential(r.fields.a);
    const GaugeTransform step = GaugeTransform::exponential(v);
    r.fields = apply_gauge(step, r.fields.a, r.fields.dta, r.fields.psi);
    r.transform = compose(step, r.transform);
    const int k = r.iterations() + 1;
    if (opt.renormalize_every > 0 && k % opt.renormalize_every == 0) r.transform.renormalize();
    const double prev = cf;
    cf = cf_norm(r.fields.a, opt.s);
    r.history.push_back({k, hs_norm(v, opt.s), cf});
    if (!std::isfinite(cf)) throw Error(ErrorCode::no_convergence, "gauge_fix: non-finite residual");
    if (cf > prev)
      r.warnings.push_back("non-monotone history at iteration " + std::to_string(k) + ": " + std::to_string(prev) +
                           " -> " + std::to_string(cf));
  }
  r.omega_norm = hs_norm(r.transform.omega, opt.s);
  r.unitarity_defect = r.transform.max_unitarity_defect();
  return r;
}

}  // namespace ymd
