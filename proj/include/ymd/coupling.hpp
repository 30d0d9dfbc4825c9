#pragma once

// Pointwise matter kernels shared by the constraint, the evolution and the
// diagnostics: the color current and the Dirac coupling term.

#include <array>

#include "ymd/grid.hpp"
#include "ymd/liealg.hpp"
#include "ymd/spectral.hpp"

namespace ymd {

namespace kernel {

/// alpha^k v for k = 1..3, written out: alpha^k = [[0, sigma_k], [sigma_k, 0]].
inline void alpha_all(const cplx* v, cplx out[4][4]) {
  auto times_i = [](cplx z) { return cplx(-z.imag(), z.real()); };
  auto times_minus_i = [](cplx z) { return cplx(z.imag(), -z.real()); };
  for (int s = 0; s < 4; ++s) out[0][s] = v[s];
  out[1][0] = v[3], out[1][1] = v[2], out[1][2] = v[1], out[1][3] = v[0];
  out[2][0] = times_minus_i(v[3]), out[2][1] = times_i(v[2]), out[2][2] = times_minus_i(v[1]), out[2][3] = times_i(v[0]);
  out[3][0] = v[2], out[3][1] = -v[3], out[3][2] = v[0], out[3][3] = -v[1];
}

/// raw[nu][a] = sum_{ij} < psi_i, alpha^nu G_a,ij psi_j >, psi as 8 values
/// ordered color-major.
inline void current(const cplx* psi, Convention conv, cplx raw[4][3]) {
  cplx ap[2][4][4];
  alpha_all(psi, ap[0]);
  alpha_all(psi + 4, ap[1]);
  for (int nu = 0; nu < 4; ++nu) {
    // b[i][j] = < psi_i, alpha^nu psi_j >
    cplx b[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        cplx acc = 0.0;
        for (int s = 0; s < 4; ++s) acc += std::conj(psi[4 * i + s]) * ap[j][nu][s];
        b[i][j] = acc;
      }
    // tau_a = sigma_a / 2
    cplx r0 = 0.5 * (b[0][1] + b[1][0]);
    cplx r1 = cplx(0.0, 0.5) * (b[1][0] - b[0][1]);
    cplx r2 = 0.5 * (b[0][0] - b[1][1]);
    if (conv == Convention::paper) {
      // T_a = -i tau_a
      r0 = cplx(r0.imag(), -r0.real());
      r1 = cplx(r1.imag(), -r1.real());
      r2 = cplx(r2.imag(), -r2.real());
    }
    raw[nu][0] = r0, raw[nu][1] = r1, raw[nu][2] = r2;
  }
}

/// Real coupling j[nu][a] = Re < psi, alpha^nu tau_a psi > directly; equal to
/// current_coupling(raw[nu][a]) in both conventions.
inline void current_real(const cplx* psi, double j[4][3]) {
  cplx a0[4][4], a1[4][4];
  alpha_all(psi, a0);
  alpha_all(psi + 4, a1);
  for (int nu = 0; nu < 4; ++nu) {
    double b00 = 0.0, b11 = 0.0, re = 0.0, im = 0.0;
    for (int s = 0; s < 4; ++s) {
      const cplx x = psi[s], y = psi[4 + s];
      b00 += x.real() * a0[nu][s].real() + x.imag() * a0[nu][s].imag();
      b11 += y.real() * a1[nu][s].real() + y.imag() * a1[nu][s].imag();
      // conj(x) * (alpha y)
      re += x.real() * a1[nu][s].real() + x.imag() * a1[nu][s].imag();
      im += x.real() * a1[nu][s].imag() - x.imag() * a1[nu][s].real();
    }
    j[nu][0] = re;
    j[nu][1] = im;
    j[nu][2] = 0.5 * (b00 - b11);
  }
}

/// Real coefficient entering the field equations. Both conventions give the
/// same value: Re<psi, alpha tau_a psi> = Re(i <psi, alpha T_a psi>).
inline double current_coupling(cplx raw, Convention conv) {
  return conv == Convention::physics ? raw.real() : -raw.imag();
}

/// out = i A^a_k alpha^k G_a psi; a holds A^a_k at index 3 k + a.
inline void dirac_coupling(const double* a, const cplx* psi, Convention conv, cplx* out) {
  cplx ap[2][4][4];
  alpha_all(psi, ap[0]);
  alpha_all(psi + 4, ap[1]);
  for (int s = 0; s < 8; ++s) out[s] = 0.0;
  for (int k = 0; k < 3; ++k) {
    // sum_a A^a_k tau_a = 1/2 [[A3, A1 - i A2], [A1 + i A2, -A3]]
    const double a1 = 0.5 * a[3 * k], a2 = 0.5 * a[3 * k + 1], a3 = 0.5 * a[3 * k + 2];
    const cplx m01(a1, -a2), m10(a1, a2);
    const cplx* x = ap[0][k + 1];
    const cplx* y = ap[1][k + 1];
    for (int s = 0; s < 4; ++s) {
      out[s] += a3 * x[s] + m01 * y[s];
      out[4 + s] += m10 * x[s] - a3 * y[s];
    }
  }
  // physics: i tau_a; paper: i T_a = tau_a
  if (conv == Convention::physics)
    for (int s = 0; s < 8; ++s) out[s] = cplx(-out[s].imag(), out[s].real());
}

inline void cross(const double* x, const double* y, double* out) {
  out[0] = x[1] * y[2] - x[2] * y[1];
  out[1] = x[2] * y[0] - x[0] * y[2];
  out[2] = x[0] * y[1] - x[1] * y[0];
}

inline void cross_add(const double* x, const double* y, double s, double* out) {
  out[0] += s * (x[1] * y[2] - x[2] * y[1]);
  out[1] += s * (x[2] * y[0] - x[0] * y[2]);
  out[2] += s * (x[0] * y[1] - x[1] * y[0]);
}

}  // namespace kernel

/// Color current J_nu (nu = 0 charge density, 1..3 spatial). `raw` is the
/// literal inner product under the chosen convention; `j` its real coupling.
struct CurrentField {
  std::array<ComplexLieScalarField, 4> raw;
  std::array<LieScalarField, 4> j;

  explicit CurrentField(const Grid& g)
      : raw{ComplexLieScalarField(g), ComplexLieScalarField(g), ComplexLieScalarField(g), ComplexLieScalarField(g)},
        j{LieScalarField(g), LieScalarField(g), LieScalarField(g), LieScalarField(g)} {}
};

/// Dealiased current of a spinor field.
inline CurrentField current(const SpinorField& psi, Convention conv) {
  const Grid& g = psi.grid();
  const Dealiaser d(g);
  const auto spec = to_spectral(psi);
  FineFields fine;
  std::vector<const cplx*> cs;
  for (std::size_t c = 0; c < 8; ++c) cs.push_back(spec.component(c));
  lift_all(d, {}, cs, fine);
  std::vector<std::vector<cplx>> out(12, std::vector<cplx>(d.fine_size()));
  const std::size_t nf = d.fine_size();
  YMD_PARALLEL_FOR
  for (std::size_t i = 0; i < nf; ++i) {
    cplx p[8];
    for (int c = 0; c < 8; ++c) p[c] = fine.complex[c][i];
    cplx raw[4][3];
    kernel::current(p, conv, raw);
    for (int nu = 0; nu < 4; ++nu)
      for (int a = 0; a < 3; ++a) out[3 * nu + a][i] = raw[nu][a];
  }
  CurrentField r(g);
  for (int nu = 0; nu < 4; ++nu) {
    ComplexLieScalarField s(g);
    for (int a = 0; a < 3; ++a) d.lower(out[3 * nu + a].data(), s.component(a));
    r.raw[nu] = to_complex_space(s);
    for (int a = 0; a < 3; ++a)
      for (std::size_t i = 0; i < g.size(); ++i) r.j[nu](a, i) = kernel::current_coupling(r.raw[nu](a, i), conv);
  }
  return r;
}

}  // namespace ymd
