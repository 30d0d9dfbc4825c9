#pragma once

// Evolution unknowns for the split system and for the second-order system,
// and the maps between them.

#include "ymd/grid.hpp"
#include "ymd/spectral.hpp"

namespace ymd {

/// A = A^df_+ + A^df_- + A^cf and psi = psi_+ + psi_-, with
/// A^df_pm = (A^df -+ i <grad>^-1 d_t A^df) / 2 and psi_pm = Pi_pm psi.
struct SimulationState {
  ComplexLieVectorField adf_plus;
  ComplexLieVectorField adf_minus;
  LieVectorField acf;
  /// d_t A^cf, kept consistent with the constraint equation.
  LieVectorField dtacf;
  SpinorField psi_plus;
  SpinorField psi_minus;
  double t = 0.0;
  Convention convention = Convention::physics;

  explicit SimulationState(const Grid& g)
      : adf_plus(g), adf_minus(g), acf(g), dtacf(g), psi_plus(g), psi_minus(g) {}
  const Grid& grid() const { return acf.grid(); }
};

/// (A, d_t A, psi) of the second-order formulation.
struct SecondOrderState {
  LieVectorField a;
  LieVectorField dta;
  SpinorField psi;
  double t = 0.0;

  explicit SecondOrderState(const Grid& g) : a(g), dta(g), psi(g) {}
  const Grid& grid() const { return a.grid(); }
};

inline SimulationState split_from(const SecondOrderState& s, Convention conv) {
  const Grid& g = s.grid();
  SimulationState out(g);
  out.t = s.t;
  out.convention = conv;
  auto a = to_spectral(s.a);
  auto dta = to_spectral(s.dta);
  auto acf = a, dtacf = dta;
  cf_project_spectral(acf);
  cf_project_spectral(dtacf);
  a -= acf;
  dta -= dtacf;
  out.acf = to_real_space(acf);
  out.dtacf = to_real_space(dtacf);
  ComplexLieVectorField plus(g), minus(g);
  for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
    const double w = 1.0 / std::sqrt(1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    for (std::size_t c = 0; c < 9; ++c) {
      const cplx u = a(c, i), v = I_unit * w * dta(c, i);
      plus(c, i) = 0.5 * (u - v);
      minus(c, i) = 0.5 * (u + v);
    }
  });
  out.adf_plus = to_complex_space(plus);
  out.adf_minus = to_complex_space(minus);
  out.psi_plus = dirac_project(+1, s.psi);
  out.psi_minus = dirac_project(-1, s.psi);
  return out;
}

/// A^df and d_t A^df = i <grad> (A_+ - A_-) from the half-waves.
inline void reconstruct_df(const SimulationState& s, LieVectorField& adf, LieVectorField& dtadf) {
  const Grid& g = s.grid();
  const auto p = to_spectral(s.adf_plus), m = to_spectral(s.adf_minus);
  ComplexLieVectorField a(g), d(g);
  for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
    const double w = std::sqrt(1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    for (std::size_t c = 0; c < 9; ++c) {
      a(c, i) = p(c, i) + m(c, i);
      d(c, i) = I_unit * w * (p(c, i) - m(c, i));
    }
  });
  // the half-waves are conjugate pairs, so both results are real up to
  // round-off; keep the real parts
  adf = real_part(to_complex_space(a));
  dtadf = real_part(to_complex_space(d));
}

inline SecondOrderState second_order_from(const SimulationState& s) {
  SecondOrderState out(s.grid());
  out.t = s.t;
  reconstruct_df(s, out.a, out.dta);
  out.a += s.acf;
  out.dta += s.dtacf;
  out.psi = s.psi_plus + s.psi_minus;
  return out;
}

}  // namespace ymd
