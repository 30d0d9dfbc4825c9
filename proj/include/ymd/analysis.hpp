#pragma once

// Evaluators for the null-form objects and norms used in the estimates:
// Q_ij, the bracket identities behind the df-df interactions, the angular
// bilinear form, the spinorial null bound and discrete X^{s,b} norms of
// space-time traces.

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ymd/error.hpp"
#include "ymd/fields.hpp"
#include "ymd/grid.hpp"
#include "ymd/spectral.hpp"
#include "ymd/state.hpp"

namespace ymd {

// ---------------------------------------------------------------------------
// null forms

/// Q_ij(u, v) = d_i u d_j v - d_j u d_i v, dealiased.
inline ComplexScalarField qij_null_form(const ComplexScalarField& u, const ComplexScalarField& v, int i, int j) {
  require_same_grid(u.grid(), v.grid(), "qij_null_form");
  const Grid& g = u.grid();
  const Dealiaser d(g);
  const auto su = to_spectral(u), sv = to_spectral(v);
  std::array<std::vector<cplx>, 4> f;
  const int dirs[4][2] = {{0, i}, {1, j}, {0, j}, {1, i}};
  for (int n = 0; n < 4; ++n) {
    auto s = dirs[n][0] == 0 ? su : sv;
    apply_symbol_inplace(MultiplierSpec::derivative(dirs[n][1]), s);
    f[n].resize(d.fine_size());
    d.lift(s.component(0), f[n].data());
  }
  for (std::size_t x = 0; x < d.fine_size(); ++x) f[0][x] = f[0][x] * f[1][x] - f[2][x] * f[3][x];
  ComplexScalarField spec(g);
  d.lower(f[0].data(), spec.component(0));
  return to_complex_space(spec);
}

inline ScalarField qij_null_form(const ScalarField& u, const ScalarField& v, int i, int j) {
  return real_part(qij_null_form(complexify(u), complexify(v), i, j));
}

/// Q_ij[u, v] = [d_i u, d_j v] - [d_j u, d_i v], dealiased.
inline LieScalarField qij_bracket(const LieScalarField& u, const LieScalarField& v, int i, int j) {
  require_same_grid(u.grid(), v.grid(), "qij_bracket");
  const Grid& g = u.grid();
  const Dealiaser d(g);
  const auto su = to_spectral(u), sv = to_spectral(v);
  std::vector<LatticeField<cplx, 3>> parts;
  for (auto [src, dir] : {std::pair{&su, i}, {&sv, j}, {&su, j}, {&sv, i}}) {
    auto s = *src;
    apply_symbol_inplace(MultiplierSpec::derivative(dir), s);
    parts.push_back(std::move(s));
  }
  std::vector<const cplx*> in;
  for (const auto& p : parts)
    for (std::size_t c = 0; c < 3; ++c) in.push_back(p.component(c));
  const auto out = dealiased_real_map(d, in, 3, [](const double* x, double* r) {
    const LieElement a(x[0], x[1], x[2]), b(x[3], x[4], x[5]), c(x[6], x[7], x[8]), e(x[9], x[10], x[11]);
    const LieElement q = commutator(a, b) - commutator(c, e);
    for (std::size_t k = 0; k < 3; ++k) r[k] = q[k];
  });
  LatticeField<cplx, 3> spec(g);
  for (std::size_t c = 0; c < 3; ++c) std::copy(out[c].begin(), out[c].end(), spec.component(c));
  return to_real_space(spec);
}

// ---------------------------------------------------------------------------
// bracket identities for divergence-free connections

namespace detail {

/// P = |grad|^{-2} curl curl, which also removes the mean.
inline void curl_curl_project(LatticeField<cplx, 9>& spec) {
  df_project_spectral(spec);
  for (std::size_t c = 0; c < 9; ++c) spec(c, 0) = cplx{};
}

/// Spectrum of d_i of Lie component block `j` of a vector spectrum.
inline std::vector<cplx> derivative_block(const LatticeField<cplx, 9>& a, int i, std::size_t comp) {
  std::vector<cplx> out(a.sites());
  for_each_mode(a.grid(), [&](std::size_t m, const std::array<double, 3>& k) { out[m] = cplx(0.0, k[i]) * a(comp, m); });
  return out;
}

inline double relative_spectral_deviation(const std::vector<std::vector<cplx>>& lhs,
                                          const std::vector<std::vector<cplx>>& rhs) {
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < lhs.size(); ++c)
    for (std::size_t m = 0; m < lhs[c].size(); ++m) {
      num = std::max(num, std::abs(lhs[c][m] - rhs[c][m]));
      den = std::max(den, std::abs(lhs[c][m]));
    }
  return den > 0.0 ? num / den : num;
}

inline LatticeField<cplx, 9> df_input(const LieVectorField& a) {
  auto spec = to_spectral(a);
  curl_curl_project(spec);
  return spec;
}

}  // namespace detail

/// Spectra (9 blocks, component 3 j + a) of both sides of the df-df bracket
/// identity: lhs_j = [A_i, d_i A_j], and rhs = (1/2) Q^{ik}[B_ik, A_j] with
/// B_ik = |grad|^{-1}(R_i A_k - R_k A_i). Summing the definitions gives
/// rhs = -lhs; the sign comes from the index order in Q^{ik}.
struct IdentitySides {
  std::vector<std::vector<cplx>> lhs;
  std::vector<std::vector<cplx>> rhs;
};

inline IdentitySides df_bracket_sides(const LieVectorField& adf) {
  const Grid& g = adf.grid();
  const Dealiaser d(g);
  const auto a = detail::df_input(adf);

  // direct side: A (9) and d_i A_j (27)
  std::vector<std::vector<cplx>> da;
  for (int i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 9; ++c) da.push_back(detail::derivative_block(a, i, c));
  std::vector<const cplx*> in = component_pointers(a);
  for (const auto& v : da) in.push_back(v.data());
  IdentitySides s;
  s.lhs = dealiased_real_map(d, in, 9, [](const double* x, double* r) {
    for (std::size_t j = 0; j < 3; ++j) {
      LieElement acc;
      for (std::size_t i = 0; i < 3; ++i)
        acc += commutator(LieElement(x[3 * i], x[3 * i + 1], x[3 * i + 2]),
                          LieElement(x[9 + 9 * i + 3 * j], x[9 + 9 * i + 3 * j + 1], x[9 + 9 * i + 3 * j + 2]));
      for (std::size_t c = 0; c < 3; ++c) r[3 * j + c] = acc[c];
    }
  });

  // bracket side: d_i B_ik, d_k B_ik for the three pairs i < k (18), d_i A_j (27)
  std::vector<std::vector<cplx>> db;
  for (const auto& pr : spatial_pairs) {
    const int i = pr[0], k = pr[1];
    for (int dir : {i, k})
      for (std::size_t c = 0; c < 3; ++c) {
        std::vector<cplx> v(g.size());
        for_each_mode(g, [&](std::size_t m, const std::array<double, 3>& q) {
          const double qn = knorm(q);
          if (qn == 0.0) return;
          // |q|^{-1} (i q_i A_k - i q_k A_i) / |q|, then d_dir
          const cplx b = cplx(0.0, 1.0 / (qn * qn)) * (q[i] * a(vc(k, c), m) - q[k] * a(vc(i, c), m));
          v[m] = cplx(0.0, q[dir]) * b;
        });
        db.push_back(std::move(v));
      }
  }
  in.clear();
  for (const auto& v : db) in.push_back(v.data());
  for (const auto& v : da) in.push_back(v.data());
  s.rhs = dealiased_real_map(d, in, 9, [](const double* x, double* r) {
    auto lie = [&](std::size_t o) { return LieElement(x[o], x[o + 1], x[o + 2]); };
    auto dA = [&](std::size_t i, std::size_t j) { return lie(18 + 9 * i + 3 * j); };
    for (std::size_t j = 0; j < 3; ++j) {
      LieElement acc;
      for (std::size_t p = 0; p < 3; ++p) {
        const std::size_t i = spatial_pairs[p][0], k = spatial_pairs[p][1];
        const LieElement di_b = lie(6 * p), dk_b = lie(6 * p + 3);
        // sum over ordered (i, k) doubles the i < k terms; times 1/2
        acc += commutator(di_b, dA(k, j)) - commutator(dk_b, dA(i, j));
      }
      for (std::size_t c = 0; c < 3; ++c) r[3 * j + c] = acc[c];
    }
  });
  return s;
}

/// max |lhs + rhs| / max |lhs| over spectral coefficients.
inline double verify_identity_50(const LieVectorField& adf) {
  auto s = df_bracket_sides(adf);
  for (auto& v : s.rhs)
    for (auto& x : v) x = -x;
  return detail::relative_spectral_deviation(s.lhs, s.rhs);
}

/// lhs_j = P([A_i, d_j A_i]) and rhs_j = |grad|^{-2} d_k Q_jk[A_i, A_i].
inline IdentitySides df_gradient_sides(const LieVectorField& adf) {
  const Grid& g = adf.grid();
  const Dealiaser d(g);
  const auto a = detail::df_input(adf);
  std::vector<std::vector<cplx>> da;
  for (int j = 0; j < 3; ++j)
    for (std::size_t c = 0; c < 9; ++c) da.push_back(detail::derivative_block(a, j, c));
  // component 9 j + 3 i + c of da is d_j A_i^c

  std::vector<const cplx*> in = component_pointers(a);
  for (const auto& v : da) in.push_back(v.data());
  const auto prod = dealiased_real_map(d, in, 9, [](const double* x, double* r) {
    for (std::size_t j = 0; j < 3; ++j) {
      LieElement acc;
      for (std::size_t i = 0; i < 3; ++i)
        acc += commutator(LieElement(x[3 * i], x[3 * i + 1], x[3 * i + 2]),
                          LieElement(x[9 + 9 * j + 3 * i], x[9 + 9 * j + 3 * i + 1], x[9 + 9 * j + 3 * i + 2]));
      for (std::size_t c = 0; c < 3; ++c) r[3 * j + c] = acc[c];
    }
  });
  LatticeField<cplx, 9> lhs(g);
  for (std::size_t c = 0; c < 9; ++c) std::copy(prod[c].begin(), prod[c].end(), lhs.component(c));
  detail::curl_curl_project(lhs);

  // Q_jk[A_i, A_i] = 2 [d_j A_i, d_k A_i] for the pairs j < k
  in.clear();
  for (const auto& v : da) in.push_back(v.data());
  const auto q = dealiased_real_map(d, in, 9, [](const double* x, double* r) {
    for (std::size_t p = 0; p < 3; ++p) {
      const std::size_t j = spatial_pairs[p][0], k = spatial_pairs[p][1];
      LieElement acc;
      for (std::size_t i = 0; i < 3; ++i)
        acc += 2.0 * commutator(LieElement(x[9 * j + 3 * i], x[9 * j + 3 * i + 1], x[9 * j + 3 * i + 2]),
                                LieElement(x[9 * k + 3 * i], x[9 * k + 3 * i + 1], x[9 * k + 3 * i + 2]));
      for (std::size_t c = 0; c < 3; ++c) r[3 * p + c] = acc[c];
    }
  });
  IdentitySides s;
  s.rhs.assign(9, std::vector<cplx>(g.size()));
  for_each_mode(g, [&](std::size_t m, const std::array<double, 3>& k) {
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (k2 == 0.0) return;
    for (int j = 0; j < 3; ++j)
      for (int kk = 0; kk < 3; ++kk) {
        if (kk == j) continue;
        const double sign = j < kk ? 1.0 : -1.0;
        const std::size_t p = std::size_t(pair_index(j, kk));
        for (std::size_t c = 0; c < 3; ++c) s.rhs[3 * j + c][m] += sign * cplx(0.0, k[kk] / k2) * q[3 * p + c][m];
      }
  });
  s.lhs.resize(9);
  for (std::size_t c = 0; c < 9; ++c) s.lhs[c].assign(lhs.component(c), lhs.component(c) + g.size());
  return s;
}

inline double verify_identity_N3(const LieVectorField& adf) {
  const auto s = df_gradient_sides(adf);
  return detail::relative_spectral_deviation(s.lhs, s.rhs);
}

// ---------------------------------------------------------------------------
// space-time traces

/// Uniformly sampled time slices of a C-component field, slice m at t0 + m dt.
struct SpaceTimeTrace {
  Grid grid;
  double dt = 0.0;
  std::size_t components = 0;
  std::vector<std::vector<cplx>> slices;

  SpaceTimeTrace(const Grid& g, double step, std::size_t c) : grid(g), dt(step), components(c) {}

  template <class T, std::size_t C>
  void push(const LatticeField<T, C>& f) {
    require_same_grid(grid, f.grid(), "SpaceTimeTrace::push");
    if (C != components) throw Error(ErrorCode::dimension_mismatch, "trace component count");
    std::vector<cplx> s(f.data().size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = f.data()[i];
    slices.push_back(std::move(s));
  }

  std::size_t steps() const { return slices.size(); }
  double period() const { return dt * double(slices.size()); }
};

/// Coefficients c(n, comp, site) with tau_n = 2 pi n / (M dt), n in FFT order.
struct SpaceTimeSpectrum {
  Grid grid;
  std::size_t steps = 0;
  std::size_t components = 0;
  double dt = 0.0;
  std::vector<cplx> c;

  cplx& at(std::size_t n, std::size_t comp, std::size_t site) { return c[(n * components + comp) * grid.size() + site]; }
  cplx at(std::size_t n, std::size_t comp, std::size_t site) const {
    return c[(n * components + comp) * grid.size() + site];
  }
  int signed_step(std::size_t n) const { return int(n) < int(steps + 1) / 2 ? int(n) : int(n) - int(steps); }
  double tau(std::size_t n) const { return 2.0 * std::numbers::pi * signed_step(n) / (dt * double(steps)); }
};

/// Periodic Hann taper sin^2(pi m / M).
inline double hann(std::size_t m, std::size_t steps) {
  const double s = std::sin(std::numbers::pi * double(m) / double(steps));
  return s * s;
}

/// (mean of w^2)^{1/2}: the factor the taper applies to a single mode's l^2 mass.
inline double hann_l2_factor(std::size_t steps) {
  double s = 0.0;
  for (std::size_t m = 0; m < steps; ++m) s += std::pow(hann(m, steps), 2);
  return std::sqrt(s / double(steps));
}

namespace detail {
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Length-M transforms along the slowest axis of a [M][width] array.
inline void time_fft(std::vector<cplx>& data, std::size_t steps, std::size_t width, int sign) {
  int n = int(steps);
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_many_dft(1, &n, int(width), p, nullptr, int(width), 1, p, nullptr, int(width), 1, sign,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (!plan) throw Error(ErrorCode::invalid_argument, "fftw planning failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}
}  // namespace detail

/// Normalized space-time DFT, optionally Hann-tapered in time.
inline SpaceTimeSpectrum space_time_transform(const SpaceTimeTrace& tr, bool window) {
  if (tr.steps() == 0) throw Error(ErrorCode::invalid_argument, "empty trace");
  const Grid& g = tr.grid;
  const std::size_t n = g.size(), width = tr.components * n, steps = tr.steps();
  SpaceTimeSpectrum s{g, steps, tr.components, tr.dt, std::vector<cplx>(steps * width)};
  const FFT3& f = fft_for(g.n());
  const double norm = 1.0 / (double(n) * double(steps));
  for (std::size_t m = 0; m < steps; ++m) {
    if (tr.slices[m].size() != width) throw Error(ErrorCode::dimension_mismatch, "trace slices differ in size");
    const double w = window ? hann(m, steps) : 1.0;
    cplx* dst = s.c.data() + m * width;
    for (std::size_t i = 0; i < width; ++i) dst[i] = tr.slices[m][i] * (w * norm);
    for (std::size_t comp = 0; comp < tr.components; ++comp) f.forward(dst + comp * n);
  }
  detail::time_fft(s.c, steps, width, FFTW_FORWARD);
  return s;
}

inline SpaceTimeTrace inverse_space_time_transform(const SpaceTimeSpectrum& s) {
  const std::size_t n = s.grid.size(), width = s.components * n;
  std::vector<cplx> data = s.c;
  detail::time_fft(data, s.steps, width, FFTW_BACKWARD);
  const FFT3& f = fft_for(s.grid.n());
  SpaceTimeTrace tr(s.grid, s.dt, s.components);
  for (std::size_t m = 0; m < s.steps; ++m) {
    std::vector<cplx> slice(data.begin() + m * width, data.begin() + (m + 1) * width);
    for (std::size_t comp = 0; comp < s.components; ++comp) f.backward(slice.data() + comp * n);
    tr.slices.push_back(std::move(slice));
  }
  return tr;
}

// ---------------------------------------------------------------------------
// X^{s,b} norms

enum class XsbFlavor { plus, minus, cone, time };

inline const char* to_string(XsbFlavor f) {
  switch (f) {
    case XsbFlavor::plus: return "+";
    case XsbFlavor::minus: return "-";
    case XsbFlavor::cone: return "|tau|=|xi|";
    case XsbFlavor::time: return "tau=0";
  }
  return "?";
}

struct XsbSpec {
  double s = 0.0;
  double b = 0.0;
  XsbFlavor flavor = XsbFlavor::plus;
};

/// Modulation distance for the flavor: tau -+ |xi|, |tau| - |xi| or tau.
inline double modulation(XsbFlavor f, double tau, double xi) {
  switch (f) {
    case XsbFlavor::plus: return tau - xi;
    case XsbFlavor::minus: return tau + xi;
    case XsbFlavor::cone: return std::abs(tau) - xi;
    case XsbFlavor::time: return tau;
  }
  return tau;
}

struct XsbNorm {
  double value = 0.0;
  /// Hann l^2 factor, e.g. sqrt(3/8): a single on-grid mode of unit
  /// amplitude has b = 0 norm <xi>^s (L^3 T)^{1/2} times this.
  double window_l2 = 0.0;
};

/// (L^3 T sum <xi>^{2s} <mod>^{2b} |u^(tau, xi)|^2)^{1/2} of the tapered trace.
inline XsbNorm xsb_norm(const SpaceTimeTrace& tr, const XsbSpec& spec) {
  if (tr.steps() < 8) throw Error(ErrorCode::invalid_argument, "X^{s,b} norm needs at least 8 time slices");
  if (!std::isfinite(spec.s) || !std::isfinite(spec.b)) throw Error(ErrorCode::invalid_argument, "X^{s,b} exponents");
  const auto u = space_time_transform(tr, true);
  const Grid& g = tr.grid;
  std::vector<double> xi(g.size()), xs(g.size());
  for_each_mode(g, [&](std::size_t m, const std::array<double, 3>& k) {
    xi[m] = knorm(k);
    xs[m] = std::pow(1.0 + xi[m] * xi[m], spec.s);
  });
  double total = 0.0;
  for (std::size_t n = 0; n < u.steps; ++n) {
    const double tau = u.tau(n);
    for (std::size_t comp = 0; comp < u.components; ++comp)
      for (std::size_t m = 0; m < g.size(); ++m) {
        const double a = std::norm(u.at(n, comp, m));
        if (a == 0.0) continue;
        const double mod = modulation(spec.flavor, tau, xi[m]);
        total += xs[m] * std::pow(1.0 + mod * mod, spec.b) * a;
      }
  }
  return {std::sqrt(total * g.volume() * tr.period()), hann_l2_factor(tr.steps())};
}

// ---------------------------------------------------------------------------
// angular bilinear form

/// Angle between two vectors in [0, pi]; 0 when either vanishes.
inline double vector_angle(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const std::array<double, 3> c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  const double d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  if (knorm(a) == 0.0 || knorm(b) == 0.0) return 0.0;
  return std::atan2(knorm(c), d);
}

inline constexpr std::size_t angular_bilinear_max_modes = std::size_t(1) << 18;

/// F(B)(tau, xi) = sum over tau1 + tau2 = tau, xi1 + xi2 = xi of
/// angle(s1 xi1, s2 xi2) u^(tau1, xi1) v^(tau2, xi2), by direct summation.
/// Sums leaving the band are dropped. Scalar traces only.
inline SpaceTimeSpectrum angular_bilinear_spectrum(const SpaceTimeTrace& u, const SpaceTimeTrace& v, int sign1,
                                                   int sign2) {
  require_same_grid(u.grid, v.grid, "angular_bilinear");
  if (u.components != 1 || v.components != 1) throw Error(ErrorCode::invalid_argument, "angular_bilinear: scalar traces");
  if (u.steps() != v.steps()) throw Error(ErrorCode::dimension_mismatch, "angular_bilinear: trace lengths differ");
  const Grid& g = u.grid;
  const std::size_t steps = u.steps(), n = g.size();
  if (steps * n > angular_bilinear_max_modes)
    throw Error(ErrorCode::cost_guard, "angular_bilinear: " + std::to_string(steps * n) + " space-time modes exceeds 2^18");
  const auto su = space_time_transform(u, false), sv = space_time_transform(v, false);
  SpaceTimeSpectrum out{g, steps, 1, u.dt, std::vector<cplx>(steps * n)};

  struct Entry {
    int t;
    int m[3];
    cplx c;
  };
  std::vector<Entry> nz;
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 0; i < n; ++i)
      if (su.at(t, 0, i) != cplx{}) {
        int x, y, z;
        g.coords(i, x, y, z);
        nz.push_back({su.signed_step(t), {g.signed_mode(x), g.signed_mode(y), g.signed_mode(z)}, su.at(t, 0, i)});
      }
  const int half = g.n() / 2, ts = int(steps);
  const double k0 = g.k0();
  auto wrap = [](int m, int len) { return m < 0 ? m + len : m; };
  YMD_PARALLEL_FOR
  for (std::size_t o = 0; o < steps * n; ++o) {
    const std::size_t t = o / n, i = o % n;
    int x, y, z;
    g.coords(i, x, y, z);
    const int tt = out.signed_step(t);
    const int m[3] = {g.signed_mode(x), g.signed_mode(y), g.signed_mode(z)};
    if (std::abs(m[0]) >= half || std::abs(m[1]) >= half || std::abs(m[2]) >= half) continue;
    cplx acc{};
    for (const auto& e : nz) {
      const int t2 = tt - e.t;
      if (t2 < -ts / 2 || t2 > (ts - 1) / 2) continue;
      int m2[3];
      bool in_band = true;
      for (int a = 0; a < 3; ++a) {
        m2[a] = m[a] - e.m[a];
        if (std::abs(m2[a]) >= half) in_band = false;
      }
      if (!in_band) continue;
      const cplx c2 = sv.at(std::size_t(wrap(t2, ts)), 0, g.index(wrap(m2[0], g.n()), wrap(m2[1], g.n()), wrap(m2[2], g.n())));
      if (c2 == cplx{}) continue;
      const std::array<double, 3> a1{sign1 * k0 * e.m[0], sign1 * k0 * e.m[1], sign1 * k0 * e.m[2]};
      const std::array<double, 3> a2{sign2 * k0 * m2[0], sign2 * k0 * m2[1], sign2 * k0 * m2[2]};
      acc += vector_angle(a1, a2) * e.c * c2;
    }
    out.c[o] = acc;
  }
  return out;
}

inline SpaceTimeTrace angular_bilinear(const SpaceTimeTrace& u, const SpaceTimeTrace& v, int sign1, int sign2) {
  return inverse_space_time_transform(angular_bilinear_spectrum(u, v, sign1, sign2));
}

// ---------------------------------------------------------------------------
// spinorial null bound

struct SpinorialScan {
  std::size_t samples = 0;
  /// sup |Pi(xi1) Pi(-xi2) z| / (|z| angle) over the random z
  double max_ratio = 0.0;
  /// same with the operator norm in place of the random z
  double max_operator_ratio = 0.0;
  /// least-squares fit of ||Pi(xi1) Pi(-xi2)|| against angle for angles < 0.1
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t small_angle_samples = 0;
};

inline double operator_norm(const Mat4& m) {
  Eigen::Matrix4cd e;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) e(r, c) = m.m[r][c];
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(e.adjoint() * e, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Half the samples draw xi1, xi2 independently and uniformly on the sphere;
/// the other half rotate xi1 by a uniform angle in (0, 0.1) about a random
/// perpendicular axis, so the small-angle fit has data.
inline SpinorialScan spinorial_bound_scan(std::size_t samples, std::uint64_t seed = 1) {
  if (samples < 10000) throw Error(ErrorCode::invalid_argument, "spinorial scan needs at least 10^4 samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 0.1);
  auto unit = [&] {
    std::array<double, 3> v;
    double n;
    do {
      v = {nd(rng), nd(rng), nd(rng)};
      n = knorm(v);
    } while (n < 1e-12);
    for (auto& x : v) x /= n;
    return v;
  };
  SpinorialScan r;
  r.samples = samples;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto a = unit();
    std::array<double, 3> b;
    if (s % 2 == 0) {
      b = unit();
    } else {
      // rotate a by theta about an axis perpendicular to a
      auto w = unit();
      const double d = w[0] * a[0] + w[1] * a[1] + w[2] * a[2];
      for (int i = 0; i < 3; ++i) w[i] -= d * a[i];
      const double wn = knorm(w);
      for (auto& x : w) x /= wn;
      const double th = ud(rng);
      for (int i = 0; i < 3; ++i) b[i] = std::cos(th) * a[i] + std::sin(th) * w[i];
    }
    const double ang = vector_angle(a, b);
    const Mat4 m = dirac_projector_matrix(+1, a) * dirac_projector_matrix(-1, b);
    std::array<cplx, 4> z;
    for (auto& x : z) x = cplx(nd(rng), nd(rng));
    const auto mz = m.apply(z);
    double zn = 0, mn = 0;
    for (int i = 0; i < 4; ++i) {
      zn += std::norm(z[i]);
      mn += std::norm(mz[i]);
    }
    const double op = operator_norm(m);
    if (ang > 0.0) {
      r.max_ratio = std::max(r.max_ratio, std::sqrt(mn / zn) / ang);
      r.max_operator_ratio = std::max(r.max_operator_ratio, op / ang);
    }
    if (ang < 0.1) {
      ++r.small_angle_samples;
      sx += ang;
      sy += op;
      sxx += ang * ang;
      sxy += ang * op;
      syy += op * op;
    }
  }
  const double n = double(r.small_angle_samples);
  if (n >= 2) {
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    r.slope = cxy / vx;
    r.intercept = (sy - r.slope * sx) / n;
    r.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// regularity report

/// Traces of the split unknowns recorded during a run.
struct RunTraces {
  SpaceTimeTrace acf;
  SpaceTimeTrace adf_plus;
  SpaceTimeTrace adf_minus;
  SpaceTimeTrace psi_plus;
  SpaceTimeTrace psi_minus;

  RunTraces(const Grid& g, double dt)
      : acf(g, dt, 9), adf_plus(g, dt, 9), adf_minus(g, dt, 9), psi_plus(g, dt, 8), psi_minus(g, dt, 8) {}

  void record(const SimulationState& s) {
    acf.push(s.acf);
    adf_plus.push(s.adf_plus);
    adf_minus.push(s.adf_minus);
    psi_plus.push(s.psi_plus);
    psi_minus.push(s.psi_minus);
  }
  std::size_t steps() const { return acf.steps(); }
};

struct RegularityRow {
  std::string field;
  XsbSpec spec;
  XsbNorm norm;
};

/// The theorem's spaces: A^cf in X^{s+1/4, 1/2+delta}_{tau=0}, A^df_pm in
/// X^{s, 3/4+delta}_pm, psi_pm in X^{l, 1/2+delta}. A^df_pm oscillates like
/// e^{pm i <xi> t} and sits on the pm cone. psi_pm = Pi_pm psi oscillates like
/// e^{-+ i |xi| t} under -i alpha.grad = |grad| (Pi_+ - Pi_-), so its norm is
/// taken on the cone it actually occupies.
inline std::vector<RegularityRow> regularity_report(const RunTraces& tr, double s, double l, double delta) {
  std::vector<RegularityRow> rows;
  auto add = [&](const char* name, const SpaceTimeTrace& t, XsbSpec spec) {
    rows.push_back({name, spec, xsb_norm(t, spec)});
  };
  add("acf", tr.acf, {s + 0.25, 0.5 + delta, XsbFlavor::time});
  add("adf_plus", tr.adf_plus, {s, 0.75 + delta, XsbFlavor::plus});
  add("adf_minus", tr.adf_minus, {s, 0.75 + delta, XsbFlavor::minus});
  add("psi_plus", tr.psi_plus, {l, 0.5 + delta, XsbFlavor::minus});
  add("psi_minus", tr.psi_minus, {l, 0.5 + delta, XsbFlavor::plus});
  return rows;
}

}  // namespace ymd
