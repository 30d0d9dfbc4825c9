#pragma once

// Fourier-multiplier layer on the periodic grid.
//
// Spectral coefficients are Fourier-series coefficients, c_m = FFT(u)_m / N^3,
// so u(x) = sum_m c_m exp(i k0 m.x) and a coefficient does not depend on the
// grid it is sampled on. All differential symbols use Grid::kappa.

#include <fftw3.h>

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "ymd/grid.hpp"
#include "ymd/liealg.hpp"

namespace ymd {

/// In-place 3D complex transform of size n^3, unnormalized in both directions.
/// FFTW_ESTIMATE keeps the plan, and so the bits of every result, independent
/// of timing. Arrays off the 16-byte grid use a separate unaligned plan.
class FFT3 {
 public:
  explicit FFT3(int n) : n_(n) {
    std::vector<cplx> scratch(std::size_t(n) * n * n);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    forward_ = fftw_plan_dft_3d(n, n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_3d(n, n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    forward_u_ = fftw_plan_dft_3d(n, n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_u_ = fftw_plan_dft_3d(n, n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!forward_ || !backward_ || !forward_u_ || !backward_u_)
      throw Error(ErrorCode::invalid_argument, "fftw planning failed");
  }
  ~FFT3() {
    for (auto* p : {forward_, backward_, forward_u_, backward_u_}) fftw_destroy_plan(p);
  }
  FFT3(const FFT3&) = delete;
  FFT3& operator=(const FFT3&) = delete;

  int n() const { return n_; }
  void forward(cplx* data) const { run(forward_, forward_u_, data); }
  void backward(cplx* data) const { run(backward_, backward_u_, data); }

 private:
  static void run(fftw_plan aligned, fftw_plan unaligned, cplx* data) {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(fftw_alignment_of(reinterpret_cast<double*>(data)) == 0 ? aligned : unaligned, p, p);
  }

  int n_;
  fftw_plan forward_, backward_, forward_u_, backward_u_;
};

/// Plans are created once per size and shared.
inline const FFT3& fft_for(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<FFT3>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FFT3>(n);
  return *slot;
}

// ---------------------------------------------------------------------------
// transforms

namespace detail {

/// Split H = FFT(a + i b) of two real fields into the spectra of a and b.
inline void split_pair(const Grid& g, const cplx* h, cplx* a, cplx* b) {
  const int n = g.n();
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const std::size_t i = g.index(x, y, z);
        const cplx hm = std::conj(h[g.index(g.mirror(x), g.mirror(y), g.mirror(z))]);
        a[i] = 0.5 * (h[i] + hm);
        if (b) b[i] = cplx(0.0, -0.5) * (h[i] - hm);
      }
}

}  // namespace detail

template <std::size_t C>
LatticeField<cplx, C> to_spectral(const LatticeField<double, C>& f) {
  const Grid& g = f.grid();
  const FFT3& t = fft_for(g.n());
  const double norm = 1.0 / double(g.size());
  LatticeField<cplx, C> out(g);
  std::vector<cplx> buf(g.size());
  for (std::size_t c = 0; c < C; c += 2) {
    const bool pair = c + 1 < C;
    const double* a = f.component(c);
    const double* b = pair ? f.component(c + 1) : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] = cplx(a[i], b ? b[i] : 0.0) * norm;
    t.forward(buf.data());
    detail::split_pair(g, buf.data(), out.component(c), pair ? out.component(c + 1) : nullptr);
  }
  return out;
}

template <std::size_t C>
LatticeField<cplx, C> to_spectral(const LatticeField<cplx, C>& f) {
  const Grid& g = f.grid();
  const FFT3& t = fft_for(g.n());
  const double norm = 1.0 / double(g.size());
  LatticeField<cplx, C> out(g);
  for (std::size_t c = 0; c < C; ++c) {
    cplx* o = out.component(c);
    const cplx* in = f.component(c);
    for (std::size_t i = 0; i < g.size(); ++i) o[i] = in[i] * norm;
    t.forward(o);
  }
  return out;
}

/// Inverse transform of spectra known to be hermitian; pairs components.
template <std::size_t C>
LatticeField<double, C> to_real_space(const LatticeField<cplx, C>& spec) {
  const Grid& g = spec.grid();
  const FFT3& t = fft_for(g.n());
  LatticeField<double, C> out(g);
  std::vector<cplx> buf(g.size());
  for (std::size_t c = 0; c < C; c += 2) {
    const bool pair = c + 1 < C;
    const cplx* a = spec.component(c);
    const cplx* b = pair ? spec.component(c + 1) : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] = a[i] + (b ? cplx(0.0, 1.0) * b[i] : cplx{});
    t.backward(buf.data());
    double* oa = out.component(c);
    double* ob = pair ? out.component(c + 1) : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) {
      oa[i] = buf[i].real();
      if (ob) ob[i] = buf[i].imag();
    }
  }
  return out;
}

template <std::size_t C>
LatticeField<cplx, C> to_complex_space(const LatticeField<cplx, C>& spec) {
  const Grid& g = spec.grid();
  const FFT3& t = fft_for(g.n());
  LatticeField<cplx, C> out = spec;
  for (std::size_t c = 0; c < C; ++c) t.backward(out.component(c));
  return out;
}

// ---------------------------------------------------------------------------
// mode iteration

/// Calls f(index, kappa) for every mode, kappa being the operator wavevector.
template <class F>
void for_each_mode(const Grid& g, F&& f) {
  const int n = g.n();
  std::vector<double> k(n);
  for (int i = 0; i < n; ++i) k[i] = g.kappa(i);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) f(g.index(x, y, z), std::array<double, 3>{k[x], k[y], k[z]});
}

inline double knorm(const std::array<double, 3>& k) { return std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]); }
inline double bracket(double k) { return std::sqrt(1.0 + k * k); }

/// True for modes with a Nyquist index on some axis.
inline bool is_nyquist_mode(const Grid& g, std::size_t idx) {
  int x, y, z;
  g.coords(idx, x, y, z);
  const int h = g.n() / 2;
  return x == h || y == h || z == h;
}

/// Zero every Nyquist coefficient.
template <std::size_t C>
void remove_nyquist_spectral(LatticeField<cplx, C>& spec) {
  const Grid& g = spec.grid();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (is_nyquist_mode(g, i))
      for (std::size_t c = 0; c < C; ++c) spec(c, i) = cplx{};
}

/// Projection onto the band |m| <= N/2 - 1 on every axis.
template <std::size_t C>
LatticeField<double, C> band_limited(const LatticeField<double, C>& f) {
  auto spec = to_spectral(f);
  remove_nyquist_spectral(spec);
  return to_real_space(spec);
}

template <std::size_t C>
LatticeField<cplx, C> band_limited(const LatticeField<cplx, C>& f) {
  auto spec = to_spectral(f);
  remove_nyquist_spectral(spec);
  return to_complex_space(spec);
}

// ---------------------------------------------------------------------------
// multipliers

enum class MultiplierKind {
  abs_grad_pow,    // |grad|^alpha
  bracket_pow,     // <grad>^alpha
  riesz,           // R_j = d_j / |grad|
  modified_riesz,  // R^j_pm = -+ d_j / (i |grad|)
  derivative,      // d_j
  df_component,    // j-th component of the divergence-free projection
  cf_component,    // j-th component of the curl-free projection
};

struct MultiplierSpec {
  MultiplierKind kind = MultiplierKind::derivative;
  double alpha = 0.0;
  int j = 0;
  int sign = +1;
  /// Test hook: deliberately wrong symbol (used to check that verification
  /// notices a broken operator).
  bool corrupt = false;

  static MultiplierSpec abs_grad(double a) { return {MultiplierKind::abs_grad_pow, a}; }
  static MultiplierSpec japanese(double a) { return {MultiplierKind::bracket_pow, a}; }
  static MultiplierSpec riesz(int j) { return {MultiplierKind::riesz, 0.0, j}; }
  static MultiplierSpec modified_riesz(int j, int sign) { return {MultiplierKind::modified_riesz, 0.0, j, sign}; }
  static MultiplierSpec derivative(int j) { return {MultiplierKind::derivative, 0.0, j}; }
};

/// Symbol of a scalar multiplier at wavevector k; zero mode per the module
/// conventions (R_j, R^j_pm and negative powers of |grad| vanish there).
inline cplx multiplier_symbol(const MultiplierSpec& s, const std::array<double, 3>& k) {
  const double kn = knorm(k);
  switch (s.kind) {
    case MultiplierKind::abs_grad_pow:
      if (kn == 0.0) return s.alpha == 0.0 ? 1.0 : 0.0;
      return std::pow(kn, s.alpha);
    case MultiplierKind::bracket_pow:
      return std::pow(1.0 + kn * kn, 0.5 * s.alpha);
    case MultiplierKind::riesz:
      return kn == 0.0 ? cplx{} : cplx(0.0, k[s.j] / kn);
    case MultiplierKind::modified_riesz: {
      if (kn == 0.0) return 0.0;
      const double v = -s.sign * k[s.j] / kn;
      return s.corrupt ? -v : v;
    }
    case MultiplierKind::derivative:
      return cplx(0.0, k[s.j]);
    case MultiplierKind::df_component:
    case MultiplierKind::cf_component:
      break;
  }
  throw Error(ErrorCode::invalid_argument, "projection multipliers act on vector fields");
}

/// Multiply every component's spectrum by the symbol, in place.
template <std::size_t C>
void apply_symbol_inplace(const MultiplierSpec& s, LatticeField<cplx, C>& spec) {
  const Grid& g = spec.grid();
  for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
    const cplx m = multiplier_symbol(s, k);
    for (std::size_t c = 0; c < C; ++c) spec(c, i) *= m;
  });
}

inline bool preserves_reality(const MultiplierSpec& s) { return s.kind != MultiplierKind::modified_riesz; }

template <std::size_t C>
LatticeField<cplx, C> apply_multiplier(const MultiplierSpec& s, const LatticeField<cplx, C>& f) {
  auto spec = to_spectral(f);
  apply_symbol_inplace(s, spec);
  return to_complex_space(spec);
}

template <std::size_t C>
LatticeField<double, C> apply_multiplier(const MultiplierSpec& s, const LatticeField<double, C>& f) {
  if (!preserves_reality(s))
    throw Error(ErrorCode::invalid_argument, "multiplier does not map real fields to real fields");
  auto spec = to_spectral(f);
  apply_symbol_inplace(s, spec);
  return to_real_space(spec);
}

// ---------------------------------------------------------------------------
// Hodge decomposition

/// Curl-free projection of vector spectra, sum_k k_j k_l / |k|^2 in place;
/// the zero mode (and |k| = 0 Nyquist modes) map to 0.
template <class T>
void cf_project_spectral(LatticeField<T, 9>& spec) {
  const Grid& g = spec.grid();
  for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    for (std::size_t a = 0; a < 3; ++a) {
      if (k2 == 0.0) {
        for (std::size_t j = 0; j < 3; ++j) spec(vc(j, a), i) = T{};
        continue;
      }
      const T dot = (k[0] * spec(vc(0, a), i) + k[1] * spec(vc(1, a), i) + k[2] * spec(vc(2, a), i)) / k2;
      for (std::size_t j = 0; j < 3; ++j) spec(vc(j, a), i) = k[j] * dot;
    }
  });
}

template <class T>
void df_project_spectral(LatticeField<T, 9>& spec) {
  auto cf = spec;
  cf_project_spectral(cf);
  spec -= cf;
}

struct HodgeParts {
  LieVectorField df;
  LieVectorField cf;
};

/// A = df + cf with the mean carried by df.
inline HodgeParts hodge_split(const LieVectorField& a) {
  auto spec = to_spectral(a);
  cf_project_spectral(spec);
  HodgeParts parts{LieVectorField(a.grid()), to_real_space(spec)};
  parts.df = a;
  parts.df -= parts.cf;
  return parts;
}

inline LieVectorField df_part(const LieVectorField& a) { return hodge_split(a).df; }
inline LieVectorField cf_part(const LieVectorField& a) { return hodge_split(a).cf; }

/// Component j of the df or cf projection of a Lie vector field.
inline LieScalarField project_component(const MultiplierSpec& s, const LieVectorField& a) {
  if (s.kind != MultiplierKind::df_component && s.kind != MultiplierKind::cf_component)
    throw Error(ErrorCode::invalid_argument, "project_component needs a projection multiplier");
  const auto parts = hodge_split(a);
  const auto& src = s.kind == MultiplierKind::df_component ? parts.df : parts.cf;
  LieScalarField out(a.grid());
  for (std::size_t c = 0; c < 3; ++c)
    std::copy(src.component(vc(s.j, c)), src.component(vc(s.j, c)) + a.sites(), out.component(c));
  return out;
}

// ---------------------------------------------------------------------------
// vector calculus (spectral)

inline LieScalarField divergence(const LieVectorField& a) {
  auto spec = to_spectral(a);
  LatticeField<cplx, 3> d(a.grid());
  for_each_mode(a.grid(), [&](std::size_t i, const std::array<double, 3>& k) {
    for (std::size_t c = 0; c < 3; ++c)
      d(c, i) = cplx(0.0, 1.0) * (k[0] * spec(vc(0, c), i) + k[1] * spec(vc(1, c), i) + k[2] * spec(vc(2, c), i));
  });
  return to_real_space(d);
}

inline LieVectorField gradient(const LieScalarField& f) {
  auto spec = to_spectral(f);
  LatticeField<cplx, 9> d(f.grid());
  for_each_mode(f.grid(), [&](std::size_t i, const std::array<double, 3>& k) {
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t c = 0; c < 3; ++c) d(vc(j, c), i) = cplx(0.0, k[j]) * spec(c, i);
  });
  return to_real_space(d);
}

/// (curl A)_j = eps_jkl d_k A_l, per Lie coefficient.
inline LieVectorField curl(const LieVectorField& a) {
  auto spec = to_spectral(a);
  LatticeField<cplx, 9> d(a.grid());
  for_each_mode(a.grid(), [&](std::size_t i, const std::array<double, 3>& k) {
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t p = (j + 1) % 3, q = (j + 2) % 3;
        d(vc(j, c), i) = cplx(0.0, 1.0) * (k[p] * spec(vc(q, c), i) - k[q] * spec(vc(p, c), i));
      }
  });
  return to_real_space(d);
}

/// d_j of every component.
template <std::size_t C>
LatticeField<double, C> partial(int j, const LatticeField<double, C>& f) {
  return apply_multiplier(MultiplierSpec::derivative(j), f);
}

// ---------------------------------------------------------------------------
// Dirac projections

/// Pi(sign * k) = (I + sign k.alpha / |k|) / 2 applied to one 4-spinor;
/// Pi_+(0) = I and Pi_-(0) = 0.
inline std::array<cplx, 4> dirac_projector_apply(int sign, const std::array<double, 3>& k, const std::array<cplx, 4>& v) {
  const double kn = knorm(k);
  if (kn == 0.0) return sign > 0 ? v : std::array<cplx, 4>{};
  const double s = sign / kn;
  const double n1 = s * k[0], n2 = s * k[1], n3 = s * k[2];
  // n.sigma = [[n3, n1 - i n2], [n1 + i n2, -n3]]
  const cplx a(n1, -n2), b(n1, n2);
  auto ns = [&](cplx u0, cplx u1) { return std::array<cplx, 2>{n3 * u0 + a * u1, b * u0 - n3 * u1}; };
  const auto top = ns(v[2], v[3]);
  const auto bot = ns(v[0], v[1]);
  return {0.5 * (v[0] + top[0]), 0.5 * (v[1] + top[1]), 0.5 * (v[2] + bot[0]), 0.5 * (v[3] + bot[1])};
}

/// Projector matrix Pi(sign * k) as a 4x4.
inline Mat4 dirac_projector_matrix(int sign, const std::array<double, 3>& k) {
  Mat4 m;
  for (std::size_t c = 0; c < 4; ++c) {
    std::array<cplx, 4> e{};
    e[c] = 1.0;
    const auto col = dirac_projector_apply(sign, k, e);
    for (std::size_t r = 0; r < 4; ++r) m.m[r][c] = col[r];
  }
  return m;
}

inline void dirac_project_spectral(int sign, SpinorField& spec) {
  for_each_mode(spec.grid(), [&](std::size_t i, const std::array<double, 3>& k) {
    for (std::size_t col = 0; col < n_colors; ++col) {
      std::array<cplx, 4> v;
      for (std::size_t s = 0; s < 4; ++s) v[s] = spec(sc(col, s), i);
      v = dirac_projector_apply(sign, k, v);
      for (std::size_t s = 0; s < 4; ++s) spec(sc(col, s), i) = v[s];
    }
  });
}

/// psi_pm = Pi_pm psi with Pi_pm = Pi(pm grad / i).
inline SpinorField dirac_project(int sign, const SpinorField& psi) {
  auto spec = to_spectral(psi);
  dirac_project_spectral(sign, spec);
  return to_complex_space(spec);
}

/// -i alpha^j d_j psi.
inline SpinorField free_dirac(const SpinorField& psi) {
  const auto& d = DiracConstants::get();
  SpinorField out(psi.grid());
  for (int j = 0; j < 3; ++j) {
    const auto dpsi = apply_multiplier(MultiplierSpec::derivative(j), psi);
    for (std::size_t col = 0; col < n_colors; ++col)
      for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
          const cplx m = -I_unit * d.alpha[j + 1].m[r][c];
          if (m == cplx{}) continue;
          for (std::size_t i = 0; i < psi.sites(); ++i) out(sc(col, r), i) += m * dpsi(sc(col, c), i);
        }
  }
  return out;
}

// ---------------------------------------------------------------------------
// dealiasing

/// Lifts band-limited coarse spectra onto the 2N grid and brings products back.
/// The coarse Nyquist coefficient is split evenly between +-N/2 on the fine
/// grid; truncation keeps |m| <= N/2 - 1. Quadratic and cubic products of
/// coarse band-limited inputs are therefore alias free.
class Dealiaser {
 public:
  explicit Dealiaser(const Grid& coarse) : coarse_(coarse), fine_(2 * coarse.n(), coarse.length()) {
    const int n = coarse.n();
    const int nf = fine_.n();
    targets_.resize(n);
    for (int i = 0; i < n; ++i) {
      const int m = coarse.signed_mode(i);
      if (m == -n / 2) {
        targets_[i] = {{nf - n / 2, 0.5}, {n / 2, 0.5}};
      } else {
        targets_[i] = {{m < 0 ? nf + m : m, 1.0}};
      }
    }
    keep_.resize(n);
    for (int i = 0; i < n; ++i) {
      const int m = coarse.signed_mode(i);
      keep_[i] = (m == -n / 2) ? -1 : (m < 0 ? nf + m : m);
    }
  }

  const Grid& coarse() const { return coarse_; }
  const Grid& fine() const { return fine_; }
  std::size_t fine_size() const { return fine_.size(); }

  /// Coarse coefficients -> fine grid values.
  void lift(const cplx* spec, cplx* out) const {
    pad(spec, out);
    fft_for(fine_.n()).backward(out);
  }

  /// Two hermitian coarse spectra -> fine values a + i b packed in `out`
  /// (b may be null).
  void lift_pair(const cplx* a, const cplx* b, cplx* out) const {
    pad(a, out);
    if (b) pad_add(b, out, cplx(0.0, 1.0));
    fft_for(fine_.n()).backward(out);
  }

  /// Two hermitian coarse spectra -> two real fine fields (b may be null).
  void lift_real_pair(const cplx* a, const cplx* b, double* fa, double* fb, std::vector<cplx>& work) const {
    work.resize(fine_.size());
    lift_pair(a, b, work.data());
    for (std::size_t i = 0; i < fine_.size(); ++i) {
      fa[i] = work[i].real();
      if (fb) fb[i] = work[i].imag();
    }
  }

  /// Fine grid values -> truncated coarse coefficients. Destroys `in`.
  void lower(cplx* in, cplx* spec) const {
    fft_for(fine_.n()).forward(in);
    const double norm = 1.0 / double(fine_.size());
    const int n = coarse_.n();
    for (int z = 0; z < n; ++z)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const std::size_t ci = coarse_.index(x, y, z);
          if (keep_[x] < 0 || keep_[y] < 0 || keep_[z] < 0) {
            spec[ci] = cplx{};
            continue;
          }
          spec[ci] = in[fine_.index(keep_[x], keep_[y], keep_[z])] * norm;
        }
  }

  /// Fine values a + i b of two real fields -> their truncated coarse
  /// spectra (b may be null). Destroys `in`.
  void lower_pair(cplx* in, cplx* a, cplx* b) const {
    fft_for(fine_.n()).forward(in);
    const double norm = 1.0 / double(fine_.size());
    const int n = coarse_.n();
    const int nf = fine_.n();
    auto mir = [nf](int i) { return i == 0 ? 0 : nf - i; };
    for (int z = 0; z < n; ++z)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const std::size_t ci = coarse_.index(x, y, z);
          if (keep_[x] < 0 || keep_[y] < 0 || keep_[z] < 0) {
            a[ci] = cplx{};
            if (b) b[ci] = cplx{};
            continue;
          }
          const cplx h = in[fine_.index(keep_[x], keep_[y], keep_[z])];
          const cplx hm = std::conj(in[fine_.index(mir(keep_[x]), mir(keep_[y]), mir(keep_[z]))]);
          a[ci] = 0.5 * (h + hm) * norm;
          if (b) b[ci] = cplx(0.0, -0.5) * (h - hm) * norm;
        }
  }

  /// Two real fine fields -> their truncated coarse spectra (b may be null).
  void lower_real_pair(const double* fa, const double* fb, cplx* a, cplx* b, std::vector<cplx>& work) const {
    work.resize(fine_.size());
    for (std::size_t i = 0; i < fine_.size(); ++i) work[i] = cplx(fa[i], fb ? fb[i] : 0.0);
    lower_pair(work.data(), a, b);
  }

 private:
  void pad(const cplx* spec, cplx* out) const {
    std::fill(out, out + fine_.size(), cplx{});
    pad_add(spec, out, 1.0);
  }
  void pad_add(const cplx* spec, cplx* out, cplx factor) const {
    const int n = coarse_.n();
    for (int z = 0; z < n; ++z)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const cplx v = spec[coarse_.index(x, y, z)];
          if (v == cplx{}) continue;
          for (const auto& [tz, wz] : targets_[z])
            for (const auto& [ty, wy] : targets_[y])
              for (const auto& [tx, wx] : targets_[x]) out[fine_.index(tx, ty, tz)] += factor * v * (wx * wy * wz);
        }
  }

  Grid coarse_;
  Grid fine_;
  std::vector<std::vector<std::pair<int, double>>> targets_;
  std::vector<int> keep_;
};

/// Fine-grid values of a batch of fields, reused across calls.
struct FineFields {
  std::vector<std::vector<double>> real;
  std::vector<std::vector<cplx>> complex;
  std::vector<cplx> work;
};

/// Lift hermitian spectra (as real fields, paired per transform) and general
/// complex spectra onto the fine grid.
inline void lift_all(const Dealiaser& d, const std::vector<const cplx*>& real_specs,
                     const std::vector<const cplx*>& complex_specs, FineFields& out) {
  const std::size_t nf = d.fine_size();
  out.real.resize(real_specs.size());
  out.complex.resize(complex_specs.size());
  for (auto& v : out.real) v.resize(nf);
  for (auto& v : out.complex) v.resize(nf);
  for (std::size_t c = 0; c < real_specs.size(); c += 2) {
    const bool pair = c + 1 < real_specs.size();
    d.lift_real_pair(real_specs[c], pair ? real_specs[c + 1] : nullptr, out.real[c].data(),
                     pair ? out.real[c + 1].data() : nullptr, out.work);
  }
  for (std::size_t c = 0; c < complex_specs.size(); ++c) d.lift(complex_specs[c], out.complex[c].data());
}

/// Truncated coarse spectra of real fine fields.
inline void lower_real_all(const Dealiaser& d, const std::vector<const double*>& fine, const std::vector<cplx*>& specs,
                           std::vector<cplx>& work) {
  for (std::size_t c = 0; c < fine.size(); c += 2) {
    const bool pair = c + 1 < fine.size();
    d.lower_real_pair(fine[c], pair ? fine[c + 1] : nullptr, specs[c], pair ? specs[c + 1] : nullptr, work);
  }
}

/// Applies kernel(in, out) site by site on the fine grid to real fields given
/// by their coarse spectra; returns the truncated coarse spectra of the n_out
/// real outputs.
template <class K>
std::vector<std::vector<cplx>> dealiased_real_map(const Dealiaser& d, const std::vector<const cplx*>& in_specs,
                                                  std::size_t n_out, K&& kern) {
  FineFields fine;
  lift_all(d, in_specs, {}, fine);
  const std::size_t nf = d.fine_size();
  const std::size_t n_in = in_specs.size();
  constexpr std::size_t max_width = 64;
  if (n_in > max_width || n_out > max_width) throw Error(ErrorCode::invalid_argument, "dealiased_real_map: too many fields");
  std::vector<std::vector<double>> out(n_out, std::vector<double>(nf));
  YMD_PARALLEL_FOR
  for (std::size_t i = 0; i < nf; ++i) {
    double a[max_width], b[max_width] = {};
    for (std::size_t c = 0; c < n_in; ++c) a[c] = fine.real[c][i];
    kern(static_cast<const double*>(a), static_cast<double*>(b));
    for (std::size_t c = 0; c < n_out; ++c) out[c][i] = b[c];
  }
  std::vector<std::vector<cplx>> specs(n_out, std::vector<cplx>(d.coarse().size()));
  std::vector<const double*> fp;
  std::vector<cplx*> sp;
  for (std::size_t c = 0; c < n_out; ++c) {
    fp.push_back(out[c].data());
    sp.push_back(specs[c].data());
  }
  lower_real_all(d, fp, sp, fine.work);
  return specs;
}

/// Alias-free pointwise product of two complex lattice functions.
inline ComplexScalarField dealiased_product(const ComplexScalarField& f, const ComplexScalarField& g) {
  require_same_grid(f.grid(), g.grid(), "dealiased_product");
  const Dealiaser d(f.grid());
  const auto sf = to_spectral(f), sg = to_spectral(g);
  std::vector<cplx> a(d.fine_size()), b(d.fine_size());
  d.lift(sf.component(0), a.data());
  d.lift(sg.component(0), b.data());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  ComplexScalarField spec(f.grid());
  d.lower(a.data(), spec.component(0));
  return to_complex_space(spec);
}

inline ComplexScalarField dealiased_triple(const ComplexScalarField& f, const ComplexScalarField& g,
                                           const ComplexScalarField& h) {
  require_same_grid(f.grid(), g.grid(), "dealiased_triple");
  require_same_grid(f.grid(), h.grid(), "dealiased_triple");
  const Dealiaser d(f.grid());
  const auto sf = to_spectral(f), sg = to_spectral(g), sh = to_spectral(h);
  std::vector<cplx> a(d.fine_size()), b(d.fine_size()), c(d.fine_size());
  d.lift(sf.component(0), a.data());
  d.lift(sg.component(0), b.data());
  d.lift(sh.component(0), c.data());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i] * c[i];
  ComplexScalarField spec(f.grid());
  d.lower(a.data(), spec.component(0));
  return to_complex_space(spec);
}

// ---------------------------------------------------------------------------
// norms

/// L^2 norm over all components.
template <class T, std::size_t C>
double l2_norm(const LatticeField<T, C>& f) {
  double s = 0.0;
  for (const auto& v : f.data()) s += std::norm(v);
  const double dx = f.grid().spacing();
  return std::sqrt(s * dx * dx * dx);
}

/// (L^3 sum <k>^{2s} |c_k|^2)^{1/2} of coefficient fields.
template <std::size_t C>
double hs_norm_spectral(const LatticeField<cplx, C>& spec, double s) {
  const Grid& g = spec.grid();
  double total = 0.0;
  for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
    const double w = std::pow(1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2], s);
    double m = 0.0;
    for (std::size_t c = 0; c < C; ++c) m += std::norm(spec(c, i));
    total += w * m;
  });
  return std::sqrt(total * g.volume());
}

template <class T, std::size_t C>
double hs_norm(const LatticeField<T, C>& f, double s) {
  return hs_norm_spectral(to_spectral(f), s);
}

}  // namespace ymd
