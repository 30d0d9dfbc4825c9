#pragma once

// Invariant suite behind `ymd verify`: each check measures one property on
// random inputs and compares it with a fixed threshold.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "ymd/analysis.hpp"
#include "ymd/dynamics.hpp"
#include "ymd/gauge.hpp"

namespace ymd {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  /// true: pass iff value <= threshold; false: pass iff value >= threshold.
  bool upper = true;
  bool pass = false;
  double seconds = 0.0;
};

inline CheckResult make_check(std::string name, double value, double threshold, bool upper = true) {
  const bool pass = std::isfinite(value) && (upper ? value <= threshold : value >= threshold);
  return {std::move(name), value, threshold, upper, pass, 0.0};
}

inline std::string format_check(const CheckResult& c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %-4s value=%.3e %s %.3e", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.value,
                c.upper ? "<=" : ">=", c.threshold);
  return buf;
}

// ---------------------------------------------------------------------------
// spectral identities on spinor fields

/// Band-limited complex Gaussian field with the zero mode removed.
template <std::size_t C>
LatticeField<cplx, C> random_zero_mean_field(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::array<bool, C> on;
  on.fill(true);
  auto spec = detail::weighted_spectrum<C>(g, rng, 0.0, false, on);
  for (std::size_t c = 0; c < C; ++c) spec(c, 0) = 0.0;
  return to_complex_space(spec);
}

/// alpha^j acting on the spinor index, color by color.
inline SpinorField apply_alpha(int j, const SpinorField& psi) {
  const Mat4& a = DiracConstants::get().alpha[j + 1];
  SpinorField out(psi.grid());
  for (std::size_t i = 0; i < psi.sites(); ++i)
    for (std::size_t col = 0; col < n_colors; ++col)
      for (std::size_t r = 0; r < 4; ++r) {
        cplx acc{};
        for (std::size_t c = 0; c < 4; ++c) acc += a.m[r][c] * psi(sc(col, c), i);
        out(sc(col, r), i) = acc;
      }
  return out;
}

/// max of |Pi_pm^2 - Pi_pm|, |Pi_+ + Pi_- - I|, |Pi_+ Pi_-| applied to psi,
/// relative to max |psi|.
inline double projector_algebra_deviation(const SpinorField& psi) {
  const auto p = dirac_project(+1, psi), m = dirac_project(-1, psi);
  const double scale = std::max(psi.max_abs(), 1e-300);
  double d = max_diff(dirac_project(+1, p), p);
  d = std::max(d, max_diff(dirac_project(-1, m), m));
  d = std::max(d, max_diff(p + m, psi));
  d = std::max(d, dirac_project(+1, m).max_abs());
  d = std::max(d, dirac_project(-1, p).max_abs());
  return d / scale;
}

/// Pointwise: Pi_pm(xi) = Pi_-+(-xi) and alpha^j Pi(xi) = Pi(-xi) alpha^j + xi_j/|xi|
/// on random unit xi.
inline double pointwise_projector_deviation(std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  const auto& d = DiracConstants::get();
  double dev = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    std::array<double, 3> k{n(rng), n(rng), n(rng)};
    const double kn = knorm(k);
    if (kn == 0.0) continue;
    for (auto& v : k) v /= kn;
    const std::array<double, 3> mk{-k[0], -k[1], -k[2]};
    const Mat4 pp = dirac_projector_matrix(+1, k), pm = dirac_projector_matrix(-1, k);
    dev = std::max(dev, (pp - dirac_projector_matrix(-1, mk)).max_abs());
    dev = std::max(dev, (pm - dirac_projector_matrix(+1, mk)).max_abs());
    for (int j = 0; j < 3; ++j) {
      const Mat4 lhs = d.alpha[j + 1] * pp;
      const Mat4 rhs = pm * d.alpha[j + 1] + Mat4::identity() * cplx(k[j], 0.0);
      dev = std::max(dev, (lhs - rhs).max_abs());
    }
  }
  return dev;
}

/// alpha^j Pi_pm psi = Pi_-+ alpha^j Pi_pm psi - R^j_pm Pi_pm psi, relative
/// to max |psi|. Needs zero-mean psi (Pi_+(0) = I breaks the identity at 0).
inline double riesz_projector_deviation(const SpinorField& psi, bool corrupt = false) {
  const double scale = std::max(psi.max_abs(), 1e-300);
  double dev = 0.0;
  for (int sign : {+1, -1}) {
    const auto proj = dirac_project(sign, psi);
    for (int j = 0; j < 3; ++j) {
      const auto lhs = apply_alpha(j, proj);
      auto r = MultiplierSpec::modified_riesz(j, sign);
      r.corrupt = corrupt;
      const auto rhs = dirac_project(-sign, lhs) - apply_multiplier(r, proj);
      dev = std::max(dev, max_diff(lhs, rhs));
    }
  }
  return dev / scale;
}

/// -i alpha^j d_j psi = |grad| (Pi_+ - Pi_-) psi, relative to max of the left side.
inline double dirac_symbol_deviation(const SpinorField& psi) {
  const auto lhs = free_dirac(psi);
  const auto grad = MultiplierSpec::abs_grad(1.0);
  const auto rhs = apply_multiplier(grad, dirac_project(+1, psi)) - apply_multiplier(grad, dirac_project(-1, psi));
  return max_diff(lhs, rhs) / std::max(lhs.max_abs(), 1e-300);
}

// ---------------------------------------------------------------------------
// Hodge

struct HodgeCheck {
  double reconstruction = 0.0;
  double div_curl = 0.0;
};

/// Unit Gaussian entries (Nyquist content included).
inline HodgeCheck hodge_check(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  LieVectorField a(g);
  for (auto& v : a.data()) v = n(rng);
  const auto parts = hodge_split(a);
  return {max_diff(parts.df + parts.cf, a), std::max(divergence(parts.df).max_abs(), curl(parts.cf).max_abs())};
}

// ---------------------------------------------------------------------------
// null structure

inline LieVectorField random_divergence_free(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::array<bool, 9> on;
  on.fill(true);
  auto spec = detail::weighted_spectrum<9>(g, rng, 0.0, true, on);
  df_project_spectral(spec);
  return to_real_space(spec);
}

inline ComplexScalarField plane_wave_field(const Grid& g, const std::array<int, 3>& m) {
  ComplexScalarField f(g);
  for (int z = 0; z < g.n(); ++z)
    for (int y = 0; y < g.n(); ++y)
      for (int x = 0; x < g.n(); ++x) {
        const double ph = g.k0() * (m[0] * g.coordinate(x) + m[1] * g.coordinate(y) + m[2] * g.coordinate(z));
        f(0, g.index(x, y, z)) = std::polar(1.0, ph);
      }
  return f;
}

/// Q_ij of two parallel plane waves, max over (i, j).
inline double qij_parallel_residual(const Grid& g) {
  const auto u = plane_wave_field(g, {1, 1, -1}), v = plane_wave_field(g, {2, 2, -2});
  double r = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r = std::max(r, qij_null_form(u, v, i, j).max_abs());
  return r;
}

/// max |Q_ij(u, v) + Q_ji(u, v)| on random fields; exactly zero by construction.
inline double qij_antisymmetry_residual(const Grid& g, std::uint64_t seed) {
  const auto u = random_zero_mean_field<1>(g, seed), v = random_zero_mean_field<1>(g, seed + 1);
  double r = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r = std::max(r, (qij_null_form(u, v, i, j) + qij_null_form(u, v, j, i)).max_abs());
  return r;
}

/// Weight of B_{sign1, sign2} on two single modes; the output has one nonzero
/// coefficient whose value is the angle.
inline double angular_single_mode_weight(const Grid& g, const std::array<int, 3>& m1, const std::array<int, 3>& m2,
                                         int s1, int s2) {
  const std::size_t steps = 8;
  const double dt = 0.1;
  auto trace = [&](const std::array<int, 3>& m) {
    SpaceTimeTrace tr(g, dt, 1);
    const auto w = plane_wave_field(g, m);
    const double tau = 2.0 * std::numbers::pi / (dt * double(steps));
    for (std::size_t s = 0; s < steps; ++s) tr.push(std::polar(1.0, tau * dt * double(s)) * w);
    return tr;
  };
  const auto b = angular_bilinear_spectrum(trace(m1), trace(m2), s1, s2);
  cplx total{};
  for (const auto& c : b.c) total += c;
  return total.real();
}

/// max deviation of the three reference configurations from 0, pi/2, pi.
inline double angular_single_mode_deviation(const Grid& g) {
  const double pi = std::numbers::pi;
  double d = std::abs(angular_single_mode_weight(g, {1, 0, 0}, {2, 0, 0}, +1, +1));
  d = std::max(d, std::abs(angular_single_mode_weight(g, {1, 0, 0}, {0, 1, 0}, +1, +1) - pi / 2));
  d = std::max(d, std::abs(angular_single_mode_weight(g, {1, 1, 0}, {1, 1, 0}, +1, -1) - pi));
  return d;
}

// ---------------------------------------------------------------------------
// dynamics

inline SecondOrderState second_order_initial(const InitialData& d) {
  SecondOrderState s(d.a0df.grid());
  s.a = d.a0();
  s.dta = d.a1;
  s.psi = d.psi0;
  return s;
}

struct ConstraintRun {
  /// max over steps of ||G||_{L^2} / (||A||_{H^1} + ||psi||^2_{L^2} + 1)
  double max_scaled_residual = 0.0;
  double end_residual = 0.0;
  double initial_residual = 0.0;
  /// size of the terms entering the constraint at t = 0
  double initial_scale = 0.0;
};

inline ConstraintRun constraint_run(const InitialData& data, Convention conv, double t_end, double dt,
                                    int sample_every = 1) {
  DynamicsOptions opt;
  opt.convention = conv;
  const auto s0 = second_order_initial(data);
  SplitEvolution e(with_consistent_dtacf(split_from(s0, conv), opt), opt);
  ConstraintRun r;
  auto measure = [&](const SimulationState& s) {
    const auto so = second_order_from(s);
    const auto res = gauss_residual(so.a, so.dta, so.psi, conv);
    const double g = res.l2;
    if (s.t == 0.0) r.initial_scale = res.scale;
    const double scale = hs_norm(so.a, 1.0) + std::pow(l2_norm(so.psi), 2) + 1.0;
    r.max_scaled_residual = std::max(r.max_scaled_residual, g / scale);
    return g;
  };
  r.initial_residual = measure(e.state());
  r.end_residual = r.initial_residual;
  const int steps = int(std::lround(t_end / dt));
  for (int i = 1; i <= steps; ++i) {
    e.step(dt);
    if (i % sample_every == 0 || i == steps) r.end_residual = measure(e.state());
  }
  return r;
}

/// sup over snapshots of ||A_split - A_2nd||_{H^1} + ||psi_split - psi_2nd||_{L^2}.
inline double formulation_gap(const InitialData& data, Convention conv, double t_end, double dt, int snapshot_every) {
  DynamicsOptions opt;
  opt.convention = conv;
  const auto s0 = second_order_initial(data);
  SplitEvolution split(with_consistent_dtacf(split_from(s0, conv), opt), opt);
  // start the second-order run from the split state so both see the same d_t A
  SecondOrderEvolution second(second_order_from(split.state()), opt);
  double gap = 0.0;
  const int steps = int(std::lround(t_end / dt));
  for (int i = 1; i <= steps; ++i) {
    split.step(dt);
    second.step(dt);
    if (i % snapshot_every == 0 || i == steps) {
      const auto a = second_order_from(split.state());
      const auto b = second.state();
      gap = std::max(gap, hs_norm(a.a - b.a, 1.0) + l2_norm(a.psi - b.psi));
    }
  }
  return gap;
}

// ---------------------------------------------------------------------------
// suite

struct VerifyOptions {
  int n = 16;
  double length = 2.0 * std::numbers::pi;
  std::uint64_t seed = 1;
  double eps = 1e-3;
  Exponents exponents;
  Convention convention = Convention::physics;
  double dt = 1e-3;
  /// horizon of the two dynamics checks
  double t_end = 0.05;
  /// name of a deliberately broken operator ("modified_riesz"), or empty
  std::string inject_fault;
};

inline std::vector<CheckResult> run_verification(const VerifyOptions& o,
                                                 const std::function<void(const CheckResult&)>& on_check = {}) {
  if (!o.inject_fault.empty() && o.inject_fault != "modified_riesz")
    throw Error(ErrorCode::invalid_argument, "unknown fault '" + o.inject_fault + "'");
  const Grid g(o.n, o.length);
  std::vector<CheckResult> out;
  auto timed = [&](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<CheckResult> rs = fn();
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (auto& r : rs) {
      r.seconds = sec / double(rs.size());
      out.push_back(r);
      if (on_check) on_check(r);
    }
  };
  const auto psi = random_zero_mean_field<8>(g, o.seed);

  timed([&] { return std::vector{make_check("projector_algebra", projector_algebra_deviation(psi), 1e-12)}; });
  timed([&] { return std::vector{make_check("projector_pointwise", pointwise_projector_deviation(1000, o.seed), 1e-13)}; });
  timed([&] {
    return std::vector{make_check("riesz_projector_identity", riesz_projector_deviation(psi, o.inject_fault == "modified_riesz"), 1e-12)};
  });
  timed([&] { return std::vector{make_check("dirac_symbol_identity", dirac_symbol_deviation(psi), 1e-12)}; });
  timed([&] {
    const auto h = hodge_check(g, o.seed + 10);
    return std::vector{make_check("hodge_reconstruction", h.reconstruction, 1e-12),
                       make_check("hodge_div_curl", h.div_curl, 1e-11)};
  });
  timed([&] {
    double d50 = 0.0, dn3 = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto a = random_divergence_free(g, o.seed + 100 + k);
      d50 = std::max(d50, verify_identity_50(a));
      dn3 = std::max(dn3, verify_identity_N3(a));
    }
    return std::vector{make_check("df_bracket_identity", d50, 1e-10), make_check("df_gradient_identity", dn3, 1e-10)};
  });
  timed([&] {
    return std::vector{make_check("qij_parallel_cancellation", qij_parallel_residual(g), 1e-13),
                       make_check("qij_antisymmetry", qij_antisymmetry_residual(g, o.seed + 200), 0.0)};
  });
  timed([&] {
    const Grid small(8);
    return std::vector{make_check("angular_single_modes", angular_single_mode_deviation(small), 1e-14)};
  });
  timed([&] {
    const auto scan = spinorial_bound_scan(10000, o.seed);
    return std::vector{make_check("spinorial_max_ratio", scan.max_ratio, 1.0 + 1e-6),
                       make_check("spinorial_fit_r2", scan.r_squared, 0.999, false)};
  });

  const auto data = random_small_data(g, o.exponents.s, o.exponents.l, o.eps, o.seed);
  timed([&] {
    const auto r = constraint_run(data, o.convention, o.t_end, o.dt);
    return std::vector{make_check("constraint_propagation", r.max_scaled_residual, 1e-8)};
  });
  timed([&] {
    const auto fix = gauge_fix(data.a0(), data.a1, data.psi0, {.s = o.exponents.s});
    return std::vector{make_check("gauge_fix_cf_norm", fix.final_cf_norm(), 1e-10)};
  });
  timed([&] {
    const int every = std::max(1, int(std::lround(0.01 / o.dt)));
    return std::vector{
        make_check("formulation_cross_check", formulation_gap(data, o.convention, o.t_end, o.dt, every), 1e-6)};
  });
  return out;
}

}  // namespace ymd
