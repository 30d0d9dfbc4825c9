#include <gtest/gtest.h>

#include "test_support.hpp"
#include "ymd/dynamics.hpp"

using namespace ymd;

namespace {

SecondOrderState from_data(const InitialData& d) {
  SecondOrderState s(d.a0df.grid());
  s.a = d.a0();
  s.dta = d.a1;
  s.psi = d.psi0;
  return s;
}

/// A single divergence-free plane wave along T_1, polarized in y, moving in x.
SecondOrderState plane_wave(const Grid& g, int m, double amp) {
  SecondOrderState s(g);
  const double k = 2.0 * std::numbers::pi / g.length() * m;
  for (int z = 0; z < g.n(); ++z)
    for (int y = 0; y < g.n(); ++y)
      for (int x = 0; x < g.n(); ++x) {
        const double ph = k * g.coordinate(x);
        s.a(vc(1, 0), g.index(x, y, z)) = amp * std::cos(ph);
        s.dta(vc(1, 0), g.index(x, y, z)) = amp * std::sin(ph);
      }
  return s;
}

}  // namespace

TEST(Dynamics, FreeRhsIsPureRotation) {
  const Grid g(8);
  auto so = from_data(random_small_data(g, 1.0, 0.75, 0.1, 3));
  DynamicsOptions opt;
  opt.couplings = Couplings::none();
  const auto s = split_from(so, opt.convention);
  const auto d = rhs_split(s, opt);
  const auto p = to_spectral(s.adf_plus), dp = to_spectral(d.adf_plus);
  const auto q = to_spectral(s.psi_minus), dq = to_spectral(d.psi_minus);
  double err = 0.0;
  for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
    const double jap = std::sqrt(1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    for (std::size_t c = 0; c < 9; ++c) err = std::max(err, std::abs(dp(c, i) - I_unit * jap * p(c, i)));
    for (std::size_t c = 0; c < 8; ++c) err = std::max(err, std::abs(dq(c, i) - I_unit * knorm(k) * q(c, i)));
  });
  EXPECT_LT(err, 1e-13);
  EXPECT_LT(d.acf.max_abs(), 1e-15);
}

TEST(Dynamics, SplitRhsMatchesSecondOrderRhs) {
  const Grid g(8);
  const auto data = random_small_data(g, 1.0, 0.75, 0.2, 11);
  const auto so = from_data(data);
  for (Convention conv : {Convention::physics, Convention::paper}) {
    DynamicsOptions opt;
    opt.convention = conv;
    // data are Gauss-projected with the physics current; the paper current
    // has the same real part, so the constraint holds for both
    const auto s = with_consistent_dtacf(split_from(so, conv), opt);
    const auto back = second_order_from(s);
    EXPECT_LT(max_diff(back.dta, so.dta), 1e-11);

    const auto ds = rhs_split(s, opt);
    const auto d2 = rhs_second_order(so, opt);
    // d_t A
    LieVectorField adf(g), dtadf(g);
    SimulationState tmp = s;
    tmp.adf_plus = ds.adf_plus;
    tmp.adf_minus = ds.adf_minus;
    reconstruct_df(tmp, adf, dtadf);
    EXPECT_LT(max_diff(adf + ds.acf, d2.dta), 1e-11);
    // d_t^2 A^df = i <grad> (d_t A_+ - d_t A_-)
    EXPECT_LT(max_diff(dtadf, df_part(d2.dtta)), 1e-11);
    EXPECT_LT(max_diff(ds.psi_plus + ds.psi_minus, d2.dtpsi), 1e-12);
  }
}

TEST(Dynamics, FieldEquationMatchesDirectForm) {
  // G_j = -[div A, A_j] - 2 [A_i, d_i A_j] + [A_i, d_j A_i] - [A_i, [A_i, A_j]],
  // evaluated from all nine derivatives, against the second-order right-hand side
  const Grid g(8);
  const auto a = testing_support::random_real<9>(g, 31, 0.3);
  const auto spec = to_spectral(a);
  std::vector<LatticeField<cplx, 9>> da(3, LatticeField<cplx, 9>(g));
  std::vector<const cplx*> in;
  for (std::size_t c = 0; c < 9; ++c) in.push_back(spec.component(c));
  for (int i = 0; i < 3; ++i) {
    da[i] = spec;
    apply_symbol_inplace(MultiplierSpec::derivative(i), da[i]);
    for (std::size_t c = 0; c < 9; ++c) in.push_back(da[i].component(c));
  }
  const Dealiaser d(g);
  const auto out = dealiased_real_map(d, in, 9, [](const double* v, double* gout) {
    const double* av = v;
    const double* dv = v + 9;  // d_i A_j at 9 i + 3 j + a
    double div[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) div[c] += dv[9 * i + 3 * i + c];
    for (int j = 0; j < 3; ++j) {
      double* gj = gout + 3 * j;
      kernel::cross_add(div, av + 3 * j, -1.0, gj);
      for (int i = 0; i < 3; ++i) {
        kernel::cross_add(av + 3 * i, dv + 9 * i + 3 * j, -2.0, gj);
        kernel::cross_add(av + 3 * i, dv + 9 * j + 3 * i, 1.0, gj);
        double inner[3];
        kernel::cross(av + 3 * i, av + 3 * j, inner);
        kernel::cross_add(av + 3 * i, inner, -1.0, gj);
      }
    }
  });
  LatticeField<cplx, 9> gspec(g);
  for (std::size_t c = 0; c < 9; ++c) std::copy(out[c].begin(), out[c].end(), gspec.component(c));
  const auto g_direct = to_real_space(gspec);

  SecondOrderState s(g);
  s.a = a;
  DynamicsOptions opt;
  opt.couplings.dirac = false;
  const auto rhs = rhs_second_order(s, opt);
  // d_t^2 A = Delta A - grad div A - G
  const auto lin = to_real_space([&] {
    LatticeField<cplx, 9> l(g);
    for_each_mode(g, [&](std::size_t i, const std::array<double, 3>& k) {
      for (std::size_t c = 0; c < 3; ++c) {
        const cplx kd = k[0] * spec(vc(0, c), i) + k[1] * spec(vc(1, c), i) + k[2] * spec(vc(2, c), i);
        for (std::size_t j = 0; j < 3; ++j)
          l(vc(j, c), i) = -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * spec(vc(j, c), i) + k[j] * kd;
      }
    });
    return l;
  }());
  EXPECT_LT(max_diff(lin - rhs.dtta, g_direct), 1e-13);
  EXPECT_GT(g_direct.max_abs(), 1e-2);
}

TEST(Dynamics, PlaneWavePhases) {
  const Grid g(8);
  DynamicsOptions opt;
  opt.couplings = Couplings::none();
  const auto s0 = split_from(plane_wave(g, 2, 0.3), opt.convention);
  SplitEvolution e(s0, opt);
  e.advance(0.05, 20);
  const auto s1 = e.state();
  // mode (2,0,0): <k> = sqrt 5
  const double w = std::sqrt(5.0);
  const auto p0 = to_spectral(s0.adf_plus), p1 = to_spectral(s1.adf_plus);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    err = std::max(err, std::abs(p1(vc(1, 0), i) - std::exp(I_unit * w * 1.0) * p0(vc(1, 0), i)));
  EXPECT_LT(err, 1e-13);
}

TEST(Dynamics, SecondOrderEnergyConvergesAtFourthOrder) {
  const Grid g(8);
  const auto so = from_data(random_small_data(g, 1.0, 0.75, 0.3, 5));
  DynamicsOptions opt;
  const double e0 = energy(so, opt.convention);
  double drift[2];
  for (int level = 0; level < 2; ++level) {
    const double h = level == 0 ? 0.1 : 0.05;
    SecondOrderEvolution e(so, opt);
    for (int i = 0; i < int(std::lround(1.0 / h)); ++i) e.step(h);
    drift[level] = std::abs(energy(e.state(), opt.convention) - e0);
  }
  EXPECT_GT(drift[0] / drift[1], 12.0);
  EXPECT_LT(drift[1], 1e-5 * std::abs(e0));
}

TEST(Dynamics, SplitAgreesWithSecondOrder) {
  const Grid g(8);
  const auto so = from_data(random_small_data(g, 1.0, 0.75, 0.1, 9));
  DynamicsOptions opt;
  SplitEvolution split(with_consistent_dtacf(split_from(so, opt.convention), opt), opt);
  SecondOrderEvolution second(so, opt);
  for (int i = 0; i < 20; ++i) {
    split.step(0.01);
    second.step(0.01);
  }
  const auto a = second_order_from(split.state()), b = second.state();
  EXPECT_LT(max_diff(a.a, b.a), 1e-9);
  EXPECT_LT(max_diff(a.dta, b.dta), 1e-9);
  EXPECT_LT(max_diff(a.psi, b.psi), 1e-9);
}

TEST(Dynamics, ReversibleUnderNegativeStep) {
  const Grid g(8);
  const auto so = from_data(random_small_data(g, 1.0, 0.75, 0.1, 21));
  DynamicsOptions opt;
  const auto s0 = with_consistent_dtacf(split_from(so, opt.convention), opt);
  SplitEvolution e(s0, opt);
  e.advance(0.02, 5);
  e.advance(-0.02, 5);
  const auto s1 = e.state();
  EXPECT_NEAR(s1.t, 0.0, 1e-15);
  EXPECT_LT(max_diff(s1.acf, s0.acf), 1e-11);
  EXPECT_LT(max_diff(s1.adf_plus, s0.adf_plus), 1e-11);
  EXPECT_LT(max_diff(s1.psi_plus, s0.psi_plus), 1e-11);
}

TEST(Dynamics, PhysicsConventionConservesChargeAndConstraint) {
  const Grid g(8);
  const auto so = from_data(random_small_data(g, 1.0, 0.75, 0.1, 4));
  DynamicsOptions opt;
  SplitEvolution e(with_consistent_dtacf(split_from(so, opt.convention), opt), opt);
  const auto d0 = diagnostics(e.state(), 1.0, 0.75);
  e.advance(0.01, 20);
  const auto d1 = diagnostics(e.state(), 1.0, 0.75);
  EXPECT_NEAR(d1.charge, d0.charge, 1e-12 * d0.charge);
  EXPECT_LT(d1.gauss_residual, 1e-12);
}

TEST(Dynamics, ZeroDataStaysZero) {
  const Grid g(8);
  SimulationState s(g);
  const auto s1 = step(s, 0.1, DynamicsOptions{});
  EXPECT_EQ(s1.acf.max_abs(), 0.0);
  EXPECT_EQ(s1.psi_plus.max_abs(), 0.0);
  EXPECT_NEAR(s1.t, 0.1, 1e-16);
}

TEST(Dynamics, StructuredFailures) {
  const Grid g(8);
  const auto so = from_data(random_small_data(g, 1.0, 0.75, 0.3, 8));
  DynamicsOptions opt;
  auto s = split_from(so, opt.convention);
  s.dtacf.fill(0.0);
  opt.picard_max = 1;
  try {
    SplitEvolution e(s, opt);
    FAIL() << "expected picard_divergence";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::picard_divergence);
  }
  opt.picard_max = 50;
  EXPECT_THROW(step(s, 0.0, opt), Error);
  s.psi_plus(0, 0) = cplx(std::numeric_limits<double>::infinity(), 0.0);
  try {
    step(s, 0.1, opt);
    FAIL() << "expected an error";
  } catch (const Error& err) {
    EXPECT_TRUE(err.code() == ErrorCode::blow_up || err.code() == ErrorCode::picard_divergence);
  }
}

TEST(Dynamics, ConventionExperimentPrefersPhysics) {
  const Grid g(8);
  const auto data = random_small_data(g, 1.0, 0.75, 0.3, 17);
  const auto rep = convention_experiment(data, 0.2, 0.02);
  EXPECT_TRUE(rep.consistent[int(Convention::physics)]);
  EXPECT_FALSE(rep.consistent[int(Convention::paper)]);
  EXPECT_EQ(rep.chosen, Convention::physics);
  EXPECT_EQ(rep.rows.size(), 4u);
}
