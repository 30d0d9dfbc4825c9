#include <gtest/gtest.h>

#include "test_support.hpp"
#include "ymd/spectral.hpp"

using namespace ymd;
using namespace testing_support;

namespace {

ComplexScalarField plane_wave(const Grid& g, int mx, int my, int mz, cplx amp = 1.0) {
  ComplexScalarField f(g);
  const double k = g.k0();
  for (int z = 0; z < g.n(); ++z)
    for (int y = 0; y < g.n(); ++y)
      for (int x = 0; x < g.n(); ++x) {
        const double ph = k * (mx * g.coordinate(x) + my * g.coordinate(y) + mz * g.coordinate(z));
        f(0, g.index(x, y, z)) = amp * std::exp(cplx(0.0, ph));
      }
  return f;
}

// Direct convolution of band-limited coefficient arrays, truncated to the band.
ComplexScalarField convolution_oracle(const ComplexScalarField& f, const ComplexScalarField& h) {
  const Grid& g = f.grid();
  const auto a = to_spectral(f), b = to_spectral(h);
  ComplexScalarField c(g);
  const int n = g.n(), lim = n / 2 - 1;
  auto idx = [&](int m) { return m < 0 ? m + n : m; };
  for (int pz = -lim; pz <= lim; ++pz)
    for (int py = -lim; py <= lim; ++py)
      for (int px = -lim; px <= lim; ++px) {
        const cplx av = a(0, g.index(idx(px), idx(py), idx(pz)));
        if (av == cplx{}) continue;
        for (int qz = -lim; qz <= lim; ++qz)
          for (int qy = -lim; qy <= lim; ++qy)
            for (int qx = -lim; qx <= lim; ++qx) {
              const int sx = px + qx, sy = py + qy, sz = pz + qz;
              if (std::abs(sx) > lim || std::abs(sy) > lim || std::abs(sz) > lim) continue;
              c(0, g.index(idx(sx), idx(sy), idx(sz))) += av * b(0, g.index(idx(qx), idx(qy), idx(qz)));
            }
      }
  return to_complex_space(c);
}

}  // namespace

TEST(Grid, Validation) {
  EXPECT_THROW(Grid(6), Error);
  EXPECT_THROW(Grid(12), Error);
  EXPECT_NO_THROW(Grid(8));
  const Grid g(8);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(g.mirror(g.mirror(i)), i);
  EXPECT_EQ(g.signed_mode(4), -4);
  EXPECT_EQ(g.kappa(4), 0.0);
}

TEST(Transforms, RoundTripAndParseval) {
  const Grid g(16);
  const auto a = random_real<9>(g, 11);
  const auto spec = to_spectral(a);
  EXPECT_LT(max_diff(to_real_space(spec), a), 1e-13);
  double s = 0.0;
  for (const auto& v : spec.data()) s += std::norm(v);
  EXPECT_NEAR(std::sqrt(s * g.volume()), l2_norm(a), 1e-12 * l2_norm(a));
  const auto psi = random_complex<8>(g, 12);
  EXPECT_LT(max_diff(to_complex_space(to_spectral(psi)), psi), 1e-13);
}

TEST(Multipliers, DerivativeOfSine) {
  const Grid g(16, 3.0);
  ScalarField f(g), expect(g);
  const double k = g.k0();
  for (std::size_t i = 0; i < g.size(); ++i) {
    int x, y, z;
    g.coords(i, x, y, z);
    f(0, i) = std::sin(k * g.coordinate(x));
    expect(0, i) = k * std::cos(k * g.coordinate(x));
  }
  EXPECT_LT(max_diff(partial(0, f), expect), 1e-13);
}

TEST(Multipliers, RieszKillsConstants) {
  const Grid g(8);
  LieScalarField f(g);
  f.fill(2.5);
  for (int j = 0; j < 3; ++j) EXPECT_LT(apply_multiplier(MultiplierSpec::riesz(j), f).max_abs(), 1e-15);
  EXPECT_LT(apply_multiplier(MultiplierSpec::abs_grad(-1.0), f).max_abs(), 1e-15);
  const auto psi = complexify(f);
  EXPECT_LT(apply_multiplier(MultiplierSpec::modified_riesz(1, +1), psi).max_abs(), 1e-15);
}

TEST(Multipliers, FractionalCancellationModeByMode) {
  const Grid g(16);
  auto f = random_real<3>(g, 21);
  auto spec = to_spectral(f);
  spec(0, 0) = spec(1, 0) = spec(2, 0) = 0.0;
  f = to_real_space(spec);
  const auto r = apply_multiplier(MultiplierSpec::abs_grad(-1.0), apply_multiplier(MultiplierSpec::abs_grad(1.0), f));
  EXPECT_LT(max_diff(r, f), 1e-13);
  // symbol check: |k|^-1 |k| = 1 at every nonzero mode
  for_each_mode(g, [&](std::size_t, const std::array<double, 3>& k) {
    if (knorm(k) == 0.0) return;
    const cplx p = multiplier_symbol(MultiplierSpec::abs_grad(-1.0), k) * multiplier_symbol(MultiplierSpec::abs_grad(1.0), k);
    EXPECT_NEAR(std::abs(p - 1.0), 0.0, 1e-15);
  });
}

TEST(Multipliers, RealityGuard) {
  const Grid g(8);
  LieScalarField f(g);
  EXPECT_THROW(apply_multiplier(MultiplierSpec::modified_riesz(0, 1), f), Error);
}

TEST(Hodge, GradientFieldIsCurlFree) {
  const Grid g(16);
  LieScalarField phi(g);
  const double k = g.k0();
  for (std::size_t i = 0; i < g.size(); ++i) {
    int x, y, z;
    g.coords(i, x, y, z);
    phi(2, i) = std::sin(k * (g.coordinate(x) + 2 * g.coordinate(y) - g.coordinate(z)));
  }
  const auto a = gradient(phi);
  const auto parts = hodge_split(a);
  EXPECT_LT(parts.df.max_abs(), 1e-13);
  EXPECT_LT(max_diff(parts.cf, a), 1e-13);
}

TEST(Hodge, CurlFieldIsDivergenceFree) {
  const Grid g(16);
  const auto w = random_real<9>(g, 31);
  const auto a = curl(w);
  EXPECT_LT(hodge_split(a).cf.max_abs(), 1e-12);
}

TEST(Hodge, RandomExactness) {
  const Grid g(16);
  LieVectorField a(g);
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n;
  for (auto& v : a.data()) v = n(rng);  // Nyquist content included
  const auto parts = hodge_split(a);
  EXPECT_LT(max_diff(parts.df + parts.cf, a), 1e-12);
  EXPECT_LT(divergence(parts.df).max_abs(), 1e-11);
  EXPECT_LT(curl(parts.cf).max_abs(), 1e-11);
  const auto cf0 = project_component({MultiplierKind::cf_component, 0.0, 1}, a);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(cf0(c, i), parts.cf(vc(1, c), i));
}

TEST(Dirac, ProjectorsComplementary) {
  const Grid g(16);
  const auto psi = random_complex<8>(g, 51);
  const auto p = dirac_project(+1, psi), m = dirac_project(-1, psi);
  EXPECT_LT(max_diff(p + m, psi), 1e-13);
  EXPECT_LT(dirac_project(+1, m).max_abs(), 1e-13);
  EXPECT_LT(max_diff(dirac_project(+1, p), p), 1e-13);
}

TEST(Dirac, FreeOperatorSpectralForm) {
  const Grid g(16);
  auto psi = random_complex<8>(g, 52);
  auto spec = to_spectral(psi);
  for (std::size_t c = 0; c < 8; ++c) spec(c, 0) = 0.0;
  psi = to_complex_space(spec);
  const auto lhs = free_dirac(psi);
  const auto grad = MultiplierSpec::abs_grad(1.0);
  const auto rhs = apply_multiplier(grad, dirac_project(+1, psi)) - apply_multiplier(grad, dirac_project(-1, psi));
  EXPECT_LT(max_diff(lhs, rhs), 1e-12 * std::max(1.0, lhs.max_abs()));
}

TEST(Dirac, PointwiseProjectorAlgebra) {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> n;
  const auto& d = DiracConstants::get();
  for (int t = 0; t < 100; ++t) {
    std::array<double, 3> k{n(rng), n(rng), n(rng)};
    const double kn = knorm(k);
    for (auto& v : k) v /= kn;
    const Mat4 pp = dirac_projector_matrix(+1, k), pm = dirac_projector_matrix(-1, k);
    const std::array<double, 3> mk{-k[0], -k[1], -k[2]};
    EXPECT_LT((pp * pp - pp).max_abs(), 1e-15);
    EXPECT_LT((pp + pm - Mat4::identity()).max_abs(), 1e-15);
    EXPECT_LT((pp * pm).max_abs(), 1e-15);
    EXPECT_LT((pp - dirac_projector_matrix(-1, mk)).max_abs(), 1e-15);
    for (int j = 0; j < 3; ++j) {
      const Mat4 lhs = d.alpha[j + 1] * pp;
      const Mat4 rhs = pm * d.alpha[j + 1] + Mat4::identity() * cplx(k[j], 0.0);
      EXPECT_LT((lhs - rhs).max_abs(), 1e-15);
    }
  }
  EXPECT_EQ((dirac_projector_matrix(+1, {0, 0, 0}) - Mat4::identity()).max_abs(), 0.0);
  EXPECT_EQ(dirac_projector_matrix(-1, {0, 0, 0}).max_abs(), 0.0);
}

TEST(Dealias, SingleModeProduct) {
  const Grid g(8);
  const auto f = plane_wave(g, 1, 2, 0, cplx(0.5, 0.25));
  const auto p = dealiased_product(f, f);
  // mode (2, 4, 0) has a Nyquist index, outside the band, so the product vanishes
  EXPECT_LT(p.max_abs(), 1e-14);
  const auto q = dealiased_product(plane_wave(g, 1, 1, 0), plane_wave(g, 1, -2, 1));
  EXPECT_LT(max_diff(q, plane_wave(g, 2, -1, 1)), 1e-14);
}

TEST(Dealias, HighModeSelfProductHasNoAliases) {
  const Grid g(8);
  const auto f = plane_wave(g, 3, 0, 0);
  const auto p = dealiased_product(f, f);
  EXPECT_LT(p.max_abs(), 1e-14);
  EXPECT_LT(max_diff(p, convolution_oracle(f, f)), 1e-14);
}

TEST(Dealias, RandomProductMatchesConvolution) {
  const Grid g(8);
  const auto f = random_complex<1>(g, 61), h = random_complex<1>(g, 62);
  EXPECT_LT(max_diff(dealiased_product(f, h), convolution_oracle(f, h)), 1e-12);
}

TEST(Dealias, TripleOfBandLimitedEqualsFullConvolution) {
  // with no intermediate truncation the cubic product is exact
  const Grid g(8);
  const auto f = plane_wave(g, 3, 1, 0), h = plane_wave(g, -3, 2, 0), u = plane_wave(g, 2, -2, 1);
  EXPECT_LT(max_diff(dealiased_triple(f, h, u), plane_wave(g, 2, 1, 1)), 1e-14);
}

TEST(Dealias, ProductWithOne) {
  const Grid g(16);
  const auto f = random_complex<1>(g, 63);
  ComplexScalarField one(g);
  one.fill(1.0);
  EXPECT_LT(max_diff(dealiased_product(f, one), f), 1e-14);
}

TEST(Dealias, RealPairPathsAgree) {
  const Grid g(8);
  const auto a = random_real<2>(g, 64);
  const auto spec = to_spectral(a);
  const Dealiaser d(g);
  std::vector<double> fa(d.fine_size()), fb(d.fine_size());
  std::vector<cplx> work;
  d.lift_real_pair(spec.component(0), spec.component(1), fa.data(), fb.data(), work);
  LatticeField<cplx, 2> back(g);
  d.lower_real_pair(fa.data(), fb.data(), back.component(0), back.component(1), work);
  EXPECT_LT(max_diff(back, spec), 1e-15);
}

TEST(Norms, HsOfSingleMode) {
  const Grid g(16);
  ScalarField f(g);
  const double k = g.k0();
  for (std::size_t i = 0; i < g.size(); ++i) {
    int x, y, z;
    g.coords(i, x, y, z);
    f(0, i) = std::cos(3 * k * g.coordinate(x));
  }
  // two coefficients of 1/2 at |xi| = 3
  const double expect = std::sqrt(g.volume() * 0.5 * std::pow(10.0, 1.5));
  EXPECT_NEAR(hs_norm(f, 1.5), expect, 1e-12 * expect);
  EXPECT_NEAR(hs_norm(f, 0.0), l2_norm(f), 1e-12);
}
