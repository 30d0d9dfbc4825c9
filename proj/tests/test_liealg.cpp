#include <gtest/gtest.h>

#include <random>

#include "ymd/liealg.hpp"

using namespace ymd;

namespace {

LieElement random_lie(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return LieElement(n(rng), n(rng), n(rng));
}

// Taylor series with scaling and squaring, independent of the closed form.
Mat2 brute_exp(const Mat2& x) {
  int squarings = 0;
  double nrm = x.max_abs();
  while (nrm > 0.1) {
    nrm *= 0.5;
    ++squarings;
  }
  const Mat2 y = x * cplx(std::ldexp(1.0, -squarings), 0.0);
  Mat2 term = Mat2::identity(), sum = Mat2::identity();
  for (int k = 1; k < 30; ++k) {
    term = term * y * cplx(1.0 / k, 0.0);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

double coeff_diff(const LieElement& a, const LieElement& b) { return (a - b).norm(); }

}  // namespace

TEST(LieAlgebra, GeneratorBracketIsT3) {
  const auto r = commutator(LieElement::basis(0), LieElement::basis(1));
  EXPECT_EQ(r, LieElement::basis(2));
  const Mat2 m = generators()[0] * generators()[1] - generators()[1] * generators()[0];
  EXPECT_LT((m - generators()[2]).max_abs(), 1e-16);
}

TEST(LieAlgebra, SelfBracketVanishes) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto x = random_lie(rng);
    EXPECT_EQ(commutator(x, x).norm(), 0.0);
  }
}

TEST(LieAlgebra, Jacobi) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto x = random_lie(rng), y = random_lie(rng), z = random_lie(rng);
    const auto j = commutator(x, commutator(y, z)) + commutator(y, commutator(z, x)) + commutator(z, commutator(x, y));
    EXPECT_LT(j.norm(), 1e-14);
  }
}

TEST(LieAlgebra, BracketMatchesMatrices) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto x = random_lie(rng), y = random_lie(rng);
    const Mat2 m = x.matrix() * y.matrix() - y.matrix() * x.matrix();
    EXPECT_LT(coeff_diff(LieElement::from_matrix(m), commutator(x, y)), 1e-14);
  }
}

TEST(LieAlgebra, MatrixRoundTripAndShape) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_lie(rng);
    const Mat2 m = x.matrix();
    EXPECT_LT(std::abs(m.trace()), 1e-16);
    EXPECT_LT((m + m.adjoint()).max_abs(), 1e-16);
    EXPECT_LT(coeff_diff(LieElement::from_matrix(m), x), 1e-15);
  }
}

TEST(LieAlgebra, FromMatrixRejectsNonAlgebra) {
  EXPECT_THROW(LieElement::from_matrix(Mat2::identity()), Error);
}

TEST(StructureConstants, AntisymmetryAndJacobiContraction) {
  using S = StructureConstants;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(S::f(a, b, c), -S::f(b, a, c));
        EXPECT_EQ(S::f(a, b, c), -S::f(a, c, b));
        // [T_a, T_b] = f^{abc} T_c in matrices
        const Mat2 m = generators()[a] * generators()[b] - generators()[b] * generators()[a];
        Mat2 r;
        for (std::size_t e = 0; e < 3; ++e) r += generators()[e] * cplx(S::f(a, b, e), 0.0);
        EXPECT_LT((m - r).max_abs(), 1e-16);
        for (std::size_t d = 0; d < 3; ++d) {
          double s = 0.0;
          for (std::size_t e = 0; e < 3; ++e)
            s += S::f(a, b, e) * S::f(e, c, d) + S::f(c, b, e) * S::f(a, e, d) + S::f(d, b, e) * S::f(a, c, e);
          EXPECT_EQ(s, 0.0);
        }
      }
  EXPECT_EQ(S::f(0, 1, 2), 1.0);
}

TEST(ExpMap, ZeroIsIdentity) {
  EXPECT_LT((exp_map(LieElement()).matrix() - Mat2::identity()).max_abs(), 1e-16);
}

TEST(ExpMap, InverseAndGroupProperties) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto v = random_lie(rng, 2.0);
    const auto u = exp_map(v);
    EXPECT_LT(u.unitarity_defect(), 1e-13);
    EXPECT_LT(((u * exp_map(-v)).matrix() - Mat2::identity()).max_abs(), 1e-13);
  }
}

TEST(ExpMap, MatchesSeriesOracle) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 30; ++i) {
    const auto v = random_lie(rng, 3.0);
    EXPECT_LT((exp_map(v).matrix() - brute_exp(v.matrix())).max_abs(), 1e-12);
  }
  // full turns: 2 pi about T_3 gives -I, 4 pi gives I
  const auto half = exp_map(LieElement(0, 0, 2 * std::numbers::pi));
  EXPECT_LT((half.matrix() + Mat2::identity()).max_abs(), 1e-14);
  EXPECT_LT((half.matrix() - brute_exp(LieElement(0, 0, 2 * std::numbers::pi).matrix())).max_abs(), 1e-12);
  const auto full = exp_map(LieElement(0, 0, 4 * std::numbers::pi));
  EXPECT_LT((full.matrix() - Mat2::identity()).max_abs(), 1e-14);
  EXPECT_LT((full.matrix() - brute_exp(LieElement(0, 0, 4 * std::numbers::pi).matrix())).max_abs(), 1e-12);
}

TEST(Adjoint, IdentityAndIsometry) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 30; ++i) {
    const auto x = random_lie(rng);
    EXPECT_LT(coeff_diff(adjoint(GroupElement::identity(), x), x), 1e-15);
    const auto u = exp_map(random_lie(rng, 2.0));
    EXPECT_NEAR(adjoint(u, x).norm(), x.norm(), 1e-13);
  }
}

TEST(Adjoint, MatchesAdjointOde) {
  // dX/dt = [T_3, X], X(0) = T_1, integrated with small-step RK4
  const double t_end = 1.3;
  const int steps = 2000;
  const double h = t_end / steps;
  LieElement x = LieElement::basis(0);
  const LieElement t3 = LieElement::basis(2);
  for (int s = 0; s < steps; ++s) {
    const auto k1 = commutator(t3, x);
    const auto k2 = commutator(t3, x + 0.5 * h * k1);
    const auto k3 = commutator(t3, x + 0.5 * h * k2);
    const auto k4 = commutator(t3, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const auto r = adjoint(exp_map(t_end * t3), LieElement::basis(0));
  EXPECT_LT(coeff_diff(r, x), 1e-12);
  EXPECT_NEAR(r[0], std::cos(t_end), 1e-14);
  EXPECT_NEAR(r[1], std::sin(t_end), 1e-14);
}

TEST(Adjoint, CorruptGroupElementThrows) {
  Mat2 bad = Mat2::identity();
  bad.m[0][1] = 0.5;
  EXPECT_THROW(adjoint(GroupElement(bad), LieElement::basis(0)), Error);
}

TEST(GroupElement, RenormalizeRestoresUnitarity) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1e-6);
  for (int i = 0; i < 20; ++i) {
    Mat2 m = exp_map(random_lie(rng)).matrix();
    for (auto& row : m.m)
      for (auto& v : row) v += cplx(n(rng), n(rng));
    GroupElement u(m);
    EXPECT_GT(u.unitarity_defect(), 1e-9);
    u.renormalize();
    EXPECT_LT(u.unitarity_defect(), 1e-15);
    EXPECT_LT((u.matrix() - m).max_abs(), 1e-5);
  }
}

TEST(DiracConstants, Anticommutation) {
  const auto& d = DiracConstants::get();
  for (std::size_t mu = 0; mu < 4; ++mu) {
    EXPECT_LT((d.alpha[mu] * d.alpha[mu] - Mat4::identity()).max_abs(), 1e-16);
    EXPECT_LT((d.alpha[mu] - d.alpha[mu].adjoint()).max_abs(), 1e-16);
    EXPECT_LT((d.alpha[mu] - d.gamma[0] * d.gamma[mu]).max_abs(), 1e-16);
  }
  for (std::size_t j = 1; j < 4; ++j)
    for (std::size_t k = 1; k < 4; ++k) {
      if (j == k) continue;
      EXPECT_LT((d.alpha[j] * d.alpha[k] + d.alpha[k] * d.alpha[j]).max_abs(), 1e-16);
    }
  EXPECT_LT((d.alpha[0] - Mat4::identity()).max_abs(), 1e-16);
}

TEST(Convention, ParseAndGenerators) {
  EXPECT_EQ(convention_from_string("paper"), Convention::paper);
  EXPECT_EQ(convention_from_string("physics"), Convention::physics);
  EXPECT_THROW(convention_from_string("other"), Error);
  for (std::size_t a = 0; a < 3; ++a) {
    const Mat2& tau = coupling_generators(Convention::physics)[a];
    EXPECT_LT((tau - tau.adjoint()).max_abs(), 1e-16);
    EXPECT_LT((tau - generators()[a] * I_unit).max_abs(), 1e-16);
  }
}
