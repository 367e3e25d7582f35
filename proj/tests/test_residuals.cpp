#include <gtest/gtest.h>

#include <random>

#include "infharm/map_spec.hpp"
#include "infharm/residuals.hpp"
#include "oracles.hpp"

using namespace infharm;

namespace {

Jet2 lift(const Jet2& f, const Vector& xi) {
  const std::size_t n = f.domain_dim();
  Jet2 j(xi.size(), n);
  for (std::size_t a = 0; a < xi.size(); ++a) {
    j.u[a] = xi[a] * f.u[0];
    for (std::size_t i = 0; i < n; ++i) {
      j.du(a, i) = xi[a] * f.du(0, i);
      for (std::size_t k = 0; k < n; ++k) j.d2u(a, i, k) = xi[a] * f.d2u(0, i, k);
    }
  }
  return j;
}

Vector times(const Matrix& q, const Vector& v) { return q * std::span<const double>(v); }

}  // namespace

TEST(Residual, AffineVanishes) {
  const double x[] = {0.4, -0.9};
  const ResidualSample r = residual_at(jet_affine(x, Matrix{{1, 2}, {3, 4}, {5, 6}}, Vector{1, 1, 1}));
  EXPECT_EQ(r.full, (Vector{0, 0, 0}));
  EXPECT_EQ(r.rank.rank, 2u);
  EXPECT_DOUBLE_EQ(r.du_norm_sq, 91.0);
}

TEST(Residual, Exp2Vanishes) {
  const ResidualSample r = residual_at(jet_exp2(0.3, 0.7));
  EXPECT_LE(norm(r.full), 1e-10);
  EXPECT_NEAR(r.du_norm_sq, 2.0, 1e-15);
}

TEST(Residual, HalfSquaresDoesNotVanish) {
  // u = (x^2/2, y^2/2): Du = diag(x, y) has full rank, so the tangential part is all of it.
  const double x[] = {1.0, 2.0};
  const Jet2 j = MapSpec::half_squares().jet(x);
  const ResidualSample r = residual_at(j);
  EXPECT_NEAR(r.full[0], 1.0, 1e-14);
  EXPECT_NEAR(r.full[1], 4.0, 1e-14);
  EXPECT_LE(max_abs(r.normal), 0.0);
  EXPECT_LE(oracle::max_abs_diff(r.full, oracle::index_form_residual(j, Matrix(2, 2))), 1e-14);
}

TEST(Residual, GradientAndLaplacian) {
  const double x[] = {1.0, 2.0};
  const Jet2 j = MapSpec::half_squares().jet(x);
  EXPECT_EQ(grad_half_du_sq(j), (Vector{1.0, 2.0}));
  EXPECT_EQ(laplacian(j), (Vector{1.0, 1.0}));
}

TEST(ScalarResidual, HalfNormSquared) {
  const double x[] = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(scalar_residual_at(ScalarProfile::half_norm_sq(2).jet(x)), 2.0);
  const double y[] = {0.3, -1.7};
  EXPECT_NEAR(scalar_residual_at(ScalarProfile::cone({0.1, 0.2}).jet(y)), 0.0, 1e-15);
  EXPECT_THROW(scalar_residual_at(jet_exp2(0.0, 0.0)), InvalidInput);
}

TEST(OneDResidual, Examples) {
  // (cos t, sin t) at t = 0.
  Jet2 c(2, 1);
  c.u = {1.0, 0.0};
  c.du(0, 0) = 0.0;
  c.du(1, 0) = 1.0;
  c.d2u(0, 0, 0) = -1.0;
  c.d2u(1, 0, 0) = 0.0;
  EXPECT_EQ(one_d_residual_at(c), (Vector{-1.0, 0.0}));

  // (t^2, 0) at t = 1.
  Jet2 p(2, 1);
  p.u = {1.0, 0.0};
  p.du(0, 0) = 2.0;
  p.d2u(0, 0, 0) = 2.0;
  EXPECT_EQ(one_d_residual_at(p), (Vector{8.0, 0.0}));

  EXPECT_THROW(one_d_residual_at(jet_exp2(0.0, 0.0)), InvalidInput);
}

TEST(OneDResidual, AgreesWithGeneralResidualForNonDegenerateCurves) {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 200; ++t) {
    const Jet2 j = oracle::random_jet(gen, 1 + t % 4, 1, 1);
    ASSERT_LE(oracle::max_abs_diff(one_d_residual_at(j), residual_at(j).full), 1e-13);
  }
}

TEST(Eikonal, Examples) {
  const double flat[] = {2.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(eikonal_deviation(flat).c_sq, 2.0);
  EXPECT_DOUBLE_EQ(eikonal_deviation(flat).max_dev, 0.0);
  const double two[] = {1.0, 3.0};
  EXPECT_DOUBLE_EQ(eikonal_deviation(two).c_sq, 2.0);
  EXPECT_DOUBLE_EQ(eikonal_deviation(two).max_dev, 1.0);
  EXPECT_THROW(eikonal_deviation(std::span<const double>()), InvalidInput);
}

TEST(ResidualProperty, DecompositionIsOrthogonal) {
  std::mt19937_64 gen(22);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + t % 4, big_n = 1 + (t / 4) % 5;
    const std::size_t rank = std::uniform_int_distribution<std::size_t>(0, std::min(n, big_n))(gen);
    const Jet2 j = oracle::random_jet(gen, big_n, n, rank);
    const ResidualSample r = residual_at(j);
    ASSERT_EQ(r.rank.rank, rank);
    for (std::size_t a = 0; a < big_n; ++a) ASSERT_DOUBLE_EQ(r.full[a], r.tangential[a] + r.normal[a]);
    // Normal part is orthogonal to the range of Du; tangential part lies in it.
    const Vector du_t_normal = j.du.transposed() * std::span<const double>(r.normal);
    ASSERT_LE(max_abs(du_t_normal), 1e-11 * std::max(1.0, max_abs(r.normal)));
    const Matrix p = oracle::complement_projection(j.du, rank);
    ASSERT_LE(max_abs(times(p, r.tangential)), 1e-11 * std::max(1.0, max_abs(r.tangential)));
    ASSERT_LE(oracle::max_abs_diff(r.full, oracle::index_form_residual(j, p)), 1e-11);
  }
}

TEST(ResidualProperty, RankOneMapsReduceToScalarOperator) {
  std::mt19937_64 gen(23);
  std::normal_distribution<double> g;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + t % 4, big_n = 1 + (t / 4) % 4;
    Vector xi(big_n);
    for (double& v : xi) v = g(gen);
    const double len = norm(xi);
    for (double& v : xi) v /= len;
    const Jet2 f = oracle::random_jet(gen, 1, n, 1);
    const ResidualSample r = residual_at(lift(f, xi));
    const double s = scalar_residual_at(f);
    for (std::size_t a = 0; a < big_n; ++a) ASSERT_NEAR(r.full[a], xi[a] * s, 1e-12);
    ASSERT_LE(max_abs(r.normal), 1e-12);
  }
}

TEST(ResidualProperty, EmbeddingIsEquivariant) {
  std::mt19937_64 gen(24);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + t % 3, big_n = 1 + (t / 3) % 3;
    const Jet2 j = oracle::random_jet(gen, big_n, n, std::min(n, big_n) - t % 2 * (std::min(n, big_n) > 1));
    const Matrix q = random_semi_orthogonal(big_n + 1 + t % 3, big_n, static_cast<std::uint64_t>(t));
    const Jet2 e = embed(j, q, Vector(q.rows(), 0.25));
    const ResidualSample a = residual_at(j), b = residual_at(e);
    ASSERT_EQ(a.rank.rank, b.rank.rank);
    ASSERT_LE(oracle::max_abs_diff(times(q, a.full), b.full), 1e-11);
  }
}

TEST(ResidualField, AffineAndExp2) {
  const Grid g = Grid::cube(2, -3.2, 3.2, 64);
  const ResidualField aff = residual_field(MapSpec::affine(Matrix{{1, 2}, {3, 4}}, Vector{0, 0}), g);
  EXPECT_EQ(aff.samples.size(), g.size());
  EXPECT_DOUBLE_EQ(aff.sup.full, 0.0);
  const ResidualField e = residual_field(MapSpec::exp2(), g);
  EXPECT_LE(e.sup.full, 1e-12);
  EXPECT_LE(e.sup.full_component, e.sup.full);
  const ResidualField q = residual_field(MapSpec::half_squares(), g);
  // Largest at the corners: |(x^2, y^2)| with x = y = 3.2.
  EXPECT_NEAR(q.sup.full, std::sqrt(2.0) * 3.2 * 3.2, 1e-12);
}

TEST(ResidualField, NodeJetMatchesDirectJet) {
  const Grid g = Grid::cube(2, -1.0, 1.0, 5);
  const MapSpec s = MapSpec::kprofile(KProfile::plateau2());
  const Vector p = g.point(7);
  EXPECT_EQ(node_jet(s, g, 7, false).du, s.jet(p, false).du);
}
