#include <gtest/gtest.h>

#include <cmath>

#include "dform/elasticity.hpp"
#include "dform/studies.hpp"

using namespace dform;

TEST(Elasticity, DefaultAiryRhs) {
  EXPECT_LE(airy_default_rhs_error(1.0, 17), 1e-12);
  EXPECT_LE(airy_default_rhs_error(-1.0, 17), 1e-12);
  const Chart c = Chart::unit_box(2, 0.0);
  EXPECT_EQ(l2_norm(airy_rhs(c, Grid::uniform(c, 9))), 0.0);
}

TEST(Elasticity, UserSource) {
  // R = c/2 g^g gives star star^V R = c
  const Chart c = Chart::unit_box(2, 1.0);
  const Grid g = Grid::uniform(c, 9);
  FormField R = riemann_field(Patch::full(c, g));
  R *= 0.75;
  const FormField r = airy_rhs(c, g, R);
  for (std::size_t n = 0; n < r.nodes(); ++n) EXPECT_NEAR(r.at(n)[0], 0.75, 1e-12);
  const FormField bad = sample(c, g, 2, 2, [](const double* x, double* v) { v[0] = x[0]; });
  EXPECT_NO_THROW(airy_rhs(c, g, bad));  // every (2,2) value is algebraic in d = 2
  const Chart c3 = Chart::unit_box(3, 0.0);
  try {
    airy_rhs(c3, Grid::uniform(c3, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WrongDimension);
  }
}

TEST(Elasticity, NonCurvatureSourceRejected) {
  const Chart c = Chart::unit_box(3, 0.0);
  const Grid g = Grid::uniform(c, 5);
  const FormField bad = sample(c, g, 2, 2, [](const double*, double* v) { v[1] = 1.0; });  // (01, 02) only
  try {
    stress_residuals(FormField(Patch::full(c, g), 1, 1), bad, std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}

TEST(Elasticity, AiryZeroData) {
  const Chart c = Chart::unit_box(2, 1.0);
  const Grid g = Grid::uniform(c, 17);
  const AirySolution s = airy_solve(c, g, FormField(Patch::full(c, g), 0, 0), zero_airy_boundary(c, g), AiryOperator::Consistent, 1e-12);
  EXPECT_LE(l2_norm(s.chi), 1e-14);
}

TEST(Elasticity, AiryBiharmonicPolynomial) {
  const Chart c = Chart::unit_box(2, 0.0);
  const AiryExact e = AiryExact::cubic();
  double prev = 0;
  for (int n : {17, 33}) {
    const Grid g = Grid::uniform(c, n);
    const AirySolution s = airy_solve(c, g, airy_rhs_exact(c, g, AiryOperator::Consistent, e), airy_boundary_exact(c, g, e),
                                      AiryOperator::Consistent, 1e-12);
    const double err = l2_norm(s.chi - airy_field_exact(c, g, e));
    if (prev > 1e-10) EXPECT_GE(std::log2(prev / err), 1.8);
    prev = err;
  }
  EXPECT_LE(prev, 1e-4);
}

TEST(Elasticity, AiryManufactured) {
  for (double kappa : {-1.0, 1.0}) {
    const AiryStudy s = airy_mms_study(kappa, {17, 33});
    EXPECT_TRUE(s.chi_error.pass) << kappa;
    EXPECT_TRUE(s.delta_sigma.pass) << kappa;
  }
  EXPECT_TRUE(airy_flat_relations({17, 33, 65}).pass);
}

TEST(Elasticity, StressResidualsOfZero) {
  const Chart c = Chart::unit_box(2, -1.0);
  const Grid g = Grid::uniform(c, 9);
  const StressReport r = stress_residuals(FormField(Patch::full(c, g), 1, 1), FormField(Patch::full(c, g), 2, 2), constant_traction(c, g, 0.0));
  EXPECT_EQ(r.delta.max, 0.0);
  EXPECT_EQ(r.equation.max, 0.0);
  EXPECT_EQ(r.rho_error, 0.0);
  EXPECT_EQ(r.tau_error, 0.0);
  EXPECT_EQ(r.lemma_T_star, 0.0);
  EXPECT_EQ(r.lemma_F, 0.0);
  EXPECT_TRUE(r.source_verified);
}

TEST(Elasticity, TractionCompatibility) {
  const Chart c = Chart::unit_box(2, 1.0);
  const Grid g = Grid::uniform(c, 17);
  const KillingBasis kb = killing_basis(c, g);
  EXPECT_EQ(traction_compatibility(constant_traction(c, g, 0.0), kb).norm, 0.0);
  const IncompatibleTraction t = traction_incompatible(1.0, 2, 17);
  EXPECT_GE(t.ratio, 0.1);
  TractionData missing = constant_traction(c, g, 1.0);
  missing.tau.pop_back();
  EXPECT_THROW(traction_compatibility(missing, kb), Error);
}

TEST(Elasticity, DirectSolveZeroData) {
  const Chart c = Chart::unit_box(2, 0.0);
  const Grid g = Grid::uniform(c, 9);
  const DirectSolve s = solve_stress_direct(c, g, std::nullopt, constant_traction(c, g, 0.0));
  EXPECT_LE(l2_norm(s.sigma), 1e-12);
  try {
    solve_stress_direct(c, g, std::nullopt, constant_traction(c, g, 0.0), 1e-10, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooLarge);
  }
}

TEST(Elasticity, AssembledSystemMatchesRows) {
  const Chart c = Chart::unit_box(2, 1.0);
  const Grid g = Grid::uniform(c, 7);
  const Patch p = Patch::full(c, g);
  const FormField R = default_source(c, g);
  const LinearSystem sys = assemble_stress_system(c, g, R, constant_traction(c, g, 0.0));
  const FormField s = random_smooth_field(p, 1, 1, 6, true);
  const int S = sym_count(2);
  Vec x(static_cast<long>(p.nodes()) * S);
  for (std::size_t n = 0; n < p.nodes(); ++n)
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) x[n * S + sym_index(2, i, j)] = s.at(n)[i * 2 + j];
  const std::vector<double> rows = detail::stress_rows(s, nullptr);
  const Vec Ax = sys.A * x;
  ASSERT_EQ(Ax.size(), static_cast<long>(rows.size()));
  double err = 0, scale = 1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    err = std::max(err, std::abs(Ax[i] - rows[i]));
    scale = std::max(scale, std::abs(rows[i]));
  }
  EXPECT_LE(err, 1e-12 * scale);
}

TEST(Elasticity, Potential3DOfZero) {
  const Chart c = Chart::unit_box(3, 0.0);
  const Potential3D r = potential_3d(FormField(Patch::full(c, Grid::uniform(c, 5)), 1, 1));
  EXPECT_LE(l2_norm(r.psi), 1e-14);
  EXPECT_LE(r.reproduction.max, 1e-14);
}
