#include <gtest/gtest.h>

#include "dform/algebra.hpp"
#include "dform/random.hpp"
#include "dform/suites.hpp"

using namespace dform;

namespace {

DoubleFormValue e(int d, std::vector<int> I, std::vector<int> J) { return DoubleFormValue::basis(d, I, J); }

}  // namespace

TEST(Algebra, ComponentCount) {
  for (int d = 1; d <= 4; ++d)
    for (int k = 0; k <= d; ++k)
      for (int m = 0; m <= d; ++m) EXPECT_EQ(DoubleFormValue(d, k, m).size(), static_cast<std::size_t>(binom(d, k) * binom(d, m)));
  EXPECT_THROW(DoubleFormValue(2, 3, 0), Error);
  EXPECT_THROW(DoubleFormValue(2, 1, 0, {1.0}), Error);
  EXPECT_THROW(DoubleFormValue(2, 1, 0, {1.0, std::nan("")}), Error);
}

TEST(Algebra, WedgeOfOneForms) {
  auto w = wedge(e(2, {0}, {}), e(2, {1}, {}));
  EXPECT_EQ(w.k(), 2);
  EXPECT_EQ(w.m(), 0);
  EXPECT_DOUBLE_EQ(w.eval({0, 1}, {}), 1.0);
}

TEST(Algebra, FlatMetricWedgeMetric) {
  auto g = DoubleFormValue::metric_form(MetricValue::euclidean(2));
  auto gg = wedge(g, g);
  ASSERT_EQ(gg.size(), 1u);
  EXPECT_DOUBLE_EQ(gg[0], 2.0);
}

TEST(Algebra, WedgeGradedCommutativity) {
  SplitMix64 rng(11);
  for (int t = 0; t < 20; ++t) {
    auto a = random_value(rng, 3, 1, 1), b = random_value(rng, 3, 1, 1);
    auto r = wedge(a, b) - wedge(b, a);  // (-1)^{1*1 + 1*1} = +1
    EXPECT_LE(r.max_abs(), 1e-14);
  }
}

TEST(Algebra, WedgeOverflow) {
  EXPECT_THROW(wedge(e(2, {0, 1}, {}), e(2, {0}, {})), Error);
  EXPECT_FALSE(wedge_or_zero(e(2, {0, 1}, {}), e(2, {0}, {})).has_value());
}

TEST(Algebra, Transpose) {
  auto g = DoubleFormValue::metric_form(MetricValue::conformal(3, 1.7));
  EXPECT_LE((transpose(g) - g).max_abs(), 0.0);
  auto t = transpose(e(2, {0}, {1}));
  EXPECT_DOUBLE_EQ(t.eval({1}, {0}), 1.0);
  EXPECT_DOUBLE_EQ(t.eval({0}, {1}), 0.0);
  SplitMix64 rng(3);
  auto a = random_value(rng, 3, 2, 1);
  EXPECT_EQ(transpose(transpose(a)).components(), a.components());
}

TEST(Algebra, BianchiSum) {
  SplitMix64 rng(5);
  auto s = random_value(rng, 3, 1, 1);
  s = s + transpose(s);
  EXPECT_LE(bianchi(s).max_abs(), 1e-15);
  // the alternating sum with (-1)^{j+1} gives -1 here
  auto b = bianchi(e(2, {0}, {1}));
  EXPECT_DOUBLE_EQ(b.eval({0, 1}, {}), -1.0);
  for (int d = 3; d <= 4; ++d) {
    auto g = DoubleFormValue::metric_form(random_metric(rng, d));
    EXPECT_LE(bianchi(0.5 * 0.7 * wedge(g, g)).max_abs(), 1e-12);
  }
}

TEST(Algebra, HodgeStar) {
  const auto flat2 = MetricValue::euclidean(2);
  auto s = hodge_star(e(2, {0}, {}), flat2);
  EXPECT_DOUBLE_EQ(s.eval({1}, {}), 1.0);
  SplitMix64 rng(9);
  const auto flat3 = MetricValue::euclidean(3);
  auto a = random_value(rng, 3, 1, 1);
  EXPECT_LE((hodge_star(hodge_star(a, flat3), flat3) - a).max_abs(), 1e-14);
  auto b = random_value(rng, 2, 1, 1);
  b = b + transpose(b);
  auto sb = hodge_star(hodge_star_V(b, flat2), flat2);
  EXPECT_NEAR(norm(sb, flat2), norm(b, flat2), 1e-14);
}

TEST(Algebra, Interior) {
  auto r = interior({1, 0}, e(2, {0, 1}, {}));
  EXPECT_DOUBLE_EQ(r.eval({1}, {}), 1.0);
  EXPECT_LE(interior({0, 1, 0}, e(3, {0}, {2})).max_abs(), 0.0);
  SplitMix64 rng(4);
  auto a = random_value(rng, 3, 2, 1);
  std::vector<double> v{0.3, -1.2, 0.8};
  EXPECT_LE(interior(v, interior(v, a)).max_abs(), 1e-15);
}

TEST(Algebra, TraceAndGWedge) {
  SplitMix64 rng(21);
  for (int d = 2; d <= 4; ++d) {
    auto g = random_metric(rng, d);
    auto t = trace_g(DoubleFormValue::metric_form(g), g);
    EXPECT_NEAR(t[0], d, 1e-12);
  }
  EXPECT_DOUBLE_EQ(trace_g(e(2, {0}, {1}), MetricValue::euclidean(2))[0], 0.0);
  auto g = random_metric(rng, 3);
  auto psi = random_value(rng, 3, 2, 2), phi = random_value(rng, 3, 1, 1);
  EXPECT_NEAR(inner(trace_g(psi, g), phi, g), inner(psi, g_wedge(phi, g), g), 1e-12);
}

TEST(Algebra, Inner) {
  EXPECT_DOUBLE_EQ(inner(e(3, {0, 2}, {1}), e(3, {0, 2}, {1}), MetricValue::euclidean(3)), 1.0);
  SplitMix64 rng(8);
  for (int d = 2; d <= 4; ++d) {
    auto g = random_metric(rng, d);
    auto gf = DoubleFormValue::metric_form(g);
    EXPECT_NEAR(inner(gf, gf, g), d, 1e-11);
    auto a = random_value(rng, d, 1, 2), b = random_value(rng, d, 1, 2);
    EXPECT_NEAR(inner(a, b, g), inner(b, a, g), 1e-13);
  }
}

TEST(Algebra, AlgebraicCurvature) {
  auto g = DoubleFormValue::metric_form(MetricValue::conformal(3, 1.3));
  EXPECT_TRUE(is_algebraic_curvature(0.5 * 0.8 * wedge(g, g), 1e-12));
  EXPECT_FALSE(is_algebraic_curvature(e(3, {0, 1}, {0, 2}), 1e-12));
  EXPECT_TRUE(is_algebraic_curvature(DoubleFormValue(3, 2, 2), 1e-12));
}

TEST(Algebra, RandomSuite) {
  auto r = run_algebra_suite(7, 2000);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.total, 2000);
  for (const auto& c : r.checks) EXPECT_LE(c.worst, 1e-11) << c.name;
}
