#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "dform/boundary.hpp"
#include "dform/calculus.hpp"
#include "dform/random.hpp"
#include "dform/saint_venant.hpp"

using namespace dform;

namespace {

// max-norm residual on a region fixed on the n = 17 grid, for n = 17, 33, 65
std::vector<double> refine(double kappa, int dim, const std::function<FormField(const Patch&)>& residual, int layer = 3,
                           std::vector<int> grids = {17, 33, 65}) {
  const Chart c = Chart::unit_box(dim, kappa);
  const Region R = Region::inset(Patch::full(c, Grid::uniform(c, grids.front())), layer);
  std::vector<double> out;
  for (int n : grids) out.push_back(region_norms(residual(Patch::full(c, Grid::uniform(c, n))), R).max);
  return out;
}

void expect_second_order(const std::vector<double>& e, double floor = 1e-11) {
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i - 1] < floor) continue;
    EXPECT_GE(std::log2(e[i - 1] / e[i]), 1.8) << "level " << i;
  }
}

}  // namespace

TEST(Calculus, DOfConstantIsZero) {
  const Chart c = Chart::unit_box(2, 1.0);
  auto f = sample(c, Grid::uniform(c, 9), 0, 0, [](const double*, double* v) { v[0] = 3.5; });
  EXPECT_EQ(region_norms(d_nabla(f), Region::whole(f.patch())).max, 0.0);
}

TEST(Calculus, DExactOnQuadratics) {
  const Chart c = Chart::unit_box(2, 0.0);
  const Patch p = Patch::full(c, Grid::uniform(c, 9));
  auto df = d_nabla(sample(p, 0, 0, [](const double* x, double* v) { v[0] = x[0] * x[0]; }));
  auto ex = sample(p, 1, 0, [](const double* x, double* v) {
    v[0] = 2 * x[0];
    v[1] = 0;
  });
  EXPECT_LE(region_norms(df - ex, Region::whole(p)).max, 1e-13);
}

TEST(Calculus, MetricIsParallel) {
  for (double kappa : {-1.0, 1.0}) expect_second_order(refine(kappa, 2, [](const Patch& p) { return d_nabla(metric_field(p)); }));
}

TEST(Calculus, Codifferential) {
  const Chart c = Chart::unit_box(2, 0.0);
  const Patch p = Patch::full(c, Grid::uniform(c, 9));
  auto k = sample(p, 1, 0, [](const double*, double* v) {
    v[0] = 0.7;
    v[1] = -1.1;
  });
  EXPECT_LE(region_norms(delta_nabla(k), Region::whole(p)).max, 1e-13);
  auto w = sample(p, 1, 0, [](const double* x, double* v) {
    v[0] = x[0];
    v[1] = 0;
  });
  auto dw = delta_nabla(w);
  for (std::size_t n = 0; n < p.nodes(); ++n) EXPECT_NEAR(dw.at(n)[0], -1.0, 1e-12);
}

TEST(Calculus, CodifferentialIsAdjoint) {
  // fields supported away from the boundary; <d f, g> = <f, delta g>
  for (double kappa : {-1.0, 0.0, 1.0}) {
    double prev = 0;
    for (int n : {33, 65}) {
      const Chart c = Chart::unit_box(2, kappa);
      const Patch p = Patch::full(c, Grid::uniform(c, n));
      auto bump = [](const double* x) {
        double b = 1;
        for (int i = 0; i < 2; ++i) b *= std::pow(std::max(0.0, 0.16 - x[i] * x[i]), 3);
        return b * 1e4;
      };
      auto f = sample(p, 1, 1, [&](const double* x, double* v) {
        for (int i = 0; i < 4; ++i) v[i] = bump(x) * std::sin(1.0 + i + x[0] - 2 * x[1]);
      });
      auto g = sample(p, 2, 1, [&](const double* x, double* v) {
        for (int i = 0; i < 2; ++i) v[i] = bump(x) * std::cos(0.5 * i + x[1]);
      });
      const double r = std::abs(l2_inner(d_nabla(f), g) - l2_inner(f, delta_nabla(g)));
      if (prev > 1e-11) EXPECT_GE(std::log2(prev / r), 1.8);
      prev = r;
    }
  }
}

TEST(Calculus, AlgebraicD) {
  SplitMix64 rng(17);
  auto g = random_metric(rng, 3);
  auto f = random_value(rng, 3, 1, 1);
  f = f + transpose(f);
  // on symmetric (1,1) forms D = -kappa g wedge
  EXPECT_LE((D_g(f, g, 1.0) + g_wedge(f, g)).max_abs(), 1e-12);
  auto gf = DoubleFormValue::metric_form(g);
  EXPECT_LE((D_g(gf, g, 0.6) + 2.0 * riemann_from_metric(g, 0.6)).max_abs(), 1e-12);
  // (D w)(X,Y;Z) = -1/2 w(R(X,Y)Z) with R built from kappa/2 g^g
  auto w = random_value(rng, 3, 1, 0);
  auto D = D_g(w, g, 1.0);
  for (int X = 0; X < 3; ++X)
    for (int Y = 0; Y < 3; ++Y)
      for (int Z = 0; Z < 3; ++Z) EXPECT_NEAR(D.eval({X, Y}, {Z}), -0.5 * (g.G(X, Z) * w[Y] - w[X] * g.G(Y, Z)), 1e-13);
}

TEST(Calculus, HOnTheMetric) {
  for (double kappa : {-1.0, 1.0})
    expect_second_order(refine(kappa, 2, [](const Patch& p) {
      auto r = H_op(metric_field(p));
      auto R = riemann_field(p);
      R *= 2.0;
      return r + R;
    }));
}

TEST(Calculus, HOnLieDerivative) {
  SplitMix64 rng(2);
  const PolyVector Y = PolyVector::draw(rng, 2);
  for (double kappa : {-1.0, 1.0}) expect_second_order(refine(kappa, 2, [&](const Patch& p) { return H_op(lie_metric_exact(p, Y)); }));
}

TEST(Calculus, CurlCurlFlat) {
  const Chart c = Chart::unit_box(2, 0.0);
  const Patch p = Patch::full(c, Grid::uniform(c, 9));
  auto s = sample(p, 1, 1, [](const double* x, double* v) {
    v[0] = x[1] * x[1];
    v[1] = v[2] = v[3] = 0;
  });
  auto H = H_op(s);
  for (std::size_t n = 0; n < p.nodes(); ++n)
    if (p.deep(n, 2)) EXPECT_NEAR(H.value(n).eval({0, 1}, {0, 1}), 2.0, 1e-10);
}

TEST(Calculus, FStarIsLieDerivative) {
  for (double kappa : {-1.0, 1.0})
    expect_second_order(refine(kappa, 2, [](const Patch& p) {
      auto lam = random_smooth_field(p, 2, 0, 5);
      auto F = F_star_op(lam);
      return F + transpose(F) - lie_derivative_metric(delta_nabla(lam));
    }));
}

TEST(Calculus, FAfterHVanishes) {
  for (double kappa : {-1.0, 1.0})
    expect_second_order(refine(kappa, 2, [](const Patch& p) { return F_op(H_op(random_smooth_field(p, 0, 0, 9))); }));
}

TEST(Calculus, DeltaOfHStar) {
  for (double kappa : {-1.0, 1.0})
    expect_second_order(
        refine(kappa, 3, [](const Patch& p) { return delta_nabla(H_star_op(random_smooth_field(p, 2, 2, 4, true))); }, 2, {9, 17, 33}));
}

TEST(Calculus, BilaplacianOnScalarsFlat) {
  const Chart c = Chart::unit_box(2, 0.0);
  const Patch p = Patch::full(c, Grid::uniform(c, 17));
  // Delta^2 (x1^4 + x1^2 x2^2 + x2^3) = 24 + 8
  auto f = sample(p, 0, 0, [](const double* x, double* v) { v[0] = std::pow(x[0], 4) + x[0] * x[0] * x[1] * x[1] + std::pow(x[1], 3); });
  auto B = B_op(f);
  for (std::size_t n = 0; n < p.nodes(); ++n)
    if (p.deep(n, 4)) EXPECT_NEAR(B.at(n)[0], 32.0, 1e-8);
  EXPECT_EQ(l2_norm(B_op(FormField(p, 1, 1))), 0.0);
}

TEST(Calculus, Quadrature) {
  const Chart flat = Chart::unit_box(2, 0.0);
  auto one = sample(flat, Grid::uniform(flat, 17), 0, 0, [](const double*, double* v) { v[0] = 1; });
  EXPECT_NEAR(l2_inner(one, one), 1.0, 1e-12);
  // int lambda^2 over the unit square, kappa = 1, by composite Simpson with 2000 panels
  const int N = 2000;
  double oracle = 0;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) {
      const double x = -0.5 + double(i) / N, y = -0.5 + double(j) / N;
      const double wi = (i == 0 || i == N) ? 1 : (i % 2 ? 4 : 2), wj = (j == 0 || j == N) ? 1 : (j % 2 ? 4 : 2);
      oracle += wi * wj * std::pow(1.0 - (x * x + y * y) / 4.0, -2.0);
    }
  oracle /= 9.0 * N * N;
  const Chart c = Chart::unit_box(2, 1.0);
  double prev = 0;
  for (int n : {17, 33, 65}) {
    auto o = sample(c, Grid::uniform(c, n), 0, 0, [](const double*, double* v) { v[0] = 1; });
    const double e = std::abs(l2_inner(o, o) - oracle);
    if (prev > 0) EXPECT_GE(std::log2(prev / e), 1.9);
    prev = e;
  }
  EXPECT_LE(prev, 1e-4);
  SplitMix64 rng(1);
  const Patch p = Patch::full(c, Grid::uniform(c, 9));
  auto a = random_smooth_field(p, 1, 1, 1), b = random_smooth_field(p, 1, 1, 2);
  EXPECT_NEAR(l2_inner(a, b), l2_inner(b, a), 1e-13);
  FormField a2 = a;
  a2 *= 2.5;
  EXPECT_NEAR(l2_inner(a2 + b, b), 2.5 * l2_inner(a, b) + l2_inner(b, b), 1e-12);
}

TEST(Boundary, ProjectionsOfTheMetric) {
  for (double kappa : {-1.0, 1.0}) {
    const Chart c = Chart::unit_box(3, kappa);
    const Grid g = Grid::uniform(c, 5);
    const FormField gf = metric_field(Patch::full(c, g));
    for (int f = 0; f < 6; ++f) {
      const FormField tt = project_boundary(gf, f, Projection::tt), g0 = boundary_metric(c, g, f);
      EXPECT_LE(region_norms(tt - g0, Region::whole(tt.patch())).max, 1e-13);
      const FormField nn = project_boundary(gf, f, Projection::nn);
      for (std::size_t n = 0; n < nn.nodes(); ++n) EXPECT_NEAR(nn.at(n)[0], 1.0, 1e-13);
      EXPECT_LE(region_norms(project_boundary(gf, f, Projection::nt), Region::whole(tt.patch())).max, 1e-13);
    }
  }
  const Chart flat = Chart::unit_box(2, 0.0);
  auto s = sample(flat, Grid::uniform(flat, 5), 1, 1, [](const double*, double* v) {
    v[0] = 1;
    v[1] = v[2] = v[3] = 0;
  });
  auto nn = project_boundary(s, 1, Projection::nn), tt = project_boundary(s, 1, Projection::tt);
  for (std::size_t n = 0; n < nn.nodes(); ++n) {
    EXPECT_DOUBLE_EQ(nn.at(n)[0], 1.0);
    EXPECT_DOUBLE_EQ(tt.at(n)[0], 0.0);
  }
}

TEST(Boundary, ProjectionDuality) {
  // P^tt star f = (-1)^(d+1) star_0 P^nt f
  for (int d : {2, 3}) {
    const Chart c = Chart::unit_box(d, 1.0);
    const Patch p = Patch::full(c, Grid::uniform(c, 5));
    auto f = random_smooth_field(p, 1, 1, 13);
    for (int face = 0; face < 2 * d; ++face) {
      auto lhs = project_boundary(hodge_star(f), face, Projection::tt);
      auto rhs = hodge_star(project_boundary(f, face, Projection::nt), face_orientation(d, face));
      rhs *= (d % 2 == 1) ? 1.0 : -1.0;
      EXPECT_LE(region_norms(lhs - rhs, Region::whole(lhs.patch())).max, 1e-12) << "d=" << d << " face=" << face;
    }
  }
}

TEST(Boundary, OperatorsVanish) {
  const Chart c = Chart::unit_box(2, 1.0);
  const Patch p = Patch::full(c, Grid::uniform(c, 17));
  auto one = sample(p, 0, 0, [](const double*, double* v) { v[0] = 1; });
  for (int f = 0; f < 4; ++f) EXPECT_LE(region_norms(boundary_T(one, f), Region::whole(Patch::face_of(c, p.grid, f))).max, 1e-12);
  const Chart flat = Chart::unit_box(2, 0.0);
  const Patch q = Patch::full(flat, Grid::uniform(flat, 17));
  auto bumped = sample(q, 1, 1, [](const double* x, double* v) {
    const double b = std::pow(std::max(0.0, 0.09 - x[0] * x[0]), 3) * std::pow(std::max(0.0, 0.09 - x[1] * x[1]), 3);
    for (int i = 0; i < 4; ++i) v[i] = b * (1 + i);
  });
  for (int f = 0; f < 4; ++f) {
    const Region R = Region::whole(Patch::face_of(flat, q.grid, f));
    EXPECT_EQ(region_norms(boundary_T(bumped, f), R).max, 0.0);
    EXPECT_EQ(region_norms(boundary_T_star(bumped, f), R).max, 0.0);
    EXPECT_EQ(region_norms(boundary_F(bumped, f), R).max, 0.0);
    EXPECT_EQ(region_norms(boundary_F_star(bumped, f), R).max, 0.0);
  }
}

TEST(Boundary, IntegrationByParts) {
  auto bump = [](const double* x) { return 1e6 * std::pow(std::max(0.0, 0.1 - x[0] * x[0]), 3) * std::pow(std::max(0.0, 0.1 - x[1] * x[1]), 3); };
  for (auto op : {IbpOperator::H, IbpOperator::F}) {
    const Chart c = Chart::unit_box(2, 1.0);
    double prev = 0;
    for (int n : {33, 65}) {
      const Patch p = Patch::full(c, Grid::uniform(c, n));
      auto f = sample(p, 1, 1, [&](const double* x, double* v) {
        for (int i = 0; i < 4; ++i) v[i] = bump(x) * std::sin(i + x[0]);
      });
      // H: (1,1) -> (2,2), F: (1,1) -> (2,0)
      auto g = sample(p, 2, op == IbpOperator::H ? 2 : 0, [&](const double* x, double* v) { v[0] = bump(x) * std::cos(x[1]); });
      const double r = ibp_residual(f, g, op);
      if (prev > 0) EXPECT_GE(std::log2(prev / r), 1.85);
      prev = r;
    }
  }
  const Chart c = Chart::unit_box(2, 0.0);
  const Patch p = Patch::full(c, Grid::uniform(c, 9));
  EXPECT_EQ(ibp_residual(FormField(p, 1, 1), FormField(p, 2, 2), IbpOperator::H), 0.0);
}
