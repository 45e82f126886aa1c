#pragma once

// Verification suites: randomized fiber-algebra identities (exact up to
// roundoff) and refinement studies of the constant-curvature identities.

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "saint_venant.hpp"

namespace dform {

// ------------------------------------------------------------ algebra

struct AlgebraCheck {
  std::string name;
  long count = 0;
  double worst = 0;  // max residual / scale
};

struct AlgebraReport {
  std::vector<AlgebraCheck> checks;
  long total = 0;
  double tol = 0;
  double seconds = 0;
  bool pass = false;
};

namespace detail {

inline int random_int(SplitMix64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(rng.next() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double rel(const DoubleFormValue& r, double scale) { return r.max_abs() / std::max(scale, 1.0); }

}  // namespace detail

// `total` checks cycling through seven identities and d in {2,3,4}; each
// residual is divided by max(1, size of the terms involved).
inline AlgebraReport run_algebra_suite(std::uint64_t seed, long total = 2000, double tol = 1e-11) {
  using detail::random_int;
  using detail::rel;
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(seed);
  const char* names[7] = {"wedge_graded_commutativity", "wedge_associativity", "transpose_involution", "star_star_sign",
                          "trace_gwedge_adjoint",       "bianchi_symmetric_11", "bianchi_constant_curvature"};
  AlgebraReport rep;
  rep.tol = tol;
  for (auto* n : names) rep.checks.push_back({n, 0, 0.0});
  for (long i = 0; i < total; ++i) {
    const int kind = static_cast<int>(i % 7);
    int d = 2 + static_cast<int>((i / 7) % 3);
    double r = 0;
    switch (kind) {
      case 0: {
        const int k1 = random_int(rng, 0, d), m1 = random_int(rng, 0, d);
        const int k2 = random_int(rng, 0, d - k1), m2 = random_int(rng, 0, d - m1);
        auto a = random_value(rng, d, k1, m1), b = random_value(rng, d, k2, m2);
        const double s = ((k1 * k2 + m1 * m2) % 2) ? -1.0 : 1.0;
        auto ab = wedge(a, b), ba = wedge(b, a);
        r = rel(ab - s * ba, ab.max_abs());
        break;
      }
      case 1: {
        const int k1 = random_int(rng, 0, d), m1 = random_int(rng, 0, d);
        const int k2 = random_int(rng, 0, d - k1), m2 = random_int(rng, 0, d - m1);
        const int k3 = random_int(rng, 0, d - k1 - k2), m3 = random_int(rng, 0, d - m1 - m2);
        auto a = random_value(rng, d, k1, m1), b = random_value(rng, d, k2, m2), c = random_value(rng, d, k3, m3);
        auto l = wedge(wedge(a, b), c), rr = wedge(a, wedge(b, c));
        r = rel(l - rr, l.max_abs());
        break;
      }
      case 2: {
        auto a = random_value(rng, d, random_int(rng, 0, d), random_int(rng, 0, d));
        r = rel(transpose(transpose(a)) - a, a.max_abs());
        break;
      }
      case 3: {
        const int k = random_int(rng, 0, d), m = random_int(rng, 0, d);
        auto g = random_metric(rng, d);
        auto a = random_value(rng, d, k, m);
        const double s = ((k * (d - k)) % 2) ? -1.0 : 1.0;
        auto ss = hodge_star(hodge_star(a, g), g);
        r = rel(ss - s * a, a.max_abs());
        break;
      }
      case 4: {
        // <g ^ a, b> = <a, Tr_g b>
        const int k = random_int(rng, 0, d - 1), m = random_int(rng, 0, d - 1);
        auto g = random_metric(rng, d);
        auto a = random_value(rng, d, k, m), b = random_value(rng, d, k + 1, m + 1);
        const double l = inner(g_wedge(a, g), b, g), rr = inner(a, trace_g(b, g), g);
        r = std::abs(l - rr) / std::max({1.0, std::abs(l), std::abs(rr)});
        break;
      }
      case 5: {
        auto a = random_value(rng, d, 1, 1);
        r = rel(bianchi(a + transpose(a)), a.max_abs());
        break;
      }
      case 6: {
        // the Bianchi sum of a (2,2) form lands in the zero space when d = 2
        if (d == 2) d = 3;
        auto g = random_metric(rng, d);
        const double kappa = rng.uniform(-2, 2);
        auto gf = DoubleFormValue::metric_form(g);
        auto R = (0.5 * kappa) * wedge(gf, gf);
        r = rel(bianchi(R), R.max_abs());
        break;
      }
    }
    auto& c = rep.checks[kind];
    ++c.count;
    c.worst = std::max(c.worst, r);
  }
  rep.total = total;
  rep.pass = true;
  for (const auto& c : rep.checks) rep.pass = rep.pass && c.worst <= tol;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ------------------------------------------------------------ refinement

struct RateResult {
  std::string label;   // kappa1 .. kappa5, exactness, H_on_metric, ...
  std::string detail;  // degrees or sub-identity
  std::vector<int> grids;
  std::vector<double> residuals;  // interior max norm per grid
  std::vector<double> rates;      // log2 of successive ratios
  bool exact = false;             // residual at roundoff on every grid
  bool pass = false;
};

// Rates from nested grids with halving spacing. A residual that is at
// roundoff level on every grid has no meaningful rate; it passes as exact.
inline void finish_rates(RateResult& r, double threshold, double exact_floor) {
  r.rates.clear();
  r.exact = true;
  for (double e : r.residuals) r.exact = r.exact && e <= exact_floor;
  for (std::size_t i = 1; i < r.residuals.size(); ++i) {
    const double a = r.residuals[i - 1], b = r.residuals[i];
    r.rates.push_back(b > 0 && a > 0 ? std::log2(a / b) : (a > 0 ? 60.0 : 0.0));
  }
  if (r.exact) {
    r.pass = true;
    return;
  }
  r.pass = !r.rates.empty();
  for (double q : r.rates) r.pass = r.pass && q >= threshold;
}

struct IdentitySuite {
  double kappa = 0;
  int dim = 2;
  std::vector<int> grids;
  std::uint64_t seed = 0;
  double rate_threshold = 1.8;
  std::vector<RateResult> results;
  double seconds = 0;
  bool pass = false;
  std::vector<std::string> failures() const {
    std::vector<std::string> f;
    for (const auto& r : results)
      if (!r.pass) f.push_back(r.label + (r.detail.empty() ? "" : "[" + r.detail + "]"));
    return f;
  }
};

inline std::vector<int> default_levels(int dim, int levels) {
  std::vector<int> g;
  int n = dim == 2 ? 17 : 9;
  for (int i = 0; i < levels; ++i, n = 2 * n - 1) g.push_back(n);
  return g;
}

// identity suites run on this box: asymmetric, so no accidental symmetry
inline Chart suite_chart(int dim, double kappa) {
  return Chart::make(dim, kappa, std::vector<std::pair<double, double>>(dim, {-0.3, 0.6}));
}

namespace detail {

inline std::string degrees(int k, int m) { return "(" + std::to_string(k) + "," + std::to_string(m) + ")"; }

// one identity: residual(patch) evaluated on every grid
struct Probe {
  std::string label, detail;
  std::function<FormField(const Patch&)> residual;
  int layer = 2;  // coarse spacings excluded at the faces; 3 for fourth-order compositions
};

inline std::vector<Probe> identity_probes(int d, double kappa, std::uint64_t seed) {
  std::vector<Probe> out;
  auto field = [seed](int k, int m, int salt, bool sym = false) {
    return [=](const Patch& p) { return random_smooth_field(p, k, m, seed * 1000003ull + 97ull * salt + 10 * k + m, sym); };
  };
  for (int k = 0; k <= d; ++k)
    for (int m = 0; m <= d; ++m) {
      auto psi = field(k, m, 1);
      const std::string dg = degrees(k, m);
      if (k + 2 <= d)
        out.push_back({"kappa1", dg, [=](const Patch& p) {
                         FormField f = psi(p);
                         FormField r = d_nabla(d_nabla(f));
                         if (m >= 1) r += kappa * g_wedge(bianchi(f));
                         return r;
                       }});
      if (k >= 2)
        out.push_back({"kappa2", dg, [=](const Patch& p) {
                         FormField f = psi(p);
                         FormField r = delta_nabla(delta_nabla(f));
                         if (m + 1 <= d) r += kappa * trace_g(bianchi_V(f));
                         return r;
                       }});
      if (k + 1 <= d && m + 1 <= d)
        out.push_back({"kappa3", dg, [=](const Patch& p) {
                         FormField f = psi(p);
                         FormField r = d_nabla(d_nabla_V(f)) - d_nabla_V(d_nabla(f));
                         r -= ((m - k) * kappa) * g_wedge(f);
                         return r;
                       }});
      // sign of the right-hand side as it holds for these operators; see README
      if (k + 1 <= d && m >= 1)
        out.push_back({"kappa4", dg, [=](const Patch& p) {
                         FormField f = psi(p);
                         FormField r = d_nabla(delta_nabla_V(f)) - delta_nabla_V(d_nabla(f));
                         r += ((d - m - k) * kappa) * bianchi(f);
                         return r;
                       }});
    }
  auto theta1 = field(1, 1, 2, true);
  if (d >= 3) out.push_back({"kappa5", "dd", [=](const Patch& p) { return d_nabla(d_nabla(theta1(p))); }});
  out.push_back({"kappa5", "[d,d_V]", [=](const Patch& p) {
                   FormField f = theta1(p);
                   return d_nabla(d_nabla_V(f)) - d_nabla_V(d_nabla(f));
                 }});
  out.push_back({"kappa5", "[d,delta_V]", [=](const Patch& p) {
                   FormField f = theta1(p);
                   return d_nabla(delta_nabla_V(f)) - delta_nabla_V(d_nabla(f));
                 }});

  auto scalar = field(0, 0, 3);
  auto lam = field(2, 0, 4);
  auto theta2 = [=](const Patch& p) { return symmetrize(random_smooth_field(p, 2, 2, seed * 1000003ull + 97ull * 5 + 22)); };
  auto symF = [](const FormField& l) { return symmetrize(F_star_op(l)); };
  if (d >= 2) {
    out.push_back({"exactness", "HH", [=](const Patch& p) { return H_op(H_op(scalar(p))); }, 3});
    out.push_back({"exactness", "FH", [=](const Patch& p) { return F_op(H_op(scalar(p))); }, 3});
    out.push_back({"exactness", "H(F*+F*^T)", [=](const Patch& p) { return H_op(symF(lam(p))); }, 3});
    out.push_back({"exactness", "H*H*", [=](const Patch& p) { return H_star_op(H_star_op(theta2(p))); }, 3});
    out.push_back({"exactness", "FH*", [=](const Patch& p) { return F_op(H_star_op(theta2(p))); }, 3});
    out.push_back({"exactness", "H*(F*+F*^T)", [=](const Patch& p) { return H_star_op(symF(lam(p))); }, 3});
  }
  // H annihilates Lie derivatives of the metric; delta annihilates H* of symmetric (2,2) fields
  for (int i = 0; i < 5; ++i) {
    SplitMix64 rng(seed * 7919ull + 31ull * i + 1);
    const PolyVector Y = PolyVector::draw(rng, d);
    out.push_back({"H_lie_metric", "Y" + std::to_string(i), [=](const Patch& p) { return H_op(lie_metric_exact(p, Y)); }});
  }
  if (d >= 2)
    for (int i = 0; i < 5; ++i) {
      const std::uint64_t s2 = seed * 1000003ull + 97ull * (10 + i) + 22;
      out.push_back({"delta_H_star", "psi" + std::to_string(i),
                     [=](const Patch& p) { return delta_nabla(H_star_op(random_smooth_field(p, 2, 2, s2, true))); }, 3});
    }
  out.push_back({"H_on_metric", "", [](const Patch& p) {
                   FormField r = H_op(metric_field(p));
                   FormField R = riemann_field(p);
                   R *= 2.0;
                   r += R;
                   return r;
                 }});
  return out;
}

}  // namespace detail

// Residual norms on an interior region fixed on the coarsest grid (two coarse
// spacings in from every face, three for fourth-order compositions), so
// corners and the one-sided stencil layer are excluded at every level.
inline IdentitySuite run_identity_suite(double kappa, int dim, const std::vector<int>& grids, std::uint64_t seed,
                                        double rate_threshold = 1.8, double exact_floor = 1e-9) {
  require(dim == 2 || dim == 3, ErrorKind::WrongDimension, "identity suites run in d = 2 or 3");
  require(grids.size() >= 2, ErrorKind::Validation, "a refinement study needs at least two grids");
  const auto t0 = std::chrono::steady_clock::now();
  IdentitySuite s;
  s.kappa = kappa;
  s.dim = dim;
  s.grids = grids;
  s.seed = seed;
  s.rate_threshold = rate_threshold;
  const Chart c = suite_chart(dim, kappa);
  auto probes = detail::identity_probes(dim, kappa, seed);
  for (const auto& pr : probes) s.results.push_back({pr.label, pr.detail, grids, {}, {}, false, false});
  const Patch coarse = Patch::full(c, Grid::uniform(c, grids.front()));
  for (int n : grids) {
    const Patch p = Patch::full(c, Grid::uniform(c, n));
    for (std::size_t i = 0; i < probes.size(); ++i)
      s.results[i].residuals.push_back(region_norms(probes[i].residual(p), Region::inset(coarse, probes[i].layer)).max);
  }
  s.pass = true;
  for (auto& r : s.results) {
    finish_rates(r, rate_threshold, exact_floor);
    s.pass = s.pass && r.pass;
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

}  // namespace dform
