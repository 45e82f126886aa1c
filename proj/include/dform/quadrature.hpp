#pragma once

// Tensor-product trapezoid quadrature and region-restricted norms.

#include <algorithm>
#include <cmath>
#include <vector>

#include "field.hpp"

namespace dform {

inline double trapezoid_weight(const Patch& p, std::size_t node) {
  double w = 1.0;
  for (int a = 0; a < p.dim; ++a) {
    int i = p.coord_index(node, a);
    w *= (i == 0 || i == p.shape[a] - 1) ? 0.5 * p.h[a] : p.h[a];
  }
  return w;
}

// fiber inner product under the conformal metric lambda^2 delta:
// every basis element dx^I (x) dx^J has squared norm lambda^{-2(k+m)}
inline double fiber_inner_conformal(const FormField& f, const FormField& g, std::size_t n) {
  const double lam = f.patch().lambda(n);
  const double s = std::pow(lam, -2.0 * (f.k() + f.m()));
  const double *a = f.at(n), *b = g.at(n);
  double acc = 0;
  for (std::size_t c = 0; c < f.ncomp(); ++c) acc += a[c] * b[c];
  return s * acc;
}

inline double pointwise_norm(const FormField& f, std::size_t n) {
  return std::sqrt(std::max(0.0, fiber_inner_conformal(f, f, n)));
}

// <f, g> = sum_n w_n sqrt(det g) (f, g)_g; works on full grids and on faces
inline double l2_inner(const FormField& f, const FormField& g) {
  f.check_compatible(g);
  const Patch& p = f.patch();
  double s = 0;
  for (std::size_t n = 0; n < p.nodes(); ++n)
    s += trapezoid_weight(p, n) * std::pow(p.lambda(n), p.dim) * fiber_inner_conformal(f, g, n);
  return s;
}

inline double boundary_l2_inner(const FormField& f, const FormField& g) {
  require(f.patch().is_face(), ErrorKind::NotBoundaryFace, "boundary_l2_inner needs face fields");
  return l2_inner(f, g);
}

inline double l2_norm(const FormField& f) { return std::sqrt(std::max(0.0, l2_inner(f, f))); }

// A fixed physical sub-box; refinement studies fix it on the coarsest grid so
// the same set of points is measured on every level.
struct Region {
  std::vector<double> lo, hi;  // in patch coordinates

  static Region whole(const Patch& p) {
    Region r;
    for (int a = 0; a < p.dim; ++a) {
      r.lo.push_back(p.lo[a]);
      r.hi.push_back(p.lo[a] + p.h[a] * (p.shape[a] - 1));
    }
    return r;
  }

  // points at least `layer` spacings of patch p away from every edge
  static Region inset(const Patch& p, int layer) {
    Region r = whole(p);
    for (int a = 0; a < p.dim; ++a) {
      r.lo[a] += layer * p.h[a];
      r.hi[a] -= layer * p.h[a];
    }
    return r;
  }

  bool contains(const Patch& p, std::size_t node) const {
    for (int a = 0; a < p.dim; ++a) {
      double x = p.lo[a] + p.h[a] * p.coord_index(node, a);
      double tol = 1e-9 * p.h[a];
      if (x < lo[a] - tol || x > hi[a] + tol) return false;
    }
    return true;
  }
};

struct Norms {
  double l2 = 0;
  double max = 0;
  std::size_t count = 0;
};

// pointwise g-norms over the region: max, and an L2 with uniform cell weights
inline Norms region_norms(const FormField& f, const Region& r) {
  const Patch& p = f.patch();
  Norms out;
  double cell = 1.0;
  for (int a = 0; a < p.dim; ++a) cell *= p.h[a];
  for (std::size_t n = 0; n < p.nodes(); ++n) {
    if (!r.contains(p, n)) continue;
    double v = pointwise_norm(f, n);
    out.max = std::max(out.max, v);
    out.l2 += cell * std::pow(p.lambda(n), p.dim) * v * v;
    ++out.count;
  }
  out.l2 = std::sqrt(out.l2);
  return out;
}

}  // namespace dform
