#pragma once

// Conformal constant-curvature chart g = lambda(x)^2 delta on a coordinate box,
// and the structured grid that discretizes it.
//
// Curvature sign: the chart parameter kappa is the curvature constant in
// Rm = kappa/2 g^g with Rm(X,Y;Z,W) = g(R(X,Y)Z, W). With that pairing the
// constant-curvature identities (dd psi = -kappa g^G psi, H g = -2 Rm,
// H L_Y g = 0) hold with kappa as written, and the conformal factor is
//   lambda(x) = (1 - kappa |x|^2 / 4)^{-1}.
// kappa < 0 is the round sphere model, kappa > 0 the hyperbolic ball model
// (sectional curvature -kappa in the R(X,Y)Y,X convention).

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "algebra.hpp"
#include "error.hpp"

namespace dform {

inline constexpr double kDomainMargin = 1e-6;

struct Chart {
  int dim = 2;
  double kappa = 0.0;
  std::vector<std::pair<double, double>> box;

  static Chart make(int dim, double kappa, std::vector<std::pair<double, double>> box) {
    require(dim >= 1 && dim <= kMaxDim, ErrorKind::Validation, "chart dimension outside [1, 6]");
    require(static_cast<int>(box.size()) == dim, ErrorKind::Validation, "box must have one interval per axis");
    require(std::isfinite(kappa), ErrorKind::Validation, "kappa must be finite");
    for (auto [lo, hi] : box)
      require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorKind::Validation, "box interval must satisfy min < max");
    Chart c{dim, kappa, std::move(box)};
    // the factor 1 - kappa|x|^2/4 is smallest where |x| is largest when kappa > 0
    double r2 = 0;
    for (auto [lo, hi] : c.box) r2 += std::max(lo * lo, hi * hi);
    require(1.0 - kappa * r2 / 4.0 >= kDomainMargin, ErrorKind::OutOfDomain,
            "box reaches the conformal pole |x| = 2/sqrt(kappa)");
    return c;
  }

  static Chart unit_box(int dim, double kappa, double lo = -0.5, double hi = 0.5) {
    return make(dim, kappa, std::vector<std::pair<double, double>>(dim, {lo, hi}));
  }

  bool contains(const double* x, double slack = 1e-12) const {
    for (int i = 0; i < dim; ++i) {
      double w = (box[i].second - box[i].first) * slack;
      if (x[i] < box[i].first - w || x[i] > box[i].second + w) return false;
    }
    return true;
  }

  double conformal_denominator(const double* x) const {
    double r2 = 0;
    for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
    return 1.0 - kappa * r2 / 4.0;
  }

  double lambda(const double* x) const { return 1.0 / conformal_denominator(x); }

  // d_i log lambda
  double dlog_lambda(const double* x, int i) const { return 0.5 * kappa * x[i] * lambda(x); }
};

inline void check_in_box(const Chart& c, const std::vector<double>& x) {
  require(static_cast<int>(x.size()) == c.dim, ErrorKind::DimensionMismatch, "point dimension");
  require(c.contains(x.data()), ErrorKind::OutOfDomain, "point outside chart box");
}

inline MetricValue metric_at(const Chart& c, const std::vector<double>& x) {
  check_in_box(c, x);
  return MetricValue::conformal(c.dim, c.lambda(x.data()));
}

// Gamma^k_ij at flat index k*d*d + i*d + j
inline void christoffel_into(const Chart& c, const double* x, double* G) {
  const int d = c.dim;
  double dl[kMaxDim];
  for (int i = 0; i < d; ++i) dl[i] = c.dlog_lambda(x, i);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double v = 0;
        if (i == k) v += dl[j];
        if (j == k) v += dl[i];
        if (i == j) v -= dl[k];
        G[(k * d + i) * d + j] = v;
      }
}

inline std::vector<double> christoffel_at(const Chart& c, const std::vector<double>& x) {
  check_in_box(c, x);
  std::vector<double> G(c.dim * c.dim * c.dim);
  christoffel_into(c, x.data(), G.data());
  return G;
}

inline DoubleFormValue riemann_from_metric(const MetricValue& g, double kappa) {
  auto gf = DoubleFormValue::metric_form(g);
  if (g.dim < 2) return DoubleFormValue(g.dim, 0, 0);
  return 0.5 * kappa * wedge(gf, gf);
}

inline DoubleFormValue riemann_at(const Chart& c, const std::vector<double>& x) {
  require(c.dim >= 2, ErrorKind::WrongDimension, "curvature needs d >= 2");
  return riemann_from_metric(metric_at(c, x), c.kappa);
}

struct Grid {
  std::vector<int> shape;
  std::vector<double> lo, hi, h;
  std::vector<std::size_t> stride;  // row-major: last axis fastest

  static Grid make(const Chart& c, std::vector<int> shape) {
    require(static_cast<int>(shape.size()) == c.dim, ErrorKind::Validation, "grid shape must have d entries");
    Grid g;
    g.shape = std::move(shape);
    for (int i = 0; i < c.dim; ++i) {
      require(g.shape[i] >= 5, ErrorKind::Validation, "grid needs at least 5 nodes per axis");
      g.lo.push_back(c.box[i].first);
      g.hi.push_back(c.box[i].second);
      g.h.push_back((c.box[i].second - c.box[i].first) / (g.shape[i] - 1));
    }
    g.stride.assign(c.dim, 1);
    for (int i = c.dim - 2; i >= 0; --i) g.stride[i] = g.stride[i + 1] * g.shape[i + 1];
    return g;
  }

  static Grid uniform(const Chart& c, int n) { return make(c, std::vector<int>(c.dim, n)); }

  int dim() const { return static_cast<int>(shape.size()); }
  std::size_t nodes() const {
    std::size_t n = 1;
    for (int s : shape) n *= s;
    return n;
  }
  int coord_index(std::size_t node, int axis) const { return static_cast<int>((node / stride[axis]) % shape[axis]); }
  void point(std::size_t node, double* x) const {
    for (int a = 0; a < dim(); ++a) x[a] = lo[a] + h[a] * coord_index(node, a);
  }
  std::vector<double> point(std::size_t node) const {
    std::vector<double> x(dim());
    point(node, x.data());
    return x;
  }

  // face id f = 2*axis + side, side 0 at min, 1 at max
  std::vector<int> faces_of(std::size_t node) const {
    std::vector<int> f;
    for (int a = 0; a < dim(); ++a) {
      int i = coord_index(node, a);
      if (i == 0) f.push_back(2 * a);
      if (i == shape[a] - 1) f.push_back(2 * a + 1);
    }
    return f;
  }
  bool is_interior(std::size_t node) const { return faces_of(node).empty(); }
  bool on_face(std::size_t node, int face) const {
    int a = face / 2;
    int i = coord_index(node, a);
    return (face % 2 == 0) ? i == 0 : i == shape[a] - 1;
  }
  int face_count() const { return 2 * dim(); }
};

inline int face_axis(int face) { return face / 2; }
inline int face_sign(int face) { return (face % 2) ? 1 : -1; }

inline void check_face(const Grid& g, int face) {
  require(face >= 0 && face < g.face_count(), ErrorKind::NotBoundaryFace, "face id out of range");
}

// g-unit outward normal on a given face (tangent-vector components)
inline std::vector<double> boundary_normal(const Chart& c, const Grid& g, std::size_t node, int face) {
  check_face(g, face);
  require(g.on_face(node, face), ErrorKind::NotBoundaryNode, "node is not on the requested face");
  auto x = g.point(node);
  std::vector<double> n(c.dim, 0.0);
  n[face_axis(face)] = face_sign(face) / c.lambda(x.data());
  return n;
}

// single-face convenience; corner and edge nodes must name the face
inline std::vector<double> boundary_normal(const Chart& c, const Grid& g, std::size_t node) {
  auto f = g.faces_of(node);
  require(!f.empty(), ErrorKind::NotBoundaryNode, "interior node has no normal");
  require(f.size() == 1, ErrorKind::NotBoundaryNode, "node lies on several faces; pass the face id");
  return boundary_normal(c, g, node, f[0]);
}

// tangent axes of a face, increasing
inline std::vector<int> face_axes(int dim, int face) {
  std::vector<int> t;
  for (int a = 0; a < dim; ++a)
    if (a != face_axis(face)) t.push_back(a);
  return t;
}

// h0(X,Y) = g(nabla_X n, Y) at an ambient point on the face, as a (1,1)
// form in the face coordinate basis
inline DoubleFormValue second_fundamental_form_at(const Chart& c, const double* x, int face) {
  const int d = c.dim;
  const int a = face_axis(face);
  auto T = face_axes(d, face);
  std::vector<double> G(d * d * d);
  christoffel_into(c, x, G.data());
  const double lam = c.lambda(x);
  const double na = face_sign(face) / lam;
  DoubleFormValue h(d - 1, 1, 1);
  for (int b = 0; b < d - 1; ++b)
    for (int cc = 0; cc < d - 1; ++cc) {
      // tangential derivatives of n only move its normal component, which is
      // g-orthogonal to the face, so only the connection term survives
      double v = 0;
      for (int k = 0; k < d; ++k) {
        double gk = (k == T[cc]) ? lam * lam : 0.0;
        v += gk * G[(k * d + T[b]) * d + a] * na;
      }
      h.set({b}, {cc}, v);
    }
  return h;
}

inline DoubleFormValue second_fundamental_form(const Chart& c, const Grid& g, std::size_t node, int face) {
  check_face(g, face);
  require(g.on_face(node, face), ErrorKind::NotBoundaryNode, "node is not on the requested face");
  require(c.dim >= 2, ErrorKind::WrongDimension, "faces need d >= 2");
  auto x = g.point(node);
  return second_fundamental_form_at(c, x.data(), face);
}

inline DoubleFormValue second_fundamental_form(const Chart& c, const Grid& g, std::size_t node) {
  auto f = g.faces_of(node);
  require(f.size() == 1, ErrorKind::NotBoundaryNode, "second fundamental form needs a single-face node");
  return second_fundamental_form(c, g, node, f[0]);
}

}  // namespace dform
