#pragma once

// Saint-Venant compatibility: the metric Lie derivative, its discrete kernel
// (Killing fields) and least-squares reconstruction of a displacement.
//
// A displacement is stored as the 1-form w = Y^flat, a (1,0) field. The Lie
// derivative is discretized on the vector components Y = g^{-1} w:
//
//   (L_Y g)_ij = Y^c d_c g_ij + g_cj d_i Y^c + g_ic d_j Y^c
//              = lambda^2 (2 delta_ij Y.dlog(lambda) + d_i Y^j + d_j Y^i),
//
// which equals nabla_i w_j + nabla_j w_i. Killing fields of the conformal
// charts are quadratic in x, so the three-point stencils differentiate them
// exactly and they lie in the discrete kernel to roundoff.

#include <cmath>
#include <optional>
#include <vector>

#include "calculus.hpp"
#include "linalg.hpp"
#include "quadrature.hpp"

namespace dform {

using DisplacementField = FormField;

inline int sym_count(int d) { return d * (d + 1) / 2; }

// row-major upper triangle: (0,0) (0,1) .. (0,d-1) (1,1) ..
inline int sym_index(int d, int i, int j) {
  if (i > j) std::swap(i, j);
  return i * d - i * (i - 1) / 2 + (j - i);
}

// w = Y^flat from vector components f(x, Y)
template <class F>
DisplacementField displacement_from_vector(const Patch& p, F&& f) {
  return sample(p, 1, 0, [&](const double* x, double* w) {
    f(x, w);
    const double l = p.chart.lambda(x);
    for (int i = 0; i < p.dim; ++i) w[i] *= l * l;
  });
}

// L_Y g sampled from an analytic vector field; V provides operator()(x, Y)
// and jacobian(x, J) with J[i*d + j] = d_j Y^i
template <class V>
DoubleFormField lie_metric_exact(const Patch& p, const V& Y) {
  const int d = p.dim;
  return sample(p, 1, 1, [&](const double* x, double* o) {
    double y[kMaxDim], J[kMaxDim * kMaxDim];
    Y(x, y);
    Y.jacobian(x, J);
    const double l2 = std::pow(p.chart.lambda(x), 2);
    double ydl = 0;
    for (int c = 0; c < d; ++c) ydl += y[c] * p.chart.dlog_lambda(x, c);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) o[i * d + j] = l2 * ((i == j ? 2.0 * ydl : 0.0) + J[j * d + i] + J[i * d + j]);
  });
}

inline std::vector<double> vector_components(const DisplacementField& w) {
  require(w.k() == 1 && w.m() == 0, ErrorKind::DegreeMismatch, "displacement must be a (1,0) field");
  const Patch& p = w.patch();
  std::vector<double> Y(w.data());
  for (std::size_t n = 0; n < p.nodes(); ++n) {
    const double l = p.lambda(n);
    for (int c = 0; c < p.dim; ++c) Y[n * p.dim + c] /= l * l;
  }
  return Y;
}

namespace detail {

// emit(row component (i<=j), column node, column component, coefficient)
template <class Emit>
void lie_stencil(const Patch& p, std::size_t n, Emit&& emit) {
  const int d = p.dim;
  double x[kMaxDim];
  p.ambient_point(n, x);
  const double l2 = std::pow(p.chart.lambda(x), 2);
  for (int i = 0; i < d; ++i) {
    const double dl = p.chart.dlog_lambda(x, i);
    for (int j = 0; j < d; ++j) emit(sym_index(d, j, j), n, i, 2.0 * l2 * dl);
  }
  for (int i = 0; i < d; ++i) {
    const Stencil3 s = derivative_stencil(p, n, i);
    for (int j = 0; j < d; ++j) {
      // d_i Y^j enters (i,j); on the diagonal it enters twice
      for (int t = 0; t < 3; ++t)
        if (s.w[t] != 0.0) emit(sym_index(d, i, j), s.node[t], j, l2 * s.w[t] * (i == j ? 2.0 : 1.0));
    }
  }
}

}  // namespace detail

inline DoubleFormField lie_derivative_metric(const DisplacementField& w) {
  require(!w.patch().is_face(), ErrorKind::NotBoundaryFace, "displacement must live on the full grid");
  const Patch& p = w.patch();
  const int d = p.dim;
  const std::vector<double> Y = vector_components(w);
  FormField out(p, 1, 1);
  parallel_for(p.nodes(), [&](std::size_t n) {
    std::vector<double> s(sym_count(d), 0.0);
    detail::lie_stencil(p, n, [&](int r, std::size_t q, int c, double v) { s[r] += v * Y[q * d + c]; });
    double* o = out.at(n);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) o[i * d + j] = s[sym_index(d, i, j)];
  });
  return out;
}

// Y (stacked vector components, column node*d + c) -> upper-triangle
// components of L_Y g (row node*d(d+1)/2 + sym_index)
inline SpMat assemble_lie_operator(const Chart& c, const Grid& g) {
  Patch p = Patch::full(c, g);
  const int d = p.dim, S = sym_count(d);
  std::vector<Triplet> T;
  T.reserve(p.nodes() * S * 8);
  for (std::size_t n = 0; n < p.nodes(); ++n)
    detail::lie_stencil(p, n, [&](int r, std::size_t q, int comp, double v) {
      T.emplace_back(static_cast<int>(n * S + r), static_cast<int>(q * d + comp), v);
    });
  SpMat A(static_cast<int>(p.nodes() * S), static_cast<int>(p.nodes() * d));
  A.setFromTriplets(T.begin(), T.end());
  return A;
}

namespace detail {

// square roots of the L2 weights: rows carry the symmetric-field norm, columns
// the displacement norm |w|_g^2 = lambda^2 |Y|^2
struct LieWeights {
  Vec row, col;
};

inline LieWeights lie_weights(const Patch& p) {
  const int d = p.dim, S = sym_count(d);
  LieWeights w;
  w.row.resize(p.nodes() * S);
  w.col.resize(p.nodes() * d);
  for (std::size_t n = 0; n < p.nodes(); ++n) {
    const double l = p.lambda(n);
    const double vol = trapezoid_weight(p, n) * std::pow(l, d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) w.row[n * S + sym_index(d, i, j)] = std::sqrt(vol * std::pow(l, -4) * (i == j ? 1 : 2));
    for (int c = 0; c < d; ++c) w.col[n * d + c] = std::sqrt(vol * l * l);
  }
  return w;
}

inline SpMat weighted_lie_operator(const Patch& p, const LieWeights& w) {
  SpMat A = assemble_lie_operator(p.chart, p.grid);
  return w.row.asDiagonal() * A * w.col.cwiseInverse().asDiagonal();
}

}  // namespace detail

struct KillingBasis {
  std::vector<DisplacementField> basis;  // L2-orthonormal 1-forms
  std::vector<double> singular_values;   // smallest few, ascending, weighted operator
  double gap_ratio = 0;
  double kill_tol = 0;
  double op_norm = 0;
  long dense_limit = 0;
};

// kill_tol <= 0 selects the default 1e-6 |A| h^2
inline KillingBasis killing_basis(const Chart& c, const Grid& g, double kill_tol = -1, long dense_limit = 1000) {
  Patch p = Patch::full(c, g);
  const int d = p.dim;
  auto w = detail::lie_weights(p);
  SpMat A = detail::weighted_lie_operator(p, w);
  const int want = sym_count(d) + 4;
  SmallSingular ss = smallest_singular(A, want, dense_limit);
  KillingBasis kb;
  kb.op_norm = ss.norm_estimate;
  kb.dense_limit = dense_limit;
  double hmax = *std::max_element(g.h.begin(), g.h.end());
  kb.kill_tol = kill_tol > 0 ? kill_tol : 1e-6 * kb.op_norm * hmax * hmax;
  kb.singular_values = ss.values;
  int K = 0;
  while (K < static_cast<int>(ss.values.size()) && ss.values[K] <= kb.kill_tol) ++K;
  require(K < static_cast<int>(ss.values.size()), ErrorKind::NoSpectralGap,
          "every computed singular value is below kill_tol; kernel dimension is ambiguous");
  const double floor = 1e-16 * std::max(kb.op_norm, 1.0);
  kb.gap_ratio = K == 0 ? ss.values[0] / floor : ss.values[K] / std::max(ss.values[K - 1], floor);
  require(kb.gap_ratio >= 1e3, ErrorKind::NoSpectralGap,
          "singular-value gap ratio " + std::to_string(kb.gap_ratio) + " is below 1e3");
  for (int i = 0; i < K; ++i) {
    DisplacementField f(p, 1, 0);
    // largest entry positive, for reproducible signs
    Eigen::Index imax;
    ss.vectors.col(i).cwiseAbs().maxCoeff(&imax);
    const double sgn = ss.vectors(imax, i) < 0 ? -1.0 : 1.0;
    for (std::size_t n = 0; n < p.nodes(); ++n) {
      const double l = p.lambda(n);
      for (int cc = 0; cc < d; ++cc) f.at(n)[cc] = sgn * ss.vectors(n * d + cc, i) / w.col[n * d + cc] * l * l;
    }
    kb.basis.push_back(std::move(f));
  }
  return kb;
}

inline void check_symmetric(const FormField& s, double tol = 1e-10) {
  require(s.k() == 1 && s.m() == 1, ErrorKind::DegreeMismatch, "expected a (1,1) field");
  const int d = s.dim();
  double scale = 1.0;
  for (double v : s.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t n = 0; n < s.nodes(); ++n)
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        require(std::abs(s.at(n)[i * d + j] - s.at(n)[j * d + i]) <= tol * scale, ErrorKind::NotSymmetric,
                "field is not symmetric");
}

// norms of H sigma; only the first half of the compatibility criterion
inline Norms compatibility_residual(const DoubleFormField& sigma, std::optional<Region> region = std::nullopt) {
  check_symmetric(sigma);
  const FormField r = H_op(sigma);
  return region_norms(r, region ? *region : Region::inset(sigma.patch(), 2));
}

// remove the components along an L2-orthonormal basis
inline void project_out(DisplacementField& w, const std::vector<DisplacementField>& basis) {
  for (const auto& b : basis) {
    FormField t = b;
    t *= l2_inner(w, b);
    w -= t;
  }
}

struct Reconstruction {
  DisplacementField Y;
  double normal_residual = 0;  // |A^T W (L_Y g - sigma)| / |A^T W sigma|
  double fit_residual = 0;     // |L_Y g - sigma|_L2 / |sigma|_L2
  long iterations = 0;
};

inline Reconstruction reconstruct_displacement(const DoubleFormField& sigma, const KillingBasis& kb, double tol = 1e-10) {
  check_symmetric(sigma);
  const Patch& p = sigma.patch();
  require(!p.is_face(), ErrorKind::NotBoundaryFace, "sigma must live on the full grid");
  for (const auto& b : kb.basis)
    require(b.patch().same_as(p), ErrorKind::BasisMismatch, "Killing basis computed on another chart or grid");
  const int d = p.dim, S = sym_count(d);
  auto w = detail::lie_weights(p);
  SpMat A = detail::weighted_lie_operator(p, w);
  Vec b(p.nodes() * S);
  for (std::size_t n = 0; n < p.nodes(); ++n)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) b[n * S + sym_index(d, i, j)] = sigma.at(n)[i * d + j] * w.row[n * S + sym_index(d, i, j)];
  SolveStats st;
  Vec z = cgls(A, b, tol, 10 * A.cols(), &st);
  Reconstruction r;
  r.Y = DisplacementField(p, 1, 0);
  for (std::size_t n = 0; n < p.nodes(); ++n) {
    const double l = p.lambda(n);
    for (int c = 0; c < d; ++c) r.Y.at(n)[c] = z[n * d + c] / w.col[n * d + c] * l * l;
  }
  project_out(r.Y, kb.basis);
  r.iterations = st.iterations;
  r.normal_residual = st.normal_residual;
  const double ns = l2_norm(sigma);
  FormField diff = lie_derivative_metric(r.Y) - sigma;
  r.fit_residual = ns > 0 ? l2_norm(diff) / ns : l2_norm(diff);
  return r;
}

}  // namespace dform
