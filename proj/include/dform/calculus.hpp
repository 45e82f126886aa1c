#pragma once

// Finite-difference covariant calculus on double-form fields.
//
// Partial derivatives: central second order at interior nodes, one-sided
// three-point second order at the first and last node of each axis. The
// covariant derivative subtracts the Christoffel action on every covariant
// slot; d, delta and their vector-part twins are built from it.

#include <Eigen/Dense>
#include <vector>

#include "algebra.hpp"
#include "field.hpp"

namespace dform {

// ---------------------------------------------------------------- pointwise

template <class F>
FormField pointwise(const FormField& f, int kout, int mout, F&& op) {
  FormField out(f.patch(), kout, mout);
  parallel_for(f.nodes(), [&](std::size_t n) {
    auto mv = f.patch().metric(n);
    DoubleFormValue r = op(mv, f.value(n), n);
    std::copy(r.data(), r.data() + r.size(), out.at(n));
  });
  return out;
}

inline FormField transpose(const FormField& f) {
  FormField out(f.patch(), f.m(), f.k());
  const int d = f.dim();
  for (std::size_t n = 0; n < f.nodes(); ++n) detail::transpose_into(d, f.k(), f.m(), f.at(n), out.at(n));
  return out;
}

inline FormField symmetrize(const FormField& f) {
  require(f.k() == f.m(), ErrorKind::DegreeMismatch, "symmetrize needs k = m");
  FormField out = f + transpose(f);
  out *= 0.5;
  return out;
}

inline FormField bianchi(const FormField& f) {
  return pointwise(f, f.k() + 1, f.m() - 1, [](const MetricValue&, const DoubleFormValue& v, std::size_t) { return bianchi(v); });
}

inline FormField bianchi_V(const FormField& f) { return transpose(bianchi(transpose(f))); }

inline FormField g_wedge(const FormField& f) {
  return pointwise(f, f.k() + 1, f.m() + 1,
                   [](const MetricValue& g, const DoubleFormValue& v, std::size_t) { return g_wedge(v, g); });
}

inline FormField trace_g(const FormField& f) {
  return pointwise(f, f.k() - 1, f.m() - 1,
                   [](const MetricValue& g, const DoubleFormValue& v, std::size_t) { return trace_g(v, g); });
}

inline FormField hodge_star(const FormField& f, int orientation = 1) {
  return pointwise(f, f.dim() - f.k(), f.m(), [orientation](const MetricValue& g, const DoubleFormValue& v, std::size_t) {
    return hodge_star(v, g, orientation);
  });
}

inline FormField hodge_star_V(const FormField& f, int orientation = 1) {
  return transpose(hodge_star(transpose(f), orientation));
}

// star_g star_g^V
inline FormField star_star_V(const FormField& f, int orientation = 1) {
  return hodge_star(hodge_star_V(f, orientation), orientation);
}

// ---------------------------------------------------------------- stencils

// first-derivative weights along one axis at one node
struct Stencil3 {
  std::size_t node[3];
  double w[3];
};

inline Stencil3 derivative_stencil(const Patch& p, std::size_t n, int axis) {
  const std::size_t st = p.stride[axis];
  const int N = p.shape[axis];
  const double inv2h = 1.0 / (2.0 * p.h[axis]);
  const int i = p.coord_index(n, axis);
  if (i == 0) return {{n, n + st, n + 2 * st}, {-3.0 * inv2h, 4.0 * inv2h, -inv2h}};
  if (i == N - 1) return {{n, n - st, n - 2 * st}, {3.0 * inv2h, -4.0 * inv2h, inv2h}};
  return {{n + st, n - st, n}, {inv2h, -inv2h, 0.0}};
}

inline FormField partial(const FormField& f, int axis) {
  const Patch& p = f.patch();
  FormField out(p, f.k(), f.m());
  const std::size_t nc = f.ncomp();
  const double* u = f.data().data();
  double* o = out.data().data();
  parallel_for(p.nodes(), [&](std::size_t n) {
    const Stencil3 s = derivative_stencil(p, n, axis);
    double* on = o + n * nc;
    for (std::size_t c = 0; c < nc; ++c) on[c] = s.w[0] * u[s.node[0] * nc + c] + s.w[1] * u[s.node[1] * nc + c];
    if (s.w[2] != 0.0)
      for (std::size_t c = 0; c < nc; ++c) on[c] += s.w[2] * u[s.node[2] * nc + c];
  });
  return out;
}

namespace detail {

// out[I,J] -= sum_s sum_c M^c_{i_s} f(.., c at slot s, ..; J) and the same on J,
// with M^c_b = Gamma^c_{a b} for a fixed direction a
inline void christoffel_action(int d, int k, int m, const double* Ga /* Ga[c*d+b] */, const double* f, double* out) {
  const auto& T = tables(d);
  const long nk = binom(d, k), nm = binom(d, m);
  if (k > 0) {
    const auto& rep = T.replace[k];
    for (long ii = 0; ii < nk; ++ii) {
      auto el = elements(T.subsets[k][ii]);
      for (int s = 0; s < k; ++s) {
        const int b = el[s];
        for (int c = 0; c < d; ++c) {
          const double coef = Ga[c * d + b];
          if (coef == 0.0) continue;
          const auto r = rep[(ii * k + s) * d + c];
          if (r.target < 0) continue;
          const double w = coef * r.sign;
          for (long j = 0; j < nm; ++j) out[ii * nm + j] -= w * f[r.target * nm + j];
        }
      }
    }
  }
  if (m > 0) {
    const auto& rep = T.replace[m];
    for (long jj = 0; jj < nm; ++jj) {
      auto el = elements(T.subsets[m][jj]);
      for (int s = 0; s < m; ++s) {
        const int b = el[s];
        for (int c = 0; c < d; ++c) {
          const double coef = Ga[c * d + b];
          if (coef == 0.0) continue;
          const auto r = rep[(jj * m + s) * d + c];
          if (r.target < 0) continue;
          const double w = coef * r.sign;
          for (long i = 0; i < nk; ++i) out[i * nm + jj] -= w * f[i * nm + r.target];
        }
      }
    }
  }
}

}  // namespace detail

// covariant derivative: one field per coordinate direction
inline std::vector<FormField> nabla(const FormField& f) {
  const Patch& p = f.patch();
  const int d = p.dim;
  std::vector<FormField> g;
  g.reserve(d);
  for (int a = 0; a < d; ++a) g.push_back(partial(f, a));
  if (p.chart.kappa == 0.0) return g;
  parallel_for(p.nodes(), [&](std::size_t n) {
    double G[kMaxDim * kMaxDim * kMaxDim];
    p.christoffel(n, G);
    double Ga[kMaxDim * kMaxDim];
    for (int a = 0; a < d; ++a) {
      for (int c = 0; c < d; ++c)
        for (int b = 0; b < d; ++b) Ga[c * d + b] = G[(c * d + a) * d + b];
      detail::christoffel_action(d, f.k(), f.m(), Ga, f.at(n), g[a].at(n));
    }
  });
  return g;
}

inline FormField d_nabla(const FormField& f) {
  const int d = f.dim();
  require(f.k() + 1 <= d, ErrorKind::DegreeOverflow, "d_nabla needs k + 1 <= d");
  auto g = nabla(f);
  FormField out(f.patch(), f.k() + 1, f.m());
  const auto& SP = tables(d).split[1][f.k()];
  const long nm = binom(d, f.m());
  parallel_for(f.nodes(), [&](std::size_t n) {
    double* o = out.at(n);
    for (std::size_t P = 0; P < SP.size(); ++P)
      for (const auto& sp : SP[P]) {
        const double* src = g[sp.left].at(n) + sp.right * nm;
        for (long j = 0; j < nm; ++j) o[P * nm + j] += sp.sign * src[j];
      }
  });
  return out;
}

// delta f = -g^{ab} i_{d_a} nabla_b f
inline FormField delta_nabla(const FormField& f) {
  const int d = f.dim();
  require(f.k() >= 1, ErrorKind::DegreeUnderflow, "delta_nabla needs k >= 1");
  auto g = nabla(f);
  FormField out(f.patch(), f.k() - 1, f.m());
  const auto& SP = tables(d).split[1][f.k() - 1];
  const long nm = binom(d, f.m());
  parallel_for(f.nodes(), [&](std::size_t n) {
    auto mv = f.patch().metric(n);
    double* o = out.at(n);
    for (std::size_t P = 0; P < SP.size(); ++P)
      for (const auto& sp : SP[P]) {
        const int a = sp.left;
        for (int b = 0; b < d; ++b) {
          const double w = mv.Ginv(a, b);
          if (w == 0.0) continue;
          const double* src = g[b].at(n) + P * nm;
          for (long j = 0; j < nm; ++j) o[sp.right * nm + j] -= w * sp.sign * src[j];
        }
      }
  });
  return out;
}

inline FormField d_nabla_V(const FormField& f) { return transpose(d_nabla(transpose(f))); }
inline FormField delta_nabla_V(const FormField& f) { return transpose(delta_nabla(transpose(f))); }

// ---------------------------------------------------------------- D_g

// D psi = 1/2 sum_{a,b} g^{ab} ((i_a Rm) ^ (i^V_b psi) + (i^V_a Rm) ^ (i_b psi))
inline DoubleFormValue D_g(const DoubleFormValue& psi, const MetricValue& g, double kappa) {
  const int d = psi.dim();
  const int k = psi.k(), m = psi.m();
  require(k + 1 <= d && m + 1 <= d, ErrorKind::DegreeOverflow, "D_g output degree exceeds dimension");
  DoubleFormValue out(d, k + 1, m + 1);
  if (kappa == 0.0) return out;
  auto Rm = riemann_from_metric(g, kappa);
  std::vector<double> ea(d), eb(d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const double w = g.Ginv(a, b);
      if (w == 0.0) continue;
      std::fill(ea.begin(), ea.end(), 0.0);
      std::fill(eb.begin(), eb.end(), 0.0);
      ea[a] = 1.0;
      eb[b] = 1.0;
      if (m >= 1) {
        auto A = interior(ea, Rm);
        auto B = interior_V(eb, psi);
        detail::wedge_acc(d, 1, 2, A.data(), k, m - 1, B.data(), out.data(), 0.5 * w);
      }
      if (k >= 1) {
        auto A = interior_V(ea, Rm);
        auto B = interior(eb, psi);
        detail::wedge_acc(d, 2, 1, A.data(), k - 1, m, B.data(), out.data(), 0.5 * w);
      }
    }
  return out;
}

namespace detail {

// Gram matrix of the fiber inner product on (k,m)
inline Eigen::MatrixXd gram(const MetricValue& g, int k, int m) {
  const int d = g.dim;
  auto Ck = compound(g.g_inv.data(), d, k, g.diagonal);
  auto Cm = compound(g.g_inv.data(), d, m, g.diagonal);
  const long nk = binom(d, k), nm = binom(d, m);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nk * nm, nk * nm);
  for (long i = 0; i < nk; ++i)
    for (long i2 = 0; i2 < nk; ++i2)
      for (long j = 0; j < nm; ++j)
        for (long j2 = 0; j2 < nm; ++j2) G(i * nm + j, i2 * nm + j2) = Ck[i * nk + i2] * Cm[j * nm + j2];
  return G;
}

}  // namespace detail

// fiber adjoint of D_g: (D* psi, phi) = (psi, D phi) for psi in (k,m), phi in (k-1,m-1)
inline DoubleFormValue D_g_star(const DoubleFormValue& psi, const MetricValue& g, double kappa) {
  const int d = psi.dim();
  const int k = psi.k(), m = psi.m();
  require(k >= 1 && m >= 1, ErrorKind::DegreeUnderflow, "D_g_star needs k, m >= 1");
  DoubleFormValue out(d, k - 1, m - 1);
  if (kappa == 0.0) return out;
  const long nin = fiber_size(d, k - 1, m - 1), nout = psi.size();
  Eigen::MatrixXd M(nout, nin);
  for (long c = 0; c < nin; ++c) {
    DoubleFormValue e(d, k - 1, m - 1);
    e[c] = 1.0;
    auto De = D_g(e, g, kappa);
    for (long r = 0; r < nout; ++r) M(r, c) = De[r];
  }
  Eigen::MatrixXd Gin = detail::gram(g, k - 1, m - 1), Gout = detail::gram(g, k, m);
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(psi.data(), nout);
  Eigen::VectorXd r = Gin.ldlt().solve(M.transpose() * (Gout * v));
  for (long c = 0; c < nin; ++c) out[c] = r(c);
  return out;
}

inline FormField D_g(const FormField& f) {
  const double kappa = f.chart().kappa;
  return pointwise(f, f.k() + 1, f.m() + 1,
                   [kappa](const MetricValue& g, const DoubleFormValue& v, std::size_t) { return D_g(v, g, kappa); });
}

inline FormField D_g_star(const FormField& f) {
  const double kappa = f.chart().kappa;
  return pointwise(f, f.k() - 1, f.m() - 1,
                   [kappa](const MetricValue& g, const DoubleFormValue& v, std::size_t) { return D_g_star(v, g, kappa); });
}

// ---------------------------------------------------------------- second order

inline FormField H_op(const FormField& f) {
  FormField out = d_nabla_V(d_nabla(f)) + d_nabla(d_nabla_V(f));
  out *= 0.5;
  out += D_g(f);
  return out;
}

inline FormField H_star_op(const FormField& f) {
  FormField out = delta_nabla(delta_nabla_V(f)) + delta_nabla_V(delta_nabla(f));
  out *= 0.5;
  out += D_g_star(f);
  return out;
}

inline FormField F_op(const FormField& f) { return d_nabla(delta_nabla_V(f)); }
inline FormField F_star_op(const FormField& f) { return d_nabla_V(delta_nabla(f)); }

inline FormField F_sym_star_op(const FormField& f) {
  FormField a = F_star_op(f);
  require(a.k() == a.m(), ErrorKind::DegreeMismatch, "F_sym_star needs F* f of equal degrees");
  return symmetrize(a);
}

// B = HH* + H*H + F*F + FF*, dropping compositions that leave the degree range
inline FormField B_op(const FormField& f) {
  const int d = f.dim(), k = f.k(), m = f.m();
  FormField out(f.patch(), k, m);
  if (k >= 1 && m >= 1) out += H_op(H_star_op(f));
  if (k + 1 <= d && m + 1 <= d) out += H_star_op(H_op(f));
  if (m >= 1 && k + 1 <= d) out += F_star_op(F_op(f));
  if (k >= 1 && m + 1 <= d) out += F_op(F_star_op(f));
  return out;
}

}  // namespace dform
