#pragma once

// Pointwise algebra of (k,m) double forms over a d-dimensional inner-product
// fiber. Components are indexed by pairs (I, J) of strictly increasing
// multi-indices (0-based internally), I-major, and equal the value of the form
// on the basis arguments (e_I ; e_J).
//
// Fiber inner product: the Gram-determinant convention on both blocks, so that
// dx^I (x) dx^J with I, J increasing is orthonormal for g = identity.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "combinatorics.hpp"
#include "error.hpp"

namespace dform {

inline long fiber_size(int d, int k, int m) { return binom(d, k) * binom(d, m); }

struct MetricValue {
  int dim = 0;
  std::array<double, kMaxDim * kMaxDim> g{};
  std::array<double, kMaxDim * kMaxDim> g_inv{};
  double det_sqrt = 1.0;
  bool diagonal = true;

  double G(int i, int j) const { return g[i * dim + j]; }
  double Ginv(int i, int j) const { return g_inv[i * dim + j]; }

  static MetricValue conformal(int d, double lambda) {
    MetricValue mv;
    mv.dim = d;
    for (int i = 0; i < d; ++i) {
      mv.g[i * d + i] = lambda * lambda;
      mv.g_inv[i * d + i] = 1.0 / (lambda * lambda);
    }
    mv.det_sqrt = std::pow(lambda, d);
    mv.diagonal = true;
    return mv;
  }

  static MetricValue euclidean(int d) { return conformal(d, 1.0); }

  // g given row-major; validated for symmetry and positive definiteness
  static MetricValue from_matrix(int d, const std::vector<double>& gm) {
    require(d >= 1 && d <= kMaxDim, ErrorKind::DimensionMismatch, "metric dimension");
    require(static_cast<int>(gm.size()) == d * d, ErrorKind::DimensionMismatch, "metric entries");
    Eigen::MatrixXd G(d, d);
    double scale = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        G(i, j) = gm[i * d + j];
        scale = std::max(scale, std::abs(G(i, j)));
      }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < i; ++j)
        require(std::abs(G(i, j) - G(j, i)) <= 1e-14 * scale, ErrorKind::Validation, "metric not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    require(llt.info() == Eigen::Success, ErrorKind::Validation, "metric not positive definite");
    Eigen::MatrixXd Gi = llt.solve(Eigen::MatrixXd::Identity(d, d));
    MetricValue mv;
    mv.dim = d;
    mv.diagonal = true;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        mv.g[i * d + j] = G(i, j);
        mv.g_inv[i * d + j] = Gi(i, j);
        if (i != j && (G(i, j) != 0.0)) mv.diagonal = false;
      }
    double ld = 0;
    for (int i = 0; i < d; ++i) ld += std::log(llt.matrixL()(i, i));
    mv.det_sqrt = std::exp(ld);
    return mv;
  }
};

namespace detail {

inline double small_det(std::array<double, kMaxDim * kMaxDim> a, int n) {
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (a[piv * n + c] == 0.0) return 0.0;
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(a[c * n + j], a[piv * n + j]);
      det = -det;
    }
    det *= a[c * n + c];
    for (int r = c + 1; r < n; ++r) {
      double f = a[r * n + c] / a[c * n + c];
      for (int j = c; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
    }
  }
  return det;
}

// k-th compound matrix of a d x d matrix (row-major): minors det M[I, A]
inline std::vector<double> compound(const double* M, int d, int k, bool diagonal) {
  const auto& S = subsets(d, k);
  const std::size_t n = S.size();
  std::vector<double> C(n * n, 0.0);
  if (diagonal) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = 1.0;
      for (int e : elements(S[i])) p *= M[e * d + e];
      C[i * n + i] = p;
    }
    return C;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto ei = elements(S[i]);
    for (std::size_t a = 0; a < n; ++a) {
      auto ea = elements(S[a]);
      std::array<double, kMaxDim * kMaxDim> sub{};
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) sub[r * k + c] = M[ei[r] * d + ea[c]];
      C[i * n + a] = small_det(sub, k);
    }
  }
  return C;
}

// out (k+n, m+l) += a (k,m) ^ b (n,l)
inline void wedge_acc(int d, int k, int m, const double* a, int n, int l, const double* b, double* out,
                      double scale = 1.0) {
  const auto& T = tables(d);
  const auto& SP = T.split[k][n];
  const auto& SQ = T.split[m][l];
  const long nm = binom(d, m), nl = binom(d, l), nq = binom(d, m + l);
  for (std::size_t p = 0; p < SP.size(); ++p) {
    for (std::size_t q = 0; q < SQ.size(); ++q) {
      double s = 0.0;
      for (const auto& sp : SP[p])
        for (const auto& sq : SQ[q]) s += sp.sign * sq.sign * a[sp.left * nm + sq.left] * b[sp.right * nl + sq.right];
      out[p * nq + q] += scale * s;
    }
  }
}

inline void transpose_into(int d, int k, int m, const double* a, double* out) {
  const long nk = binom(d, k), nm = binom(d, m);
  for (long i = 0; i < nk; ++i)
    for (long j = 0; j < nm; ++j) out[j * nk + i] = a[i * nm + j];
}

// out (k-1, m) += i_v a on the form part
inline void interior_acc(int d, int k, int m, const double* v, const double* a, double* out, double scale = 1.0) {
  const auto& T = tables(d);
  const long nm = binom(d, m);
  const auto& Sk1 = T.subsets[k - 1];
  for (std::size_t ip = 0; ip < Sk1.size(); ++ip) {
    Mask Ip = Sk1[ip];
    for (int c = 0; c < d; ++c) {
      if (v[c] == 0.0 || (Ip & (Mask{1} << c))) continue;
      int sgn = (std::popcount(Ip & ((Mask{1} << c) - 1)) & 1) ? -1 : 1;
      int src = T.index[Ip | (Mask{1} << c)];
      double f = scale * sgn * v[c];
      for (long j = 0; j < nm; ++j) out[ip * nm + j] += f * a[src * nm + j];
    }
  }
}

// out (k, m-1) += i^V_v a on the vector part
inline void interior_v_acc(int d, int k, int m, const double* v, const double* a, double* out, double scale = 1.0) {
  const auto& T = tables(d);
  const long nk = binom(d, k), nm = binom(d, m), nm1 = binom(d, m - 1);
  const auto& Sm1 = T.subsets[m - 1];
  for (std::size_t jp = 0; jp < Sm1.size(); ++jp) {
    Mask Jp = Sm1[jp];
    for (int c = 0; c < d; ++c) {
      if (v[c] == 0.0 || (Jp & (Mask{1} << c))) continue;
      int sgn = (std::popcount(Jp & ((Mask{1} << c) - 1)) & 1) ? -1 : 1;
      int src = T.index[Jp | (Mask{1} << c)];
      double f = scale * sgn * v[c];
      for (long i = 0; i < nk; ++i) out[i * nm1 + jp] += f * a[i * nm + src];
    }
  }
}

// Bianchi sum: out (k+1, m-1),
// (Ga)(X_0..X_k; Y..) = sum_j (-1)^j a(X_0..^X_j..X_k; X_j, Y..)
inline void bianchi_acc(int d, int k, int m, const double* a, double* out) {
  const auto& T = tables(d);
  const long nm = binom(d, m), nm1 = binom(d, m - 1);
  const auto& Sp = T.subsets[k + 1];
  const auto& Sq = T.subsets[m - 1];
  for (std::size_t p = 0; p < Sp.size(); ++p) {
    auto pe = elements(Sp[p]);
    for (std::size_t q = 0; q < Sq.size(); ++q) {
      Mask Q = Sq[q];
      double s = 0.0;
      for (int j = 0; j <= k; ++j) {
        int c = pe[j];
        if (Q & (Mask{1} << c)) continue;
        int sj = (j & 1) ? -1 : 1;
        int sq = (std::popcount(Q & ((Mask{1} << c) - 1)) & 1) ? -1 : 1;
        int I = T.index[Sp[p] & ~(Mask{1} << c)];
        int J = T.index[Q | (Mask{1} << c)];
        s += sj * sq * a[I * nm + J];
      }
      out[p * nm1 + q] += s;
    }
  }
}

}  // namespace detail

class DoubleFormValue {
 public:
  DoubleFormValue() = default;
  DoubleFormValue(int d, int k, int m) : d_(d), k_(k), m_(m) {
    check_degrees();
    c_.assign(fiber_size(d, k, m), 0.0);
  }
  DoubleFormValue(int d, int k, int m, std::vector<double> comps) : d_(d), k_(k), m_(m), c_(std::move(comps)) {
    check_degrees();
    require(static_cast<long>(c_.size()) == fiber_size(d, k, m), ErrorKind::DimensionMismatch,
            "component count must equal C(d,k)C(d,m)");
    for (double x : c_) require(std::isfinite(x), ErrorKind::Validation, "non-finite component");
  }

  // basis element e^I (x) e^J with 0-based index lists
  static DoubleFormValue basis(int d, const std::vector<int>& I, const std::vector<int>& J) {
    DoubleFormValue v(d, static_cast<int>(I.size()), static_cast<int>(J.size()));
    v.set(I, J, 1.0);
    return v;
  }

  // the metric viewed as a (1,1) form
  static DoubleFormValue metric_form(const MetricValue& g) {
    DoubleFormValue v(g.dim, 1, 1);
    for (int i = 0; i < g.dim; ++i)
      for (int j = 0; j < g.dim; ++j) v.c_[i * g.dim + j] = g.G(i, j);
    return v;
  }

  int dim() const { return d_; }
  int k() const { return k_; }
  int m() const { return m_; }
  std::size_t size() const { return c_.size(); }
  const std::vector<double>& components() const { return c_; }
  double* data() { return c_.data(); }
  const double* data() const { return c_.data(); }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }

  // value on basis arguments; repeated indices give 0, unsorted ones a sign
  double eval(const std::vector<int>& X, const std::vector<int>& Y) const {
    require(static_cast<int>(X.size()) == k_ && static_cast<int>(Y.size()) == m_, ErrorKind::DegreeMismatch,
            "argument count");
    int sx = 1, sy = 1;
    Mask I = 0, J = 0;
    if (!sorted_mask(X, I, sx) || !sorted_mask(Y, J, sy)) return 0.0;
    return sx * sy * c_[subset_index(d_, I) * binom(d_, m_) + subset_index(d_, J)];
  }

  void set(const std::vector<int>& I, const std::vector<int>& J, double value) {
    int sx = 1, sy = 1;
    Mask mi = 0, mj = 0;
    require(sorted_mask(I, mi, sx) && sorted_mask(J, mj, sy), ErrorKind::Validation, "repeated index");
    c_[subset_index(d_, mi) * binom(d_, m_) + subset_index(d_, mj)] = sx * sy * value;
  }

  double max_abs() const {
    double r = 0;
    for (double x : c_) r = std::max(r, std::abs(x));
    return r;
  }

  DoubleFormValue& operator+=(const DoubleFormValue& o) {
    same_shape(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  DoubleFormValue& operator-=(const DoubleFormValue& o) {
    same_shape(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  DoubleFormValue& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  friend DoubleFormValue operator+(DoubleFormValue a, const DoubleFormValue& b) { return a += b; }
  friend DoubleFormValue operator-(DoubleFormValue a, const DoubleFormValue& b) { return a -= b; }
  friend DoubleFormValue operator*(double s, DoubleFormValue a) { return a *= s; }

  void same_shape(const DoubleFormValue& o) const {
    require(d_ == o.d_, ErrorKind::DimensionMismatch, "fiber dimensions differ");
    require(k_ == o.k_ && m_ == o.m_, ErrorKind::DegreeMismatch, "degrees differ");
  }

 private:
  void check_degrees() const {
    require(d_ >= 1 && d_ <= kMaxDim, ErrorKind::DimensionMismatch, "dimension outside [1, 6]");
    require(k_ >= 0 && m_ >= 0, ErrorKind::DegreeUnderflow, "negative degree");
    require(k_ <= d_ && m_ <= d_, ErrorKind::DegreeOverflow, "degree exceeds dimension");
  }

  static bool sorted_mask(const std::vector<int>& idx, Mask& mask, int& sign) {
    std::vector<int> v = idx;
    sign = 1;
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j) {
        if (v[i] == v[j]) return false;
        if (v[i] > v[j]) sign = -sign;
      }
    mask = mask_of(v);
    return true;
  }

  int d_ = 1, k_ = 0, m_ = 0;
  std::vector<double> c_{0.0};
};

inline DoubleFormValue wedge(const DoubleFormValue& a, const DoubleFormValue& b) {
  require(a.dim() == b.dim(), ErrorKind::DimensionMismatch, "wedge of different fibers");
  const int d = a.dim();
  require(a.k() + b.k() <= d && a.m() + b.m() <= d, ErrorKind::DegreeOverflow, "wedge degree exceeds dimension");
  DoubleFormValue out(d, a.k() + b.k(), a.m() + b.m());
  detail::wedge_acc(d, a.k(), a.m(), a.data(), b.k(), b.m(), b.data(), out.data());
  return out;
}

// zero-space convention for generic code: nullopt stands for the zero fiber
inline std::optional<DoubleFormValue> wedge_or_zero(const DoubleFormValue& a, const DoubleFormValue& b) {
  if (a.k() + b.k() > a.dim() || a.m() + b.m() > a.dim()) return std::nullopt;
  return wedge(a, b);
}

inline DoubleFormValue transpose(const DoubleFormValue& a) {
  DoubleFormValue out(a.dim(), a.m(), a.k());
  detail::transpose_into(a.dim(), a.k(), a.m(), a.data(), out.data());
  return out;
}

inline DoubleFormValue bianchi(const DoubleFormValue& a) {
  require(a.m() >= 1, ErrorKind::DegreeUnderflow, "bianchi needs m >= 1");
  require(a.k() + 1 <= a.dim(), ErrorKind::DegreeOverflow, "bianchi needs k + 1 <= d");
  DoubleFormValue out(a.dim(), a.k() + 1, a.m() - 1);
  detail::bianchi_acc(a.dim(), a.k(), a.m(), a.data(), out.data());
  return out;
}

inline DoubleFormValue bianchi_V(const DoubleFormValue& a) { return transpose(bianchi(transpose(a))); }

inline DoubleFormValue interior(const std::vector<double>& v, const DoubleFormValue& a) {
  require(static_cast<int>(v.size()) == a.dim(), ErrorKind::DimensionMismatch, "vector dimension");
  require(a.k() >= 1, ErrorKind::DegreeUnderflow, "interior needs k >= 1");
  DoubleFormValue out(a.dim(), a.k() - 1, a.m());
  detail::interior_acc(a.dim(), a.k(), a.m(), v.data(), a.data(), out.data());
  return out;
}

inline DoubleFormValue interior_V(const std::vector<double>& v, const DoubleFormValue& a) {
  require(static_cast<int>(v.size()) == a.dim(), ErrorKind::DimensionMismatch, "vector dimension");
  require(a.m() >= 1, ErrorKind::DegreeUnderflow, "interior_V needs m >= 1");
  DoubleFormValue out(a.dim(), a.k(), a.m() - 1);
  detail::interior_v_acc(a.dim(), a.k(), a.m(), v.data(), a.data(), out.data());
  return out;
}

namespace detail {

// raise the form-part indices: a^I_J = sum_A det(g^{-1}[I,A]) a_{A J}
inline void raise_form_part(const MetricValue& g, int k, int m, const double* a, double* out) {
  const int d = g.dim;
  auto C = compound(g.g_inv.data(), d, k, g.diagonal);
  const long nk = binom(d, k), nm = binom(d, m);
  for (long i = 0; i < nk; ++i)
    for (long j = 0; j < nm; ++j) {
      double s = 0;
      for (long a2 = 0; a2 < nk; ++a2) s += C[i * nk + a2] * a[a2 * nm + j];
      out[i * nm + j] = s;
    }
}

inline void star_into(const MetricValue& g, int k, int m, const double* a, double* out, int orientation) {
  const int d = g.dim;
  const auto& T = tables(d);
  const long nk = binom(d, k), nm = binom(d, m);
  std::vector<double> up(nk * nm);
  raise_form_part(g, k, m, a, up.data());
  const Mask full = (Mask{1} << d) - 1;
  for (std::size_t jo = 0; jo < T.subsets[d - k].size(); ++jo) {
    Mask Jo = T.subsets[d - k][jo];
    Mask Ic = full & ~Jo;
    int i = T.index[Ic];
    double f = orientation * g.det_sqrt * concat_sign(Ic, Jo);
    for (long j = 0; j < nm; ++j) out[jo * nm + j] = f * up[i * nm + j];
  }
}

}  // namespace detail

inline void check_metric(const MetricValue& g, const DoubleFormValue& a) {
  require(g.dim == a.dim(), ErrorKind::DimensionMismatch, "metric and form dimensions differ");
}

inline DoubleFormValue hodge_star(const DoubleFormValue& a, const MetricValue& g, int orientation = 1) {
  check_metric(g, a);
  DoubleFormValue out(a.dim(), a.dim() - a.k(), a.m());
  detail::star_into(g, a.k(), a.m(), a.data(), out.data(), orientation);
  return out;
}

inline DoubleFormValue hodge_star_V(const DoubleFormValue& a, const MetricValue& g, int orientation = 1) {
  return transpose(hodge_star(transpose(a), g, orientation));
}

inline double inner(const DoubleFormValue& a, const DoubleFormValue& b, const MetricValue& g) {
  a.same_shape(b);
  check_metric(g, a);
  const int d = a.dim();
  const long nk = binom(d, a.k()), nm = binom(d, a.m());
  auto Ck = detail::compound(g.g_inv.data(), d, a.k(), g.diagonal);
  auto Cm = detail::compound(g.g_inv.data(), d, a.m(), g.diagonal);
  double s = 0;
  for (long i = 0; i < nk; ++i)
    for (long i2 = 0; i2 < nk; ++i2) {
      double ci = Ck[i * nk + i2];
      if (ci == 0.0) continue;
      for (long j = 0; j < nm; ++j)
        for (long j2 = 0; j2 < nm; ++j2) {
          double cj = Cm[j * nm + j2];
          if (cj != 0.0) s += ci * cj * a[i * nm + j] * b[i2 * nm + j2];
        }
    }
  return s;
}

inline double norm(const DoubleFormValue& a, const MetricValue& g) { return std::sqrt(std::max(0.0, inner(a, a, g))); }

// sum_{a,b} B^{ab} i_{d_a} i^V_{d_b} a for a contravariant bilinear B (row-major)
inline DoubleFormValue contract(const DoubleFormValue& a, const double* B) {
  require(a.k() >= 1 && a.m() >= 1, ErrorKind::DegreeUnderflow, "trace needs k, m >= 1");
  const int d = a.dim();
  DoubleFormValue out(d, a.k() - 1, a.m() - 1);
  DoubleFormValue tmp(d, a.k(), a.m() - 1);
  std::vector<double> ea(d, 0.0), eb(d, 0.0);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      double w = B[p * d + q];
      if (w == 0.0) continue;
      std::fill(tmp.data(), tmp.data() + tmp.size(), 0.0);
      std::fill(ea.begin(), ea.end(), 0.0);
      std::fill(eb.begin(), eb.end(), 0.0);
      ea[p] = 1.0;
      eb[q] = 1.0;
      detail::interior_v_acc(d, a.k(), a.m(), eb.data(), a.data(), tmp.data());
      detail::interior_acc(d, a.k(), a.m() - 1, ea.data(), tmp.data(), out.data(), w);
    }
  return out;
}

// Tr_g a = sum_{a,b} g^{ab} i_{d_a} i^V_{d_b} a
inline DoubleFormValue trace_g(const DoubleFormValue& a, const MetricValue& g) {
  check_metric(g, a);
  return contract(a, g.g_inv.data());
}

// Tr_h a for a symmetric (1,1) form h: contraction against h^{ab} = g^{ac} h_cd g^{db}
inline DoubleFormValue trace_h(const DoubleFormValue& a, const DoubleFormValue& h, const MetricValue& g) {
  check_metric(g, a);
  require(h.k() == 1 && h.m() == 1 && h.dim() == a.dim(), ErrorKind::DegreeMismatch, "trace_h needs a (1,1) form");
  const int d = a.dim();
  std::vector<double> B(d * d, 0.0);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e) B[p * d + q] += g.Ginv(p, c) * h[c * d + e] * g.Ginv(e, q);
  return contract(a, B.data());
}

inline DoubleFormValue g_wedge(const DoubleFormValue& a, const MetricValue& g) {
  check_metric(g, a);
  return wedge(DoubleFormValue::metric_form(g), a);
}

inline bool is_algebraic_curvature(const DoubleFormValue& a, double tol) {
  require(a.k() == 2 && a.m() == 2, ErrorKind::DegreeMismatch, "algebraic curvature needs (2,2)");
  if (a.dim() < 3) {
    // the Bianchi sum lands in (3,1) which is the zero space when d < 3
    return (a - transpose(a)).max_abs() <= tol;
  }
  return bianchi(a).max_abs() <= tol && (a - transpose(a)).max_abs() <= tol;
}

}  // namespace dform
