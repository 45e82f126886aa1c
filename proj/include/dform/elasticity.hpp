#pragma once

// Linearized incompatible elasticity: the 2D Airy route, residual and
// traction checks, and an experimental direct solve of the bilaplacian
// stress system.
//
// Sign conventions (fixed by H* and documented in the README):
//   flat 2D Airy relations  sigma_11 = d22 chi, sigma_12 = -d12 chi, sigma_22 = d11 chi
//   boundary data lemma     T* sigma = -delta tau,
//                           F sigma  = -d rho - 1/2 Tr_g0(h0 ^ tau),  h0(X,Y) = g(nabla_X n, Y), n outward
//
// The 2D Airy operator is star star^V H H* star star^V on scalars. In the
// conformal charts used here it equals (Delta - kappa)(Delta - 2 kappa); the
// form (Delta + kappa)^2 is available as AiryOperator::Printed.

#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "boundary.hpp"
#include "linalg.hpp"
#include "saint_venant.hpp"

namespace dform {

// ------------------------------------------------------------ sources

inline void check_curvature_source(const FormField& R, double tol = 1e-10) {
  require(R.k() == 2 && R.m() == 2, ErrorKind::DegreeMismatch, "curvature source must be a (2,2) field");
  require(!R.patch().is_face(), ErrorKind::NotBoundaryFace, "curvature source must live on the full grid");
  double scale = 1.0;
  for (double v : R.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t n = 0; n < R.nodes(); ++n)
    require(is_algebraic_curvature(R.value(n), tol * scale), ErrorKind::Validation,
            "curvature source is not an algebraic curvature at node " + std::to_string(n));
}

// the canonical source R = -2 Rm_g
inline FormField default_source(const Chart& c, const Grid& g) {
  FormField R = riemann_field(Patch::full(c, g));
  R *= -2.0;
  return R;
}

inline FormField airy_rhs(const Chart& c, const Grid& g, const std::optional<FormField>& source = std::nullopt) {
  require(c.dim == 2, ErrorKind::WrongDimension, "the Airy route is two-dimensional");
  FormField R = source ? *source : default_source(c, g);
  check_curvature_source(R);
  return star_star_V(R);
}

// ------------------------------------------------------------ Airy solve

enum class AiryOperator { Consistent, Printed };

inline std::pair<double, double> airy_coefficients(AiryOperator op, double kappa) {
  // Delta^2 + a Delta + b
  if (op == AiryOperator::Printed) return {2.0 * kappa, kappa * kappa};
  return {-3.0 * kappa, 2.0 * kappa * kappa};
}

// boundary data: chi on the full grid (only boundary nodes are read) and the
// outward unit-normal derivative on each face
struct AiryBoundary {
  FormField value;
  std::vector<FormField> normal;
};

inline AiryBoundary zero_airy_boundary(const Chart& c, const Grid& g) {
  AiryBoundary bc{FormField(Patch::full(c, g), 0, 0), {}};
  for (int f = 0; f < 2 * c.dim; ++f) bc.normal.emplace_back(Patch::face_of(c, g, f), 0, 0);
  return bc;
}

// An exact scalar with its flat derivatives, for boundary data and
// manufactured right-hand sides.
struct AiryExact {
  // v, grad v, Delta v, grad Delta v, Delta^2 v (flat operators)
  std::function<void(const double* x, double& v, double* grad, double& lap, double* grad_lap, double& bilap)> eval;

  // chi = sin(x1 + c1) sin(x2 + c2)
  static AiryExact sines(double c1 = 0.3, double c2 = -0.2) {
    return {[c1, c2](const double* x, double& v, double* gr, double& lap, double* gl, double& bl) {
      const double s1 = std::sin(x[0] + c1), s2 = std::sin(x[1] + c2);
      const double k1 = std::cos(x[0] + c1), k2 = std::cos(x[1] + c2);
      v = s1 * s2;
      gr[0] = k1 * s2;
      gr[1] = s1 * k2;
      lap = -2.0 * v;
      gl[0] = -2.0 * gr[0];
      gl[1] = -2.0 * gr[1];
      bl = 4.0 * v;
    }};
  }

  // chi = x1^3 x2, biharmonic
  static AiryExact cubic() {
    return {[](const double* x, double& v, double* gr, double& lap, double* gl, double& bl) {
      v = x[0] * x[0] * x[0] * x[1];
      gr[0] = 3.0 * x[0] * x[0] * x[1];
      gr[1] = x[0] * x[0] * x[0];
      lap = 6.0 * x[0] * x[1];
      gl[0] = 6.0 * x[1];
      gl[1] = 6.0 * x[0];
      bl = 0.0;
    }};
  }
};

// (Delta_g^2 + a Delta_g + b) chi with Delta_g = mu Delta, mu = lambda^-2 = (1 - kappa r^2/4)^2
inline double airy_apply_exact(const Chart& c, AiryOperator op, const AiryExact& e, const double* x) {
  double v, gr[2], lap, gl[2], bl;
  e.eval(x, v, gr, lap, gl, bl);
  const double k = c.kappa, r2 = x[0] * x[0] + x[1] * x[1];
  const double s = 1.0 - k * r2 / 4.0, mu = s * s;
  const double gmu[2] = {-k * s * x[0], -k * s * x[1]};
  const double lmu = k * k * r2 - 2.0 * k;
  const double L = mu * lap;
  const double LL = mu * (mu * bl + 2.0 * (gmu[0] * gl[0] + gmu[1] * gl[1]) + lmu * lap);
  auto [a, b] = airy_coefficients(op, k);
  return LL + a * L + b * v;
}

inline FormField airy_rhs_exact(const Chart& c, const Grid& g, AiryOperator op, const AiryExact& e) {
  return sample(c, g, 0, 0, [&](const double* x, double* v) { v[0] = airy_apply_exact(c, op, e, x); });
}

inline FormField airy_field_exact(const Chart& c, const Grid& g, const AiryExact& e) {
  return sample(c, g, 0, 0, [&](const double* x, double* v) {
    double gr[2], lap, gl[2], bl;
    e.eval(x, v[0], gr, lap, gl, bl);
  });
}

inline AiryBoundary airy_boundary_exact(const Chart& c, const Grid& g, const AiryExact& e) {
  AiryBoundary bc{airy_field_exact(c, g, e), {}};
  for (int f = 0; f < 2 * c.dim; ++f)
    bc.normal.push_back(sample(Patch::face_of(c, g, f), 0, 0, [&](const double* x, double* v) {
      double val, gr[2], lap, gl[2], bl;
      e.eval(x, val, gr, lap, gl, bl);
      v[0] = face_sign(f) * gr[face_axis(f)] / c.lambda(x);
    }));
  return bc;
}

struct AirySolution {
  FormField chi;
  SolveStats stats;
};

namespace detail {

inline std::vector<std::pair<std::size_t, double>> laplace_row(const Patch& p, std::size_t n) {
  const double mu = std::pow(p.lambda(n), -2.0);
  std::vector<std::pair<std::size_t, double>> r{{n, 0.0}};
  for (int a = 0; a < p.dim; ++a) {
    const double w = mu / (p.h[a] * p.h[a]);
    r.push_back({n + p.stride[a], w});
    r.push_back({n - p.stride[a], w});
    r[0].second -= 2.0 * w;
  }
  return r;
}

}  // namespace detail

// Dirichlet rows on the boundary, one-sided normal-derivative rows on the
// first interior ring (a ring node takes the face of its lowest ring axis),
// the composed 13-point operator everywhere deeper.
inline AirySolution airy_solve(const Chart& c, const Grid& g, const FormField& rhs, const AiryBoundary& bc,
                               AiryOperator op = AiryOperator::Consistent, double tol = 1e-10) {
  require(c.dim == 2, ErrorKind::WrongDimension, "the Airy route is two-dimensional");
  Patch p = Patch::full(c, g);
  require(rhs.patch().same_as(p) && rhs.k() == 0 && rhs.m() == 0, ErrorKind::DimensionMismatch, "rhs must be a scalar on the grid");
  require(bc.value.patch().same_as(p) && bc.normal.size() == 4, ErrorKind::DimensionMismatch, "boundary data shape");
  require(rhs.finite() && bc.value.finite(), ErrorKind::Validation, "non-finite Airy data");
  for (const auto& f : bc.normal) require(f.finite(), ErrorKind::Validation, "non-finite Airy data");
  const std::size_t N = p.nodes();
  auto [a, b] = airy_coefficients(op, c.kappa);
  // rows scaled by h^(derivative order) to keep the factorization well balanced
  const double h = *std::max_element(p.h.begin(), p.h.end());
  const double s1 = h, s4 = std::pow(h, 4);
  std::vector<Triplet> T;
  Vec rv(N);
  for (std::size_t n = 0; n < N; ++n) {
    const int row = static_cast<int>(n);
    if (!p.deep(n, 1)) {
      T.emplace_back(row, row, 1.0);
      rv[n] = bc.value.at(n)[0];
      continue;
    }
    if (!p.deep(n, 2)) {
      int axis = 0, side = 0;
      for (int ax = 0; ax < 2; ++ax) {
        const int i = p.coord_index(n, ax);
        if (i == 1 || i == p.shape[ax] - 2) {
          axis = ax;
          side = (i == 1) ? 0 : 1;
          break;
        }
      }
      const int face = 2 * axis + side;
      const std::size_t bn = side == 0 ? n - p.stride[axis] : n + p.stride[axis];
      const Stencil3 st = derivative_stencil(p, bn, axis);
      const double scale = s1 * face_sign(face) / p.lambda(bn);
      for (int t = 0; t < 3; ++t)
        if (st.w[t] != 0.0) T.emplace_back(row, static_cast<int>(st.node[t]), scale * st.w[t]);
      // face node index of bn: drop the fixed axis
      const int other = 1 - axis;
      rv[n] = s1 * bc.normal[face].at(static_cast<std::size_t>(p.coord_index(bn, other)))[0];
      continue;
    }
    auto outer = detail::laplace_row(p, n);
    for (auto [m, wm] : outer)
      for (auto [q, wq] : detail::laplace_row(p, m)) T.emplace_back(row, static_cast<int>(q), s4 * wm * wq);
    for (auto [q, wq] : outer) T.emplace_back(row, static_cast<int>(q), s4 * a * wq);
    T.emplace_back(row, row, s4 * b);
    rv[n] = s4 * rhs.at(n)[0];
  }
  SpMat A(static_cast<int>(N), static_cast<int>(N));
  A.setFromTriplets(T.begin(), T.end());
  A.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  require(lu.info() == Eigen::Success, ErrorKind::SolverDiverged, "Airy factorization failed: " + lu.lastErrorMessage());
  Vec x = lu.solve(rv);
  AirySolution out{FormField(p, 0, 0), {}};
  out.stats.iterations = 1;
  fill_residuals(A, rv, x, out.stats);
  // a few steps of iterative refinement recover the digits lost to conditioning
  for (int it = 0; it < 3 && out.stats.relative_residual > 0.01 * tol; ++it) {
    x += lu.solve(rv - A * x);
    ++out.stats.iterations;
    fill_residuals(A, rv, x, out.stats);
  }
  require(x.allFinite() && out.stats.relative_residual <= tol, ErrorKind::SolverDiverged,
          "Airy solve stopped at relative residual " + std::to_string(out.stats.relative_residual));
  for (std::size_t n = 0; n < N; ++n) out.chi.at(n)[0] = x[n];
  return out;
}

inline FormField stress_from_airy(const FormField& chi) {
  require(chi.dim() == 2 && !chi.patch().is_face(), ErrorKind::WrongDimension, "the Airy route is two-dimensional");
  require(chi.k() == 0 && chi.m() == 0, ErrorKind::DegreeMismatch, "chi must be a scalar field");
  return H_star_op(star_star_V(chi));
}

// ------------------------------------------------------------ traction

struct TractionData {
  std::vector<FormField> rho;  // per face, (0,0)
  std::vector<FormField> tau;  // per face, (1,0)
};

inline TractionData traction_from_stress(const FormField& sigma) {
  TractionData t;
  for (int f = 0; f < 2 * sigma.dim(); ++f) {
    t.rho.push_back(project_boundary(sigma, f, Projection::nn));
    t.tau.push_back(project_boundary(sigma, f, Projection::tn));
  }
  return t;
}

inline TractionData constant_traction(const Chart& c, const Grid& g, double rho) {
  TractionData t;
  for (int f = 0; f < 2 * c.dim; ++f) {
    Patch fp = Patch::face_of(c, g, f);
    t.rho.push_back(sample(fp, 0, 0, [rho](const double*, double* v) { v[0] = rho; }));
    t.tau.emplace_back(fp, 1, 0);
  }
  return t;
}

inline void check_traction(const TractionData& t, const Chart& c, const Grid& g) {
  require(static_cast<int>(t.rho.size()) == 2 * c.dim && t.tau.size() == t.rho.size(), ErrorKind::Validation,
          "traction needs data on every face");
  for (int f = 0; f < 2 * c.dim; ++f) {
    Patch fp = Patch::face_of(c, g, f);
    require(t.rho[f].patch().same_as(fp) && t.rho[f].k() == 0 && t.rho[f].m() == 0, ErrorKind::Validation, "rho shape");
    require(t.tau[f].patch().same_as(fp) && t.tau[f].k() == 1 && t.tau[f].m() == 0, ErrorKind::Validation, "tau shape");
    require(t.rho[f].finite() && t.tau[f].finite(), ErrorKind::Validation, "non-finite traction");
  }
}

// expected (T* sigma, F sigma) on one face for a divergence-free sigma with
// traction (rho, tau)
inline std::pair<FormField, FormField> traction_boundary_data(const FormField& rho, const FormField& tau) {
  const Patch& fp = rho.patch();
  require(fp.is_face(), ErrorKind::NotBoundaryFace, "traction lives on faces");
  FormField t_star = delta_nabla(tau);
  t_star *= -1.0;
  FormField f = d_nabla(rho);
  f *= -1.0;
  if (fp.chart.kappa != 0.0) {
    FormField h0 = second_fundamental_form_field(fp.chart, fp.grid, fp.face);
    for (std::size_t n = 0; n < fp.nodes(); ++n) {
      auto mv = fp.metric(n);
      auto w = wedge_or_zero(h0.value(n), tau.value(n));  // zero on the 1D faces of a square
      if (!w) continue;
      auto tr = trace_g(*w, mv);
      for (std::size_t q = 0; q < f.ncomp(); ++q) f.at(n)[q] -= 0.5 * tr[q];
    }
  }
  return {t_star, f};
}

struct TractionCheck {
  std::vector<double> integrals;  // one per Killing basis element
  double norm = 0;                // basis-independent
};

// int_dM (rho, P^nt w) + (tau, P^tt w) for each Killing 1-form w
inline TractionCheck traction_compatibility(const TractionData& t, const KillingBasis& kb) {
  TractionCheck out;
  if (kb.basis.empty()) return out;
  const Patch& p = kb.basis.front().patch();
  for (const auto& f : t.rho)
    require(f.patch().chart.dim == p.chart.dim && f.patch().grid.shape == p.grid.shape && f.patch().chart.kappa == p.chart.kappa &&
                f.patch().chart.box == p.chart.box,
            ErrorKind::BasisMismatch, "Killing basis computed on another chart or grid");
  check_traction(t, p.chart, p.grid);
  for (const auto& w : kb.basis) {
    double s = 0;
    for (int f = 0; f < 2 * p.dim; ++f) {
      s += boundary_l2_inner(t.rho[f], project_boundary(w, f, Projection::nt));
      s += boundary_l2_inner(t.tau[f], project_boundary(w, f, Projection::tt));
    }
    out.integrals.push_back(s);
    out.norm += s * s;
  }
  out.norm = std::sqrt(out.norm);
  return out;
}

// ------------------------------------------------------------ residuals

// L2 norm over faces with the nodes within `layer` of a face edge left out
inline double boundary_norm(const std::vector<FormField>& per_face, int layer = 1) {
  double s = 0;
  for (const auto& f : per_face) {
    const Patch& fp = f.patch();
    for (std::size_t n = 0; n < fp.nodes(); ++n) {
      if (!fp.deep(n, layer)) continue;
      const double v = pointwise_norm(f, n);
      s += trapezoid_weight(fp, n) * std::pow(fp.lambda(n), fp.dim) * v * v;
    }
  }
  return std::sqrt(s);
}

struct StressReport {
  Norms delta;         // delta sigma, interior
  Norms equation;      // H sigma - R, interior
  double rho_error = 0, tau_error = 0;
  double lemma_T_star = 0, lemma_F = 0;  // boundary data consistency
  bool source_verified = false;          // R was checked to be an algebraic curvature
};

inline StressReport stress_residuals(const FormField& sigma, const std::optional<FormField>& source,
                                     const std::optional<TractionData>& traction, std::optional<Region> region = std::nullopt) {
  check_symmetric(sigma);
  const Patch& p = sigma.patch();
  const Region R = region ? *region : Region::inset(p, 2);
  StressReport r;
  r.delta = region_norms(delta_nabla(sigma), R);
  FormField e = H_op(sigma);
  if (source) {
    check_curvature_source(*source);
    r.source_verified = true;
    e -= *source;
  }
  r.equation = region_norms(e, R);
  std::vector<FormField> drho, dtau, lt, lf;
  for (int f = 0; f < 2 * p.dim; ++f) {
    FormField rho = project_boundary(sigma, f, Projection::nn), tau = project_boundary(sigma, f, Projection::tn);
    if (traction) {
      drho.push_back(rho - traction->rho[f]);
      dtau.push_back(tau - traction->tau[f]);
    }
    auto [ts, fs] = traction_boundary_data(rho, tau);
    lt.push_back(boundary_T_star(sigma, f) - ts);
    lf.push_back(boundary_F(sigma, f) - fs);
  }
  if (traction) {
    check_traction(*traction, p.chart, p.grid);
    r.rho_error = boundary_norm(drho);
    r.tau_error = boundary_norm(dtau);
  }
  r.lemma_T_star = boundary_norm(lt);
  r.lemma_F = boundary_norm(lf);
  return r;
}

// ------------------------------------------------------------ direct solve

namespace detail {

// Rows of the bilaplacian stress system as one linear map of a symmetric
// (1,1) field: B sigma at nodes of depth >= 2 (upper triangle), then per face
// and boundary node P^nn, P^tn, T*, F, P^nn H, T* H. Row families are scaled
// by powers of h. Scaling every family by h^(derivative order) leaves the
// interior rows too weak: the composed one-sided stencils make the P^nn H and
// T* H rows inconsistent at O(1), and that error then stalls the solution. The
// weights below converge on manufactured equilibria.
struct StressRowLayout {
  std::vector<std::size_t> node;  // grid node a row is attached to
};

constexpr double kRowScaleB = 3;
constexpr double kRowScalePower[6] = {0, 0, 1, 1, 1, 2};

inline std::vector<double> stress_rows(const FormField& sigma, StressRowLayout* layout) {
  const Patch& p = sigma.patch();
  const int d = p.dim;
  const double h = *std::max_element(p.h.begin(), p.h.end());
  std::vector<double> out;
  auto push = [&](double v, std::size_t node) {
    out.push_back(v);
    if (layout) layout->node.push_back(node);
  };
  const FormField B = B_op(sigma);
  const double sB = std::pow(h, kRowScaleB);
  for (std::size_t n = 0; n < p.nodes(); ++n) {
    if (!p.deep(n, 2)) continue;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) push(sB * B.at(n)[i * d + j], n);
  }
  const FormField Hs = H_op(sigma);
  for (int f = 0; f < 2 * d; ++f) {
    Patch fp = Patch::face_of(p.chart, p.grid, f);
    const FormField parts[6] = {project_boundary(sigma, f, Projection::nn), project_boundary(sigma, f, Projection::tn),
                                boundary_T_star(sigma, f),                 boundary_F(sigma, f),
                                project_boundary(Hs, f, Projection::nn),   boundary_T_star(Hs, f)};
    for (std::size_t n = 0; n < fp.nodes(); ++n)
      for (int q = 0; q < 6; ++q) {
        const double s = std::pow(h, kRowScalePower[q]);
        for (std::size_t c = 0; c < parts[q].ncomp(); ++c) push(s * parts[q].at(n)[c], fp.ambient_node(n));
      }
  }
  return out;
}

inline std::vector<double> stress_rows_rhs(const Patch& p, const FormField& R, const TractionData& t) {
  const int d = p.dim;
  const double h = *std::max_element(p.h.begin(), p.h.end());
  std::vector<double> out;
  const FormField HR = H_star_op(R);
  const double sB = std::pow(h, kRowScaleB);
  for (std::size_t n = 0; n < p.nodes(); ++n) {
    if (!p.deep(n, 2)) continue;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) out.push_back(sB * HR.at(n)[i * d + j]);
  }
  for (int f = 0; f < 2 * d; ++f) {
    Patch fp = Patch::face_of(p.chart, p.grid, f);
    auto [ts, fs] = traction_boundary_data(t.rho[f], t.tau[f]);
    const FormField parts[6] = {t.rho[f], t.tau[f], ts, fs, project_boundary(R, f, Projection::nn), boundary_T_star(R, f)};
    for (std::size_t n = 0; n < fp.nodes(); ++n)
      for (int q = 0; q < 6; ++q) {
        const double s = std::pow(h, kRowScalePower[q]);
        for (std::size_t c = 0; c < parts[q].ncomp(); ++c) out.push_back(s * parts[q].at(n)[c]);
      }
  }
  return out;
}

// Unknowns are the upper-triangle components of sigma, column node*S + sym.
// Assembled by probing: a row attached to node r only sees unknowns within
// `reach` nodes per axis (four composed derivatives, at most two nodes each
// one-sided), so unit fields on nodes 2*reach+1 apart never share a row.
inline SpMat assemble_stress_rows(const Patch& p, long rows, const StressRowLayout& layout) {
  const int d = p.dim, S = sym_count(d);
  constexpr int reach = 4;
  constexpr int span = 2 * reach + 1;
  std::vector<Triplet> T;
  std::vector<int> phase(d, 0);
  long colors = 1;
  for (int a = 0; a < d; ++a) colors *= std::min(span, p.shape[a]);
  for (long color = 0; color < colors; ++color) {
    long cc = color;
    for (int a = d - 1; a >= 0; --a) {
      const int m = std::min(span, p.shape[a]);
      phase[a] = static_cast<int>(cc % m);
      cc /= m;
    }
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        FormField e(p, 1, 1);
        for (std::size_t n = 0; n < p.nodes(); ++n) {
          bool hit = true;
          for (int a = 0; a < d && hit; ++a) hit = p.coord_index(n, a) % span == phase[a];
          if (!hit) continue;
          e.at(n)[i * d + j] = 1.0;
          e.at(n)[j * d + i] = 1.0;
        }
        const std::vector<double> col = stress_rows(e, nullptr);
        for (long r = 0; r < rows; ++r) {
          if (col[r] == 0.0) continue;
          std::size_t owner = 0;
          for (int a = 0; a < d; ++a) {
            const int c = p.coord_index(layout.node[r], a);
            const int off = ((c - phase[a]) % span + span) % span;
            const int q = off <= reach ? c - off : c - off + span;
            require(q >= 0 && q < p.shape[a], ErrorKind::SolverDiverged, "probe attribution left the grid");
            owner += static_cast<std::size_t>(q) * p.stride[a];
          }
          T.emplace_back(static_cast<int>(r), static_cast<int>(owner * S + sym_index(d, i, j)), col[r]);
        }
      }
  }
  SpMat A(static_cast<int>(rows), static_cast<int>(p.nodes() * S));
  A.setFromTriplets(T.begin(), T.end());
  return A;
}

inline FormField symmetric_from_vector(const Patch& p, const Vec& x) {
  const int d = p.dim, S = sym_count(d);
  FormField s(p, 1, 1);
  for (std::size_t n = 0; n < p.nodes(); ++n)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s.at(n)[i * d + j] = x[n * S + sym_index(d, i, j)];
  return s;
}

}  // namespace detail

// The assembled stress system for a (2,2) source and traction data; exposed
// so the probe assembly can be checked against the matrix-free rows.
inline LinearSystem assemble_stress_system(const Chart& c, const Grid& g, const FormField& R, const TractionData& traction,
                                           long max_unknowns = 50000) {
  Patch p = Patch::full(c, g);
  const long unknowns = static_cast<long>(p.nodes()) * sym_count(p.dim);
  require(unknowns <= max_unknowns, ErrorKind::TooLarge,
          std::to_string(unknowns) + " unknowns exceed the direct-solve limit of " + std::to_string(max_unknowns));
  require(R.patch().same_as(p) && R.k() == 2 && R.m() == 2, ErrorKind::DimensionMismatch, "source must be a (2,2) field on the grid");
  check_traction(traction, c, g);
  detail::StressRowLayout layout;
  const long rows = static_cast<long>(detail::stress_rows(FormField(p, 1, 1), &layout).size());
  LinearSystem sys;
  sys.A = detail::assemble_stress_rows(p, rows, layout);
  const std::vector<double> rhs = detail::stress_rows_rhs(p, R, traction);
  sys.b = Eigen::Map<const Vec>(rhs.data(), static_cast<long>(rhs.size()));
  sys.layout = "rows: B sigma at depth >= 2, then per face P^nn, P^tn, T*, F, P^nn H, T* H; columns: node*S + upper-triangle index";
  sys.stats.unknowns = unknowns;
  return sys;
}

struct DirectSolve {
  FormField sigma;
  SolveStats stats;
  StressReport report;
  long rows = 0;
};

// Minimum-norm least squares; the tolerance applies to the normal-equation
// residual because the discrete system is inconsistent at truncation level.
inline DirectSolve solve_stress_direct(const Chart& c, const Grid& g, const std::optional<FormField>& source,
                                       const TractionData& traction, double tol = 1e-10, long max_unknowns = 50000) {
  Patch p = Patch::full(c, g);
  FormField R = source ? *source : FormField(p, 2, 2);
  if (source) check_curvature_source(R);
  LinearSystem sys = assemble_stress_system(c, g, R, traction, max_unknowns);
  DirectSolve out;
  out.rows = sys.A.rows();
  const Vec x = min_norm_lsq(sys.A, sys.b, tol, 10 * sys.A.cols(), &out.stats);
  out.sigma = detail::symmetric_from_vector(p, x);
  out.report = stress_residuals(out.sigma, R, traction);
  return out;
}

// ------------------------------------------------------------ 3D potential

struct Potential3D {
  FormField psi;
  Norms reproduction;  // H* psi - sigma, interior
  Norms closedness;    // d psi, interior
  SolveStats stats;
};

// H* star star^V = star star^V H on (1,1) fields, so H* psi = sigma with
// psi = star star^V chi follows from the dual stress system H chi = Sigma,
// Sigma = star star^V sigma, with zero traction.
inline Potential3D potential_3d(const FormField& sigma, double tol = 1e-10, long max_unknowns = 50000) {
  require(sigma.dim() == 3 && !sigma.patch().is_face(), ErrorKind::WrongDimension, "potential_3d needs d = 3");
  check_symmetric(sigma);
  const Patch& p = sigma.patch();
  const FormField Sigma = star_star_V(sigma);
  DirectSolve ds = solve_stress_direct(p.chart, p.grid, Sigma, constant_traction(p.chart, p.grid, 0.0), tol, max_unknowns);
  Potential3D out;
  out.psi = star_star_V(ds.sigma);
  out.stats = ds.stats;
  const Region inner = Region::inset(p, 2);
  out.reproduction = region_norms(H_star_op(out.psi) - sigma, inner);
  out.closedness = region_norms(d_nabla(out.psi), inner);
  return out;
}

}  // namespace dform
