#pragma once

// Boundary projections, face-intrinsic calculus and the first-order boundary
// operators T, T*, F, F*. Face fields live on Patch::face_of patches, whose
// metric is the pullback lambda^2 delta on the face axes.
//
// Face orientation: a face basis (t_1..t_{d-1}) is positive when
// (t_1..t_{d-1}, n) is positive in the ambient chart. With this choice the
// projections satisfy P^tt * = (-1)^{d+1} *_0 P^nt and the other seven
// duality relations.

#include <optional>
#include <string>
#include <vector>

#include "calculus.hpp"
#include "quadrature.hpp"

namespace dform {

enum class Projection { tt, tn, nt, nn };

inline Projection projection_from_string(const std::string& s) {
  if (s == "tt") return Projection::tt;
  if (s == "tn") return Projection::tn;
  if (s == "nt") return Projection::nt;
  if (s == "nn") return Projection::nn;
  fail(ErrorKind::Validation, "unknown projection '" + s + "'");
}

inline int face_orientation(int d, int face) {
  const int a = face_axis(face);
  return face_sign(face) * (((d - 1 - a) & 1) ? -1 : 1);
}

inline std::optional<FormField> try_project_boundary(const FormField& f, int face, Projection which) {
  require(!f.patch().is_face(), ErrorKind::NotBoundaryFace, "projection needs a full-grid field");
  const int d = f.dim();
  Patch fp = Patch::face_of(f.chart(), f.grid(), face);
  const bool nform = (which == Projection::nt || which == Projection::nn);
  const bool nvec = (which == Projection::tn || which == Projection::nn);
  const int k = f.k() - (nform ? 1 : 0), m = f.m() - (nvec ? 1 : 0);
  if (k < 0 || m < 0 || k > d - 1 || m > d - 1) return std::nullopt;
  FormField out(fp, k, m);
  const auto& T = tables(d);
  const auto& Tf = tables(d - 1);
  const std::vector<int> axes = fp.axes;
  auto lift = [&](Mask local) {
    Mask amb = 0;
    for (int i = 0; i < d - 1; ++i)
      if (local & (Mask{1} << i)) amb |= Mask{1} << axes[i];
    return amb;
  };
  std::vector<int> liftk, liftm;
  for (Mask s : Tf.subsets[k]) liftk.push_back(T.index[lift(s)]);
  for (Mask s : Tf.subsets[m]) liftm.push_back(T.index[lift(s)]);
  const long nm_amb = binom(d, m);
  parallel_for(fp.nodes(), [&](std::size_t n) {
    const std::size_t an = fp.ambient_node(n);
    std::vector<double> nv(d, 0.0);
    nv[face_axis(face)] = face_sign(face) / fp.lambda(n);
    std::vector<double> a(f.at(an), f.at(an) + f.ncomp());
    int ka = f.k(), ma = f.m();
    if (nvec) {
      std::vector<double> b(fiber_size(d, ka, ma - 1), 0.0);
      detail::interior_v_acc(d, ka, ma, nv.data(), a.data(), b.data());
      a.swap(b);
      --ma;
    }
    if (nform) {
      std::vector<double> b(fiber_size(d, ka - 1, ma), 0.0);
      detail::interior_acc(d, ka, ma, nv.data(), a.data(), b.data());
      a.swap(b);
      --ka;
    }
    double* o = out.at(n);
    const long nmf = binom(d - 1, m);
    for (std::size_t i = 0; i < liftk.size(); ++i)
      for (std::size_t j = 0; j < liftm.size(); ++j) o[i * nmf + j] = a[liftk[i] * nm_amb + liftm[j]];
  });
  return out;
}

inline FormField project_boundary(const FormField& f, int face, Projection which) {
  auto r = try_project_boundary(f, face, which);
  require(r.has_value(), ErrorKind::DegreeUnderflow, "projection leaves the face degree range");
  return *r;
}

inline FormField boundary_metric(const Chart& c, const Grid& g, int face) {
  return metric_field(Patch::face_of(c, g, face));
}

inline FormField second_fundamental_form_field(const Chart& c, const Grid& g, int face) {
  Patch fp = Patch::face_of(c, g, face);
  return sample(fp, 1, 1, [&](const double* x, double* v) {
    auto h = second_fundamental_form_at(c, x, face);
    std::copy(h.data(), h.data() + h.size(), v);
  });
}

namespace detail {

// sum of optional terms with fixed output shape; absent terms are zero
struct Accum {
  std::optional<FormField> acc;
  void add(const std::optional<FormField>& t, double s) {
    if (!t) return;
    if (!acc) {
      acc = s * (*t);
    } else {
      FormField u = *t;
      u *= s;
      *acc += u;
    }
  }
};

inline std::optional<FormField> opt_d(const std::optional<FormField>& f) {
  if (!f || f->k() + 1 > f->dim()) return std::nullopt;
  return d_nabla(*f);
}
inline std::optional<FormField> opt_dV(const std::optional<FormField>& f) {
  if (!f || f->m() + 1 > f->dim()) return std::nullopt;
  return d_nabla_V(*f);
}
inline std::optional<FormField> opt_delta(const std::optional<FormField>& f) {
  if (!f || f->k() < 1) return std::nullopt;
  return delta_nabla(*f);
}
inline std::optional<FormField> opt_deltaV(const std::optional<FormField>& f) {
  if (!f || f->m() < 1) return std::nullopt;
  return delta_nabla_V(*f);
}
inline std::optional<FormField> opt_proj(const std::optional<FormField>& f, int face, Projection w) {
  if (!f) return std::nullopt;
  return try_project_boundary(*f, face, w);
}

inline FormField finish(Accum& a, const FormField& f, int face, int k, int m) {
  if (a.acc) return *a.acc;
  require(k >= 0 && m >= 0, ErrorKind::DegreeUnderflow, "boundary operator degree");
  return FormField(Patch::face_of(f.chart(), f.grid(), face), k, m);
}

}  // namespace detail

// T psi = 1/2 (P^nt d psi - d0 P^nt psi) + 1/2 (P^tn d_V psi - d0_V P^tn psi)
inline FormField boundary_T(const FormField& f, int face) {
  using namespace detail;
  std::optional<FormField> F = f;
  Accum a;
  a.add(opt_proj(opt_d(F), face, Projection::nt), 0.5);
  a.add(opt_d(opt_proj(F, face, Projection::nt)), -0.5);
  a.add(opt_proj(opt_dV(F), face, Projection::tn), 0.5);
  a.add(opt_dV(opt_proj(F, face, Projection::tn)), -0.5);
  return finish(a, f, face, f.k(), f.m());
}

// T* psi = -1/2 (P^tn delta psi + delta0 P^tn psi) - 1/2 (P^nt delta_V psi + delta0_V P^nt psi)
inline FormField boundary_T_star(const FormField& f, int face) {
  using namespace detail;
  std::optional<FormField> F = f;
  Accum a;
  a.add(opt_proj(opt_delta(F), face, Projection::tn), -0.5);
  a.add(opt_delta(opt_proj(F, face, Projection::tn)), -0.5);
  a.add(opt_proj(opt_deltaV(F), face, Projection::nt), -0.5);
  a.add(opt_deltaV(opt_proj(F, face, Projection::nt)), -0.5);
  return finish(a, f, face, f.k() - 1, f.m() - 1);
}

// F* psi = 1/2 (P^nn d_V psi - d0_V P^nn psi) - 1/2 (P^tt delta psi + delta0 P^tt psi)
inline FormField boundary_F_star(const FormField& f, int face) {
  using namespace detail;
  std::optional<FormField> F = f;
  Accum a;
  a.add(opt_proj(opt_dV(F), face, Projection::nn), 0.5);
  a.add(opt_dV(opt_proj(F, face, Projection::nn)), -0.5);
  a.add(opt_proj(opt_delta(F), face, Projection::tt), -0.5);
  a.add(opt_delta(opt_proj(F, face, Projection::tt)), -0.5);
  return finish(a, f, face, f.k() - 1, f.m());
}

// F psi = 1/2 (P^nn d psi - d0 P^nn psi) - 1/2 (P^tt delta_V psi + delta0_V P^tt psi)
inline FormField boundary_F(const FormField& f, int face) {
  using namespace detail;
  std::optional<FormField> F = f;
  Accum a;
  a.add(opt_proj(opt_d(F), face, Projection::nn), 0.5);
  a.add(opt_d(opt_proj(F, face, Projection::nn)), -0.5);
  a.add(opt_proj(opt_deltaV(F), face, Projection::tt), -0.5);
  a.add(opt_deltaV(opt_proj(F, face, Projection::tt)), -0.5);
  return finish(a, f, face, f.k(), f.m() - 1);
}

inline double boundary_pairing(const std::optional<FormField>& a, const std::optional<FormField>& b) {
  if (!a || !b) return 0.0;
  return boundary_l2_inner(*a, *b);
}

enum class IbpOperator { H, F };

// |<op f, g> - <f, op* g> - boundary terms|, boundary terms summed over all faces.
// With the outward normal used by the projections, the H boundary term enters
// with the opposite overall sign to the F term; see the scalar case, where
// <Hess f, eta> - <f, H* eta> = int (T f)(P^nn eta) - (P^tt f)(T* eta).
// Edge and corner contributions of the box are not included, so the formula
// is meant for fields that vanish near edges.
inline double ibp_residual(const FormField& f, const FormField& g, IbpOperator op) {
  const int d = f.dim();
  double lhs, rhs, bdry = 0;
  if (op == IbpOperator::H) {
    lhs = l2_inner(H_op(f), g);
    rhs = l2_inner(f, H_star_op(g));
    for (int face = 0; face < 2 * d; ++face) {
      bdry -= boundary_pairing(try_project_boundary(f, face, Projection::tt), boundary_T_star(g, face));
      bdry += boundary_pairing(boundary_T(f, face), try_project_boundary(g, face, Projection::nn));
    }
  } else {
    lhs = l2_inner(F_op(f), g);
    rhs = l2_inner(f, F_star_op(g));
    for (int face = 0; face < 2 * d; ++face) {
      bdry += boundary_pairing(try_project_boundary(f, face, Projection::tn), boundary_F_star(g, face));
      bdry -= boundary_pairing(boundary_F(f, face), try_project_boundary(g, face, Projection::nt));
    }
  }
  return std::abs(lhs - rhs - bdry);
}

}  // namespace dform
