#pragma once

// Refinement studies for the solvers: displacement reconstruction, the Airy
// route, traction compatibility and the direct stress solve. Each returns
// RateResults in the same shape as the identity suite.

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "elasticity.hpp"
#include "random.hpp"
#include "saint_venant.hpp"
#include "suites.hpp"

namespace dform {

// ------------------------------------------------------------ manufactured data

// chi = e^x1 cos x2 + x1 e^x2 cos x1, flat stress sigma = [d22 chi, -d12 chi; -d12 chi, d11 chi]
inline void equilibrium_stress_exact(const double* x, double* v) {
  const double a = std::exp(x[0]), b = std::exp(x[1]);
  const double c1 = std::cos(x[0]), s1 = std::sin(x[0]), c2 = std::cos(x[1]), s2 = std::sin(x[1]);
  const double d11 = a * c2 + b * (-2 * s1 - x[0] * c1);
  const double d22 = -a * c2 + x[0] * b * c1;
  const double d12 = -a * s2 + b * (c1 - x[0] * s1);
  v[0] = d22;
  v[1] = -d12;
  v[2] = -d12;
  v[3] = d11;
}

inline double equilibrium_potential_exact(const double* x) {
  return std::exp(x[0]) * std::cos(x[1]) + x[0] * std::exp(x[1]) * std::cos(x[0]);
}

namespace detail {

inline RateResult start_rates(std::string label, std::string detail, const std::vector<int>& grids) {
  RateResult r;
  r.label = std::move(label);
  r.detail = std::move(detail);
  r.grids = grids;
  return r;
}

}  // namespace detail

// ------------------------------------------------------------ reconstruction

struct ReconstructionStudy {
  RateResult error;                    // relative L2 error of Y against the Killing-orthogonal Y0
  std::vector<double> normal_residual; // per grid
  std::vector<int> killing_dim;
};

// sigma = L_Y0 g sampled exactly; Y0 is a seeded cubic with its Killing part
// removed on every grid
inline ReconstructionStudy reconstruction_study(double kappa, int dim, const std::vector<int>& grids, std::uint64_t seed,
                                                double tol = 1e-10, double threshold = 1.5) {
  const Chart c = Chart::unit_box(dim, kappa);
  SplitMix64 rng(seed);
  const PolyVector Y0 = PolyVector::draw(rng, dim);
  ReconstructionStudy s;
  s.error = detail::start_rates("reconstruction", "Y", grids);
  for (int n : grids) {
    const Grid g = Grid::uniform(c, n);
    const Patch p = Patch::full(c, g);
    const KillingBasis kb = killing_basis(c, g);
    DisplacementField w0 = displacement_from_vector(p, Y0);
    project_out(w0, kb.basis);
    const Reconstruction r = reconstruct_displacement(lie_metric_exact(p, Y0), kb, tol);
    s.error.residuals.push_back(l2_norm(r.Y - w0) / l2_norm(w0));
    s.normal_residual.push_back(r.normal_residual);
    s.killing_dim.push_back(static_cast<int>(kb.basis.size()));
  }
  finish_rates(s.error, threshold, 0.0);
  return s;
}

// ------------------------------------------------------------ Airy

struct AiryStudy {
  RateResult chi_error;    // L2 error of the solved potential
  RateResult delta_sigma;  // delta sigma on a region fixed on the coarsest grid
  std::vector<double> solver_residual;
};

inline AiryStudy airy_mms_study(double kappa, const std::vector<int>& grids, AiryOperator op = AiryOperator::Consistent,
                                double tol = 1e-10, double threshold = 1.8) {
  const Chart c = Chart::unit_box(2, kappa);
  const AiryExact e = AiryExact::sines();
  const Region fixed = Region::inset(Patch::full(c, Grid::uniform(c, grids.front())), 2);
  AiryStudy s;
  const std::string k = "kappa=" + std::to_string(static_cast<int>(kappa));
  s.chi_error = detail::start_rates("airy_mms", k, grids);
  s.delta_sigma = detail::start_rates("airy_delta_sigma", k, grids);
  for (int n : grids) {
    const Grid g = Grid::uniform(c, n);
    const AirySolution sol = airy_solve(c, g, airy_rhs_exact(c, g, op, e), airy_boundary_exact(c, g, e), op, tol);
    s.chi_error.residuals.push_back(l2_norm(sol.chi - airy_field_exact(c, g, e)));
    s.delta_sigma.residuals.push_back(region_norms(delta_nabla(stress_from_airy(sol.chi)), fixed).l2);
    s.solver_residual.push_back(sol.stats.relative_residual);
  }
  finish_rates(s.chi_error, threshold, 1e-12);
  finish_rates(s.delta_sigma, threshold, 1e-12);
  return s;
}

// max |star star^V R + 2 kappa| over the grid for the default source
inline double airy_default_rhs_error(double kappa, int n) {
  const Chart c = Chart::unit_box(2, kappa);
  const Grid g = Grid::uniform(c, n);
  const FormField r = airy_rhs(c, g);
  double e = 0;
  for (std::size_t q = 0; q < r.nodes(); ++q) e = std::max(e, std::abs(r.at(q)[0] + 2.0 * kappa));
  return e;
}

// flat chart: sigma from a sampled potential against the classical second derivatives
inline RateResult airy_flat_relations(const std::vector<int>& grids, double threshold = 1.8) {
  const Chart c = Chart::unit_box(2, 0.0);
  const Region fixed = Region::inset(Patch::full(c, Grid::uniform(c, grids.front())), 2);
  RateResult r = detail::start_rates("airy_flat_relations", "sigma11=d22,sigma12=-d12,sigma22=d11", grids);
  for (int n : grids) {
    const Grid g = Grid::uniform(c, n);
    const FormField chi = sample(c, g, 0, 0, [](const double* x, double* v) { v[0] = equilibrium_potential_exact(x); });
    const FormField exact = sample(c, g, 1, 1, equilibrium_stress_exact);
    r.residuals.push_back(region_norms(stress_from_airy(chi) - exact, fixed).max);
  }
  finish_rates(r, threshold, 1e-12);
  return r;
}

// ------------------------------------------------------------ traction

// (rho, tau) = (1, 0): the Killing integrals are a quadrature error
inline RateResult traction_constant_study(double kappa, int dim, const std::vector<int>& grids, double threshold = 1.8,
                                          double exact_floor = 1e-12) {
  const Chart c = suite_chart(dim, kappa);
  RateResult r = detail::start_rates("traction_constant", "kappa=" + std::to_string(static_cast<int>(kappa)) + ",d=" + std::to_string(dim), grids);
  for (int n : grids) {
    const Grid g = Grid::uniform(c, n);
    const KillingBasis kb = killing_basis(c, g);
    r.residuals.push_back(traction_compatibility(constant_traction(c, g, 1.0), kb).norm);
  }
  finish_rates(r, threshold, exact_floor);
  return r;
}

struct IncompatibleTraction {
  double integral = 0;     // pairing with the Killing form whose restriction is tau
  double tangential = 0;   // |P^tt w0|^2 over the boundary
  double ratio = 0;
};

// rho = 0, tau = P^tt w0 with w0 the first Killing basis element
inline IncompatibleTraction traction_incompatible(double kappa, int dim, int n) {
  const Chart c = suite_chart(dim, kappa);
  const Grid g = Grid::uniform(c, n);
  const KillingBasis kb = killing_basis(c, g);
  require(!kb.basis.empty(), ErrorKind::NoSpectralGap, "no Killing fields found");
  const FormField& w0 = kb.basis.front();
  TractionData t = constant_traction(c, g, 0.0);
  IncompatibleTraction out;
  for (int f = 0; f < 2 * dim; ++f) {
    t.tau[f] = project_boundary(w0, f, Projection::tt);
    out.tangential += boundary_l2_inner(t.tau[f], t.tau[f]);
  }
  out.integral = traction_compatibility(t, kb).integrals.front();
  out.ratio = out.tangential > 0 ? out.integral / out.tangential : 0.0;
  return out;
}

// ------------------------------------------------------------ direct solve

struct DirectStudy {
  std::vector<int> grids;
  std::vector<double> normal_residual, relative_residual, sigma_error, seconds;
  std::vector<StressReport> reports;  // measured on a region fixed on the coarsest grid
  bool decreasing = false;
};

// d = 2, flat: traction from the exact equilibrium stress, R = 0
inline DirectStudy direct_solve_study(const std::vector<int>& grids, double tol = 1e-10, long max_unknowns = 50000) {
  const Chart c = Chart::unit_box(2, 0.0);
  const Region fixed = Region::inset(Patch::full(c, Grid::uniform(c, grids.front())), 2);
  DirectStudy s;
  s.grids = grids;
  for (int n : grids) {
    const Grid g = Grid::uniform(c, n);
    const FormField exact = sample(c, g, 1, 1, equilibrium_stress_exact);
    const TractionData tr = traction_from_stress(exact);
    const auto t0 = std::chrono::steady_clock::now();
    const DirectSolve ds = solve_stress_direct(c, g, std::nullopt, tr, tol, max_unknowns);
    s.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    s.normal_residual.push_back(ds.stats.normal_residual);
    s.relative_residual.push_back(ds.stats.relative_residual);
    s.sigma_error.push_back(l2_norm(ds.sigma - exact) / l2_norm(exact));
    s.reports.push_back(stress_residuals(ds.sigma, std::nullopt, tr, fixed));
  }
  s.decreasing = true;
  for (std::size_t i = 1; i < s.reports.size(); ++i) {
    const StressReport &a = s.reports[i - 1], &b = s.reports[i];
    s.decreasing = s.decreasing && b.delta.l2 < a.delta.l2 && b.equation.l2 < a.equation.l2 && b.rho_error < a.rho_error &&
                   b.tau_error < a.tau_error;
  }
  return s;
}

}  // namespace dform
