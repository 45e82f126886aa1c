#pragma once

// Sparse least squares and small-singular-value extraction on top of Eigen.

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"

#if defined(DFORM_USE_CHOLMOD)
#include <Eigen/CholmodSupport>
#endif

namespace dform {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Vec = Eigen::VectorXd;

// factorization for the symmetric positive definite shifted normal matrices;
// CHOLMOD's supernodal Cholesky is an order of magnitude faster in 3D
#if defined(DFORM_USE_CHOLMOD)
using SpdFactor = Eigen::CholmodSupernodalLLT<SpMat>;
#else
using SpdFactor = Eigen::SimplicialLDLT<SpMat>;
#endif

struct SolveStats {
  long unknowns = 0;
  long iterations = 0;
  double relative_residual = 0;  // |A x - b| / |b|
  double normal_residual = 0;    // |A^T (A x - b)| / |A^T b|
};

struct LinearSystem {
  SpMat A;
  Vec b;
  std::string layout;
  SolveStats stats;
};

inline void fill_residuals(const SpMat& A, const Vec& b, const Vec& x, SolveStats& s) {
  Vec r = A * x - b;
  const double nb = b.norm();
  s.relative_residual = nb > 0 ? r.norm() / nb : r.norm();
  const double nab = (A.transpose() * b).norm();
  const double nr = (A.transpose() * r).norm();
  s.normal_residual = nab > 0 ? nr / nab : nr;
  s.unknowns = A.cols();
}

// CGLS from zero: for a rank-deficient A the iterates stay in range(A^T), so
// the limit is the minimum-norm least-squares solution.
inline Vec cgls(const SpMat& A, const Vec& b, double tol, long max_iter, SolveStats* stats = nullptr) {
  Eigen::LeastSquaresConjugateGradient<SpMat, Eigen::IdentityPreconditioner> solver;
  solver.setTolerance(tol);
  solver.setMaxIterations(max_iter);
  solver.compute(A);
  Vec x = solver.solve(b);
  SolveStats s;
  s.iterations = solver.iterations();
  fill_residuals(A, b, x, s);
  require(x.allFinite(), ErrorKind::SolverDiverged, "CGLS produced non-finite values");
  require(s.normal_residual <= std::max(10 * tol, 1e-14), ErrorKind::SolverDiverged,
          "CGLS stopped at normal residual " + std::to_string(s.normal_residual));
  if (stats) *stats = s;
  return x;
}

// Minimum-norm least squares by iterated Tikhonov:
//   x_{j+1} = x_j + (A^T A + eps I)^{-1} A^T (b - A x_j),  x_0 = 0.
// Each update lies in range(A^T), and the error along a singular direction
// shrinks by eps / (s^2 + eps) per sweep, so kernel directions never enter.
inline Vec min_norm_lsq(const SpMat& A, const Vec& b, double tol, long max_iter, SolveStats* stats = nullptr) {
  SpMat N = A.transpose() * A;
  double dmax = 0;
  for (int k = 0; k < N.outerSize(); ++k)
    for (SpMat::InnerIterator it(N, k); it; ++it)
      if (it.row() == it.col()) dmax = std::max(dmax, it.value());
  const double eps = 1e-10 * std::max(dmax, 1e-300);
  SpMat I(N.rows(), N.cols());
  I.setIdentity();
  SpMat M = N + eps * I;
  SpdFactor ldlt(M);
  require(ldlt.info() == Eigen::Success, ErrorKind::SolverDiverged, "normal-equation factorization failed");
  const Vec atb = A.transpose() * b;
  const double natb = atb.norm();
  Vec x = Vec::Zero(A.cols());
  SolveStats s;
  if (natb == 0) {
    fill_residuals(A, b, x, s);
    if (stats) *stats = s;
    return x;
  }
  for (long it = 0; it < max_iter; ++it) {
    Vec g = atb - N * x;
    if (g.norm() <= tol * natb) break;
    x += ldlt.solve(g);
    s.iterations = it + 1;
  }
  fill_residuals(A, b, x, s);
  require(x.allFinite(), ErrorKind::SolverDiverged, "least-squares solve produced non-finite values");
  require(s.normal_residual <= std::max(10 * tol, 1e-13), ErrorKind::SolverDiverged,
          "least-squares solve stalled at normal residual " + std::to_string(s.normal_residual));
  if (stats) *stats = s;
  return x;
}

struct SmallSingular {
  std::vector<double> values;  // ascending
  Eigen::MatrixXd vectors;     // right singular vectors, one per column
  double norm_estimate = 0;    // largest singular value (estimate on the sparse path)
};

namespace detail {

// Rayleigh-Ritz on span(V): the singular values of A V are accurate even
// where the eigenvalues of A^T A have lost half their digits.
inline SmallSingular ritz(const SpMat& A, const Eigen::MatrixXd& V, int count) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(V.rows(), V.cols());
  Eigen::MatrixXd AQ = A * Q;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(AQ, Eigen::ComputeThinV);
  const int p = static_cast<int>(svd.singularValues().size());
  SmallSingular out;
  out.vectors.resize(V.rows(), std::min(count, p));
  for (int i = 0; i < std::min(count, p); ++i) {
    out.values.push_back(svd.singularValues()(p - 1 - i));
    out.vectors.col(i) = Q * svd.matrixV().col(p - 1 - i);
  }
  return out;
}

}  // namespace detail

// The `count` smallest singular triplets of A. Dense eigen-decomposition of
// A^T A up to `dense_limit` columns, otherwise subspace iteration with a
// shifted sparse factorization of A^T A.
inline SmallSingular smallest_singular(const SpMat& A, int count, long dense_limit = 1000) {
  const long n = A.cols();
  require(count >= 1 && count < n, ErrorKind::Validation, "singular value count out of range");
  SpMat N = A.transpose() * A;
  if (n <= dense_limit) {
    Eigen::MatrixXd Nd(N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Nd);
    require(es.info() == Eigen::Success, ErrorKind::SolverDiverged, "eigen-decomposition failed");
    const int p = std::min<long>(n, count + 4);
    auto out = detail::ritz(A, es.eigenvectors().leftCols(p), count);
    out.norm_estimate = std::sqrt(std::max(0.0, es.eigenvalues()(n - 1)));
    return out;
  }
  // largest singular value by power iteration, for the shift and for tolerances
  Vec v = Vec::Ones(n) / std::sqrt(double(n));
  double lmax = 0;
  for (int it = 0; it < 60; ++it) {
    Vec w = N * v;
    lmax = w.norm();
    v = w / lmax;
  }
  const double eps = 1e-10 * lmax;
  SpMat I(n, n);
  I.setIdentity();
  SpMat M = N + eps * I;
  SpdFactor ldlt(M);
  require(ldlt.info() == Eigen::Success, ErrorKind::SolverDiverged, "shifted factorization failed");
  const int p = std::min<long>(n, 2 * count + 4);
  // deterministic start block
  Eigen::MatrixXd V(n, p);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) V(i, j) = std::sin(1.0 + 0.7 * double(i + 1) * double(j + 1) + 0.3 * double(j));
  std::vector<double> prev;
  SmallSingular out;
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd W(n, p);
    for (int j = 0; j < p; ++j) W.col(j) = ldlt.solve(V.col(j));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    V = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    out = detail::ritz(A, V, count);
    bool done = !prev.empty();
    for (int i = 0; done && i < count; ++i) {
      const double a = out.values[i], b = prev[i];
      if (std::abs(a - b) > 1e-7 * std::max(std::abs(a), 1e-8 * std::sqrt(lmax))) done = false;
    }
    prev = out.values;
    if (done) break;
  }
  out.norm_estimate = std::sqrt(lmax);
  return out;
}

}  // namespace dform
