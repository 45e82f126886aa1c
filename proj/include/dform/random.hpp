#pragma once

// Seeded random inputs. SplitMix64 (Steele, Lea, Flood 2014) drives every draw,
// so a seed names the same field on every platform.

#include <cmath>
#include <cstdint>
#include <vector>

#include "calculus.hpp"
#include "field.hpp"

namespace dform {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  // uniform in [0, 1) with 53 random bits
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

inline DoubleFormValue random_value(SplitMix64& rng, int d, int k, int m) {
  DoubleFormValue v(d, k, m);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

inline MetricValue random_metric(SplitMix64& rng, int d) {
  // A A^T + d I is comfortably positive definite
  std::vector<double> A(d * d), g(d * d, 0.0);
  for (double& a : A) a = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = (i == j) ? d : 0.0;
      for (int l = 0; l < d; ++l) s += A[i * d + l] * A[j * d + l];
      g[i * d + j] = s;
    }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) g[i * d + j] = g[j * d + i];
  return MetricValue::from_matrix(d, g);
}

// One smooth scalar: c0 + c.x + x^T Q x + a sin(w.x + phi), coefficients
// uniform in [-1, 1], frequencies in [-1.5, 1.5].
struct SmoothScalar {
  int d = 0;
  double c0 = 0, a = 0, phi = 0;
  std::vector<double> c, Q, w;

  static SmoothScalar draw(SplitMix64& rng, int d) {
    SmoothScalar s;
    s.d = d;
    s.c0 = rng.uniform(-1, 1);
    for (int i = 0; i < d; ++i) s.c.push_back(rng.uniform(-1, 1));
    for (int i = 0; i < d * d; ++i) s.Q.push_back(rng.uniform(-1, 1));
    s.a = rng.uniform(-1, 1);
    for (int i = 0; i < d; ++i) s.w.push_back(rng.uniform(-1.5, 1.5));
    s.phi = rng.uniform(-3.14159, 3.14159);
    return s;
  }

  double operator()(const double* x) const {
    double v = c0, arg = phi;
    for (int i = 0; i < d; ++i) {
      v += c[i] * x[i];
      arg += w[i] * x[i];
      for (int j = 0; j < d; ++j) v += Q[i * d + j] * x[i] * x[j];
    }
    return v + a * std::sin(arg);
  }
};

// a smooth random (k,m) field on the full grid; symmetric when requested (k = m)
inline FormField random_smooth_field(const Patch& p, int k, int m, std::uint64_t seed, bool symmetric = false) {
  SplitMix64 rng(seed);
  const long nc = fiber_size(p.dim, k, m);
  std::vector<SmoothScalar> comp;
  for (long c = 0; c < nc; ++c) comp.push_back(SmoothScalar::draw(rng, p.chart.dim));
  FormField f = sample(p, k, m, [&](const double* x, double* v) {
    for (long c = 0; c < nc; ++c) v[c] = comp[c](x);
  });
  if (symmetric) f = symmetrize(f);
  return f;
}

// random polynomial vector field (degree <= 3 per component), as vector components
struct PolyVector {
  int d = 0;
  std::vector<SmoothScalar> comp;  // reuse SmoothScalar with a = 0 plus a cubic term
  std::vector<double> cubic;

  static PolyVector draw(SplitMix64& rng, int d) {
    PolyVector p;
    p.d = d;
    for (int i = 0; i < d; ++i) {
      auto s = SmoothScalar::draw(rng, d);
      s.a = 0.0;
      p.comp.push_back(s);
      for (int j = 0; j < d; ++j) p.cubic.push_back(rng.uniform(-1, 1));
    }
    return p;
  }

  void operator()(const double* x, double* v) const {
    for (int i = 0; i < d; ++i) {
      v[i] = comp[i](x);
      for (int j = 0; j < d; ++j) v[i] += cubic[i * d + j] * x[j] * x[j] * x[j];
    }
  }

  // J[i*d + j] = d_j Y^i
  void jacobian(const double* x, double* J) const {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const auto& s = comp[i];
        double v = s.c[j] + 3.0 * cubic[i * d + j] * x[j] * x[j];
        for (int l = 0; l < d; ++l) v += (s.Q[j * d + l] + s.Q[l * d + j]) * x[l];
        J[i * d + j] = v;
      }
  }
};

}  // namespace dform
