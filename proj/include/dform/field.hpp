#pragma once

// Fields of double forms on a structured patch. A patch is either the full
// grid of a chart or one of its box faces; a face carries the pullback metric
// lambda^2 delta restricted to the face axes, so every differential operator is
// written once for both cases.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "algebra.hpp"
#include "chart.hpp"

namespace dform {

inline int worker_count() {
  static const int n = [] {
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* s = std::getenv("DFORM_THREADS")) {
      int v = std::atoi(s);
      if (v >= 1) return std::min(v, hw);
    }
    return hw;
  }();
  return n;
}

// Each index is handled by exactly one worker, so any per-index output is
// identical for every worker count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const int w = worker_count();
  if (w <= 1 || n < 4096) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + w - 1) / w;
  for (int t = 0; t < w; ++t) {
    std::size_t b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&f, b, e] {
      for (std::size_t i = b; i < e; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct Patch {
  Chart chart;
  Grid grid;       // ambient grid
  int face = -1;   // -1 for the full grid
  int dim = 0;
  std::vector<int> axes;  // ambient axis of each patch axis
  std::vector<int> shape;
  std::vector<double> lo, h;
  std::vector<std::size_t> stride;

  static Patch full(const Chart& c, const Grid& g) {
    Patch p;
    p.chart = c;
    p.grid = g;
    p.dim = c.dim;
    for (int a = 0; a < c.dim; ++a) p.axes.push_back(a);
    p.shape = g.shape;
    p.lo = g.lo;
    p.h = g.h;
    p.stride = g.stride;
    return p;
  }

  static Patch face_of(const Chart& c, const Grid& g, int face) {
    check_face(g, face);
    require(c.dim >= 2, ErrorKind::WrongDimension, "faces need d >= 2");
    Patch p;
    p.chart = c;
    p.grid = g;
    p.face = face;
    p.dim = c.dim - 1;
    p.axes = face_axes(c.dim, face);
    for (int a : p.axes) {
      p.shape.push_back(g.shape[a]);
      p.lo.push_back(g.lo[a]);
      p.h.push_back(g.h[a]);
    }
    p.stride.assign(p.dim, 1);
    for (int i = p.dim - 2; i >= 0; --i) p.stride[i] = p.stride[i + 1] * p.shape[i + 1];
    return p;
  }

  bool is_face() const { return face >= 0; }
  std::size_t nodes() const {
    std::size_t n = 1;
    for (int s : shape) n *= s;
    return n;
  }
  int coord_index(std::size_t node, int axis) const { return static_cast<int>((node / stride[axis]) % shape[axis]); }

  // node index in the ambient grid
  std::size_t ambient_node(std::size_t node) const {
    if (!is_face()) return node;
    std::size_t an = 0;
    const int fa = face_axis(face);
    const int fixed = (face % 2) ? grid.shape[fa] - 1 : 0;
    an += static_cast<std::size_t>(fixed) * grid.stride[fa];
    for (int i = 0; i < dim; ++i) an += static_cast<std::size_t>(coord_index(node, i)) * grid.stride[axes[i]];
    return an;
  }

  void ambient_point(std::size_t node, double* x) const { grid.point(ambient_node(node), x); }

  double lambda(std::size_t node) const {
    double x[kMaxDim];
    ambient_point(node, x);
    return chart.lambda(x);
  }

  MetricValue metric(std::size_t node) const { return MetricValue::conformal(dim, lambda(node)); }

  // Christoffel symbols of lambda^2 delta in patch coordinates
  void christoffel(std::size_t node, double* G) const {
    double x[kMaxDim];
    ambient_point(node, x);
    double dl[kMaxDim];
    for (int i = 0; i < dim; ++i) dl[i] = chart.dlog_lambda(x, axes[i]);
    for (int k = 0; k < dim; ++k)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          double v = 0;
          if (i == k) v += dl[j];
          if (j == k) v += dl[i];
          if (i == j) v -= dl[k];
          G[(k * dim + i) * dim + j] = v;
        }
  }

  // +1 unless some axis index is within `layer` nodes of the patch edge
  bool deep(std::size_t node, int layer) const {
    for (int a = 0; a < dim; ++a) {
      int i = coord_index(node, a);
      if (i < layer || i > shape[a] - 1 - layer) return false;
    }
    return true;
  }

  bool same_as(const Patch& o) const {
    return face == o.face && grid.shape == o.grid.shape && chart.dim == o.chart.dim && chart.kappa == o.chart.kappa &&
           chart.box == o.chart.box;
  }
};

class FormField {
 public:
  FormField() = default;
  FormField(Patch p, int k, int m) : patch_(std::move(p)), k_(k), m_(m) {
    require(k >= 0 && m >= 0, ErrorKind::DegreeUnderflow, "negative degree");
    require(k <= patch_.dim && m <= patch_.dim, ErrorKind::DegreeOverflow, "degree exceeds patch dimension");
    ncomp_ = fiber_size(patch_.dim, k, m);
    data_.assign(patch_.nodes() * ncomp_, 0.0);
  }

  const Patch& patch() const { return patch_; }
  const Chart& chart() const { return patch_.chart; }
  const Grid& grid() const { return patch_.grid; }
  int dim() const { return patch_.dim; }
  int k() const { return k_; }
  int m() const { return m_; }
  int face() const { return patch_.face; }
  std::size_t ncomp() const { return ncomp_; }
  std::size_t nodes() const { return patch_.nodes(); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double* at(std::size_t node) { return data_.data() + node * ncomp_; }
  const double* at(std::size_t node) const { return data_.data() + node * ncomp_; }

  DoubleFormValue value(std::size_t node) const {
    return DoubleFormValue(dim(), k_, m_, std::vector<double>(at(node), at(node) + ncomp_));
  }
  void set(std::size_t node, const DoubleFormValue& v) {
    require(v.dim() == dim() && v.k() == k_ && v.m() == m_, ErrorKind::DegreeMismatch, "value shape");
    std::copy(v.data(), v.data() + ncomp_, at(node));
  }

  void check_compatible(const FormField& o) const {
    require(patch_.same_as(o.patch_), ErrorKind::DimensionMismatch, "fields live on different patches");
    require(k_ == o.k_ && m_ == o.m_, ErrorKind::DegreeMismatch, "fields have different degrees");
  }

  FormField& operator+=(const FormField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  FormField& operator-=(const FormField& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  FormField& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }
  friend FormField operator+(FormField a, const FormField& b) { return a += b; }
  friend FormField operator-(FormField a, const FormField& b) { return a -= b; }
  friend FormField operator*(double s, FormField a) { return a *= s; }

  bool finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

 private:
  Patch patch_;
  int k_ = 0, m_ = 0;
  std::size_t ncomp_ = 1;
  std::vector<double> data_;
};

// A DoubleFormField lives on the full grid, a BoundaryField on a face patch.
using DoubleFormField = FormField;
using BoundaryField = FormField;

inline FormField zero_field(const Chart& c, const Grid& g, int k, int m) { return FormField(Patch::full(c, g), k, m); }

// fill from f(x_ambient, components) evaluated at every node
template <class F>
FormField sample(const Patch& p, int k, int m, F&& f) {
  FormField out(p, k, m);
  parallel_for(p.nodes(), [&](std::size_t n) {
    double x[kMaxDim];
    p.ambient_point(n, x);
    f(x, out.at(n));
  });
  return out;
}

template <class F>
FormField sample(const Chart& c, const Grid& g, int k, int m, F&& f) {
  return sample(Patch::full(c, g), k, m, std::forward<F>(f));
}

inline FormField metric_field(const Patch& p) {
  return sample(p, 1, 1, [&](const double* x, double* v) {
    double l = p.chart.lambda(x);
    for (int i = 0; i < p.dim; ++i) v[i * p.dim + i] = l * l;
  });
}

inline FormField riemann_field(const Patch& p) {
  FormField out(p, 2, 2);
  parallel_for(p.nodes(), [&](std::size_t n) {
    auto R = riemann_from_metric(p.metric(n), p.chart.kappa);
    std::copy(R.data(), R.data() + R.size(), out.at(n));
  });
  return out;
}

}  // namespace dform
