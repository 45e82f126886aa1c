#pragma once

// Strictly increasing multi-indices over {0..d-1}, stored as bitmasks and
// enumerated in lexicographic order. Tables are built once for every d up to
// kMaxDim and shared read-only afterwards.

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

#include "error.hpp"

namespace dform {

inline constexpr int kMaxDim = 6;

using Mask = std::uint32_t;

inline int popcount(Mask m) { return std::popcount(m); }

inline long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// (-1)^{#{(a,b) : a in A, b in B, a > b}}: the sign that sorts the
// concatenation (A, B) of two disjoint increasing sequences.
inline int concat_sign(Mask a, Mask b) {
  int inv = 0;
  while (a) {
    int i = std::countr_zero(a);
    a &= a - 1;
    inv += std::popcount(b & ((Mask{1} << i) - 1));
  }
  return (inv & 1) ? -1 : 1;
}

namespace detail {

struct Split {
  int left;   // index of the first factor's subset
  int right;  // index of the complementary subset
  int sign;
};

struct Replace {
  int target;  // -1 when the replacement repeats an index
  int sign;
};

struct DimTables {
  int d = 0;
  std::array<std::vector<Mask>, kMaxDim + 1> subsets;
  std::vector<int> index;  // mask -> position within its size class
  // split[k][n][P] lists the ways to write P (size k+n) as I (size k) u K (size n)
  std::array<std::array<std::vector<std::vector<Split>>, kMaxDim + 1>, kMaxDim + 1> split;
  // replace[k][I * k * d + s * d + c]: slot s of I replaced by index c
  std::array<std::vector<Replace>, kMaxDim + 1> replace;
};

inline void lex_subsets(int d, int k, int start, Mask cur, std::vector<Mask>& out) {
  if (k == 0) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i <= d - k; ++i) lex_subsets(d, k - 1, i + 1, cur | (Mask{1} << i), out);
}

inline DimTables build_tables(int d) {
  DimTables t;
  t.d = d;
  t.index.assign(std::size_t{1} << d, -1);
  for (int k = 0; k <= d; ++k) {
    lex_subsets(d, k, 0, 0, t.subsets[k]);
    for (std::size_t i = 0; i < t.subsets[k].size(); ++i) t.index[t.subsets[k][i]] = static_cast<int>(i);
  }
  for (int k = 0; k <= d; ++k) {
    for (int n = 0; k + n <= d; ++n) {
      auto& tab = t.split[k][n];
      tab.resize(t.subsets[k + n].size());
      for (std::size_t p = 0; p < t.subsets[k + n].size(); ++p) {
        Mask P = t.subsets[k + n][p];
        for (Mask I : t.subsets[k]) {
          if ((I & P) != I) continue;
          Mask K = P & ~I;
          tab[p].push_back({t.index[I], t.index[K], concat_sign(I, K)});
        }
      }
    }
  }
  for (int k = 1; k <= d; ++k) {
    auto& rep = t.replace[k];
    rep.assign(t.subsets[k].size() * k * d, {-1, 0});
    for (std::size_t ii = 0; ii < t.subsets[k].size(); ++ii) {
      Mask I = t.subsets[k][ii];
      int s = 0;
      for (int b = 0; b < d; ++b) {
        if (!(I & (Mask{1} << b))) continue;
        Mask rest = I & ~(Mask{1} << b);
        for (int c = 0; c < d; ++c) {
          Replace r{-1, 0};
          if (!(rest & (Mask{1} << c))) {
            int lo = std::min(b, c), hi = std::max(b, c);
            Mask between = rest & ((Mask{1} << hi) - 1) & ~((Mask{1} << (lo + 1)) - 1);
            r.target = t.index[rest | (Mask{1} << c)];
            r.sign = (std::popcount(between) & 1) ? -1 : 1;
          }
          rep[(ii * k + s) * d + c] = r;
        }
        ++s;
      }
    }
  }
  return t;
}

inline const std::array<DimTables, kMaxDim + 1>& all_tables() {
  static const std::array<DimTables, kMaxDim + 1> tabs = [] {
    std::array<DimTables, kMaxDim + 1> a;
    for (int d = 1; d <= kMaxDim; ++d) a[d] = build_tables(d);
    return a;
  }();
  return tabs;
}

}  // namespace detail

inline const detail::DimTables& tables(int d) {
  require(d >= 1 && d <= kMaxDim, ErrorKind::DimensionMismatch, "dimension outside [1, 6]");
  return detail::all_tables()[d];
}

inline const std::vector<Mask>& subsets(int d, int k) { return tables(d).subsets[k]; }

inline int subset_index(int d, Mask m) { return tables(d).index[m]; }

// elements of a mask in increasing order
inline std::vector<int> elements(Mask m) {
  std::vector<int> e;
  while (m) {
    e.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return e;
}

inline Mask mask_of(const std::vector<int>& idx) {
  Mask m = 0;
  for (int i : idx) m |= Mask{1} << i;
  return m;
}

}  // namespace dform
