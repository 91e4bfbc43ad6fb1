// Copyright 2026 The attnlab Authors
// Independent brute-force oracles (test-only). These stay deliberately
// naive and never share code with the implementations they check.
//
// Licensed under the Apache License, Version 2.0

#ifndef ATTNLAB_TESTS_ORACLES_HPP
#define ATTNLAB_TESTS_ORACLES_HPP

#include <cmath>
#include <vector>

#include "attnlab/types.hpp"

namespace testsupport {

using attnlab::Index;
using attnlab::MatRM;
using attnlab::Scalar;

// CTC by total path enumeration: walk every length-T label path, collapse
// repeats then drop blanks, and sum the probabilities of paths that spell
// `target`. posteriors(t, k) are per-frame probabilities; blank is id 0.
// Returns -ln P, or +inf when no path matches.
inline Scalar ctc_brute_force(const MatRM& posteriors,
                              const std::vector<int>& target) {
  const Index t_frames = posteriors.rows();
  const Index v = posteriors.cols();
  Scalar total = 0.0;
  std::vector<int> path(static_cast<std::size_t>(t_frames), 0);
  while (true) {
    // Collapse: merge equal neighbours, then remove blanks.
    std::vector<int> collapsed;
    for (Index t = 0; t < t_frames; ++t) {
      const int label = path[static_cast<std::size_t>(t)];
      if (t > 0 && label == path[static_cast<std::size_t>(t - 1)]) continue;
      if (label != 0) collapsed.push_back(label);
    }
    if (collapsed == target) {
      Scalar p = 1.0;
      for (Index t = 0; t < t_frames; ++t) {
        p *= posteriors(t, path[static_cast<std::size_t>(t)]);
      }
      total += p;
    }
    // Next path in lexicographic order.
    Index pos = t_frames - 1;
    while (pos >= 0) {
      if (++path[static_cast<std::size_t>(pos)] < v) break;
      path[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return total > 0.0 ? -std::log(total)
                     : std::numeric_limits<Scalar>::infinity();
}

// Diagonality by direct summation, one plain double loop per row.
inline Scalar diagonality_direct(const MatRM& m) {
  const Index n = m.rows();
  Scalar sum_c = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (n == 1) {
      sum_c += 1.0;
      continue;
    }
    Scalar expected = 0.0;
    for (Index j = 0; j < n; ++j) {
      expected += m(i, j) * static_cast<Scalar>(std::abs(i - j));
    }
    Scalar farthest = 0.0;
    for (Index j = 0; j < n; ++j) {
      farthest = std::max(farthest, static_cast<Scalar>(std::abs(i - j)));
    }
    sum_c += 1.0 - expected / farthest;
  }
  return sum_c / static_cast<Scalar>(n);
}

// Valid sliding-window count for kernel 3 / stride 2, by enumeration.
inline Index window_count(Index n) {
  Index count = 0;
  for (Index start = 0; start + 3 <= n; start += 2) ++count;
  return count;
}

// Edit distance by the full DP table (no row-rolling), for cross-checking.
inline Index edit_distance_table(const std::vector<int>& a,
                                 const std::vector<int>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<Index>> d(n + 1, std::vector<Index>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<Index>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<Index>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const Index sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[n][m];
}

}  // namespace testsupport

#endif  // ATTNLAB_TESTS_ORACLES_HPP
