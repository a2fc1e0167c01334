/*
 * Copyright 2026 The lidarprior Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIDARPRIOR_CLUSTERING_ORACLE_HPP
#define LIDARPRIOR_CLUSTERING_ORACLE_HPP

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "lidarprior/clustering.hpp"

namespace lidarprior::testing {

/**
 * Brute-force DBSCAN check. Core points must match exactly and must be
 * partitioned into the connected components of the core graph (ids may be
 * permuted). A border point may carry the id of any cluster holding one of
 * its core neighbours; noise must be exactly the points with no core
 * neighbour.
 */
inline bool matches_oracle(std::span<const Point3> pts, double eps, std::size_t min_pts,
                           std::span<const clustering::ClusterId> labels) {
  const std::size_t n = pts.size();
  if (labels.size() != n) return false;
  const double e2 = eps * eps;
  std::vector<std::vector<std::uint32_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if ((pts[i] - pts[j]).squaredNorm() <= e2) nb[i].push_back(static_cast<std::uint32_t>(j));
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = nb[i].size() >= min_pts;

  // Components of the core graph by flood fill.
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!core[s] || comp[s] >= 0) continue;
    std::vector<std::uint32_t> stack = {static_cast<std::uint32_t>(s)};
    comp[s] = ncomp;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (auto v : nb[u]) {
        if (core[v] && comp[v] < 0) {
          comp[v] = ncomp;
          stack.push_back(v);
        }
      }
    }
    ++ncomp;
  }

  std::map<int, clustering::ClusterId> to_label;
  std::map<clustering::ClusterId, int> to_comp;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    if (labels[i] == clustering::kNoise) return false;
    auto [a, fa] = to_label.try_emplace(comp[i], labels[i]);
    auto [b, fb] = to_comp.try_emplace(labels[i], comp[i]);
    if (a->second != labels[i] || b->second != comp[i]) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    bool any_core = false, ok = false;
    for (auto j : nb[i]) {
      if (!core[j]) continue;
      any_core = true;
      ok = ok || labels[i] == to_label.at(comp[j]);
    }
    if (!any_core ? labels[i] != clustering::kNoise : !ok) return false;
  }
  return true;
}

}  // namespace lidarprior::testing

#endif  // LIDARPRIOR_CLUSTERING_ORACLE_HPP
