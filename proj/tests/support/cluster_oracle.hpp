#pragma once

#include <d2cip/estimation.hpp>

#include <map>
#include <vector>

/**
 * \file
 * \brief Brute-force clustering reference: enumerates every set partition of up to ~10 points and scores each with
 * an independently written simplified silhouette.
 */

namespace d2cip::testing {

/// Simplified silhouette computed from scratch (centroids = means of the partition blocks; singleton blocks score 0).
inline double referenceSilhouette(const std::vector<Vec2>& points, const std::vector<int>& labels, int k) {
  std::vector<Vec2> sums(static_cast<std::size_t>(k));
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    sums[static_cast<std::size_t>(labels[i])] = sums[static_cast<std::size_t>(labels[i])] + points[i];
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  std::vector<Vec2> centroids(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    centroids[static_cast<std::size_t>(c)] = (1.0 / counts[static_cast<std::size_t>(c)]) * sums[static_cast<std::size_t>(c)];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int own = labels[i];
    if (counts[static_cast<std::size_t>(own)] == 1) continue;
    const double a = distance(points[i], centroids[static_cast<std::size_t>(own)]);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, distance(points[i], centroids[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(points.size());
}

struct OracleAnswer {
  int k{1};
  std::vector<int> labels;
  double score{0.0};
};

/// Calls `visit(labels, k)` for every partition of n items into exactly k non-empty blocks (restricted growth strings).
template <typename Visit>
void forEachPartition(std::size_t n, int k, Visit&& visit) {
  std::vector<int> labels(n, 0);
  const auto recurse = [&](auto&& self, std::size_t i, int used) -> void {
    if (i == n) {
      if (used == k) visit(labels, k);
      return;
    }
    if (used + static_cast<int>(n - i) < k) return;
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      labels[i] = c;
      self(self, i + 1, std::max(used, c + 1));
    }
  };
  recurse(recurse, 0, 0);
}

/// The best partition by simplified silhouette over every k in [2, min(kMax, n)], after the same spread gate as the
/// library (max pairwise distance below clusterScale x mean size means one cluster). Ties favour smaller k.
inline OracleAnswer exhaustiveClustering(const std::vector<Vec2>& points, const std::vector<double>& sizes,
                                         const EstimatorConfig& cfg) {
  const std::size_t n = points.size();
  OracleAnswer single{1, std::vector<int>(n, 0), 0.0};
  double mean_size = 0.0;
  for (double s : sizes) mean_size += s;
  mean_size /= static_cast<double>(n);
  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) spread = std::max(spread, distance(points[i], points[j]));
  }
  const int k_limit = std::min<int>(cfg.kMax, static_cast<int>(n));
  if (k_limit < 2 || spread < cfg.clusterScale * mean_size) return single;
  OracleAnswer best{0, {}, -std::numeric_limits<double>::infinity()};
  for (int k = 2; k <= k_limit; ++k) {
    forEachPartition(n, k, [&](const std::vector<int>& labels, int kk) {
      const double s = referenceSilhouette(points, labels, kk);
      if (s > best.score + 1e-12) best = {kk, labels, s};
    });
  }
  return best;
}

/// True when two labelings describe the same partition.
inline bool samePartition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab;
  std::map<int, int> ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto [it1, new1] = ab.emplace(a[i], b[i]);
    const auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

/// Modes at the given positions (all sizes `size`) with equal weights.
inline Posterior posteriorAt(const std::vector<Vec2>& points, double size) {
  Posterior post;
  for (Vec2 p : points) {
    PosteriorMode m;
    m.peak = {p, {size, size}};
    m.weight = 1.0 / static_cast<double>(points.size());
    m.convergedCount = 1;
    post.modes.push_back(m);
  }
  return post;
}

/// Seeded configuration: 1-3 well-separated blobs, at least two modes each, at most 8 modes in total.
inline std::vector<Vec2> blobConfiguration(RandomSource& rng, int& blobs_out) {
  const int blobs = 1 + static_cast<int>(rng.index(3));
  std::vector<Vec2> centers;
  while (static_cast<int>(centers.size()) < blobs) {
    const Vec2 c{rng.uniform(0, 400), rng.uniform(0, 400)};
    bool ok = true;
    for (Vec2 o : centers) ok = ok && distance(c, o) >= 100.0;
    if (ok) centers.push_back(c);
  }
  const int n = std::max(2 * blobs, 2 + static_cast<int>(rng.index(7)));
  std::vector<Vec2> points;
  for (int i = 0; i < n; ++i) {
    const int blob = i < 2 * blobs ? i % blobs : static_cast<int>(rng.index(static_cast<std::size_t>(blobs)));
    const Vec2 c = centers[static_cast<std::size_t>(blob)];
    points.push_back(c + Vec2{rng.uniform(-4, 4), rng.uniform(-4, 4)});
  }
  blobs_out = blobs;
  return points;
}

}  // namespace d2cip::testing
