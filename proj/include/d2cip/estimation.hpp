#pragma once

#include <d2cip/core.hpp>
#include <d2cip/motion.hpp>
#include <d2cip/refinement.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

/**
 * \file
 * \brief Posterior over final peaks, mode clustering, target selection and resampling.
 */

namespace d2cip {

struct Posterior {
  std::vector<PosteriorMode> modes;
  int frameIndex{0};
};

struct EstimatorConfig {
  /// Resample when ESS < gamma * (number of modes).
  double gamma{0.5};
  int kMax{4};
  /// Spread (in mean target sizes) below which the modes are treated as one cluster.
  double clusterScale{1.0};
  int kmeansIterations{50};

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("EstimatorConfig: gamma must be in [0, 1]");
    if (kMax < 1) throw std::invalid_argument("EstimatorConfig: kMax must be at least 1");
    if (!(clusterScale >= 0.0)) throw std::invalid_argument("EstimatorConfig: clusterScale must be non-negative");
  }
};

inline constexpr double kNoSilhouette = std::numeric_limits<double>::quiet_NaN();

struct ClusterAssignment {
  int k{1};
  std::vector<int> labels;
  std::vector<Vec2> centroids;
  /// NaN when k = 1.
  double silhouetteScore{kNoSilhouette};
};

/**
 * Weight of every final peak = likelihood of the map generated at the peak times the largest prior weight among the
 * mixture components that contributed particles to it. Weights are normalized over the frame.
 */
inline Posterior buildPosterior(std::span<const ConvergedPeak> peaks, const TransitionMixture& prior,
                                int frame_index = 0) {
  if (peaks.empty()) throw std::invalid_argument("buildPosterior: no peaks");
  Posterior post;
  post.frameIndex = frame_index;
  for (const auto& peak : peaks) {
    double carry = 0.0;
    for (const auto& [j, count] : peak.sourceComponents) {
      if (j >= prior.components.size()) throw std::invalid_argument("buildPosterior: unknown source component");
      carry = std::max(carry, prior.components[j].priorWeight);
    }
    PosteriorMode mode;
    mode.peak = peak.peak;
    mode.likelihood = peak.likelihood;
    mode.weight = peak.likelihood * carry;
    mode.convergedCount = peak.convergedCount();
    mode.sourceComponents = peak.sourceComponents;
    mode.modelId = peak.modelId;
    post.modes.push_back(std::move(mode));
  }
  normalizeWeights(post.modes);
  return post;
}

/// Mean over points of (b - a) / max(a, b), where a is the distance to the own centroid and b to the nearest other
/// centroid. Members of singleton clusters score 0.
inline double simplifiedSilhouette(std::span<const Vec2> points, std::span<const int> labels,
                                   std::span<const Vec2> centroids) {
  if (centroids.size() < 2) return kNoSilhouette;
  std::vector<int> sizes(centroids.size(), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] <= 1) continue;
    const double a = distance(points[i], centroids[own]);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (c != own) b = std::min(b, distance(points[i], centroids[c]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(points.size());
}

namespace detail {

struct KMeansResult {
  std::vector<int> labels;
  std::vector<Vec2> centroids;
  double inertia{0.0};
};

/// Lloyd iterations from the given seeds. Empty clusters keep their previous centroid.
inline KMeansResult lloyd(std::span<const Vec2> points, std::vector<Vec2> centroids, int max_iterations) {
  KMeansResult r;
  r.labels.assign(points.size(), -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = distance(points[i], centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (r.labels[i] != best) {
        r.labels[i] = best;
        changed = true;
      }
    }
    std::vector<Vec2> sums(centroids.size());
    std::vector<int> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sums[static_cast<std::size_t>(r.labels[i])] = sums[static_cast<std::size_t>(r.labels[i])] + points[i];
      ++counts[static_cast<std::size_t>(r.labels[i])];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] > 0) centroids[c] = (1.0 / counts[c]) * sums[c];
    }
    if (!changed) break;
  }
  r.centroids = std::move(centroids);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = distance(points[i], r.centroids[static_cast<std::size_t>(r.labels[i])]);
    r.inertia += d * d;
  }
  return r;
}

/// Farthest-point seeding starting from `first`.
inline std::vector<Vec2> farthestPointSeeds(std::span<const Vec2> points, std::size_t first, int k) {
  std::vector<Vec2> seeds{points[first]};
  while (static_cast<int>(seeds.size()) < k) {
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& s : seeds) nearest = std::min(nearest, distance(points[i], s));
      if (nearest > far_d) {
        far_d = nearest;
        far = i;
      }
    }
    seeds.push_back(points[far]);
  }
  return seeds;
}

inline bool everyClusterUsed(std::span<const int> labels, int k) {
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  for (int l : labels) used[static_cast<std::size_t>(l)] = true;
  return std::all_of(used.begin(), used.end(), [](bool u) { return u; });
}

}  // namespace detail

/**
 * Partitions the posterior's peak positions. When every pairwise distance is below `clusterScale` times the mean
 * target size the answer is one cluster. Otherwise K-means runs for every k in [2, min(kMax, n)], restarted once
 * per point (farthest-point seeding from that point), and the partition with the highest simplified silhouette wins;
 * ties favour smaller k, then lower inertia.
 */
inline ClusterAssignment clusterModes(const Posterior& posterior, const EstimatorConfig& cfg) {
  cfg.validate();
  const auto n = posterior.modes.size();
  if (n == 0) throw std::invalid_argument("clusterModes: no modes");
  std::vector<Vec2> points;
  double mean_size = 0.0;
  for (const auto& m : posterior.modes) {
    points.push_back(m.peak.position);
    mean_size += m.peak.meanSize();
  }
  mean_size /= static_cast<double>(n);

  ClusterAssignment single;
  single.labels.assign(n, 0);
  Vec2 centroid{};
  for (const auto& p : points) centroid = centroid + p;
  single.centroids = {(1.0 / static_cast<double>(n)) * centroid};

  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) spread = std::max(spread, distance(points[i], points[j]));
  }
  const int k_limit = std::min<int>(cfg.kMax, static_cast<int>(n));
  if (k_limit < 2 || spread < cfg.clusterScale * mean_size) return single;

  std::optional<ClusterAssignment> best;
  double best_inertia = 0.0;
  for (int k = 2; k <= k_limit; ++k) {
    for (std::size_t first = 0; first < n; ++first) {
      auto km = detail::lloyd(points, detail::farthestPointSeeds(points, first, k), cfg.kmeansIterations);
      if (!detail::everyClusterUsed(km.labels, k)) continue;
      const double score = simplifiedSilhouette(points, km.labels, km.centroids);
      const bool wins = !best || score > best->silhouetteScore ||
                        (score == best->silhouetteScore && k == best->k && km.inertia < best_inertia);
      if (wins) {
        best = ClusterAssignment{k, km.labels, km.centroids, score};
        best_inertia = km.inertia;
      }
    }
  }
  return best ? *best : single;
}

/// Index of the mode selected as the target: the highest convergence count inside each cluster, then the highest
/// weight across clusters.
inline std::size_t selectMode(const Posterior& posterior, const ClusterAssignment& clusters) {
  const auto& modes = posterior.modes;
  if (modes.empty()) throw std::invalid_argument("selectMode: empty posterior");
  if (clusters.labels.size() != modes.size()) throw std::invalid_argument("selectMode: labels do not match modes");
  std::vector<std::optional<std::size_t>> candidate(static_cast<std::size_t>(clusters.k));
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const int label = clusters.labels[i];
    if (label < 0 || label >= clusters.k) throw std::invalid_argument("selectMode: label out of range");
    auto& slot = candidate[static_cast<std::size_t>(label)];
    if (!slot) {
      slot = i;
      continue;
    }
    const auto& cur = modes[*slot];
    const auto& m = modes[i];
    if (m.convergedCount > cur.convergedCount || (m.convergedCount == cur.convergedCount && m.weight > cur.weight)) {
      slot = i;
    }
  }
  std::optional<std::size_t> winner;
  for (const auto& c : candidate) {
    if (!c) continue;
    if (!winner || modes[*c].weight > modes[*winner].weight ||
        (modes[*c].weight == modes[*winner].weight && *c < *winner)) {
      winner = c;
    }
  }
  return *winner;
}

inline TargetState estimateState(const Posterior& posterior, const ClusterAssignment& clusters) {
  return posterior.modes[selectMode(posterior, clusters)].peak;
}

/// 1 / sum(w^2) over normalized weights.
inline double effectiveSampleSize(std::span<const double> weights) {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

inline double effectiveSampleSize(const Posterior& posterior) {
  std::vector<double> w;
  for (const auto& m : posterior.modes) w.push_back(m.weight);
  return effectiveSampleSize(w);
}

inline bool needsResampling(const Posterior& posterior, double gamma) {
  return effectiveSampleSize(posterior) < gamma * static_cast<double>(posterior.modes.size());
}

/// Systematic resampling of the modes by weight. Each selected mode appears once, with equal weights.
inline Posterior resampleModes(const Posterior& posterior, RandomSource& rng) {
  const auto n = posterior.modes.size();
  Posterior out;
  out.frameIndex = posterior.frameIndex;
  if (n == 0) return out;
  const double step = 1.0 / static_cast<double>(n);
  const double start = rng.uniform() * step;
  double cumulative = posterior.modes[0].weight;
  std::size_t i = 0;
  std::vector<bool> picked(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = start + static_cast<double>(s) * step;
    while (u > cumulative && i + 1 < n) cumulative += posterior.modes[++i].weight;
    picked[i] = true;
  }
  for (std::size_t m = 0; m < n; ++m) {
    if (picked[m]) out.modes.push_back(posterior.modes[m]);
  }
  for (auto& m : out.modes) m.weight = 1.0 / static_cast<double>(out.modes.size());
  return out;
}

/// Resamples only when the effective sample size drops below gamma times the number of modes.
inline Posterior maybeResample(const Posterior& posterior, const EstimatorConfig& cfg, RandomSource& rng) {
  if (!needsResampling(posterior, cfg.gamma)) return posterior;
  return resampleModes(posterior, rng);
}

/**
 * Turns the surviving modes into next-frame prior modes, keeping the `max_modes` highest weights. A mode's velocity
 * is its displacement from the previous mode that contributed most of its particles; size velocity is zero.
 */
inline std::vector<PriorMode> handoffModes(const Posterior& posterior, std::span<const PriorMode> previous,
                                           std::size_t max_modes = 5) {
  if (posterior.modes.empty()) throw std::invalid_argument("handoffModes: empty posterior");
  std::vector<PriorMode> next;
  for (const auto& mode : posterior.modes) {
    PriorMode pm;
    pm.mean.state = mode.peak;
    pm.weight = mode.weight;
    pm.modelId = mode.modelId;
    std::optional<ComponentIndex> parent;
    int parent_count = 0;
    for (const auto& [j, count] : mode.sourceComponents) {
      if (count > parent_count) {
        parent = j;
        parent_count = count;
      }
    }
    if (parent && *parent < previous.size()) {
      const Vec2 moved = mode.peak.position - previous[*parent].mean.state.position;
      pm.mean.velocity = {moved.x, moved.y, 0.0, 0.0};
    }
    next.push_back(pm);
  }
  return capModes(std::move(next), max_modes);
}

}  // namespace d2cip
