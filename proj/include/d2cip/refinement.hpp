#pragma once

#include <d2cip/core.hpp>
#include <d2cip/observation.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

/**
 * \file
 * \brief Iterative particle refinement: move each particle to the peak of its own response map until it stops
 * moving, then group particles that share a final peak.
 */

namespace d2cip {

struct RefinementConfig {
  double epsilon{1.0};
  double lMin{0.0};
  int maxIterations{10};
  int gridRadius{15};

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("RefinementConfig: epsilon must be positive");
    if (!(lMin >= 0.0)) throw std::invalid_argument("RefinementConfig: lMin must be non-negative");
    if (maxIterations < 1) throw std::invalid_argument("RefinementConfig: maxIterations must be at least 1");
    if (gridRadius < 1) throw std::invalid_argument("RefinementConfig: gridRadius must be at least 1");
  }
};

/// Per-particle record of the refinement loop.
struct RefinementTrace {
  /// Map centers visited, starting with the snapped initial position.
  std::vector<Vec2> positions;
  /// Likelihood of the map generated at each visited position.
  std::vector<double> likelihoods;
  /// Steps from the start to the final position (a prefix of the consecutive differences of `positions`).
  std::vector<Vec2> displacements;
  bool discarded{false};
  bool hitIterationCap{false};
  bool atBorder{false};
};

struct RefinedParticle {
  Particle particle;
  RefinementTrace trace;
  /// Map generated at the final position; its peak lies within epsilon of the final position.
  std::optional<ResponseMap> finalMap;
};

/**
 * Refines one particle. Each pass builds the response map at the current position and discards the particle when
 * the map likelihood falls below `lMin`; otherwise the particle jumps to the map peak unless that jump is shorter
 * than epsilon, in which case it stops where it is and keeps the current map. After `maxIterations` maps the
 * particle stops at the highest-likelihood position it visited. Size stays at the sampled size throughout.
 */
inline RefinedParticle refineParticle(const Particle& particle, ModelId model, const ObservationModel& observation,
                                      const Frame& frame, const RefinementConfig& cfg) {
  if (!particle.alive) throw std::invalid_argument("refineParticle: particle is not alive");
  cfg.validate();

  RefinedParticle out{particle, {}, std::nullopt};
  auto& trace = out.trace;
  TargetState current = particle.state;
  current.position = mapCenter(frame, current.position);

  std::optional<ResponseMap> best_map;
  std::size_t best_index = 0;
  bool converged = false;

  for (int k = 0; k < cfg.maxIterations; ++k) {
    auto map = observation.respond(model, frame, current, cfg.gridRadius);
    const double likelihood = likelihoodOf(map);
    trace.positions.push_back(current.position);
    trace.likelihoods.push_back(likelihood);
    out.particle.iterationCount = k + 1;
    if (likelihood < cfg.lMin) {
      trace.discarded = true;
      out.particle.alive = false;
      out.particle.likelihood = 0.0;
      out.particle.state = current;
      return out;
    }
    if (!best_map || likelihood > trace.likelihoods[best_index]) {
      best_map = map;
      best_index = trace.positions.size() - 1;
    }
    const Vec2 next = peakOf(map).position;
    if (distance(next, current.position) < cfg.epsilon) {
      converged = true;
      best_map = std::move(map);
      best_index = trace.positions.size() - 1;
      break;
    }
    current.position = next;
  }

  trace.hitIterationCap = !converged;
  const Vec2 final_position = trace.positions[best_index];
  for (std::size_t i = 0; i < best_index; ++i) {
    trace.displacements.push_back(trace.positions[i + 1] - trace.positions[i]);
  }
  out.particle.state.position = final_position;
  out.particle.likelihood = trace.likelihoods[best_index];
  out.finalMap = std::move(best_map);
  trace.atBorder = final_position.x <= 0.0 || final_position.y <= 0.0 || final_position.x >= frame.width - 1 ||
                   final_position.y >= frame.height - 1;
  return out;
}

/// A final peak shared by one or more refined particles.
struct ConvergedPeak {
  TargetState peak;
  /// Indices into the particle list passed to refineAll.
  std::vector<std::size_t> members;
  /// Likelihood of the map generated at the peak by `modelId`.
  double likelihood{0.0};
  ModelId modelId{0};
  /// Source component -> member count.
  std::map<ComponentIndex, int> sourceComponents;
  std::vector<int> iterations;
  bool atBorder{false};

  [[nodiscard]] int convergedCount() const { return static_cast<int>(members.size()); }
};

/// Thrown when every particle of a frame fails the likelihood gate.
class AllParticlesDiscarded : public std::runtime_error {
 public:
  AllParticlesDiscarded() : std::runtime_error("all particles discarded: tracking lost") {}
};

struct RefinementResult {
  std::vector<ConvergedPeak> peaks;
  std::vector<RefinedParticle> particles;
  std::size_t discarded{0};
  double meanIterations{0.0};
};

namespace detail {

/// Union-find over final positions: points closer than `radius` (transitively) share a group.
inline std::vector<std::size_t> groupByDistance(std::span<const Vec2> points, double radius) {
  std::vector<std::size_t> parent(points.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  const auto root = [&parent](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (distance(points[i], points[j]) < radius) {
        const auto a = root(i);
        const auto b = root(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::size_t> group(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) group[i] = root(i);
  return group;
}

inline bool positionLess(Vec2 a, Vec2 b) { return a.y < b.y || (a.y == b.y && a.x < b.x); }

}  // namespace detail

/**
 * Refines every live particle with the model of its source component and merges final positions closer than
 * epsilon into converged peaks. The representative of a group is its member with the highest final likelihood
 * (ties: higher component priority, then lowest position, then sampled size closest to the group's mean size). Peaks are returned in
 * row-major order of their position, so the result does not depend on the order of the input particles.
 */
inline RefinementResult refineAll(std::span<const Particle> particles, std::span<const ModelId> component_models,
                                  const ObservationModel& observation, const Frame& frame,
                                  const RefinementConfig& cfg, std::span<const double> component_priority = {}) {
  RefinementResult result;
  result.particles.reserve(particles.size());
  std::vector<std::size_t> survivors;
  double iteration_sum = 0.0;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const auto& p = particles[i];
    if (!p.alive) {
      result.particles.push_back({p, {}, std::nullopt});
      ++result.discarded;
      continue;
    }
    if (p.sourceComponent >= component_models.size()) {
      throw std::invalid_argument("refineAll: particle source component has no model");
    }
    auto refined = refineParticle(p, component_models[p.sourceComponent], observation, frame, cfg);
    iteration_sum += refined.particle.iterationCount;
    if (refined.particle.alive) {
      survivors.push_back(i);
    } else {
      ++result.discarded;
    }
    result.particles.push_back(std::move(refined));
  }
  if (survivors.empty()) throw AllParticlesDiscarded{};

  std::size_t refined_count = 0;
  for (const auto& p : particles) refined_count += p.alive ? 1 : 0;
  result.meanIterations = iteration_sum / static_cast<double>(refined_count);

  std::vector<Vec2> finals;
  finals.reserve(survivors.size());
  for (std::size_t i : survivors) finals.push_back(result.particles[i].particle.state.position);
  const auto group = detail::groupByDistance(finals, cfg.epsilon);

  const auto priority = [&](ComponentIndex j) {
    return j < component_priority.size() ? component_priority[j] : 0.0;
  };
  Vec2 mean_size{};
  const auto better = [&](std::size_t a, std::size_t b) {
    const auto& pa = result.particles[a].particle;
    const auto& pb = result.particles[b].particle;
    if (pa.likelihood != pb.likelihood) return pa.likelihood > pb.likelihood;
    if (priority(pa.sourceComponent) != priority(pb.sourceComponent)) {
      return priority(pa.sourceComponent) > priority(pb.sourceComponent);
    }
    if (pa.state.position != pb.state.position) return detail::positionLess(pa.state.position, pb.state.position);
    const double da = distance(pa.state.size, mean_size);
    const double db = distance(pb.state.size, mean_size);
    if (da != db) return da < db;
    if (pa.state.size.x != pb.state.size.x) return pa.state.size.x < pb.state.size.x;
    return pa.state.size.y < pb.state.size.y;
  };

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t s = 0; s < survivors.size(); ++s) groups[group[s]].push_back(survivors[s]);

  for (const auto& [_, members] : groups) {
    ConvergedPeak peak;
    mean_size = {};
    for (std::size_t m : members) mean_size = mean_size + result.particles[m].particle.state.size;
    mean_size = (1.0 / static_cast<double>(members.size())) * mean_size;
    std::size_t rep = members.front();
    for (std::size_t m : members) {
      if (better(m, rep)) rep = m;
    }
    const auto& rp = result.particles[rep].particle;
    peak.peak = rp.state;
    peak.likelihood = rp.likelihood;
    peak.modelId = component_models[rp.sourceComponent];
    peak.members = members;
    for (std::size_t m : members) {
      const auto& mp = result.particles[m];
      peak.sourceComponents[mp.particle.sourceComponent] += 1;
      peak.iterations.push_back(mp.particle.iterationCount);
      peak.atBorder = peak.atBorder || mp.trace.atBorder;
    }
    result.peaks.push_back(std::move(peak));
  }
  std::stable_sort(result.peaks.begin(), result.peaks.end(), [](const ConvergedPeak& a, const ConvergedPeak& b) {
    return detail::positionLess(a.peak.position, b.peak.position);
  });
  return result;
}

}  // namespace d2cip
