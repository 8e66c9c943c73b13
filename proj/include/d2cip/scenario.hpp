#pragma once

#include <d2cip/core.hpp>
#include <d2cip/observation.hpp>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/**
 * \file
 * \brief Deterministic synthetic tracking scenarios: linear motion, fast motion, occlusion and distractor.
 */

namespace d2cip {

enum class ScenarioKind { kLinear, kFastMotion, kOcclusion, kDistractor };

inline std::string_view toString(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kLinear: return "linear";
    case ScenarioKind::kFastMotion: return "fast-motion";
    case ScenarioKind::kOcclusion: return "occlusion";
    case ScenarioKind::kDistractor: return "distractor";
  }
  return "linear";
}

inline ScenarioKind parseScenarioKind(std::string_view name) {
  if (name == "linear") return ScenarioKind::kLinear;
  if (name == "fast-motion") return ScenarioKind::kFastMotion;
  if (name == "occlusion") return ScenarioKind::kOcclusion;
  if (name == "distractor") return ScenarioKind::kDistractor;
  throw std::invalid_argument("unknown scenario kind '" + std::string{name} + "'");
}

struct ScenarioParams {
  int width{320};
  int height{240};
  int frames{60};
  Vec2 targetSize{32.0, 32.0};
  /// Explicit start position and velocity; drawn from the seed when absent.
  std::optional<Vec2> start;
  std::optional<Vec2> velocity;
  double speed{2.0};
  double amplitude{1.0};
  double peakWidth{6.0};
  double noiseStd{0.02};
  /// Extra speed (px/frame, along the motion direction) during the fast-motion window.
  double spike{20.0};
  int spikeStart{20};
  int spikeLength{5};
  int occlusionStart{20};
  int occlusionLength{10};
  double occlusionAttenuation{0.9};
  /// Distractor amplitude as a fraction of the target amplitude.
  double distractorRatio{0.8};
  /// Closest and farthest distance between distractor and target.
  double distractorNear{20.0};
  double distractorFar{60.0};
  /// Frames per distractor orbit.
  double distractorPeriod{24.0};

  void validate() const {
    if (width < 8 || height < 8) throw std::invalid_argument("scenario: frame must be at least 8x8");
    if (frames < 1) throw std::invalid_argument("scenario: at least one frame");
    if (!(targetSize.x >= 1.0 && targetSize.y >= 1.0)) throw std::invalid_argument("scenario: target size < 1");
    if (!(amplitude >= 0.0) || !(peakWidth > 0.0) || !(noiseStd >= 0.0)) {
      throw std::invalid_argument("scenario: amplitude, peak width and noise must be non-negative");
    }
    if (!(occlusionAttenuation >= 0.0 && occlusionAttenuation <= 1.0)) {
      throw std::invalid_argument("scenario: attenuation must be in [0, 1]");
    }
    if (!(distractorRatio >= 0.0)) throw std::invalid_argument("scenario: distractor ratio must be non-negative");
    if (spikeLength < 0 || occlusionLength < 0) throw std::invalid_argument("scenario: negative window length");
  }
};

namespace detail {

/// Reflects `v` into [lo, hi].
inline double fold(double v, double lo, double hi) {
  if (hi <= lo) return lo;
  const double span = hi - lo;
  double t = std::fmod(v - lo, 2.0 * span);
  if (t < 0.0) t += 2.0 * span;
  return lo + (t <= span ? t : 2.0 * span - t);
}

}  // namespace detail

/**
 * Builds a scenario. The truth moves at constant velocity (reflected at the frame margins); the kind adds one
 * challenge on top:
 *  - fast-motion: `spike` extra px/frame along the motion direction for `spikeLength` frames;
 *  - occlusion: the target response is attenuated by `occlusionAttenuation` for `occlusionLength` frames;
 *  - distractor: a clutter peak of `distractorRatio` times the target amplitude orbits the target between
 *    `distractorNear` and `distractorFar` px, and the target is briefly occluded while the distractor is closest.
 */
inline SyntheticScenario generateScenario(ScenarioKind kind, const ScenarioParams& params, std::uint64_t seed) {
  params.validate();
  RandomSource rng{seed};
  SyntheticScenario sc;
  sc.kind = std::string{toString(kind)};
  sc.width = params.width;
  sc.height = params.height;
  sc.noiseStd = params.noiseStd;
  sc.seed = seed;
  sc.targetAmplitude = params.amplitude;
  sc.targetWidth = params.peakWidth;

  const double margin_x = 0.5 * params.targetSize.x;
  const double margin_y = 0.5 * params.targetSize.y;
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const Vec2 velocity = params.velocity.value_or(Vec2{params.speed * std::cos(angle), params.speed * std::sin(angle)});
  const double speed = velocity.norm();
  const Vec2 direction = speed > 0.0 ? (1.0 / speed) * velocity : Vec2{1.0, 0.0};
  // Default start centers the whole path in the frame (plus jitter) so reflections only occur on long paths.
  Vec2 travel = static_cast<double>(params.frames - 1) * velocity;
  if (kind == ScenarioKind::kFastMotion) {
    travel = travel + static_cast<double>(params.spikeLength) * params.spike * direction;
  }
  const Vec2 jitter{rng.uniform(-0.1, 0.1) * params.width, rng.uniform(-0.1, 0.1) * params.height};
  const Vec2 start = params.start.value_or(Vec2{0.5 * params.width, 0.5 * params.height} - 0.5 * travel + jitter);

  Vec2 unfolded = start;
  for (int t = 0; t < params.frames; ++t) {
    if (t > 0) {
      unfolded = unfolded + velocity;
      if (kind == ScenarioKind::kFastMotion && t >= params.spikeStart && t < params.spikeStart + params.spikeLength) {
        unfolded = unfolded + params.spike * direction;
      }
    }
    const Vec2 p{detail::fold(unfolded.x, margin_x, params.width - 1 - margin_x),
                 detail::fold(unfolded.y, margin_y, params.height - 1 - margin_y)};
    sc.truth.push_back({p, params.targetSize});
  }

  if (kind == ScenarioKind::kOcclusion) {
    sc.occlusions.push_back({params.occlusionStart, params.occlusionStart + params.occlusionLength,
                             params.occlusionAttenuation});
  }

  if (kind == ScenarioKind::kDistractor) {
    ClutterTrack d;
    d.amplitude = params.distractorRatio * params.amplitude;
    d.width = params.peakWidth;
    const double phase = rng.uniform(0.0, 6.283185307179586);
    const double mid = 0.5 * (params.distractorNear + params.distractorFar);
    const double half = 0.5 * (params.distractorFar - params.distractorNear);
    const double omega = 6.283185307179586 / params.distractorPeriod;
    int closest = 0;
    double closest_r = std::numeric_limits<double>::infinity();
    for (int t = 0; t < params.frames; ++t) {
      // Radius oscillates between near and far while the bearing turns once per period.
      const double r = mid + half * std::cos(omega * t);
      const double bearing = phase + omega * t;
      const Vec2 offset{r * std::cos(bearing), r * std::sin(bearing)};
      d.positions.push_back(sc.truth[static_cast<std::size_t>(t)].position + offset);
      if (t >= params.frames / 3 && r < closest_r - 1e-9) {
        closest_r = r;
        closest = t;
      }
    }
    sc.clutter.push_back(std::move(d));
    if (params.occlusionLength > 0) {
      const int len = std::max(1, params.occlusionLength / 2);
      sc.occlusions.push_back({closest - len / 2, closest - len / 2 + len, params.occlusionAttenuation});
    }
  }
  return sc;
}

}  // namespace d2cip
