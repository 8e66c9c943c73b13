#pragma once

#include <d2cip/core.hpp>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace d2cip {

/// Per-dimension standard deviations in `[p, s, v_p, v_s]` layout.
using Sigma = StateVector;

/// Position std = 0.05 * mean size, size std = 0.02 * size, velocity std = 0.
inline Sigma defaultSigma(const TargetState& reference) {
  const double pos = 0.05 * reference.meanSize();
  return {pos, pos, 0.02 * reference.size.x, 0.02 * reference.size.y, 0.0, 0.0, 0.0, 0.0};
}

struct MixtureComponent {
  StateMean mean;
  /// Equal mixture coefficient 1/J used for sampling.
  double coefficient{1.0};
  /// Normalized posterior weight of the originating mode, carried into the next weight update.
  double priorWeight{1.0};
  ModelId modelId{0};
};

struct TransitionMixture {
  std::vector<MixtureComponent> components;
  Sigma sigma{};
};

/// A mode handed from frame t-1 to frame t.
struct PriorMode {
  StateMean mean;
  double weight{1.0};
  ModelId modelId{0};
};

/// Constant-velocity step: position and size advance by their velocities.
inline StateMean predictMean(const StateMean& z) {
  StateMean next = z;
  next.state.position.x += z.velocity[0];
  next.state.position.y += z.velocity[1];
  next.state.size.x += z.velocity[2];
  next.state.size.y += z.velocity[3];
  return next;
}

/// Keeps the `max_modes` highest-weight modes (stable for ties) and renormalizes their weights.
inline std::vector<PriorMode> capModes(std::vector<PriorMode> modes, std::size_t max_modes) {
  std::stable_sort(modes.begin(), modes.end(),
                   [](const PriorMode& a, const PriorMode& b) { return a.weight > b.weight; });
  if (modes.size() > max_modes) modes.resize(max_modes);
  std::vector<double> w;
  for (const auto& m : modes) w.push_back(m.weight);
  normalizeWeights(w);
  for (std::size_t i = 0; i < modes.size(); ++i) modes[i].weight = w[i];
  return modes;
}

/**
 * Builds the transition mixture from the previous frame's modes: one equally weighted Gaussian component per mode,
 * centered on its constant-velocity prediction. At most `max_modes` modes (by weight) are kept.
 */
inline TransitionMixture buildMixture(const std::vector<PriorMode>& prior_modes, const Sigma& sigma,
                                      std::size_t max_modes = 5) {
  if (prior_modes.empty()) {
    throw std::invalid_argument("buildMixture: no prior modes");
  }
  if (max_modes == 0) {
    throw std::invalid_argument("buildMixture: max_modes must be positive");
  }
  for (double s : sigma) {
    if (!(s >= 0.0)) throw std::invalid_argument("buildMixture: sigma components must be non-negative");
  }
  const auto kept = capModes(prior_modes, max_modes);
  TransitionMixture mix;
  mix.sigma = sigma;
  const double coefficient = 1.0 / static_cast<double>(kept.size());
  for (const auto& mode : kept) {
    mix.components.push_back({predictMean(mode.mean), coefficient, mode.weight, mode.modelId});
  }
  return mix;
}

/// `ceil(total / components)`, never less than one.
inline std::size_t particlesPerComponent(std::size_t total, std::size_t components) {
  if (components == 0) throw std::invalid_argument("particlesPerComponent: no components");
  return std::max<std::size_t>(1, (total + components - 1) / components);
}

/**
 * Draws `per_component` particles from every component (stratified sampling). Velocity dimensions are drawn and
 * discarded so the random stream is independent of which dimensions are kept. Sizes are clamped to
 * `[1, max_size]` pixels.
 */
inline std::vector<Particle> sampleStratified(const TransitionMixture& mix, std::size_t per_component,
                                              RandomSource& rng,
                                              Vec2 max_size = {std::numeric_limits<double>::infinity(),
                                                               std::numeric_limits<double>::infinity()}) {
  if (per_component == 0) {
    throw std::invalid_argument("sampleStratified: per-component count must be positive");
  }
  std::vector<Particle> particles;
  particles.reserve(per_component * mix.components.size());
  for (std::size_t j = 0; j < mix.components.size(); ++j) {
    const auto mean = flatten(mix.components[j].mean);
    for (std::size_t i = 0; i < per_component; ++i) {
      StateVector draw{};
      for (std::size_t d = 0; d < draw.size(); ++d) {
        draw[d] = mean[d] + mix.sigma[d] * rng.normal();
      }
      Particle p;
      p.state.position = {draw[0], draw[1]};
      p.state.size = {std::clamp(draw[2], 1.0, std::max(1.0, max_size.x)),
                      std::clamp(draw[3], 1.0, std::max(1.0, max_size.y))};
      p.initialState = p.state;
      p.sourceComponent = j;
      particles.push_back(p);
    }
  }
  return particles;
}

}  // namespace d2cip
