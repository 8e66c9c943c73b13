#pragma once

#include <d2cip/core.hpp>
#include <d2cip/estimation.hpp>
#include <d2cip/io.hpp>
#include <d2cip/motion.hpp>
#include <d2cip/observation.hpp>
#include <d2cip/refinement.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/**
 * \file
 * \brief The per-frame tracking loop and its ablation variants.
 *
 * Variants, from the baseline up:
 *  - PF: one shift per particle; weights come from the maps at the particles' initial positions; the
 *    highest-weight shifted particle is the estimate; resampling every frame.
 *  - IPF: full iterative refinement and change-of-support-correct weights; the estimate is the peak most particles
 *    converged to; resampling every frame.
 *  - IPFK: IPF plus clustering of the final peaks (count within clusters, weight across clusters).
 *  - D2CIP: IPFK plus one appearance model per mode and resampling only when the effective sample size is low.
 */

namespace d2cip {

enum class Variant { kPF, kIPF, kIPFK, kD2CIP };

inline constexpr std::array<Variant, 4> kAllVariants{Variant::kPF, Variant::kIPF, Variant::kIPFK, Variant::kD2CIP};

inline std::string_view toString(Variant v) {
  switch (v) {
    case Variant::kPF: return "PF";
    case Variant::kIPF: return "IPF";
    case Variant::kIPFK: return "IPFK";
    case Variant::kD2CIP: return "D2CIP";
  }
  return "D2CIP";
}

inline Variant parseVariant(std::string_view name) {
  for (auto v : kAllVariants) {
    if (toString(v) == name) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string{name} + "' (expected PF, IPF, IPFK or D2CIP)");
}

inline std::string_view toString(Backend b) { return b == Backend::kSynthetic ? "synthetic" : "template"; }

inline Backend parseBackend(std::string_view name) {
  if (name == "synthetic") return Backend::kSynthetic;
  if (name == "template") return Backend::kTemplate;
  throw std::invalid_argument("unknown backend '" + std::string{name} + "' (expected synthetic or template)");
}

struct RunConfig {
  Backend backend{Backend::kSynthetic};
  int nTotal{200};
  /// Sigma as fractions of the initial target size: position std = sigmaPosition * mean size,
  /// size std = sigmaSize * size. Velocity std is absolute (px/frame).
  double sigmaPosition{0.05};
  double sigmaSize{0.02};
  double sigmaVelocity{0.0};
  double epsilon{1.0};
  /// Negative: 0.05 x the likelihood of a centered response on the first frame.
  double lMin{-1.0};
  int maxIterations{10};
  int gridRadius{15};
  double gamma{0.5};
  int kMax{4};
  double clusterScale{1.0};
  int mMax{5};
  double eta{0.01};
  std::uint64_t seed{1};
  Variant variant{Variant::kD2CIP};

  void validate() const {
    if (nTotal < 1) throw std::invalid_argument("n_total must be at least 1");
    if (!(sigmaPosition >= 0.0) || !(sigmaSize >= 0.0) || !(sigmaVelocity >= 0.0)) {
      throw std::invalid_argument("sigma values must be non-negative");
    }
    if (mMax < 1) throw std::invalid_argument("m_max must be at least 1");
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must be in [0, 1]");
    RefinementConfig{epsilon, std::max(0.0, lMin), maxIterations, gridRadius}.validate();
    EstimatorConfig{gamma, kMax, clusterScale}.validate();
  }

  [[nodiscard]] Sigma sigmaFor(const TargetState& reference) const {
    const double pos = sigmaPosition * reference.meanSize();
    return {pos, pos, sigmaSize * reference.size.x, sigmaSize * reference.size.y,
            sigmaVelocity, sigmaVelocity, sigmaVelocity, sigmaVelocity};
  }
};

namespace detail {

inline double parseDouble(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw std::invalid_argument("config key '" + key + "': bad number");
  return v;
}

inline long long parseInteger(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw std::invalid_argument("config key '" + key + "': bad integer");
  return v;
}

}  // namespace detail

/// Applies `key = value` settings on top of `cfg`. Unknown keys are an error.
inline RunConfig applyKeyValues(RunConfig cfg, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "backend") cfg.backend = parseBackend(value);
    else if (key == "variant") cfg.variant = parseVariant(value);
    else if (key == "n_total") cfg.nTotal = static_cast<int>(detail::parseInteger(key, value));
    else if (key == "sigma_pos") cfg.sigmaPosition = detail::parseDouble(key, value);
    else if (key == "sigma_size") cfg.sigmaSize = detail::parseDouble(key, value);
    else if (key == "sigma_vel") cfg.sigmaVelocity = detail::parseDouble(key, value);
    else if (key == "epsilon") cfg.epsilon = detail::parseDouble(key, value);
    else if (key == "l_min") cfg.lMin = detail::parseDouble(key, value);
    else if (key == "max_iterations") cfg.maxIterations = static_cast<int>(detail::parseInteger(key, value));
    else if (key == "grid_radius") cfg.gridRadius = static_cast<int>(detail::parseInteger(key, value));
    else if (key == "gamma") cfg.gamma = detail::parseDouble(key, value);
    else if (key == "k_max") cfg.kMax = static_cast<int>(detail::parseInteger(key, value));
    else if (key == "cluster_scale") cfg.clusterScale = detail::parseDouble(key, value);
    else if (key == "m_max") cfg.mMax = static_cast<int>(detail::parseInteger(key, value));
    else if (key == "eta") cfg.eta = detail::parseDouble(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parseInteger(key, value));
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

/// Frames plus per-frame ground truth. Synthetic sequences carry their scenario; their frames may have no pixels.
struct Sequence {
  std::string name;
  std::vector<Frame> frames;
  std::vector<TargetState> truth;
  std::shared_ptr<const SyntheticScenario> scenario;
};

inline Sequence makeSyntheticSequence(std::shared_ptr<const SyntheticScenario> scenario, bool render_pixels = false,
                                      std::string name = {}) {
  if (!scenario) throw std::invalid_argument("makeSyntheticSequence: null scenario");
  Sequence seq;
  seq.name = name.empty() ? scenario->kind : std::move(name);
  for (int t = 0; t < scenario->frameCount(); ++t) {
    seq.frames.push_back(render_pixels ? scenario->render(t) : Frame{t, scenario->width, scenario->height, {}});
  }
  seq.truth = scenario->truth;
  seq.scenario = std::move(scenario);
  return seq;
}

struct FrameRecord {
  int index{0};
  TargetState estimate;
  TargetState truth;
  double ess{1.0};
  int modes{1};
  int clusters{1};
  int discarded{0};
  double meanIterations{0.0};
  bool lost{false};
};

struct TrackResult {
  std::string sequence;
  Variant variant{Variant::kD2CIP};
  std::uint64_t seed{0};
  double lMin{0.0};
  std::vector<FrameRecord> frames;
};

/// Everything computed for one frame, handed to an optional observer (trace output, tests).
struct FrameTrace {
  int index{0};
  const Posterior* posterior{nullptr};
  const ClusterAssignment* clusters{nullptr};
  const RefinementResult* refinement{nullptr};
  const ObservationModel* observation{nullptr};
  const Frame* frame{nullptr};
  std::optional<std::size_t> selected;
  bool lost{false};
};

using FrameObserver = std::function<void(const FrameTrace&)>;

/**
 * Baseline weighting: every particle is shifted once to the peak of the map at its initial position and keeps the
 * likelihood of that initial map. Each particle is its own posterior support point.
 */
inline Posterior shiftedOncePosterior(std::span<const Particle> particles, std::span<const ModelId> component_models,
                                      const ObservationModel& observation, const Frame& frame,
                                      const RefinementConfig& cfg, const TransitionMixture& mix, int frame_index,
                                      std::size_t* discarded = nullptr) {
  Posterior post;
  post.frameIndex = frame_index;
  std::size_t dropped = 0;
  for (const auto& p : particles) {
    TargetState start = p.state;
    start.position = mapCenter(frame, start.position);
    const auto map = observation.respond(component_models[p.sourceComponent], frame, start, cfg.gridRadius);
    const double likelihood = likelihoodOf(map);
    if (likelihood < cfg.lMin) {
      ++dropped;
      continue;
    }
    PosteriorMode mode;
    mode.peak = {peakOf(map).position, p.state.size};
    mode.likelihood = likelihood;
    mode.weight = likelihood * mix.components[p.sourceComponent].priorWeight;
    mode.convergedCount = 1;
    mode.sourceComponents = {{p.sourceComponent, 1}};
    mode.modelId = component_models[p.sourceComponent];
    post.modes.push_back(std::move(mode));
  }
  if (discarded) *discarded = dropped;
  if (post.modes.empty()) throw AllParticlesDiscarded{};
  normalizeWeights(post.modes);
  return post;
}

/// Keeps the `max_modes` highest-weight modes (stable), renormalized.
inline Posterior keepTopModes(Posterior post, std::size_t max_modes) {
  std::stable_sort(post.modes.begin(), post.modes.end(),
                   [](const PosteriorMode& a, const PosteriorMode& b) { return a.weight > b.weight; });
  if (post.modes.size() > max_modes) post.modes.resize(max_modes);
  normalizeWeights(post.modes);
  return post;
}

/// Single cluster containing every mode.
inline ClusterAssignment singleCluster(const Posterior& post) {
  ClusterAssignment c;
  c.labels.assign(post.modes.size(), 0);
  Vec2 sum{};
  for (const auto& m : post.modes) sum = sum + m.peak.position;
  c.centroids = {(1.0 / static_cast<double>(post.modes.size())) * sum};
  return c;
}

/// Index of the highest-weight mode (lowest index on ties).
inline std::size_t maxWeightMode(const Posterior& post) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < post.modes.size(); ++i) {
    if (post.modes[i].weight > post.modes[best].weight) best = i;
  }
  return best;
}

/// Runs one-pass evaluation: initialized from the first ground-truth box, never reinitialized.
inline TrackResult runSequence(const RunConfig& cfg, const Sequence& seq, const FrameObserver& observer = {}) {
  cfg.validate();
  if (seq.frames.size() < 2) throw std::invalid_argument("sequence needs at least 2 frames");
  if (seq.truth.size() != seq.frames.size()) {
    throw std::invalid_argument("sequence has " + std::to_string(seq.frames.size()) + " frames but " +
                                std::to_string(seq.truth.size()) + " ground-truth boxes");
  }
  if (!seq.truth.front().valid()) throw std::invalid_argument("first ground-truth box is invalid");

  std::optional<ObservationModel> built;
  if (cfg.backend == Backend::kSynthetic) {
    if (!seq.scenario) throw std::invalid_argument("synthetic backend needs a scenario");
    built.emplace(seq.scenario);
  } else {
    built.emplace();
  }
  ObservationModel& obs = *built;
  RandomSource rng{cfg.seed};

  const TargetState init = seq.truth.front();
  const Frame& first = seq.frames.front();
  obs.beginFrame(first);
  const ModelId shared = obs.createModel(first, init);

  TrackResult result;
  result.sequence = seq.name;
  result.variant = cfg.variant;
  result.seed = cfg.seed;
  result.lMin = cfg.lMin >= 0.0 ? cfg.lMin : 0.05 * likelihoodOf(obs.respond(shared, first, init, cfg.gridRadius));

  const RefinementConfig rcfg{cfg.epsilon, result.lMin, cfg.maxIterations, cfg.gridRadius};
  EstimatorConfig ecfg{cfg.gamma, cfg.kMax, cfg.clusterScale};
  const Sigma sigma = cfg.sigmaFor(init);
  const auto m_max = static_cast<std::size_t>(cfg.mMax);
  const bool per_mode_models = cfg.variant == Variant::kD2CIP;
  const Vec2 frame_size{static_cast<double>(first.width), static_cast<double>(first.height)};

  std::vector<PriorMode> prior{{StateMean{init, {}}, 1.0, shared}};
  result.frames.push_back({0, init, init, 1.0, 1, 1, 0, 0.0, false});
  TargetState last = init;

  for (std::size_t t = 1; t < seq.frames.size(); ++t) {
    const Frame& frame = seq.frames[t];
    if (frame.width != first.width || frame.height != first.height) {
      throw std::invalid_argument("frame " + std::to_string(t) + " has different dimensions");
    }
    obs.beginFrame(frame);
    const auto capped = capModes(prior, m_max);
    const auto mix = buildMixture(capped, sigma, m_max);
    const auto per_component = particlesPerComponent(static_cast<std::size_t>(cfg.nTotal), mix.components.size());
    const auto particles = sampleStratified(mix, per_component, rng, frame_size);

    std::vector<ModelId> models;
    std::vector<double> priority;
    for (const auto& c : mix.components) {
      models.push_back(per_mode_models ? c.modelId : shared);
      priority.push_back(c.priorWeight);
    }

    FrameRecord rec;
    rec.index = static_cast<int>(t);
    rec.truth = seq.truth[t];

    Posterior posterior;
    std::optional<RefinementResult> refinement;
    try {
      if (cfg.variant == Variant::kPF) {
        std::size_t dropped = 0;
        posterior = shiftedOncePosterior(particles, models, obs, frame, rcfg, mix, static_cast<int>(t), &dropped);
        rec.discarded = static_cast<int>(dropped);
        rec.meanIterations = 1.0;
      } else {
        refinement = refineAll(particles, models, obs, frame, rcfg, priority);
        posterior = buildPosterior(refinement->peaks, mix, static_cast<int>(t));
        rec.discarded = static_cast<int>(refinement->discarded);
        rec.meanIterations = refinement->meanIterations;
      }
    } catch (const AllParticlesDiscarded&) {
      // Hold the last estimate; modes stay where they were with zero velocity.
      rec.estimate = last;
      rec.lost = true;
      rec.discarded = static_cast<int>(particles.size());
      rec.ess = 0.0;
      rec.modes = 0;
      rec.clusters = 0;
      rec.meanIterations = 0.0;
      for (auto& m : prior) m.mean.velocity = {};
      result.frames.push_back(rec);
      if (observer) observer({static_cast<int>(t), nullptr, nullptr, nullptr, &obs, &frame, std::nullopt, true});
      continue;
    }

    ClusterAssignment clusters;
    std::size_t selected = 0;
    switch (cfg.variant) {
      case Variant::kPF:
        clusters = singleCluster(posterior);
        selected = maxWeightMode(posterior);
        break;
      case Variant::kIPF:
        clusters = singleCluster(posterior);
        selected = selectMode(posterior, clusters);
        break;
      case Variant::kIPFK:
      case Variant::kD2CIP:
        clusters = clusterModes(posterior, ecfg);
        selected = selectMode(posterior, clusters);
        break;
    }
    const auto& chosen = posterior.modes[selected];
    rec.estimate = chosen.peak;
    rec.ess = effectiveSampleSize(posterior);
    rec.modes = static_cast<int>(posterior.modes.size());
    rec.clusters = clusters.k;
    if (observer) {
      observer({static_cast<int>(t), &posterior, &clusters, refinement ? &*refinement : nullptr, &obs, &frame,
                selected, false});
    }

    Posterior survivors =
        per_mode_models ? maybeResample(posterior, ecfg, rng) : resampleModes(posterior, rng);
    survivors = keepTopModes(std::move(survivors), m_max);
    if (per_mode_models) {
      survivors.modes = obs.updateModels(frame, std::move(survivors.modes), cfg.eta, result.lMin);
    } else if (chosen.likelihood >= result.lMin) {
      obs.blend(shared, frame, chosen.peak, cfg.eta);
    }
    prior = handoffModes(survivors, capped, m_max);
    last = rec.estimate;
    result.frames.push_back(rec);
  }
  return result;
}

}  // namespace d2cip
