#pragma once

#include <d2cip/core.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * \file
 * \brief Appearance models and correlation response maps.
 *
 * Two backends produce response maps. The synthetic backend evaluates an analytic score field (Gaussian peaks for
 * the target and clutter, occlusion attenuation and hash-seeded noise). The template backend correlates a
 * grayscale template against the frame with normalized cross-correlation.
 */

namespace d2cip {

/// Grayscale frame with intensities in [0, 1], row-major.
struct Frame {
  int index{0};
  int width{0};
  int height{0};
  std::vector<float> pixels;

  [[nodiscard]] float at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
  [[nodiscard]] float clampedAt(int x, int y) const {
    return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
  }
  [[nodiscard]] bool contains(Vec2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1 && p.y <= height - 1;
  }
};

struct ClutterTrack {
  double amplitude{0.0};
  double width{1.0};
  /// One position per frame.
  std::vector<Vec2> positions;
};

struct OcclusionInterval {
  int begin{0};  ///< first occluded frame
  int end{0};    ///< one past the last occluded frame
  /// Fraction of the target response removed while occluded, in [0, 1].
  double attenuation{0.0};
};

struct SyntheticScenario {
  std::string kind;
  int width{320};
  int height{240};
  double noiseStd{0.0};
  std::uint64_t seed{0};
  double targetAmplitude{1.0};
  double targetWidth{6.0};
  std::vector<TargetState> truth;
  std::vector<ClutterTrack> clutter;
  std::vector<OcclusionInterval> occlusions;

  [[nodiscard]] int frameCount() const { return static_cast<int>(truth.size()); }

  /// Multiplier applied to the target peak at `frame`.
  [[nodiscard]] double targetVisibility(int frame) const {
    double visibility = 1.0;
    for (const auto& occ : occlusions) {
      if (frame >= occ.begin && frame < occ.end) visibility *= 1.0 - occ.attenuation;
    }
    return visibility;
  }

  /// Zero-mean Gaussian noise that depends only on (seed, frame, pixel).
  [[nodiscard]] double noiseAt(int frame, int x, int y) const {
    if (noiseStd <= 0.0) return 0.0;
    std::uint64_t h = mix64(seed ^ 0x6e6f697365ULL);
    h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(frame)));
    h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32 |
                   static_cast<std::uint64_t>(static_cast<std::uint32_t>(y))));
    const double u1 = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = toUnitInterval(mix64(h));
    return noiseStd * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Score of the field at integer pixel (x, y) of `frame`; zero outside the frame.
  [[nodiscard]] double fieldAt(int frame, int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height || frame < 0 || frame >= frameCount()) return 0.0;
    const auto gaussian = [x, y](Vec2 center, double amplitude, double w) {
      const double dx = x - center.x;
      const double dy = y - center.y;
      return amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * w * w));
    };
    double score = gaussian(truth[static_cast<std::size_t>(frame)].position, targetAmplitude, targetWidth) *
                   targetVisibility(frame);
    for (const auto& c : clutter) {
      score += gaussian(c.positions[static_cast<std::size_t>(frame)], c.amplitude, c.width);
    }
    score += noiseAt(frame, x, y);
    return std::max(0.0, score);
  }

  /// Grayscale rendering of the field, clipped to [0, 1].
  [[nodiscard]] Frame render(int frame) const {
    Frame f{frame, width, height, {}};
    f.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        f.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
            static_cast<float>(std::clamp(fieldAt(frame, x, y), 0.0, 1.0));
      }
    }
    return f;
  }
};

enum class Backend { kSynthetic, kTemplate };

inline constexpr int kTemplateSide = 32;

struct TemplatePatch {
  std::vector<double> pixels;  ///< kTemplateSide x kTemplateSide, row-major

  [[nodiscard]] double mean() const {
    double s = 0.0;
    for (double v : pixels) s += v;
    return s / static_cast<double>(pixels.size());
  }
};

struct AppearanceModel {
  ModelId id{0};
  /// Empty for the synthetic backend.
  std::optional<TemplatePatch> patch;
  int updates{0};
};

/// Sum of scores with negatives clipped to zero.
inline double likelihoodOf(const ResponseMap& map) {
  if (map.empty()) throw std::invalid_argument("likelihoodOf: empty response map");
  double total = 0.0;
  for (double s : map.scores()) total += std::max(0.0, s);
  return total;
}

/// Integer pixel the map for `candidate` is centered on: rounded and clamped into the frame.
inline Vec2 mapCenter(const Frame& frame, Vec2 candidate) {
  return {std::clamp(std::round(candidate.x), 0.0, static_cast<double>(frame.width - 1)),
          std::clamp(std::round(candidate.y), 0.0, static_cast<double>(frame.height - 1))};
}

/// Nearest-neighbour resample of the frame region of `size` centered at `center` onto the template grid.
inline TemplatePatch samplePatch(const Frame& frame, Vec2 center, Vec2 size) {
  TemplatePatch patch;
  patch.pixels.resize(static_cast<std::size_t>(kTemplateSide * kTemplateSide));
  const double left = center.x - 0.5 * size.x;
  const double top = center.y - 0.5 * size.y;
  for (int r = 0; r < kTemplateSide; ++r) {
    const int y = static_cast<int>(std::floor(top + (r + 0.5) * size.y / kTemplateSide));
    for (int c = 0; c < kTemplateSide; ++c) {
      const int x = static_cast<int>(std::floor(left + (c + 0.5) * size.x / kTemplateSide));
      patch.pixels[static_cast<std::size_t>(r * kTemplateSide + c)] = frame.clampedAt(x, y);
    }
  }
  return patch;
}

/// Normalized cross-correlation in [-1, 1]; zero when either patch is constant.
inline double normalizedCrossCorrelation(const TemplatePatch& a, const TemplatePatch& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double da = a.pixels[i] - ma;
    const double db = b.pixels[i] - mb;
    dot += da * db;
    na += da * da;
    nb += db * db;
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

/// Registry of live appearance models plus the backend that turns them into response maps.
class ObservationModel {
 public:
  /// Synthetic backend over a scenario.
  explicit ObservationModel(std::shared_ptr<const SyntheticScenario> scenario)
      : backend_{Backend::kSynthetic}, scenario_{std::move(scenario)} {
    if (!scenario_) throw std::invalid_argument("ObservationModel: null scenario");
  }

  /// Template backend.
  ObservationModel() : backend_{Backend::kTemplate} {}

  [[nodiscard]] Backend backend() const { return backend_; }
  [[nodiscard]] std::size_t modelCount() const { return models_.size(); }
  [[nodiscard]] bool hasModel(ModelId id) const { return models_.contains(id); }
  [[nodiscard]] const AppearanceModel& model(ModelId id) const { return find(id); }

  [[nodiscard]] std::vector<ModelId> modelIds() const {
    std::vector<ModelId> ids;
    for (const auto& [id, _] : models_) ids.push_back(id);
    return ids;
  }

  /// New model initialized from `state` in `frame`.
  ModelId createModel(const Frame& frame, const TargetState& state) {
    AppearanceModel m;
    m.id = next_id_++;
    if (backend_ == Backend::kTemplate) {
      checkFrame(frame);
      m.patch = samplePatch(frame, mapCenter(frame, state.position), state.size);
    }
    models_.emplace(m.id, std::move(m));
    return next_id_ - 1;
  }

  ModelId fork(ModelId parent) {
    AppearanceModel copy = find(parent);
    copy.id = next_id_++;
    models_.emplace(copy.id, std::move(copy));
    return next_id_ - 1;
  }

  void retire(ModelId id) { models_.erase(id); }

  /// Caches the synthetic field for `frame`. Optional: maps are identical with or without the cache.
  void beginFrame(const Frame& frame) {
    if (backend_ != Backend::kSynthetic) return;
    checkFrame(frame);
    cached_frame_ = frame.index;
    field_.resize(static_cast<std::size_t>(frame.width) * static_cast<std::size_t>(frame.height));
    for (int y = 0; y < frame.height; ++y) {
      for (int x = 0; x < frame.width; ++x) {
        field_[static_cast<std::size_t>(y) * static_cast<std::size_t>(frame.width) + static_cast<std::size_t>(x)] =
            scenario_->fieldAt(frame.index, x, y);
      }
    }
  }

  /**
   * Response map of `(2 * grid_radius + 1)^2` cells centered on the candidate position (rounded to the pixel grid
   * and clamped into the frame). Cells outside the frame score zero.
   */
  [[nodiscard]] ResponseMap respond(ModelId id, const Frame& frame, const TargetState& candidate,
                                    int grid_radius) const {
    if (grid_radius < 1) throw std::invalid_argument("respond: grid radius must be at least 1");
    const auto& model = find(id);
    checkFrame(frame);
    const Vec2 center = mapCenter(frame, candidate.position);
    const int side = 2 * grid_radius + 1;
    ResponseMap map{side, side, {center.x - grid_radius, center.y - grid_radius}, 1.0};
    const int x0 = static_cast<int>(center.x) - grid_radius;
    const int y0 = static_cast<int>(center.y) - grid_radius;
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const int x = x0 + c;
        const int y = y0 + r;
        if (x < 0 || y < 0 || x >= frame.width || y >= frame.height) continue;
        map.at(r, c) = backend_ == Backend::kSynthetic ? syntheticScore(frame.index, x, y)
                                                       : templateScore(model, frame, x, y, candidate.size);
      }
    }
    return map;
  }

  /// Exponential moving average `patch <- (1 - eta) * patch + eta * framePatch(state)`. No-op for synthetic models.
  void blend(ModelId id, const Frame& frame, const TargetState& state, double eta) {
    auto& model = findMutable(id);
    if (!model.patch) return;
    checkFrame(frame);
    const auto observed = samplePatch(frame, mapCenter(frame, state.position), state.size);
    for (std::size_t i = 0; i < model.patch->pixels.size(); ++i) {
      model.patch->pixels[i] = (1.0 - eta) * model.patch->pixels[i] + eta * observed.pixels[i];
    }
    ++model.updates;
  }

  /**
   * Reconciles the registry with the surviving modes of a frame. Modes are visited by decreasing weight; the first
   * mode to reference a model keeps it, later ones receive a fork. Template models are blended toward the frame at
   * their mode's peak unless the mode's likelihood is below `update_threshold`. Models no mode references are
   * retired. Returns the modes with their final model ids.
   */
  std::vector<PosteriorMode> updateModels(const Frame& frame, std::vector<PosteriorMode> modes, double eta,
                                          double update_threshold) {
    std::vector<std::size_t> order(modes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return modes[a].weight > modes[b].weight; });
    std::set<ModelId> claimed;
    for (std::size_t i : order) {
      auto& mode = modes[i];
      if (!hasModel(mode.modelId)) throw std::invalid_argument("updateModels: mode references an unknown model");
      if (claimed.contains(mode.modelId)) mode.modelId = fork(mode.modelId);
      claimed.insert(mode.modelId);
      if (mode.likelihood >= update_threshold) blend(mode.modelId, frame, mode.peak, eta);
    }
    for (ModelId id : modelIds()) {
      if (!claimed.contains(id)) retire(id);
    }
    return modes;
  }

 private:
  [[nodiscard]] const AppearanceModel& find(ModelId id) const {
    const auto it = models_.find(id);
    if (it == models_.end()) throw std::invalid_argument("appearance model " + std::to_string(id) + " not found");
    return it->second;
  }
  AppearanceModel& findMutable(ModelId id) {
    const auto it = models_.find(id);
    if (it == models_.end()) throw std::invalid_argument("appearance model " + std::to_string(id) + " not found");
    return it->second;
  }

  void checkFrame(const Frame& frame) const {
    if (frame.width < 1 || frame.height < 1) throw std::invalid_argument("frame has no pixels");
    if (backend_ == Backend::kSynthetic) {
      if (frame.width != scenario_->width || frame.height != scenario_->height) {
        throw std::invalid_argument("frame dimensions do not match the scenario");
      }
    } else if (frame.pixels.size() != static_cast<std::size_t>(frame.width) * static_cast<std::size_t>(frame.height)) {
      throw std::invalid_argument("frame pixel buffer does not match its dimensions");
    }
  }

  [[nodiscard]] double syntheticScore(int frame, int x, int y) const {
    if (cached_frame_ == frame) {
      return field_[static_cast<std::size_t>(y) * static_cast<std::size_t>(scenario_->width) +
                    static_cast<std::size_t>(x)];
    }
    return scenario_->fieldAt(frame, x, y);
  }

  static double templateScore(const AppearanceModel& model, const Frame& frame, int x, int y, Vec2 size) {
    const auto observed = samplePatch(frame, {static_cast<double>(x), static_cast<double>(y)}, size);
    return 0.5 * (normalizedCrossCorrelation(*model.patch, observed) + 1.0);
  }

  Backend backend_;
  std::shared_ptr<const SyntheticScenario> scenario_;
  std::map<ModelId, AppearanceModel> models_;
  ModelId next_id_{1};
  int cached_frame_{-1};
  std::vector<double> field_;
};

}  // namespace d2cip
