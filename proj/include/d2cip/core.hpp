#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * \file
 * \brief Domain types shared by the tracker: states, particles, response maps and posterior modes.
 */

namespace d2cip {

/// Plain 2-vector in pixel units.
struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;

  [[nodiscard]] double norm() const { return std::hypot(x, y); }
  [[nodiscard]] bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Position (box center) and size (width, height) of a target hypothesis.
struct TargetState {
  Vec2 position;
  Vec2 size{1.0, 1.0};

  friend constexpr bool operator==(const TargetState&, const TargetState&) = default;

  [[nodiscard]] bool valid() const {
    return position.finite() && size.finite() && size.x > 0.0 && size.y > 0.0;
  }
  [[nodiscard]] double meanSize() const { return 0.5 * (size.x + size.y); }
};

using StateVector = std::array<double, 8>;

/// Target state plus its velocity `[position velocity, size velocity]`.
struct StateMean {
  TargetState state;
  std::array<double, 4> velocity{};

  friend constexpr bool operator==(const StateMean&, const StateMean&) = default;
};

/// Layout is `[px, py, sw, sh, vpx, vpy, vsw, vsh]`.
inline StateVector flatten(const StateMean& z) {
  return {z.state.position.x, z.state.position.y, z.state.size.x, z.state.size.y,
          z.velocity[0],      z.velocity[1],      z.velocity[2],  z.velocity[3]};
}

inline StateMean unflatten(const StateVector& v) {
  StateMean z;
  z.state.position = {v[0], v[1]};
  z.state.size = {v[2], v[3]};
  z.velocity = {v[4], v[5], v[6], v[7]};
  return z;
}

using ComponentIndex = std::size_t;
using ModelId = std::uint64_t;

struct Particle {
  TargetState state;
  TargetState initialState;
  ComponentIndex sourceComponent{0};
  int iterationCount{0};
  double likelihood{0.0};
  bool alive{true};
};

struct GridCell {
  int row{0};
  int col{0};
  friend constexpr bool operator==(GridCell, GridCell) = default;
};

/// Discrete correlation score grid. Cell (row, col) sits at `origin + cellSize * (col, row)`.
class ResponseMap {
 public:
  ResponseMap() = default;
  ResponseMap(int rows, int cols, Vec2 origin, double cell_size = 1.0)
      : rows_{rows}, cols_{cols}, origin_{origin}, cell_size_{cell_size} {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("ResponseMap: dimensions must be at least 1x1");
    }
    scores_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
  }

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] Vec2 origin() const { return origin_; }
  [[nodiscard]] double cellSize() const { return cell_size_; }
  [[nodiscard]] bool empty() const { return scores_.empty(); }

  double& at(int row, int col) { return scores_[index(row, col)]; }
  [[nodiscard]] double at(int row, int col) const { return scores_[index(row, col)]; }

  [[nodiscard]] std::span<const double> scores() const { return scores_; }
  [[nodiscard]] std::span<double> scores() { return scores_; }

  [[nodiscard]] Vec2 cellPosition(int row, int col) const {
    return {origin_.x + cell_size_ * col, origin_.y + cell_size_ * row};
  }
  [[nodiscard]] Vec2 center() const { return cellPosition(rows_ / 2, cols_ / 2); }

 private:
  [[nodiscard]] std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(col);
  }

  int rows_{0};
  int cols_{0};
  Vec2 origin_{};
  double cell_size_{1.0};
  std::vector<double> scores_;
};

struct Peak {
  Vec2 position;
  double score{0.0};
  GridCell cell;
};

/// Maximum cell of a map. Ties go to the lowest row-major index.
inline Peak peakOf(const ResponseMap& map) {
  if (map.empty()) {
    throw std::invalid_argument("peakOf: empty response map");
  }
  const auto scores = map.scores();
  // max_element returns the first maximum, which is the row-major tie-break.
  const auto best = std::max_element(scores.begin(), scores.end());
  const auto idx = static_cast<int>(std::distance(scores.begin(), best));
  const GridCell cell{idx / map.cols(), idx % map.cols()};
  return {map.cellPosition(cell.row, cell.col), *best, cell};
}

struct PosteriorMode {
  TargetState peak;
  double weight{0.0};
  int convergedCount{1};
  /// Source component index -> number of member particles it contributed.
  std::map<ComponentIndex, int> sourceComponents;
  ModelId modelId{0};
  /// Likelihood of the response map generated at `peak` (the data term of the mode weight).
  double likelihood{0.0};
};

/// Normalizes in place. All-zero input becomes uniform.
inline void normalizeWeights(std::span<double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) {
    const double uniform = weights.empty() ? 0.0 : 1.0 / static_cast<double>(weights.size());
    std::fill(weights.begin(), weights.end(), uniform);
    return;
  }
  for (double& w : weights) w /= total;
}

inline void normalizeWeights(std::vector<PosteriorMode>& modes) {
  std::vector<double> w;
  w.reserve(modes.size());
  for (const auto& m : modes) w.push_back(m.weight);
  normalizeWeights(w);
  for (std::size_t i = 0; i < modes.size(); ++i) modes[i].weight = w[i];
}

/// SplitMix64 finalizer. Also used as a stateless hash for per-cell noise.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 53-bit uniform in [0, 1) from a raw 64-bit word.
constexpr double toUnitInterval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/**
 * Seeded random source. Draws are built directly on `std::mt19937_64` output so that sequences are bit-identical
 * across standard library implementations (the `std::*_distribution` templates are not).
 */
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_{seed}, engine_{mix64(seed)} {}

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  std::uint64_t bits() { return engine_(); }

  double uniform() { return toUnitInterval(engine_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("RandomSource::index: empty range");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal via the Marsaglia polar method; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Independent child source; consumes one draw from the parent.
  RandomSource split() { return RandomSource{mix64(engine_() ^ 0xd2c1d2c1d2c1d2c1ULL)}; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_{0.0};
  bool has_spare_{false};
};

}  // namespace d2cip
