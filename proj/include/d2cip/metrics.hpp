#pragma once

#include <d2cip/core.hpp>
#include <d2cip/tracker.hpp>

#include <algorithm>
#include <stdexcept>
#include <vector>

/**
 * \file
 * \brief One-pass-evaluation metrics: precision (center error) and success (overlap) curves.
 */

namespace d2cip {

inline double centerError(const TargetState& a, const TargetState& b) { return distance(a.position, b.position); }

/// Intersection over union of two center-based boxes.
inline double intersectionOverUnion(const TargetState& a, const TargetState& b) {
  if (a == b) return 1.0;
  const double ax0 = a.position.x - 0.5 * a.size.x;
  const double ay0 = a.position.y - 0.5 * a.size.y;
  const double bx0 = b.position.x - 0.5 * b.size.x;
  const double by0 = b.position.y - 0.5 * b.size.y;
  const double iw = std::min(ax0 + a.size.x, bx0 + b.size.x) - std::max(ax0, bx0);
  const double ih = std::min(ay0 + a.size.y, by0 + b.size.y) - std::max(ay0, by0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double area_a = a.size.x * a.size.y;
  const double area_b = b.size.x * b.size.y;
  return inter / (area_a + area_b - inter);
}

struct CurvePoint {
  double threshold{0.0};
  double value{0.0};
};

struct Metrics {
  /// Center-error thresholds 0..50 px.
  std::vector<CurvePoint> precision;
  /// Overlap thresholds 0, 0.01, ..., 1.
  std::vector<CurvePoint> success;
  double precisionAt20{0.0};
  double successAuc{0.0};
};

inline constexpr int kPrecisionMaxThreshold = 50;
inline constexpr int kSuccessSteps = 100;

/**
 * Precision(tau) = fraction of frames with center error <= tau. Success(u) = fraction of frames whose overlap is
 * positive and at least u, so an exact box counts at every threshold and a non-overlapping box at none. The success
 * AUC is the mean of the success curve.
 */
inline Metrics computeMetrics(std::span<const TargetState> estimates, std::span<const TargetState> truth) {
  if (estimates.empty()) throw std::invalid_argument("computeMetrics: no frames");
  if (estimates.size() != truth.size()) throw std::invalid_argument("computeMetrics: length mismatch");
  std::vector<double> errors;
  std::vector<double> overlaps;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    errors.push_back(centerError(estimates[i], truth[i]));
    overlaps.push_back(intersectionOverUnion(estimates[i], truth[i]));
  }
  const auto n = static_cast<double>(estimates.size());
  Metrics m;
  for (int tau = 0; tau <= kPrecisionMaxThreshold; ++tau) {
    const auto hits = std::count_if(errors.begin(), errors.end(), [tau](double e) { return e <= tau; });
    m.precision.push_back({static_cast<double>(tau), static_cast<double>(hits) / n});
  }
  double area = 0.0;
  for (int s = 0; s <= kSuccessSteps; ++s) {
    const double u = static_cast<double>(s) / kSuccessSteps;
    const auto hits = std::count_if(overlaps.begin(), overlaps.end(), [u](double o) { return o > 0.0 && o >= u; });
    const double value = static_cast<double>(hits) / n;
    m.success.push_back({u, value});
    area += value;
  }
  m.precisionAt20 = m.precision[20].value;
  m.successAuc = area / static_cast<double>(kSuccessSteps + 1);
  return m;
}

inline Metrics computeMetrics(const TrackResult& result) {
  std::vector<TargetState> est;
  std::vector<TargetState> gt;
  for (const auto& f : result.frames) {
    est.push_back(f.estimate);
    gt.push_back(f.truth);
  }
  return computeMetrics(est, gt);
}

inline bool precisionMonotone(const Metrics& m) {
  for (std::size_t i = 1; i < m.precision.size(); ++i) {
    if (m.precision[i].value < m.precision[i - 1].value) return false;
  }
  return true;
}

inline bool successMonotone(const Metrics& m) {
  for (std::size_t i = 1; i < m.success.size(); ++i) {
    if (m.success[i].value > m.success[i - 1].value) return false;
  }
  return true;
}

}  // namespace d2cip
