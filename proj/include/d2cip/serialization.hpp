#pragma once

#include <d2cip/core.hpp>
#include <d2cip/estimation.hpp>
#include <d2cip/metrics.hpp>
#include <d2cip/observation.hpp>
#include <d2cip/refinement.hpp>
#include <d2cip/tracker.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

/**
 * \file
 * \brief JSON and CSV formats: `scenario.json`, `result.json`, `metrics.csv` and per-frame trace lines.
 *
 * Boxes are written as objects `{"cx", "cy", "w", "h"}` (center convention).
 */

namespace d2cip {

using Json = nlohmann::json;

inline Json toJson(Vec2 v) { return Json::array({v.x, v.y}); }

inline Vec2 vec2FromJson(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("expected a [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json toJson(const TargetState& s) {
  return {{"cx", s.position.x}, {"cy", s.position.y}, {"w", s.size.x}, {"h", s.size.y}};
}

inline TargetState stateFromJson(const Json& j) {
  return {{j.at("cx").get<double>(), j.at("cy").get<double>()}, {j.at("w").get<double>(), j.at("h").get<double>()}};
}

// ---- scenario.json ----

inline Json toJson(const SyntheticScenario& sc) {
  Json truth = Json::array();
  for (const auto& s : sc.truth) truth.push_back(toJson(s));
  Json clutter = Json::array();
  for (const auto& c : sc.clutter) {
    Json positions = Json::array();
    for (const auto& p : c.positions) positions.push_back(toJson(p));
    clutter.push_back({{"amplitude", c.amplitude}, {"width", c.width}, {"positions", positions}});
  }
  Json occlusions = Json::array();
  for (const auto& o : sc.occlusions) {
    occlusions.push_back({{"begin", o.begin}, {"end", o.end}, {"attenuation", o.attenuation}});
  }
  return {{"kind", sc.kind},
          {"width", sc.width},
          {"height", sc.height},
          {"noise_std", sc.noiseStd},
          {"seed", sc.seed},
          {"target", {{"amplitude", sc.targetAmplitude}, {"width", sc.targetWidth}}},
          {"truth", truth},
          {"clutter", clutter},
          {"occlusions", occlusions}};
}

inline SyntheticScenario scenarioFromJson(const Json& j) {
  SyntheticScenario sc;
  sc.kind = j.value("kind", std::string{"custom"});
  sc.width = j.at("width").get<int>();
  sc.height = j.at("height").get<int>();
  sc.noiseStd = j.value("noise_std", 0.0);
  sc.seed = j.value("seed", std::uint64_t{0});
  sc.targetAmplitude = j.at("target").at("amplitude").get<double>();
  sc.targetWidth = j.at("target").at("width").get<double>();
  for (const auto& s : j.at("truth")) sc.truth.push_back(stateFromJson(s));
  for (const auto& c : j.value("clutter", Json::array())) {
    ClutterTrack track{c.at("amplitude").get<double>(), c.at("width").get<double>(), {}};
    for (const auto& p : c.at("positions")) track.positions.push_back(vec2FromJson(p));
    if (track.positions.size() != sc.truth.size()) {
      throw std::runtime_error("scenario: clutter track needs one position per frame");
    }
    sc.clutter.push_back(std::move(track));
  }
  for (const auto& o : j.value("occlusions", Json::array())) {
    sc.occlusions.push_back({o.at("begin").get<int>(), o.at("end").get<int>(), o.at("attenuation").get<double>()});
  }
  if (sc.width < 1 || sc.height < 1) throw std::runtime_error("scenario: invalid frame size");
  if (sc.truth.empty()) throw std::runtime_error("scenario: no frames");
  if (sc.targetAmplitude < 0.0 || !(sc.targetWidth > 0.0) || sc.noiseStd < 0.0) {
    throw std::runtime_error("scenario: invalid target amplitude, width or noise");
  }
  for (const auto& s : sc.truth) {
    if (!s.valid()) throw std::runtime_error("scenario: ground-truth sizes must be positive");
  }
  for (const auto& c : sc.clutter) {
    if (c.amplitude < 0.0 || !(c.width > 0.0)) throw std::runtime_error("scenario: invalid clutter peak");
  }
  for (const auto& o : sc.occlusions) {
    if (o.attenuation < 0.0 || o.attenuation > 1.0) throw std::runtime_error("scenario: attenuation outside [0, 1]");
  }
  return sc;
}

inline Json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in{path};
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

inline void writeTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out{path, std::ios::binary};
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// ---- result.json ----

inline Json toJson(const TrackResult& r) {
  Json frames = Json::array();
  for (const auto& f : r.frames) {
    frames.push_back({{"index", f.index},
                      {"estimate", toJson(f.estimate)},
                      {"truth", toJson(f.truth)},
                      {"ess", f.ess},
                      {"modes", f.modes},
                      {"clusters", f.clusters},
                      {"discarded", f.discarded},
                      {"mean_iterations", f.meanIterations},
                      {"lost", f.lost}});
  }
  return {{"sequence", r.sequence},
          {"variant", std::string{toString(r.variant)}},
          {"seed", r.seed},
          {"l_min", r.lMin},
          {"frames", frames}};
}

inline TrackResult trackResultFromJson(const Json& j) {
  TrackResult r;
  r.sequence = j.value("sequence", std::string{});
  r.variant = parseVariant(j.value("variant", std::string{"D2CIP"}));
  r.seed = j.value("seed", std::uint64_t{0});
  r.lMin = j.value("l_min", 0.0);
  int expected = -1;
  for (const auto& f : j.at("frames")) {
    FrameRecord rec;
    rec.index = f.at("index").get<int>();
    if (expected >= 0 && rec.index != expected) throw std::runtime_error("result: frame indices are not contiguous");
    expected = rec.index + 1;
    rec.estimate = stateFromJson(f.at("estimate"));
    rec.truth = stateFromJson(f.at("truth"));
    rec.ess = f.value("ess", 0.0);
    rec.modes = f.value("modes", 0);
    rec.clusters = f.value("clusters", 0);
    rec.discarded = f.value("discarded", 0);
    rec.meanIterations = f.value("mean_iterations", 0.0);
    rec.lost = f.value("lost", false);
    r.frames.push_back(rec);
  }
  if (r.frames.empty()) throw std::runtime_error("result: no frames");
  return r;
}

// ---- metrics.csv ----

/// Rows `curve,threshold,value` for the precision and success curves.
inline std::string metricsCsv(const Metrics& m) {
  std::ostringstream out;
  out << "curve,threshold,value\n";
  char buf[96];
  for (const auto& p : m.precision) {
    std::snprintf(buf, sizeof(buf), "precision,%.0f,%.6f\n", p.threshold, p.value);
    out << buf;
  }
  for (const auto& p : m.success) {
    std::snprintf(buf, sizeof(buf), "success,%.2f,%.6f\n", p.threshold, p.value);
    out << buf;
  }
  return out.str();
}

// ---- per-frame trace lines ----

inline Json toJson(const Posterior& post) {
  Json modes = Json::array();
  for (const auto& m : post.modes) {
    Json sources = Json::object();
    for (const auto& [j, count] : m.sourceComponents) sources[std::to_string(j)] = count;
    modes.push_back({{"peak", toJson(m.peak)},
                     {"weight", m.weight},
                     {"converged", m.convergedCount},
                     {"likelihood", m.likelihood},
                     {"model", m.modelId},
                     {"sources", sources}});
  }
  return {{"frame", post.frameIndex}, {"modes", modes}};
}

inline Json toJson(const ClusterAssignment& c) {
  Json centroids = Json::array();
  for (const auto& p : c.centroids) centroids.push_back(toJson(p));
  Json j{{"k", c.k}, {"labels", c.labels}, {"centroids", centroids}};
  j["silhouette"] = std::isnan(c.silhouetteScore) ? Json(nullptr) : Json(c.silhouetteScore);
  return j;
}

inline Json toJson(const RefinedParticle& p, std::size_t id) {
  Json positions = Json::array();
  for (const auto& v : p.trace.positions) positions.push_back(toJson(v));
  Json displacements = Json::array();
  for (const auto& v : p.trace.displacements) displacements.push_back(toJson(v));
  return {{"id", id},
          {"component", p.particle.sourceComponent},
          {"iterations", p.particle.iterationCount},
          {"alive", p.particle.alive},
          {"positions", positions},
          {"likelihoods", p.trace.likelihoods},
          {"displacements", displacements}};
}

/// One JSON line per frame: posterior, clusters and (when refined) every particle's trace.
inline std::string traceLine(const FrameTrace& trace) {
  Json j{{"frame", trace.index}, {"lost", trace.lost}};
  if (trace.posterior) j["posterior"] = toJson(*trace.posterior);
  if (trace.clusters) j["clusters"] = toJson(*trace.clusters);
  if (trace.selected) j["selected"] = *trace.selected;
  if (trace.refinement) {
    Json particles = Json::array();
    for (std::size_t i = 0; i < trace.refinement->particles.size(); ++i) {
      particles.push_back(toJson(trace.refinement->particles[i], i));
    }
    j["particles"] = particles;
  }
  return j.dump() + "\n";
}

}  // namespace d2cip
