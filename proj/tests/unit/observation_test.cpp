#include <d2cip/observation.hpp>

#include <gtest/gtest.h>

#include <memory>

namespace d2cip {
namespace {

std::shared_ptr<SyntheticScenario> isolatedPeak(Vec2 at, double noise = 0.0, int frames = 3) {
  auto sc = std::make_shared<SyntheticScenario>();
  sc->width = 200;
  sc->height = 160;
  sc->noiseStd = noise;
  sc->seed = 17;
  sc->targetAmplitude = 1.0;
  sc->targetWidth = 4.0;
  sc->truth.assign(static_cast<std::size_t>(frames), TargetState{at, {20, 20}});
  return sc;
}

Frame blankFrame(const SyntheticScenario& sc, int index = 0) { return {index, sc.width, sc.height, {}}; }

Frame gradientFrame(int w, int h) {
  Frame f{0, w, h, {}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = 0.5 + 0.4 * std::sin(0.3 * x) * std::cos(0.21 * y) + 0.001 * x;
      f.pixels.push_back(static_cast<float>(v));
    }
  }
  return f;
}

TEST(Respond, SyntheticCandidateOnPeakPeaksAtCenter) {
  const auto sc = isolatedPeak({100, 80});
  ObservationModel obs{sc};
  const auto frame = blankFrame(*sc);
  const auto id = obs.createModel(frame, sc->truth[0]);
  const auto map = obs.respond(id, frame, {{100, 80}, {20, 20}}, 15);
  EXPECT_EQ(map.rows(), 31);
  EXPECT_EQ(peakOf(map).position, map.center());
}

TEST(Respond, SyntheticOffsetCandidatePeaksAtTruth) {
  const Vec2 truth{100, 80};
  const auto sc = isolatedPeak(truth);
  ObservationModel obs{sc};
  const auto frame = blankFrame(*sc);
  const auto id = obs.createModel(frame, sc->truth[0]);
  const auto map = obs.respond(id, frame, {{108, 80}, {20, 20}}, 15);
  // A single Gaussian surface peaks at its center, which lies inside the window.
  const Vec2 expected_offset = truth - Vec2{108, 80};
  EXPECT_EQ(peakOf(map).position - map.center(), expected_offset);
  EXPECT_EQ(expected_offset, (Vec2{-8, 0}));
}

TEST(Respond, CachedAndUncachedFieldsAgreeBitExactly) {
  const auto sc = isolatedPeak({60, 70}, 0.05);
  ObservationModel cached{sc};
  ObservationModel direct{sc};
  const auto frame = blankFrame(*sc, 1);
  cached.beginFrame(frame);
  const auto a = cached.createModel(frame, sc->truth[0]);
  const auto b = direct.createModel(frame, sc->truth[0]);
  const auto ma = cached.respond(a, frame, {{65, 72}, {20, 20}}, 12);
  const auto mb = direct.respond(b, frame, {{65, 72}, {20, 20}}, 12);
  ASSERT_EQ(ma.scores().size(), mb.scores().size());
  for (std::size_t i = 0; i < ma.scores().size(); ++i) EXPECT_EQ(ma.scores()[i], mb.scores()[i]);
}

TEST(Respond, NoiseIsConsistentAcrossOverlappingMaps) {
  const auto sc = isolatedPeak({60, 70}, 0.1);
  ObservationModel obs{sc};
  const auto frame = blankFrame(*sc, 2);
  const auto id = obs.createModel(frame, sc->truth[0]);
  const auto m1 = obs.respond(id, frame, {{50, 50}, {20, 20}}, 5);
  const auto m2 = obs.respond(id, frame, {{53, 52}, {20, 20}}, 5);
  // Pixel (54, 53) is cell (8, 9) of m1 and cell (6, 6) of m2.
  EXPECT_EQ(m1.at(8, 9), m2.at(6, 6));
  EXPECT_EQ(m1.cellPosition(8, 9), m2.cellPosition(6, 6));
}

TEST(Respond, DeterministicAcrossRegistries) {
  const auto sc = isolatedPeak({60, 70}, 0.1);
  ObservationModel a{sc};
  ObservationModel b{sc};
  const auto frame = blankFrame(*sc, 1);
  const auto ia = a.createModel(frame, sc->truth[0]);
  const auto ib = b.createModel(frame, sc->truth[0]);
  const auto ma = a.respond(ia, frame, {{40, 40}, {20, 20}}, 10);
  const auto mb = b.respond(ib, frame, {{40, 40}, {20, 20}}, 10);
  EXPECT_TRUE(std::equal(ma.scores().begin(), ma.scores().end(), mb.scores().begin()));
}

TEST(Respond, LikelihoodFallsOnceThePeakLeavesTheWindow) {
  const auto sc = isolatedPeak({100, 80});
  ObservationModel obs{sc};
  const auto frame = blankFrame(*sc);
  const auto id = obs.createModel(frame, sc->truth[0]);
  const int radius = 10;
  const double start = radius + 3.0 * sc->targetWidth;
  double previous = std::numeric_limits<double>::infinity();
  for (double d = start; d < start + 40; d += 1.0) {
    const double l = likelihoodOf(obs.respond(id, frame, {{100 + d, 80}, {20, 20}}, radius));
    EXPECT_LE(l, previous) << "distance " << d;
    previous = l;
  }
}

TEST(Respond, CellsOutsideTheFrameScoreZero) {
  const auto sc = isolatedPeak({2, 2});
  ObservationModel obs{sc};
  const auto frame = blankFrame(*sc);
  const auto id = obs.createModel(frame, sc->truth[0]);
  const auto map = obs.respond(id, frame, {{-30, -30}, {20, 20}}, 4);
  EXPECT_EQ(map.center(), (Vec2{0, 0}));  // clamped into the frame
  EXPECT_EQ(map.at(0, 0), 0.0);
  EXPECT_GT(map.at(4, 4), 0.0);
}

TEST(Respond, Errors) {
  const auto sc = isolatedPeak({100, 80});
  ObservationModel obs{sc};
  const auto frame = blankFrame(*sc);
  EXPECT_THROW(obs.respond(99, frame, sc->truth[0], 5), std::invalid_argument);
  const auto id = obs.createModel(frame, sc->truth[0]);
  EXPECT_THROW(obs.respond(id, Frame{0, 10, 10, {}}, sc->truth[0], 5), std::invalid_argument);
  EXPECT_THROW(obs.respond(id, frame, sc->truth[0], 0), std::invalid_argument);
}

TEST(Respond, TemplateSelfCorrelationIsPerfect) {
  const auto frame = gradientFrame(120, 100);
  ObservationModel obs;
  const TargetState at{{60, 50}, {24, 18}};
  const auto id = obs.createModel(frame, at);
  const auto map = obs.respond(id, frame, at, 6);
  EXPECT_NEAR(map.at(6, 6), 1.0, 1e-12);
  EXPECT_EQ(peakOf(map).position, map.center());
}

TEST(Respond, TemplateMaximumAtSourceLocation) {
  const auto frame = gradientFrame(140, 120);
  ObservationModel obs;
  for (Vec2 p : {Vec2{40, 40}, Vec2{90, 70}, Vec2{70, 55}}) {
    const TargetState at{p, {30, 30}};
    const auto id = obs.createModel(frame, at);
    EXPECT_EQ(peakOf(obs.respond(id, frame, at, 5)).position, p);
  }
}

TEST(LikelihoodOf, ZeroAndOnes) {
  ResponseMap zeros{5, 5, {0, 0}};
  EXPECT_EQ(likelihoodOf(zeros), 0.0);
  ResponseMap ones{3, 3, {0, 0}};
  for (double& s : ones.scores()) s = 1.0;
  EXPECT_EQ(likelihoodOf(ones), 9.0);
}

TEST(LikelihoodOf, MatchesNaiveDoubleLoop) {
  RandomSource rng{31};
  ResponseMap map{31, 31, {0, 0}};
  for (double& s : map.scores()) s = rng.uniform(-0.2, 1.0);
  double expected = 0.0;
  for (int r = 0; r < 31; ++r) {
    for (int c = 0; c < 31; ++c) expected += map.at(r, c) > 0.0 ? map.at(r, c) : 0.0;
  }
  EXPECT_NEAR(likelihoodOf(map), expected, 1e-12);
}

TEST(UpdateModels, SyntheticModelsPassThrough) {
  const auto sc = isolatedPeak({100, 80});
  ObservationModel obs{sc};
  const auto frame = blankFrame(*sc);
  const auto id = obs.createModel(frame, sc->truth[0]);
  PosteriorMode mode;
  mode.peak = sc->truth[0];
  mode.weight = 1.0;
  mode.modelId = id;
  mode.likelihood = 100.0;
  const auto out = obs.updateModels(frame, {mode}, 0.5, 1.0);
  ASSERT_EQ(out.size(), 1U);
  EXPECT_EQ(out[0].modelId, id);
  EXPECT_FALSE(obs.model(id).patch.has_value());
}

TEST(UpdateModels, ZeroRateLeavesTemplateUnchanged) {
  const auto frame = gradientFrame(100, 100);
  ObservationModel obs;
  const auto id = obs.createModel(frame, {{50, 50}, {20, 20}});
  const auto before = obs.model(id).patch->pixels;
  Frame other = frame;
  for (auto& p : other.pixels) p = 1.0F - p;
  PosteriorMode mode{{{40, 45}, {20, 20}}, 1.0, 1, {}, id, 50.0};
  obs.updateModels(other, {mode}, 0.0, 0.0);
  EXPECT_EQ(obs.model(id).patch->pixels, before);
}

TEST(UpdateModels, UnitRateCopiesTheFramePatch) {
  const auto frame = gradientFrame(100, 100);
  ObservationModel obs;
  const auto id = obs.createModel(frame, {{50, 50}, {20, 20}});
  Frame flat{1, 100, 100, std::vector<float>(100 * 100, 0.5F)};
  PosteriorMode mode{{{50, 50}, {20, 20}}, 1.0, 1, {}, id, 50.0};
  obs.updateModels(flat, {mode}, 1.0, 0.0);
  for (double v : obs.model(id).patch->pixels) EXPECT_EQ(v, 0.5);
}

TEST(UpdateModels, LowLikelihoodSkipsTheUpdate) {
  const auto frame = gradientFrame(100, 100);
  ObservationModel obs;
  const auto id = obs.createModel(frame, {{50, 50}, {20, 20}});
  const auto before = obs.model(id).patch->pixels;
  Frame flat{1, 100, 100, std::vector<float>(100 * 100, 0.5F)};
  PosteriorMode mode{{{50, 50}, {20, 20}}, 1.0, 1, {}, id, 5.0};
  obs.updateModels(flat, {mode}, 1.0, 10.0);
  EXPECT_EQ(obs.model(id).patch->pixels, before);
}

TEST(UpdateModels, SharedModelsForkAndDroppedModelsRetire) {
  const auto frame = gradientFrame(100, 100);
  ObservationModel obs;
  const auto a = obs.createModel(frame, {{30, 30}, {20, 20}});
  const auto b = obs.createModel(frame, {{70, 70}, {20, 20}});
  const auto c = obs.createModel(frame, {{50, 50}, {20, 20}});
  std::vector<PosteriorMode> modes{{{{30, 30}, {20, 20}}, 0.2, 1, {}, a, 10.0},
                                   {{{32, 30}, {20, 20}}, 0.5, 1, {}, a, 10.0},
                                   {{{70, 70}, {20, 20}}, 0.3, 1, {}, b, 10.0}};
  const auto out = obs.updateModels(frame, modes, 0.01, 0.0);
  EXPECT_EQ(obs.modelCount(), out.size());
  EXPECT_EQ(out[1].modelId, a);  // highest-weight mode keeps the shared model
  EXPECT_NE(out[0].modelId, a);  // the other one gets a fork
  EXPECT_EQ(out[2].modelId, b);
  EXPECT_FALSE(obs.hasModel(c));
  EXPECT_THROW(obs.updateModels(frame, {{{{1, 1}, {2, 2}}, 1.0, 1, {}, c, 1.0}}, 0.1, 0.0),
               std::invalid_argument);
}

TEST(SyntheticScenario, OcclusionAttenuatesOnlyInsideTheWindow) {
  auto sc = isolatedPeak({50, 50}, 0.0, 40);
  sc->occlusions.push_back({20, 30, 0.9});
  for (int t = 0; t < 40; ++t) {
    EXPECT_DOUBLE_EQ(sc->targetVisibility(t), (t >= 20 && t < 30) ? 0.1 : 1.0) << t;
  }
  EXPECT_NEAR(sc->fieldAt(25, 50, 50), 0.1, 1e-12);
  EXPECT_NEAR(sc->fieldAt(19, 50, 50), 1.0, 1e-12);
}

}  // namespace
}  // namespace d2cip
