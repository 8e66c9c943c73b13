#include <d2cip/ablation.hpp>
#include <d2cip/serialization.hpp>

#include <gtest/gtest.h>

namespace d2cip {
namespace {

Sequence linearSequence(double noise, int frames = 40) {
  ScenarioParams params;
  params.frames = frames;
  params.noiseStd = noise;
  params.start = Vec2{80, 100};
  params.velocity = Vec2{2, 0.5};
  return makeSyntheticSequence(
      std::make_shared<const SyntheticScenario>(generateScenario(ScenarioKind::kLinear, params, 1)));
}

TEST(RunSequence, NoiselessLinearMotionIsTrackedToAPixel) {
  const auto seq = linearSequence(0.0);
  const auto result = runSequence({}, seq);
  ASSERT_EQ(result.frames.size(), seq.frames.size());
  int within = 0;
  for (const auto& f : result.frames) within += centerError(f.estimate, f.truth) <= 1.0 ? 1 : 0;
  EXPECT_GE(within, static_cast<int>(std::ceil(0.95 * static_cast<double>(result.frames.size()))));
}

TEST(RunSequence, SingleFrameSequenceIsRejected) {
  auto seq = linearSequence(0.0, 1);
  EXPECT_THROW(runSequence({}, seq), std::invalid_argument);
}

TEST(RunSequence, TruthLengthMismatchIsRejected) {
  auto seq = linearSequence(0.0, 5);
  seq.truth.pop_back();
  EXPECT_THROW(runSequence({}, seq), std::invalid_argument);
}

TEST(RunSequence, SameConfigSameResult) {
  const auto seq = makeSyntheticSequence(
      std::make_shared<const SyntheticScenario>(generateScenario(ScenarioKind::kDistractor, {}, 2)));
  for (auto v : kAllVariants) {
    RunConfig cfg;
    cfg.variant = v;
    cfg.seed = 11;
    const auto a = toJson(runSequence(cfg, seq)).dump();
    const auto b = toJson(runSequence(cfg, seq)).dump();
    EXPECT_EQ(a, b) << toString(v);
  }
}

TEST(RunSequence, ClusteringWithOneClusterEqualsPlainRefinement) {
  const auto seq = makeSyntheticSequence(
      std::make_shared<const SyntheticScenario>(generateScenario(ScenarioKind::kDistractor, {}, 3)));
  RunConfig cfg;
  cfg.kMax = 1;
  cfg.variant = Variant::kIPF;
  const auto ipf = runSequence(cfg, seq);
  cfg.variant = Variant::kIPFK;
  const auto ipfk = runSequence(cfg, seq);
  ASSERT_EQ(ipf.frames.size(), ipfk.frames.size());
  for (std::size_t i = 0; i < ipf.frames.size(); ++i) EXPECT_EQ(ipf.frames[i].estimate, ipfk.frames[i].estimate);
}

TEST(RunSequence, TemplateBackendTracksRenderedFrames) {
  ScenarioParams params;
  params.frames = 12;
  params.start = Vec2{100, 110};
  params.velocity = Vec2{2, 0};
  const auto sc = std::make_shared<const SyntheticScenario>(generateScenario(ScenarioKind::kLinear, params, 1));
  const auto seq = makeSyntheticSequence(sc, true);
  RunConfig cfg;
  cfg.backend = Backend::kTemplate;
  cfg.nTotal = 30;
  cfg.gridRadius = 8;
  const auto m = computeMetrics(runSequence(cfg, seq));
  EXPECT_GE(m.precisionAt20, 0.9);
}

TEST(RunSequence, ObserverSeesEveryFrameAfterTheFirst) {
  const auto seq = linearSequence(0.02, 12);
  int calls = 0;
  runSequence({}, seq, [&](const FrameTrace& trace) {
    ++calls;
    ASSERT_NE(trace.posterior, nullptr);
    ASSERT_TRUE(trace.selected.has_value());
    EXPECT_LT(*trace.selected, trace.posterior->modes.size());
    EXPECT_FALSE(traceLine(trace).empty());
  });
  EXPECT_EQ(calls, 11);
}

TEST(RunSequence, LostFramesHoldTheLastEstimate) {
  ScenarioParams params;
  params.frames = 20;
  params.noiseStd = 0.0;
  params.occlusionStart = 8;
  params.occlusionLength = 4;
  params.occlusionAttenuation = 1.0;  // target vanishes completely
  const auto seq = makeSyntheticSequence(
      std::make_shared<const SyntheticScenario>(generateScenario(ScenarioKind::kOcclusion, params, 1)));
  const auto result = runSequence({}, seq);
  bool saw_lost = false;
  for (std::size_t i = 1; i < result.frames.size(); ++i) {
    if (result.frames[i].lost) {
      saw_lost = true;
      EXPECT_EQ(result.frames[i].estimate, result.frames[i - 1].estimate);
    }
  }
  EXPECT_TRUE(saw_lost);
}

TEST(RunAblation, OneSequenceOneSeedGivesFourRows) {
  const std::vector<Sequence> suite{linearSequence(0.02, 15)};
  const std::vector<std::uint64_t> seeds{1};
  const auto table = runAblation(suite, {}, seeds);
  ASSERT_EQ(table.rows.size(), 4U);
  EXPECT_EQ(table.row(Variant::kPF).aucGain, 0.0);
  for (const auto& r : table.rows) {
    EXPECT_EQ(r.runs, 1);
    EXPECT_EQ(r.failedRuns, 0);
  }
  const auto csv = ablationCsv(table);
  EXPECT_EQ(csv.rfind("variant,metric,value,gain\n", 0), 0U);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}

TEST(RunAblation, EasySuiteHasSmallGains) {
  const std::vector<Sequence> suite{linearSequence(0.0, 20)};
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto table = runAblation(suite, {}, seeds);
  for (const auto& r : table.rows) EXPECT_GT(r.auc, 0.7);
  EXPECT_NEAR(table.row(Variant::kD2CIP).precision, table.row(Variant::kPF).precision, 0.05);
}

TEST(RunConfig, SigmaScalesWithTheTarget) {
  RunConfig cfg;
  const auto s = cfg.sigmaFor({{0, 0}, {40, 20}});
  EXPECT_DOUBLE_EQ(s[0], 0.05 * 30);
  EXPECT_DOUBLE_EQ(s[2], 0.02 * 40);
  EXPECT_DOUBLE_EQ(s[3], 0.02 * 20);
  EXPECT_EQ(s[4], 0.0);
}

}  // namespace
}  // namespace d2cip
