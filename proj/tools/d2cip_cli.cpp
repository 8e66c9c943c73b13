// Command-line front end: track, ablate, gen, metrics.

#include <d2cip/d2cip.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace d2cip;

namespace {

/// Config file values, then CLI `--set key=value` overrides, then D2CIP_SEED.
RunConfig loadConfig(const std::string& config_path, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = applyKeyValues(cfg, readKeyValues(config_path));
  KeyValues kv;
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    kv[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  cfg = applyKeyValues(cfg, kv);
  if (const char* env = std::getenv("D2CIP_SEED"); env && *env) {
    cfg = applyKeyValues(cfg, KeyValues{{"seed", env}});
  }
  return cfg;
}

Sequence loadSequence(const std::string& scenario_path, const std::string& frames_dir, Backend backend) {
  if (!scenario_path.empty()) {
    auto sc = std::make_shared<const SyntheticScenario>(scenarioFromJson(readJsonFile(scenario_path)));
    return makeSyntheticSequence(sc, backend == Backend::kTemplate, fs::path{scenario_path}.stem().string());
  }
  if (frames_dir.empty()) throw std::invalid_argument("either --scenario or --frames is required");
  if (backend == Backend::kSynthetic) {
    throw std::invalid_argument("the synthetic backend needs --scenario; use backend = template for frame folders");
  }
  Sequence seq;
  seq.name = fs::path{frames_dir}.filename().string();
  seq.frames = readFrameDirectory(frames_dir);
  seq.truth = readGroundTruth(fs::path{frames_dir} / "groundtruth.txt");
  return seq;
}

ScenarioParams scenarioParams(int frames, int width, int height, double noise) {
  ScenarioParams p;
  p.frames = frames;
  p.width = width;
  p.height = height;
  p.noiseStd = noise;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative correlation particle filter tracker"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "key = value config file");
    sub->add_option("--set", overrides, "override a config key (key=value), repeatable");
  };

  auto* track = app.add_subcommand("track", "track one sequence");
  std::string scenario_path;
  std::string frames_dir;
  std::string out_dir = ".";
  std::string trace_path;
  add_config(track);
  track->add_option("--scenario", scenario_path, "synthetic scenario.json");
  track->add_option("--frames", frames_dir, "directory with 000001.pgm ... and groundtruth.txt");
  track->add_option("-o,--out", out_dir, "output directory for result.json and metrics.csv");
  track->add_option("--trace", trace_path, "write per-frame refinement/posterior trace as JSON lines");

  auto* ablate = app.add_subcommand("ablate", "run the PF/IPF/IPFK/D2CIP ladder on the synthetic suite");
  std::string ablate_out = "ablation.csv";
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int per_kind = 5;
  int ablate_frames = 60;
  add_config(ablate);
  ablate->add_option("-o,--out", ablate_out, "ablation CSV path");
  ablate->add_option("--seeds", seeds, "tracker seeds")->expected(1, -1);
  ablate->add_option("--per-kind", per_kind, "sequences per scenario kind")->check(CLI::PositiveNumber);
  ablate->add_option("--frames", ablate_frames, "frames per sequence")->check(CLI::Range(2, 100000));

  auto* gen = app.add_subcommand("gen", "write a synthetic scenario to disk");
  std::string kind = "linear";
  std::string gen_out = "scenario";
  std::uint64_t gen_seed = 1;
  int gen_frames = 60;
  int gen_width = 320;
  int gen_height = 240;
  double gen_noise = 0.02;
  bool no_frames = false;
  gen->add_option("--kind", kind, "linear | fast-motion | occlusion | distractor");
  gen->add_option("-o,--out", gen_out, "output directory");
  gen->add_option("--seed", gen_seed, "scenario seed");
  gen->add_option("--frames", gen_frames, "frame count")->check(CLI::Range(1, 100000));
  gen->add_option("--width", gen_width, "frame width")->check(CLI::Range(8, 10000));
  gen->add_option("--height", gen_height, "frame height")->check(CLI::Range(8, 10000));
  gen->add_option("--noise", gen_noise, "noise standard deviation");
  gen->add_flag("--no-frames", no_frames, "only write scenario.json and groundtruth.txt");

  auto* metrics = app.add_subcommand("metrics", "recompute curves from a saved result.json");
  std::string result_path;
  std::string metrics_out = "metrics.csv";
  metrics->add_option("result", result_path, "result.json")->required();
  metrics->add_option("-o,--out", metrics_out, "metrics CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*track) {
      const auto cfg = loadConfig(config_path, overrides);
      const auto seq = loadSequence(scenario_path, frames_dir, cfg.backend);
      std::optional<std::ofstream> trace;
      if (!trace_path.empty()) {
        if (const auto parent = fs::path{trace_path}.parent_path(); !parent.empty()) fs::create_directories(parent);
        trace.emplace(trace_path);
        if (!*trace) throw std::runtime_error("cannot write " + trace_path);
      }
      FrameObserver observer;
      if (trace) observer = [&](const FrameTrace& ft) { *trace << traceLine(ft); };
      const auto result = runSequence(cfg, seq, observer);
      const auto m = computeMetrics(result);
      fs::create_directories(out_dir);
      writeTextFile(fs::path{out_dir} / "result.json", toJson(result).dump(2) + "\n");
      writeTextFile(fs::path{out_dir} / "metrics.csv", metricsCsv(m));
      std::cout << "frames " << result.frames.size() << "  precision@20 " << m.precisionAt20 << "  success AUC "
                << m.successAuc << "\n";
    } else if (*ablate) {
      auto cfg = loadConfig(config_path, overrides);
      if (cfg.backend != Backend::kSynthetic) throw std::invalid_argument("ablate runs on the synthetic suite only");
      ScenarioParams params;
      params.frames = ablate_frames;
      const auto suite = standardSuite(params, per_kind);
      if (const char* env = std::getenv("D2CIP_SEED"); env && *env) seeds = {cfg.seed};
      const auto table = runAblation(suite, cfg, seeds);
      writeTextFile(ablate_out, ablationCsv(table));
      std::cout << formatAblationTable(table);
    } else if (*gen) {
      const auto sc = generateScenario(parseScenarioKind(kind), scenarioParams(gen_frames, gen_width, gen_height,
                                                                              gen_noise),
                                       gen_seed);
      fs::create_directories(gen_out);
      writeTextFile(fs::path{gen_out} / "scenario.json", toJson(sc).dump(1) + "\n");
      writeGroundTruth(fs::path{gen_out} / "groundtruth.txt", sc.truth);
      if (!no_frames) {
        for (int t = 0; t < sc.frameCount(); ++t) writePgm(fs::path{gen_out} / frameFileName(t), sc.render(t));
      }
      std::cout << "wrote " << sc.frameCount() << " frames of '" << sc.kind << "' to " << gen_out << "\n";
    } else if (*metrics) {
      const auto result = trackResultFromJson(readJsonFile(result_path));
      const auto m = computeMetrics(result);
      writeTextFile(metrics_out, metricsCsv(m));
      std::cout << "precision@20 " << m.precisionAt20 << "  success AUC " << m.successAuc << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
