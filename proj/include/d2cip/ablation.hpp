#pragma once

#include <d2cip/metrics.hpp>
#include <d2cip/scenario.hpp>
#include <d2cip/tracker.hpp>

#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

/**
 * \file
 * \brief The PF / IPF / IPFK / D2CIP ablation ladder over a suite of sequences and seeds.
 */

namespace d2cip {

struct AblationRow {
  Variant variant{Variant::kPF};
  double precision{0.0};  ///< mean precision at 20 px
  double auc{0.0};        ///< mean success AUC
  /// Relative gains over the PF row, in percent.
  double precisionGain{0.0};
  double aucGain{0.0};
  int runs{0};
  int failedRuns{0};
  int lostFrames{0};
};

struct AblationTable {
  std::vector<AblationRow> rows;
  int sequences{0};
  int seeds{0};

  [[nodiscard]] const AblationRow& row(Variant v) const {
    for (const auto& r : rows) {
      if (r.variant == v) return r;
    }
    throw std::out_of_range("ablation table has no row for " + std::string{toString(v)});
  }
};

/// Five sequences of each scenario kind, scenario seeds 1..per_kind.
inline std::vector<Sequence> standardSuite(const ScenarioParams& params = {}, int per_kind = 5) {
  std::vector<Sequence> suite;
  for (auto kind : {ScenarioKind::kLinear, ScenarioKind::kFastMotion, ScenarioKind::kOcclusion,
                    ScenarioKind::kDistractor}) {
    for (int i = 1; i <= per_kind; ++i) {
      auto sc = std::make_shared<const SyntheticScenario>(generateScenario(kind, params, static_cast<std::uint64_t>(i)));
      suite.push_back(makeSyntheticSequence(sc, false, std::string{toString(kind)} + "-" + std::to_string(i)));
    }
  }
  return suite;
}

/// Called after every successful run of an ablation with the run's metrics.
using AblationRunObserver =
    std::function<void(const Sequence& sequence, Variant variant, std::uint64_t seed, const Metrics& metrics)>;

/**
 * Runs every variant on every sequence for every seed and averages precision(20) and success AUC. A run that throws
 * is recorded as a failed run scoring zero rather than aborting the table.
 */
inline AblationTable runAblation(std::span<const Sequence> suite, const RunConfig& base,
                                 std::span<const std::uint64_t> seeds,
                                 std::span<const Variant> variants = kAllVariants,
                                 const AblationRunObserver& on_run = {}) {
  if (suite.empty()) throw std::invalid_argument("runAblation: empty suite");
  if (seeds.empty()) throw std::invalid_argument("runAblation: no seeds");
  AblationTable table;
  table.sequences = static_cast<int>(suite.size());
  table.seeds = static_cast<int>(seeds.size());
  for (auto variant : variants) {
    AblationRow row;
    row.variant = variant;
    RunConfig cfg = base;
    cfg.variant = variant;
    for (const auto& seq : suite) {
      for (auto seed : seeds) {
        cfg.seed = seed;
        ++row.runs;
        try {
          const auto result = runSequence(cfg, seq);
          const auto m = computeMetrics(result);
          if (on_run) on_run(seq, variant, seed, m);
          row.precision += m.precisionAt20;
          row.auc += m.successAuc;
          for (const auto& f : result.frames) row.lostFrames += f.lost ? 1 : 0;
        } catch (const std::exception&) {
          ++row.failedRuns;
        }
      }
    }
    row.precision /= row.runs;
    row.auc /= row.runs;
    table.rows.push_back(row);
  }
  const AblationRow* baseline = nullptr;
  for (const auto& r : table.rows) {
    if (r.variant == Variant::kPF) baseline = &r;
  }
  if (baseline) {
    const double p0 = baseline->precision;
    const double a0 = baseline->auc;
    for (auto& r : table.rows) {
      r.precisionGain = p0 > 0.0 ? 100.0 * (r.precision - p0) / p0 : 0.0;
      r.aucGain = a0 > 0.0 ? 100.0 * (r.auc - a0) / a0 : 0.0;
    }
  }
  return table;
}

/// Rows `variant,metric,value,gain`; values are fractions, gains are percent relative to PF.
inline std::string ablationCsv(const AblationTable& table) {
  std::ostringstream out;
  out << "variant,metric,value,gain\n";
  char buf[128];
  for (const auto& r : table.rows) {
    const auto name = std::string{toString(r.variant)};
    std::snprintf(buf, sizeof(buf), "%s,precision20,%.6f,%.4f\n", name.c_str(), r.precision, r.precisionGain);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%s,success_auc,%.6f,%.4f\n", name.c_str(), r.auc, r.aucGain);
    out << buf;
  }
  return out.str();
}

/// Fixed-width text rendering of the ladder.
inline std::string formatAblationTable(const AblationTable& table) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d sequences x %d seeds\n", table.sequences, table.seeds);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%-8s %-22s %-22s %s\n", "Variant", "Precision@20", "Success AUC", "Lost frames");
  out << buf;
  for (const auto& r : table.rows) {
    char p[32];
    char a[32];
    std::snprintf(p, sizeof(p), "%5.1f%% (%+.1f%%)", 100.0 * r.precision, r.precisionGain);
    std::snprintf(a, sizeof(a), "%5.1f%% (%+.1f%%)", 100.0 * r.auc, r.aucGain);
    std::snprintf(buf, sizeof(buf), "%-8s %-22s %-22s %d\n", std::string{toString(r.variant)}.c_str(), p, a,
                  r.lostFrames);
    out << buf;
  }
  return out.str();
}

}  // namespace d2cip
