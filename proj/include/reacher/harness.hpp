#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "reacher/imagine.hpp"
#include "reacher/model.hpp"
#include "reacher/scenegen.hpp"

namespace reacher {

struct EvalRow {
  int n = 0;
  int successes = 0;
  double mean_pct = 0.0;
  double ci_pct = 0.0;
};

// One method column of the results table: per-scenario-type rows + total.
struct EvalTable {
  std::string method;
  std::array<EvalRow, 5> per_type{};
  EvalRow total{};
  void finalize();  // fills total and the CI columns
};

// Normal-approximation 95% interval, in percentage points.
std::pair<double, double> confidence_interval(int successes, int n);

struct HarnessConfig {
  int selection_per_type = 100;
  int imagination_per_type = 50;
  uint64_t seed = 0;
  int resolution = 64;
  OracleConfig oracle;
  ToolRanges ranges;
  ImagineConfig imagine;
  int scenario_budget = 50;  // scenario resamples per instance
  int probe_budget = 600;    // tool draws when probing solvability
  int strip_samples = 2;     // instances per (type, method) that keep decodes
};

// Scores three candidate tools for a scenario; higher = more promising. The
// oracle config is the one the instance's toolkit was built with.
using ToolScorer =
    std::function<std::array<double, 3>(const Scenario&, const Raster& task_raster,
                                        const std::array<ToolSpec, 3>&, const OracleConfig&)>;

// Argmax-over-toolkit selection accuracy; exact ties count as failures.
EvalTable tool_selection_eval_scored(const HarnessConfig& cfg, const ToolScorer& scorer,
                                     const std::string& method_name);
EvalTable tool_selection_eval(nets::Model<real_t>& m, const HarnessConfig& cfg,
                              const std::string& method_name);

struct InstanceTrajectories {
  std::string id;
  ScnType type = ScnType::A;
  ToolSpec warm_tool;
  std::vector<TrajectoryLog> logs;             // one per method
  std::vector<std::vector<Raster>> snapshot_decodes;  // per method; only sampled instances
};

struct ImaginationEval {
  EvalTable random_walk, task_unaware, task_driven;
  std::vector<InstanceTrajectories> instances;
};

// Warm-starts each instance once and runs all three traversal methods on it;
// random_walk uses the task-driven latent space.
ImaginationEval imagination_eval(nets::Model<real_t>& driven, nets::Model<real_t>& unaware,
                                 const HarnessConfig& cfg);

struct ReportInputs {
  std::vector<EvalTable> selection;    // method columns, left to right
  std::vector<EvalTable> imagination;  // method columns, left to right
  const std::vector<InstanceTrajectories>* instances = nullptr;
  std::string config_dump;  // hashed into the run manifest
  std::vector<std::string> checkpoint_paths;
  uint64_t seed = 0;
};

// results.csv (Table-1-shaped), trajectories.jsonl, PNG evolution strips for
// sampled instances, and a run manifest.
void emit_report(const ReportInputs& in, const std::string& out_dir);

// tables round-trip as JSON so `report` can merge separate eval runs
void save_eval_tables(const std::vector<EvalTable>& tables, const std::string& path);
std::vector<EvalTable> load_eval_tables(const std::string& path);

}  // namespace reacher
