#pragma once

#include <string>
#include <vector>

#include "reacher/model.hpp"
#include "reacher/scenegen.hpp"

namespace reacher {

struct ImagineConfig {
  double eta = 0.01;        // traversal step size
  int max_steps = 10000;    // S
  double gamma = 0.997;     // stop threshold on the success estimate
  int snapshot_cadence = 100;
  bool literal_sign = false;  // apply the update with the printed +eta sign
  double rw_scale = 1.0;      // random-walk variance scale factor
  double binarize_threshold = 0.5;
};

enum class TraversalMethod { task_driven, task_unaware, random_walk };

std::string to_string(TraversalMethod m);

struct TrajectoryLog {
  std::string instance_id;
  TraversalMethod method = TraversalMethod::task_driven;
  std::vector<double> sigma;  // success estimate before each update, then final
  std::vector<std::vector<real_t>> latent_snapshots;
  int steps = 0;  // updates applied
  std::string stop_reason;  // "threshold" | "max_steps"
  Raster final_decode;      // decoded occupancy probabilities
  bool evaluated = false;
  bool feasible_verdict = false;
  bool empty_decode = false;
};

// Activation-maximization traversal: z_T descends the task loss toward the
// feasibility target rho = 1 while z_G and all model parameters stay fixed.
// Requires a phase-2-trained checkpoint.
TrajectoryLog imagine(nets::Model<real_t>& m, const Raster& task_raster,
                      const Raster& init_tool_raster, const ImagineConfig& cfg);

// Baseline: at each step z_T moves by a zero-mean Gaussian sample whose
// per-coordinate variance is |g|, the magnitude of the true loss gradient.
TrajectoryLog random_walk(nets::Model<real_t>& m, const Raster& task_raster,
                          const Raster& init_tool_raster, const ImagineConfig& cfg, Rng& rng);

// the single perturbation the random walk applies per step
std::vector<real_t> random_walk_step(const std::vector<real_t>& grad, double scale, Rng& rng);

// Binarize the final decode and run the raster feasibility check.
bool evaluate_imagined(TrajectoryLog& log, const Scenario& scn, const OracleConfig& oracle,
                       double binarize_threshold = 0.5);

// An oracle-infeasible tool for the scenario, reused across every method of
// one instance.
ToolSpec warm_start_pick(const Scenario& scn, const OracleConfig& oracle, const ToolRanges& ranges,
                         Rng& rng, int budget = 600);

}  // namespace reacher
