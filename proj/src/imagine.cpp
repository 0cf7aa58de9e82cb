#include "reacher/imagine.hpp"

#include <cmath>

namespace reacher {

using nets::Model;

std::string to_string(TraversalMethod m) {
  switch (m) {
    case TraversalMethod::task_driven: return "task_driven";
    case TraversalMethod::task_unaware: return "task_unaware";
    case TraversalMethod::random_walk: return "random_walk";
  }
  return "?";
}

namespace {

// One traversal step's graph: sigma estimate plus the task-loss gradient at
// the current latent. Model parameters enter as constants, so traversals are
// safe to run in parallel over read-only models.
struct StepEval {
  double sigma;
  std::vector<real_t> grad;
};

StepEval eval_step(Model<real_t>& m, const std::vector<real_t>& z_g, const std::vector<real_t>& z_t) {
  ad::Graph<real_t> g;
  Tensor<real_t> zg({static_cast<int>(z_g.size())}), zt({static_cast<int>(z_t.size())});
  std::copy(z_g.begin(), z_g.end(), zg.data());
  std::copy(z_t.begin(), z_t.end(), zt.data());
  const int zt_node = g.leaf(std::move(zt));
  const int logits = nets::classifier_logits(g, m.classifier, g.constant(std::move(zg)), zt_node, true);
  const int loss = g.softmax_xent(logits, 1);  // feasibility target rho_s = 1
  g.backward(loss);
  StepEval out;
  out.sigma = static_cast<double>(g.softmax_probs(loss)[1]);
  const Tensor<real_t>& gr = g.grad(zt_node);
  out.grad.assign(gr.data(), gr.data() + gr.numel());
  return out;
}

TrajectoryLog traverse(Model<real_t>& m, const Raster& task_raster, const Raster& init_tool_raster,
                       const ImagineConfig& cfg, TraversalMethod method, Rng* rng) {
  if (!m.task_trained)
    throw std::runtime_error("imagine: model has no phase-2 (task) training");
  TrajectoryLog log;
  log.method = method;

  const std::vector<real_t> z_g = nets::task_encode(m, task_raster);
  std::vector<real_t> z_t = nets::tool_encode(m, init_tool_raster);

  log.latent_snapshots.push_back(z_t);
  int since_snapshot = 0;
  for (int step = 0;; ++step) {
    StepEval ev = eval_step(m, z_g, z_t);
    log.sigma.push_back(ev.sigma);
    if (ev.sigma >= cfg.gamma) {
      log.stop_reason = "threshold";
      break;
    }
    if (step >= cfg.max_steps) {
      log.stop_reason = "max_steps";
      break;
    }
    if (method == TraversalMethod::random_walk) {
      const std::vector<real_t> delta = random_walk_step(ev.grad, cfg.rw_scale, *rng);
      for (size_t i = 0; i < z_t.size(); ++i) z_t[i] += delta[i];
    } else {
      const double dir = cfg.literal_sign ? 1.0 : -1.0;  // descend the loss by default
      for (size_t i = 0; i < z_t.size(); ++i)
        z_t[i] += static_cast<real_t>(dir * cfg.eta * static_cast<double>(ev.grad[i]));
    }
    ++log.steps;
    if (++since_snapshot == cfg.snapshot_cadence) {
      log.latent_snapshots.push_back(z_t);
      since_snapshot = 0;
    }
  }
  log.final_decode = nets::tool_decode(m, z_t);
  return log;
}

}  // namespace

TrajectoryLog imagine(Model<real_t>& m, const Raster& task_raster, const Raster& init_tool_raster,
                      const ImagineConfig& cfg) {
  return traverse(m, task_raster, init_tool_raster, cfg, TraversalMethod::task_driven, nullptr);
}

TrajectoryLog random_walk(Model<real_t>& m, const Raster& task_raster,
                          const Raster& init_tool_raster, const ImagineConfig& cfg, Rng& rng) {
  return traverse(m, task_raster, init_tool_raster, cfg, TraversalMethod::random_walk, &rng);
}

std::vector<real_t> random_walk_step(const std::vector<real_t>& grad, double scale, Rng& rng) {
  // isotropic Gaussian, mean 0, per-coordinate variance scale * |g_k|
  std::vector<real_t> delta(grad.size());
  for (size_t i = 0; i < grad.size(); ++i) {
    const double var = scale * std::abs(static_cast<double>(grad[i]));
    delta[i] = static_cast<real_t>(rng.normal() * std::sqrt(var));
  }
  return delta;
}

bool evaluate_imagined(TrajectoryLog& log, const Scenario& scn, const OracleConfig& oracle,
                       double binarize_threshold) {
  Raster bin(1, log.final_decode.height, log.final_decode.width);
  for (size_t i = 0; i < bin.values.size(); ++i)
    bin.values[i] = log.final_decode.values[i] >= binarize_threshold ? 1.0 : 0.0;
  const RasterVerdict v = raster_feasible(scn, bin, oracle);
  log.evaluated = true;
  log.feasible_verdict = v.feasible;
  log.empty_decode = v.empty_tool;
  return v.feasible;
}

ToolSpec warm_start_pick(const Scenario& scn, const OracleConfig& oracle, const ToolRanges& ranges,
                         Rng& rng, int budget) {
  for (int attempt = 0; attempt < budget; ++attempt) {
    ToolSpec t = sample_tool(rng, ranges);
    if (!kit_feasible(scn, oracle, t)) return t;
  }
  throw std::runtime_error("warm_start_pick: budget exhausted");
}

}  // namespace reacher
