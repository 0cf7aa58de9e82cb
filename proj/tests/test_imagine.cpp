#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "reacher/imagine.hpp"

using namespace reacher;

namespace {

ArchConfig tiny_arch() {
  ArchConfig a;
  a.resolution = 16;
  a.encoder_channels = {3, 4};
  a.z_g = 8;
  a.z_t = 8;
  a.classifier_hidden = {12, 6};
  a.decoder_hidden = {16, 32};
  return a;
}

nets::Model<real_t> tiny_model(uint64_t seed) {
  nets::Model<real_t> m = nets::init_model<real_t>(tiny_arch(), seed);
  m.task_trained = true;
  return m;
}

Raster random_binary_raster(int channels, int res, uint64_t seed, double p = 0.2) {
  Rng rng(seed);
  Raster r(channels, res, res);
  for (double& v : r.values) v = rng.bernoulli(p) ? 1.0 : 0.0;
  return r;
}

// pin the classifier output by zeroing its last layer and setting the bias
void rig_logits(nets::Model<real_t>& m, real_t logit0, real_t logit1) {
  m.classifier.w.back().value.fill(0);
  m.classifier.b.back().value[0] = logit0;
  m.classifier.b.back().value[1] = logit1;
}

}  // namespace

TEST_CASE("threshold stop at step zero") {
  nets::Model<real_t> m = tiny_model(3);
  rig_logits(m, -8.0f, 8.0f);  // sigma ~ 1
  ImagineConfig cfg;
  cfg.max_steps = 50;
  cfg.snapshot_cadence = 10;
  Raster task = random_binary_raster(3, 16, 5);
  Raster tool = random_binary_raster(1, 16, 6);
  TrajectoryLog log = imagine(m, task, tool, cfg);
  CHECK(log.stop_reason == "threshold");
  CHECK(log.steps == 0);
  CHECK(log.sigma.size() == 1);
  CHECK(log.sigma[0] >= cfg.gamma);
  CHECK(log.latent_snapshots.size() == 1);
  // z_T unchanged: the single snapshot equals the encoding
  CHECK(log.latent_snapshots[0] == nets::tool_encode(m, tool));
}

TEST_CASE("eta zero runs to max_steps unchanged") {
  nets::Model<real_t> m = tiny_model(4);
  rig_logits(m, 8.0f, -8.0f);  // sigma ~ 0, never meets gamma
  ImagineConfig cfg;
  cfg.eta = 0.0;
  cfg.max_steps = 40;
  cfg.snapshot_cadence = 1;
  Raster task = random_binary_raster(3, 16, 7);
  Raster tool = random_binary_raster(1, 16, 8);
  TrajectoryLog log = imagine(m, task, tool, cfg);
  CHECK(log.stop_reason == "max_steps");
  CHECK(log.steps == 40);
  CHECK(log.sigma.size() == 41);
  for (double s : log.sigma) CHECK(s < cfg.gamma);
  CHECK(log.latent_snapshots.size() == 41);  // floor(steps/cadence) + 1
  for (const auto& z : log.latent_snapshots) CHECK(z == log.latent_snapshots[0]);
}

TEST_CASE("zero gradient is a fixed point for both methods") {
  nets::Model<real_t> m = tiny_model(5);
  // zero first classifier layer: logits constant in z, gradient identically 0
  m.classifier.w[0].value.fill(0);
  m.classifier.b[0].value.fill(0);
  ImagineConfig cfg;
  cfg.max_steps = 25;
  cfg.snapshot_cadence = 1;
  Raster task = random_binary_raster(3, 16, 9);
  Raster tool = random_binary_raster(1, 16, 10);

  TrajectoryLog li = imagine(m, task, tool, cfg);
  for (const auto& z : li.latent_snapshots) CHECK(z == li.latent_snapshots[0]);

  Rng rng(77);
  TrajectoryLog lr = random_walk(m, task, tool, cfg, rng);
  for (const auto& z : lr.latent_snapshots) CHECK(z == lr.latent_snapshots[0]);
}

TEST_CASE("model parameters and task embedding stay bit-identical") {
  nets::Model<real_t> m = tiny_model(6);
  ImagineConfig cfg;
  cfg.max_steps = 30;
  Raster task = random_binary_raster(3, 16, 11);
  Raster tool = random_binary_raster(1, 16, 12);
  const std::vector<real_t> zg_before = nets::task_encode(m, task);

  std::vector<Tensor<real_t>> before;
  for (auto* p : m.all_params()) before.push_back(p->value.clone());
  TrajectoryLog log = imagine(m, task, tool, cfg);
  (void)log;
  size_t k = 0;
  for (auto* p : m.all_params()) {
    CHECK(std::memcmp(p->value.data(), before[k].data(), p->value.numel() * sizeof(real_t)) == 0);
    ++k;
  }
  CHECK(nets::task_encode(m, task) == zg_before);
}

TEST_CASE("traversal requires a phase-2 checkpoint") {
  nets::Model<real_t> m = nets::init_model<real_t>(tiny_arch(), 7);
  REQUIRE_FALSE(m.task_trained);
  ImagineConfig cfg;
  Raster task = random_binary_raster(3, 16, 13);
  Raster tool = random_binary_raster(1, 16, 14);
  CHECK_THROWS_AS(imagine(m, task, tool, cfg), std::runtime_error);
}

TEST_CASE("stop contract on randomized models") {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    nets::Model<real_t> m = tiny_model(100 + seed);
    ImagineConfig cfg;
    cfg.max_steps = 20;
    cfg.gamma = 0.6;
    cfg.eta = 0.5;  // deliberately large; sigma may cross the threshold
    Raster task = random_binary_raster(3, 16, 200 + seed);
    Raster tool = random_binary_raster(1, 16, 300 + seed);
    TrajectoryLog log = imagine(m, task, tool, cfg);
    for (double s : log.sigma) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
    if (log.stop_reason == "threshold") {
      CHECK(log.sigma.back() >= cfg.gamma);
    } else {
      CHECK(log.stop_reason == "max_steps");
      for (double s : log.sigma) CHECK(s < cfg.gamma);
      CHECK(log.steps == cfg.max_steps);
    }
    CHECK(log.latent_snapshots.size() ==
          static_cast<size_t>(log.steps / cfg.snapshot_cadence) + 1);
  }
}

TEST_CASE("random walk variance matches |g|") {
  Rng rng(41);
  std::vector<real_t> grad(6);
  grad[0] = 0.0f;
  grad[1] = 0.5f;
  grad[2] = -0.5f;
  grad[3] = 2.0f;
  grad[4] = -0.003f;
  grad[5] = 1.0f;
  const int n = 10000;
  std::vector<double> sum(grad.size(), 0.0), sumsq(grad.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    auto d = random_walk_step(grad, 1.0, rng);
    for (size_t k = 0; k < grad.size(); ++k) {
      sum[k] += d[k];
      sumsq[k] += static_cast<double>(d[k]) * d[k];
    }
  }
  for (size_t k = 0; k < grad.size(); ++k) {
    const double var_expect = std::abs(static_cast<double>(grad[k]));
    const double var_hat = (sumsq[k] - sum[k] * sum[k] / n) / (n - 1);
    // sampling sd of the variance estimator for a normal: var * sqrt(2/(n-1))
    const double sd = var_expect * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(var_hat - var_expect) <= 3 * sd + 1e-12);
  }
  // zero gradient coordinate never moves
  for (int i = 0; i < 100; ++i) CHECK(random_walk_step(grad, 1.0, rng)[0] == 0.0f);

  // the scale knob multiplies the variance
  std::vector<real_t> g1(1, 1.0f);
  double s2 = 0;
  for (int i = 0; i < n; ++i) {
    auto d = random_walk_step(g1, 4.0, rng);
    s2 += static_cast<double>(d[0]) * d[0];
  }
  CHECK(s2 / n == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("evaluate_imagined flags empty decodes") {
  nets::Model<real_t> m = tiny_model(8);
  // pin the decoder output near zero
  m.decoder.w.back().value.fill(0);
  m.decoder.b.back().value.fill(-20.0f);
  ImagineConfig cfg;
  cfg.max_steps = 3;
  Raster task = random_binary_raster(3, 16, 15);
  Raster tool = random_binary_raster(1, 16, 16);
  TrajectoryLog log = imagine(m, task, tool, cfg);

  Scenario scn;
  scn.type = ScnType::A;
  scn.boundary_y = 0.2;
  scn.target = {0.5, 0.55};
  OracleConfig oracle;
  const bool verdict = evaluate_imagined(log, scn, oracle);
  CHECK_FALSE(verdict);
  CHECK(log.evaluated);
  CHECK(log.feasible_verdict == verdict);
  CHECK(log.empty_decode);
}

TEST_CASE("warm start picks are infeasible and reproducible") {
  OracleConfig oracle;
  ToolRanges ranges;
  int distinct = 0;
  ToolSpec prev{};
  for (int i = 0; i < 25; ++i) {
    Rng rng(derive_seed(9, "warm_test", i));
    Scenario scn = sample_scenario(ScnType::B, rng);
    OracleConfig oc = oracle;
    oc.seed = derive_seed(9, "warm_oracle", i);
    Rng wrng(derive_seed(9, "warm_pick", i));
    ToolSpec pick = warm_start_pick(scn, oc, ranges, wrng);
    CHECK_FALSE(kit_feasible(scn, oc, pick));

    // identical derived seed -> identical pick
    Rng wrng2(derive_seed(9, "warm_pick", i));
    ToolSpec again = warm_start_pick(scn, oc, ranges, wrng2);
    CHECK(again.handle_length == pick.handle_length);
    CHECK(again.handle_width == pick.handle_width);
    if (i > 0 && (pick.handle_length != prev.handle_length || pick.kind != prev.kind)) ++distinct;
    prev = pick;
  }
  CHECK(distinct > 15);  // picks vary across instances
}
