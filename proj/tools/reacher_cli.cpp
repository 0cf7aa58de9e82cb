// Command-line front end: dataset generation, training, the two evaluation
// protocols, single-instance imagination, gradient checking, and report
// assembly.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "reacher/config.hpp"
#include "reacher/gradcheck_suite.hpp"
#include "reacher/harness.hpp"
#include "reacher/image_io.hpp"
#include "reacher/imagine.hpp"
#include "reacher/train.hpp"

using namespace reacher;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string profile = "desk";
  std::string config_path;
  uint64_t seed = 1;
  bool seed_set = false;
};

Settings settings_from(const CommonOpts& c) {
  Settings s = make_profile(c.profile);
  if (!c.config_path.empty()) apply_config_file(s, c.config_path);
  if (c.seed_set) {
    s.seed = c.seed;
    s.sync();
  }
  return s;
}

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--profile", c.profile, "paper_scale | desk | ci")
      ->check(CLI::IsMember({"paper_scale", "desk", "ci"}));
  cmd->add_option("--config", c.config_path, "key = value config file");
  cmd->add_option("--seed", c.seed, "master seed")->each([&c](const std::string&) { c.seed_set = true; });
}

void print_table(const EvalTable& t) {
  std::printf("%-14s", t.method.c_str());
  for (const EvalRow& r : t.per_type) std::printf("  %5.1f ±%4.1f", r.mean_pct, r.ci_pct);
  std::printf("  | total %5.1f ±%4.1f (%d/%d)\n", t.total.mean_pct, t.total.ci_pct,
              t.total.successes, t.total.n);
}

int run_gen_data(const CommonOpts& c, const std::string& out) {
  Settings s = settings_from(c);
  DatasetManifest m = generate_dataset(s.dataset, out);
  std::printf("dataset: %zu instances -> %s\n", m.records.size(), out.c_str());
  return 0;
}

int run_train(const CommonOpts& c, const std::string& data, const std::string& out,
              const std::string& mode) {
  Settings s = settings_from(c);
  s.train.mode = mode == "task-unaware" ? TrainMode::task_unaware : TrainMode::task_driven;
  s.train.out_dir = out;
  s.train.verbose = true;
  LoadedDataset ds = load_dataset(data);
  TrainResult r = train(ds, s.arch, s.train);
  std::printf("best checkpoint: %s (step %ld, val task loss %.4f)\n", r.best.path.c_str(),
              r.best.step, r.best.val_task_loss);
  return 0;
}

int run_eval_select(const CommonOpts& c, const std::string& ckpt_driven,
                    const std::string& ckpt_unaware, const std::string& out) {
  Settings s = settings_from(c);
  fs::create_directories(out);
  std::vector<EvalTable> tables;
  if (!ckpt_unaware.empty()) {
    nets::Model<real_t> m = nets::load_checkpoint<real_t>(ckpt_unaware);
    tables.push_back(tool_selection_eval(m, s.harness, "sel_task_unaware"));
    print_table(tables.back());
  }
  if (!ckpt_driven.empty()) {
    nets::Model<real_t> m = nets::load_checkpoint<real_t>(ckpt_driven);
    tables.push_back(tool_selection_eval(m, s.harness, "sel_task_driven"));
    print_table(tables.back());
  }
  if (tables.empty()) throw std::runtime_error("eval-select: provide at least one checkpoint");
  save_eval_tables(tables, out + "/eval_selection.json");
  return 0;
}

int run_eval_imagine(const CommonOpts& c, const std::string& ckpt_driven,
                     const std::string& ckpt_unaware, const std::string& out) {
  Settings s = settings_from(c);
  fs::create_directories(out);
  nets::Model<real_t> driven = nets::load_checkpoint<real_t>(ckpt_driven);
  nets::Model<real_t> unaware = nets::load_checkpoint<real_t>(ckpt_unaware);
  ImaginationEval ev = imagination_eval(driven, unaware, s.harness);
  for (const EvalTable* t : {&ev.random_walk, &ev.task_unaware, &ev.task_driven}) print_table(*t);
  std::vector<EvalTable> tables{ev.random_walk, ev.task_unaware, ev.task_driven};
  for (EvalTable& t : tables) t.method = "imag_" + t.method;
  save_eval_tables(tables, out + "/eval_imagination.json");
  ReportInputs rin;
  rin.imagination = tables;
  rin.instances = &ev.instances;
  rin.config_dump = s.dump();
  rin.checkpoint_paths = {ckpt_driven, ckpt_unaware};
  rin.seed = s.seed;
  emit_report(rin, out);
  return 0;
}

int run_imagine_one(const CommonOpts& c, const std::string& ckpt, const std::string& type_str,
                    int index, const std::string& out) {
  Settings s = settings_from(c);
  fs::create_directories(out);
  nets::Model<real_t> m = nets::load_checkpoint<real_t>(ckpt);
  HarnessConfig hc = s.harness;
  hc.imagination_per_type = index + 1;
  hc.strip_samples = index + 1;

  const ScnType type = scn_type_from_string(type_str);
  const uint64_t seed = derive_seed(hc.seed, "imag_" + to_string(type), index);
  // replicate one instance of the imagination protocol, verbosely
  Rng rng(derive_seed(seed, "imag_scn", 0));
  Scenario scn;
  ToolSpec warm;
  OracleConfig oc = hc.oracle;
  for (int outer = 0; outer < hc.scenario_budget; ++outer) {
    Rng srng(derive_seed(seed, "imag_scn", outer));
    scn = sample_scenario(type, srng);
    oc.seed = derive_seed(seed, "imag_oracle", outer);
    bool solvable = false;
    for (int t = 0; t < hc.probe_budget && !solvable; ++t)
      solvable = kit_feasible(scn, oc, sample_tool(srng, hc.ranges));
    if (!solvable) continue;
    Rng wrng(derive_seed(seed, "warm", outer));
    warm = warm_start_pick(scn, oc, hc.ranges, wrng, hc.probe_budget);
    break;
  }
  const Raster task = rasterize_scenario(scn, hc.resolution);
  const Raster warm_raster = rasterize_tool(warm, hc.resolution);
  std::printf("scenario %s: boundary_y %.3f target (%.3f, %.3f), %zu obstacles\n",
              to_string(type).c_str(), scn.boundary_y, scn.target.x, scn.target.y,
              scn.obstacles.size());
  std::printf("warm tool: %s L=%.3f w=%.3f hook=%.3f\n",
              warm.kind == ToolKind::stick ? "stick" : "hook", warm.handle_length,
              warm.handle_width, warm.hook_length);

  TrajectoryLog log = imagine(m, task, warm_raster, s.imagine);
  log.instance_id = to_string(type) + "_" + std::to_string(index);
  const bool ok = evaluate_imagined(log, scn, oc, s.imagine.binarize_threshold);
  for (size_t i = 0; i < log.sigma.size();
       i += std::max<size_t>(1, log.sigma.size() / 20))
    std::printf("  step %4zu: sigma %.4f\n", i, log.sigma[i]);
  std::printf("stop: %s after %d steps, final sigma %.4f, feasible: %s%s\n",
              log.stop_reason.c_str(), log.steps, log.sigma.back(), ok ? "yes" : "no",
              log.empty_decode ? " (empty decode)" : "");

  // strip of decoded snapshots
  std::vector<Raster> frames;
  for (const auto& z : log.latent_snapshots) frames.push_back(nets::tool_decode(m, z));
  Raster strip(1, frames[0].height, frames[0].width * static_cast<int>(frames.size()));
  for (size_t fi = 0; fi < frames.size(); ++fi)
    for (int y = 0; y < frames[fi].height; ++y)
      for (int x = 0; x < frames[fi].width; ++x)
        strip.at(0, y, static_cast<int>(fi) * frames[fi].width + x) = frames[fi].at(0, y, x);
  write_png(out + "/imagine_" + log.instance_id + ".png", raster_to_bytes(strip));

  std::ofstream jf(out + "/imagine_" + log.instance_id + ".json");
  nlohmann::json j{{"instance_id", log.instance_id},
                   {"steps", log.steps},
                   {"stop_reason", log.stop_reason},
                   {"feasible", log.feasible_verdict},
                   {"sigma_first", log.sigma.front()},
                   {"sigma_final", log.sigma.back()}};
  jf << j.dump(2) << "\n";
  return ok ? 0 : 0;
}

int run_grad_check() {
  GradCheckReport rep = run_gradcheck_suite();
  for (const GradCheckItem& item : rep.items)
    std::printf("%-22s max rel err %.3e %s\n", item.name.c_str(), item.max_rel_err,
                item.max_rel_err <= 1e-4 ? "ok" : "FAIL");
  std::printf("worst: %.3e (tolerance 1e-4)\n", rep.worst());
  return rep.pass() ? 0 : 1;
}

int run_report(const CommonOpts& c, const std::string& in_dir, const std::string& out) {
  Settings s = settings_from(c);
  ReportInputs rin;
  if (fs::exists(in_dir + "/eval_selection.json"))
    rin.selection = load_eval_tables(in_dir + "/eval_selection.json");
  if (fs::exists(in_dir + "/eval_imagination.json"))
    rin.imagination = load_eval_tables(in_dir + "/eval_imagination.json");
  if (rin.selection.empty() && rin.imagination.empty())
    throw std::runtime_error("report: no eval_*.json found in " + in_dir);
  rin.config_dump = s.dump();
  rin.seed = s.seed;
  emit_report(rin, out);
  std::printf("report -> %s/results.csv\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"task-aware tool imagination engine"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string out = "run";
  std::string data, mode = "task-driven", ckpt, ckpt_driven, ckpt_unaware;
  std::string type_str = "A", in_dir;
  int index = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a balanced dataset");
  add_common(gen, common);
  gen->add_option("--out", out, "dataset directory")->required();

  CLI::App* tr = app.add_subcommand("train", "two-phase curriculum training");
  add_common(tr, common);
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out, "run directory for checkpoints")->required();
  tr->add_option("--mode", mode, "task-driven | task-unaware")
      ->check(CLI::IsMember({"task-driven", "task-unaware"}));

  CLI::App* es = app.add_subcommand("eval-select", "tool-selection evaluation");
  add_common(es, common);
  es->add_option("--ckpt-driven", ckpt_driven, "task-driven checkpoint");
  es->add_option("--ckpt-unaware", ckpt_unaware, "task-unaware checkpoint");
  es->add_option("--out", out, "output directory")->required();

  CLI::App* ei = app.add_subcommand("eval-imagine", "tool-imagination evaluation");
  add_common(ei, common);
  ei->add_option("--ckpt-driven", ckpt_driven, "task-driven checkpoint")->required();
  ei->add_option("--ckpt-unaware", ckpt_unaware, "task-unaware checkpoint")->required();
  ei->add_option("--out", out, "output directory")->required();

  CLI::App* im = app.add_subcommand("imagine", "run one imagination instance, verbose");
  add_common(im, common);
  im->add_option("--ckpt", ckpt, "checkpoint")->required();
  im->add_option("--type", type_str, "scenario type A..E");
  im->add_option("--index", index, "instance index");
  im->add_option("--out", out, "output directory")->required();

  app.add_subcommand("grad-check", "verify gradients against finite differences");

  CLI::App* rp = app.add_subcommand("report", "merge eval outputs into results.csv");
  add_common(rp, common);
  rp->add_option("--in", in_dir, "directory with eval_*.json")->required();
  rp->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen_data(common, out);
    if (tr->parsed()) return run_train(common, data, out, mode);
    if (es->parsed()) return run_eval_select(common, ckpt_driven, ckpt_unaware, out);
    if (ei->parsed()) return run_eval_imagine(common, ckpt_driven, ckpt_unaware, out);
    if (im->parsed()) return run_imagine_one(common, ckpt, type_str, index, out);
    if (app.get_subcommand("grad-check")->parsed()) return run_grad_check();
    if (rp->parsed()) return run_report(common, in_dir, out);
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", {{"type", "runtime"}, {"message", e.what()}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
  return 0;
}
