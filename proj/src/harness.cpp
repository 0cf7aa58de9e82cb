#include "reacher/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "reacher/image_io.hpp"

namespace reacher {

namespace fs = std::filesystem;
using nets::Model;
using nlohmann::json;

void EvalTable::finalize() {
  total = EvalRow{};
  for (EvalRow& r : per_type) {
    if (r.n > 0) {
      auto [m, ci] = confidence_interval(r.successes, r.n);
      r.mean_pct = m;
      r.ci_pct = ci;
    }
    total.n += r.n;
    total.successes += r.successes;
  }
  if (total.n > 0) {
    auto [m, ci] = confidence_interval(total.successes, total.n);
    total.mean_pct = m;
    total.ci_pct = ci;
  }
}

std::pair<double, double> confidence_interval(int successes, int n) {
  if (n < 1) throw std::invalid_argument("confidence_interval: n must be >= 1");
  if (successes < 0 || successes > n)
    throw std::invalid_argument("confidence_interval: successes out of range");
  const double p = static_cast<double>(successes) / n;
  const double half = 1.96 * std::sqrt(p * (1.0 - p) / n);
  return {100.0 * p, 100.0 * half};
}

namespace {

constexpr std::array<ScnType, 5> kAllTypes{ScnType::A, ScnType::B, ScnType::C, ScnType::D,
                                           ScnType::E};

struct SelectionInstance {
  Scenario scn;
  Raster task_raster;
  Toolkit kit;
  OracleConfig oracle;
};

// Scenario + toolkit; resamples scenarios that admit no feasible tool.
SelectionInstance make_selection_instance(const HarnessConfig& cfg, ScnType type, uint64_t seed) {
  for (int outer = 0; outer < cfg.scenario_budget; ++outer) {
    Rng rng(derive_seed(seed, "sel_scn", outer));
    Scenario scn = sample_scenario(type, rng);
    OracleConfig oc = cfg.oracle;
    oc.seed = derive_seed(seed, "sel_oracle", outer);
    try {
      Toolkit kit = make_toolkit(scn, oc, cfg.ranges, rng, cfg.probe_budget);
      Raster task = rasterize_scenario(scn, cfg.resolution);
      return {std::move(scn), std::move(task), kit, oc};
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  throw std::runtime_error("selection eval: no solvable scenario found");
}

}  // namespace

EvalTable tool_selection_eval_scored(const HarnessConfig& cfg, const ToolScorer& scorer,
                                     const std::string& method_name) {
  EvalTable table;
  table.method = method_name;
  for (size_t ti = 0; ti < kAllTypes.size(); ++ti) {
    const int n = cfg.selection_per_type;
    std::vector<int> correct(n, 0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      const uint64_t seed = derive_seed(cfg.seed, "sel_" + to_string(kAllTypes[ti]), i);
      SelectionInstance inst = make_selection_instance(cfg, kAllTypes[ti], seed);
      const std::array<double, 3> scores =
          scorer(inst.scn, inst.task_raster, inst.kit.tools, inst.oracle);
      int best = 0;
      bool tie = false;
      for (int k = 1; k < 3; ++k) {
        if (scores[k] > scores[best]) {
          best = k;
          tie = false;
        } else if (scores[k] == scores[best]) {
          tie = true;
        }
      }
      correct[i] = !tie && best == inst.kit.feasible_index;
    }
    EvalRow& row = table.per_type[ti];
    row.n = n;
    for (int c : correct) row.successes += c;
  }
  table.finalize();
  return table;
}

EvalTable tool_selection_eval(Model<real_t>& m, const HarnessConfig& cfg,
                              const std::string& method_name) {
  ToolScorer scorer = [&m, &cfg](const Scenario&, const Raster& task_raster,
                                 const std::array<ToolSpec, 3>& tools, const OracleConfig&) {
    const std::vector<real_t> z_g = nets::task_encode(m, task_raster);
    std::array<double, 3> scores{};
    for (int k = 0; k < 3; ++k) {
      const std::vector<real_t> z_t = nets::tool_encode(m, rasterize_tool(tools[k], cfg.resolution));
      scores[k] = nets::classify(m, z_g, z_t);
    }
    return scores;
  };
  return tool_selection_eval_scored(cfg, scorer, method_name);
}

namespace {

struct ImaginationInstance {
  Scenario scn;
  Raster task_raster;
  ToolSpec warm;
  Raster warm_raster;
  OracleConfig oracle;  // seeded for this instance's feasibility checks
};

ImaginationInstance make_imagination_instance(const HarnessConfig& cfg, ScnType type,
                                              uint64_t seed) {
  for (int outer = 0; outer < cfg.scenario_budget; ++outer) {
    Rng rng(derive_seed(seed, "imag_scn", outer));
    Scenario scn = sample_scenario(type, rng);
    OracleConfig oc = cfg.oracle;
    oc.seed = derive_seed(seed, "imag_oracle", outer);
    // the scenario must be solvable at all for imagination to be scoreable
    bool solvable = false;
    for (int t = 0; t < cfg.probe_budget && !solvable; ++t)
      solvable = kit_feasible(scn, oc, sample_tool(rng, cfg.ranges));
    if (!solvable) continue;
    try {
      Rng wrng(derive_seed(seed, "warm", outer));
      ToolSpec warm = warm_start_pick(scn, oc, cfg.ranges, wrng, cfg.probe_budget);
      ImaginationInstance inst;
      inst.task_raster = rasterize_scenario(scn, cfg.resolution);
      inst.warm_raster = rasterize_tool(warm, cfg.resolution);
      inst.scn = std::move(scn);
      inst.warm = warm;
      inst.oracle = oc;
      return inst;
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  throw std::runtime_error("imagination eval: no usable scenario found");
}

std::vector<Raster> decode_snapshots(Model<real_t>& m, const TrajectoryLog& log) {
  std::vector<Raster> out;
  out.reserve(log.latent_snapshots.size());
  for (const std::vector<real_t>& z : log.latent_snapshots) out.push_back(nets::tool_decode(m, z));
  return out;
}

}  // namespace

ImaginationEval imagination_eval(Model<real_t>& driven, Model<real_t>& unaware,
                                 const HarnessConfig& cfg) {
  ImaginationEval ev;
  ev.random_walk.method = "random_walk";
  ev.task_unaware.method = "task_unaware";
  ev.task_driven.method = "task_driven";
  const int n = cfg.imagination_per_type;
  ev.instances.resize(kAllTypes.size() * n);

  for (size_t ti = 0; ti < kAllTypes.size(); ++ti) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      const ScnType type = kAllTypes[ti];
      const uint64_t seed = derive_seed(cfg.seed, "imag_" + to_string(type), i);
      ImaginationInstance inst = make_imagination_instance(cfg, type, seed);

      InstanceTrajectories& rec = ev.instances[ti * n + i];
      rec.id = to_string(type) + "_" + std::to_string(i);
      rec.type = type;
      rec.warm_tool = inst.warm;

      TrajectoryLog ld = imagine(driven, inst.task_raster, inst.warm_raster, cfg.imagine);
      ld.instance_id = rec.id;
      TrajectoryLog lu = imagine(unaware, inst.task_raster, inst.warm_raster, cfg.imagine);
      lu.instance_id = rec.id;
      lu.method = TraversalMethod::task_unaware;
      Rng rw_rng(derive_seed(cfg.seed, "rw_" + to_string(type), i));
      // the random walk explores the task-driven latent space
      TrajectoryLog lr = random_walk(driven, inst.task_raster, inst.warm_raster, cfg.imagine, rw_rng);
      lr.instance_id = rec.id;

      evaluate_imagined(ld, inst.scn, inst.oracle, cfg.imagine.binarize_threshold);
      evaluate_imagined(lu, inst.scn, inst.oracle, cfg.imagine.binarize_threshold);
      evaluate_imagined(lr, inst.scn, inst.oracle, cfg.imagine.binarize_threshold);

      if (i < cfg.strip_samples) {
        rec.snapshot_decodes.push_back(decode_snapshots(driven, ld));
        rec.snapshot_decodes.push_back(decode_snapshots(unaware, lu));
        rec.snapshot_decodes.push_back(decode_snapshots(driven, lr));
      }
      rec.logs = {std::move(ld), std::move(lu), std::move(lr)};
    }
    for (int i = 0; i < n; ++i) {
      const InstanceTrajectories& rec = ev.instances[ti * n + i];
      ev.task_driven.per_type[ti].successes += rec.logs[0].feasible_verdict;
      ev.task_unaware.per_type[ti].successes += rec.logs[1].feasible_verdict;
      ev.random_walk.per_type[ti].successes += rec.logs[2].feasible_verdict;
    }
    ev.task_driven.per_type[ti].n = n;
    ev.task_unaware.per_type[ti].n = n;
    ev.random_walk.per_type[ti].n = n;
  }
  ev.random_walk.finalize();
  ev.task_unaware.finalize();
  ev.task_driven.finalize();
  return ev;
}

namespace {

Raster strip_of(const std::vector<Raster>& frames) {
  const int h = frames[0].height, w = frames[0].width;
  Raster strip(1, h, w * static_cast<int>(frames.size()));
  for (size_t f = 0; f < frames.size(); ++f)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) strip.at(0, y, static_cast<int>(f) * w + x) = frames[f].at(0, y, x);
  return strip;
}

json log_to_json(const TrajectoryLog& log) {
  json snaps = json::array();
  for (const auto& z : log.latent_snapshots) {
    json v = json::array();
    for (real_t x : z) v.push_back(static_cast<double>(x));
    snaps.push_back(std::move(v));
  }
  return json{{"instance_id", log.instance_id},
              {"method", to_string(log.method)},
              {"steps", log.steps},
              {"stop_reason", log.stop_reason},
              {"sigma", log.sigma},
              {"latent_snapshots", snaps},
              {"feasible", log.feasible_verdict},
              {"empty_decode", log.empty_decode}};
}

void csv_cell(std::string& out, const EvalRow& r) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), ",%d,%d,%.1f,%.1f", r.n, r.successes, r.mean_pct, r.ci_pct);
  out += buf;
}

}  // namespace

void emit_report(const ReportInputs& in, const std::string& out_dir) {
  fs::create_directories(out_dir);

  // results.csv: one row per scenario type plus a totals row; one column
  // group (n, successes, mean, ci) per method, selection first
  std::vector<const EvalTable*> columns;
  for (const EvalTable& t : in.selection) columns.push_back(&t);
  for (const EvalTable& t : in.imagination) columns.push_back(&t);
  if (columns.empty()) throw std::invalid_argument("emit_report: no results");
  std::string csv = "scenario";
  for (const EvalTable* t : columns)
    csv += "," + t->method + "_n," + t->method + "_successes," + t->method + "_mean_pct," +
           t->method + "_ci_pct";
  csv += "\n";
  for (size_t ti = 0; ti < kAllTypes.size(); ++ti) {
    csv += to_string(kAllTypes[ti]);
    for (const EvalTable* t : columns) csv_cell(csv, t->per_type[ti]);
    csv += "\n";
  }
  csv += "Total";
  for (const EvalTable* t : columns) csv_cell(csv, t->total);
  csv += "\n";
  std::ofstream f(out_dir + "/results.csv", std::ios::binary);
  f << csv;
  f.close();

  if (in.instances) {
    std::ofstream tj(out_dir + "/trajectories.jsonl");
    for (const InstanceTrajectories& rec : *in.instances) {
      for (const TrajectoryLog& log : rec.logs) tj << log_to_json(log).dump() << "\n";
      for (size_t mi = 0; mi < rec.snapshot_decodes.size(); ++mi) {
        const std::string png = out_dir + "/strip_" + rec.id + "_" +
                                to_string(rec.logs[mi].method) + ".png";
        write_png(png, raster_to_bytes(strip_of(rec.snapshot_decodes[mi])));
      }
    }
  }

  json manifest{{"seed", in.seed},
                {"config_hash", derive_seed(0, in.config_dump)},
                {"checkpoints", in.checkpoint_paths}};
  std::ofstream mf(out_dir + "/run_manifest.json");
  mf << manifest.dump(2) << "\n";
}

void save_eval_tables(const std::vector<EvalTable>& tables, const std::string& path) {
  json out = json::array();
  for (const EvalTable& t : tables) {
    json rows = json::array();
    for (size_t ti = 0; ti < kAllTypes.size(); ++ti)
      rows.push_back({{"type", to_string(kAllTypes[ti])},
                      {"n", t.per_type[ti].n},
                      {"successes", t.per_type[ti].successes}});
    out.push_back({{"method", t.method}, {"rows", rows}});
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << out.dump(2) << "\n";
}

std::vector<EvalTable> load_eval_tables(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  json in = json::parse(f);
  std::vector<EvalTable> tables;
  for (const json& jt : in) {
    EvalTable t;
    t.method = jt.at("method");
    size_t ti = 0;
    for (const json& row : jt.at("rows")) {
      t.per_type[ti].n = row.at("n");
      t.per_type[ti].successes = row.at("successes");
      ++ti;
    }
    t.finalize();
    tables.push_back(std::move(t));
  }
  return tables;
}

}  // namespace reacher
