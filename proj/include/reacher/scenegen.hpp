#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reacher/geometry.hpp"
#include "reacher/raster.hpp"
#include "reacher/rng.hpp"

namespace reacher {

struct ToolRanges {
  double stick_prob = 0.5;  // remainder are hooks
  double handle_length_min = 0.15, handle_length_max = 0.6;
  double handle_width_min = 0.06, handle_width_max = 0.1;
  double hook_length_min = 0.05, hook_length_max = 0.25;
};

struct DatasetConfig {
  int resolution = 64;
  std::array<int, 5> train_counts{1000, 1000, 1000, 1000, 0};  // A..E
  std::array<int, 5> val_counts{150, 150, 150, 150, 150};
  ToolRanges tools;
  OracleConfig oracle;
  uint64_t seed = 0;
  int balance_budget = 4000;  // resample attempts per instance
  double target_radius = 0.02;
  int boundary_band_px = 2;
};

struct InstanceRecord {
  std::string id;
  ScnType type = ScnType::A;
  std::string split;
  int label = 0;
  uint64_t oracle_seed = 0;
  Scenario scenario;
  ToolSpec tool;
  std::string task_path;  // relative to the dataset root
  std::string tool_path;
};

struct DatasetManifest {
  std::string root;
  uint64_t seed = 0;
  int resolution = 64;
  OracleConfig oracle;
  std::vector<InstanceRecord> records;
};

// Type-specific procedural scenario sampling; resamples until all Scenario
// invariants hold (bounded retries).
Scenario sample_scenario(ScnType type, Rng& rng);

ToolSpec sample_tool(Rng& rng, const ToolRanges& ranges);

// 3-channel binary raster: boundary band / target disk / obstacle fill.
// The target disk is drawn about the nearest pixel center.
Raster rasterize_scenario(const Scenario& scn, int resolution, double target_radius = 0.02,
                          int band_px = 2);

// 1-channel binary silhouette of the canonical tool polygon, centered in
// frame. Placement is refined within one pixel so the occupied-pixel count
// tracks the true polygon area.
Raster rasterize_tool(const ToolSpec& spec, int resolution);

// Generates a balanced dataset on disk (manifest.jsonl + tasks/*.png +
// tools/*.pgm). Exactly half the instances per (type, split) carry label 1.
DatasetManifest generate_dataset(const DatasetConfig& cfg, const std::string& out_dir);

DatasetManifest load_manifest(const std::string& dir);
void write_manifest(const DatasetManifest& m, const std::string& dir);

struct Toolkit {
  std::array<ToolSpec, 3> tools;
  int feasible_index = -1;
};

// Feasibility under a seed derived from the tool parameters; this is the
// judgement make_toolkit uses, so its postcondition re-verifies externally.
bool kit_feasible(const Scenario& scn, const OracleConfig& oracle, const ToolSpec& t);

// Three candidate tools of which exactly one is kit_feasible; order
// randomized. Throws when the retry budget is exhausted (a scenario may
// admit no feasible tool at all; callers resample the scenario).
Toolkit make_toolkit(const Scenario& scn, const OracleConfig& oracle, const ToolRanges& ranges,
                     Rng& rng, int budget = 600);

// Dataset instance with rasters decoded to bytes, ready for training.
struct LoadedInstance {
  ScnType type;
  int label;
  std::vector<uint8_t> task;  // CHW, 3 * res * res, values 0/255
  std::vector<uint8_t> tool;  // 1 * res * res
};

struct LoadedDataset {
  int resolution = 64;
  std::vector<LoadedInstance> train;
  std::vector<LoadedInstance> val;
};

LoadedDataset load_dataset(const std::string& dir);

}  // namespace reacher
