#pragma once

#include <string>

#include "reacher/harness.hpp"
#include "reacher/model.hpp"
#include "reacher/scenegen.hpp"
#include "reacher/train.hpp"

namespace reacher {

// Everything a run needs, bundled. Profiles give the presets; a key=value
// config file and CLI flags override individual fields.
struct Settings {
  std::string profile = "desk";
  uint64_t seed = 1;
  ArchConfig arch;
  DatasetConfig dataset;
  TrainConfig train;
  ImagineConfig imagine;
  HarnessConfig harness;

  // re-derive the fields that mirror each other (resolution, oracle, seeds)
  void sync();
  std::string dump() const;  // key=value form of every setting
};

// desk | paper_scale | ci
Settings make_profile(const std::string& name);

// key = value lines, '#' comments; unknown keys are errors
void apply_config_file(Settings& s, const std::string& path);
void apply_key(Settings& s, const std::string& key, const std::string& value);

}  // namespace reacher
