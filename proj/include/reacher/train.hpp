#pragma once

#include <string>
#include <vector>

#include "reacher/model.hpp"
#include "reacher/scenegen.hpp"

namespace reacher {

enum class TrainMode { task_driven, task_unaware };

std::string to_string(TrainMode m);

struct TrainConfig {
  TrainMode mode = TrainMode::task_driven;
  double lr = 1e-4;
  int batch = 16;
  int pretrain_steps = 10000;
  int task_steps = 5000;
  double mu = 0.0;  // geometry-loss weight in the reconstruction loss
  int val_cadence = 100;
  int val_subset = 256;  // validation instances scored per cadence
  uint64_t seed = 0;
  std::string out_dir;  // checkpoints land here
  bool verbose = false;
};

struct CheckpointInfo {
  long step = 0;
  double val_task_loss = 0.0;
  std::string path;
};

struct TrainResult {
  std::vector<double> train_loss;  // one entry per optimizer step
  std::vector<CheckpointInfo> checkpoints;
  CheckpointInfo best;
};

// argmin validation task loss; ties break toward the earliest step
const CheckpointInfo& select_checkpoint(const std::vector<CheckpointInfo>& checkpoints);

// Two-phase curriculum: reconstruction pretraining on tool silhouettes, then
// joint training; in task_unaware mode the tool encoder and decoder stay
// frozen during phase 2. Throws on NaN loss with a step diagnostic.
TrainResult train(const LoadedDataset& ds, const ArchConfig& arch, const TrainConfig& cfg);

// mean task loss of the classifier over (up to) n seeded validation instances
double validation_task_loss(nets::Model<real_t>& m, const LoadedDataset& ds, int subset,
                            uint64_t seed);

}  // namespace reacher
