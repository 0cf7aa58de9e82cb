#include "reacher/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>

namespace reacher {

namespace fs = std::filesystem;
using nets::Model;

std::string to_string(TrainMode m) {
  return m == TrainMode::task_driven ? "task_driven" : "task_unaware";
}

const CheckpointInfo& select_checkpoint(const std::vector<CheckpointInfo>& checkpoints) {
  if (checkpoints.empty()) throw std::invalid_argument("select_checkpoint: empty series");
  size_t best = 0;
  for (size_t i = 1; i < checkpoints.size(); ++i)
    if (checkpoints[i].val_task_loss < checkpoints[best].val_task_loss) best = i;
  return checkpoints[best];
}

namespace {

std::vector<size_t> val_subset_indices(size_t n, int subset, uint64_t seed) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  Rng rng(derive_seed(seed, "val_subset"));
  for (size_t i = 0; i + 1 < idx.size(); ++i)
    std::swap(idx[i], idx[i + rng.next_u64() % (idx.size() - i)]);
  if (subset > 0 && idx.size() > static_cast<size_t>(subset)) idx.resize(subset);
  return idx;
}

}  // namespace

double validation_task_loss(Model<real_t>& m, const LoadedDataset& ds, int subset, uint64_t seed) {
  if (ds.val.empty()) throw std::invalid_argument("validation_task_loss: empty validation split");
  const auto idx = val_subset_indices(ds.val.size(), subset, seed);
  double total = 0.0;
  for (size_t i : idx) {
    const LoadedInstance& inst = ds.val[i];
    ad::Graph<real_t> g;
    int task = g.constant(nets::bytes_to_tensor<real_t>(inst.task, 3, ds.resolution));
    int tool = g.constant(nets::bytes_to_tensor<real_t>(inst.tool, 1, ds.resolution));
    int zg = nets::encode(g, m.phi, m.arch, task, true);
    int zt = nets::encode(g, m.psi, m.arch, tool, true);
    int sm = g.softmax(nets::classifier_logits(g, m.classifier, zg, zt, true));
    total += nets::task_loss_value(static_cast<double>(g.value(sm)[1]), inst.label);
  }
  return total / static_cast<double>(idx.size());
}

TrainResult train(const LoadedDataset& ds, const ArchConfig& arch, const TrainConfig& cfg) {
  if (ds.train.empty()) throw std::invalid_argument("train: empty training split");
  if (cfg.out_dir.empty()) throw std::invalid_argument("train: out_dir required for checkpoints");
  fs::create_directories(cfg.out_dir);

  Model<real_t> model = nets::init_model<real_t>(arch, cfg.seed);
  TrainResult result;
  Rng batch_rng(derive_seed(cfg.seed, "batches"));
  const real_t inv_b = real_t(1) / static_cast<real_t>(cfg.batch);
  const std::string mode_tag = to_string(cfg.mode);

  auto draw_batch = [&]() {
    std::vector<const LoadedInstance*> batch(cfg.batch);
    for (int i = 0; i < cfg.batch; ++i)
      batch[i] = &ds.train[batch_rng.next_u64() % ds.train.size()];
    return batch;
  };

  auto check_finite = [&](double loss, long step, const char* phase) {
    if (!std::isfinite(loss))
      throw std::runtime_error("train: loss diverged (NaN/Inf) at " + std::string(phase) +
                               " step " + std::to_string(step));
  };

  // phase 1: reconstruction pretraining on tool silhouettes
  std::vector<ad::Param<real_t>*> psi = model.psi_params();
  ad::AdamState<real_t> adam1;
  adam1.cfg.lr = static_cast<real_t>(cfg.lr);
  adam1.init(psi);
  for (int step = 0; step < cfg.pretrain_steps; ++step) {
    for (ad::Param<real_t>* p : psi) p->zero_grad();
    double loss_sum = 0.0;
    for (const LoadedInstance* inst : draw_batch()) {
      ad::Graph<real_t> g;
      int tool = g.constant(nets::bytes_to_tensor<real_t>(inst->tool, 1, ds.resolution));
      int z = nets::encode(g, model.psi, model.arch, tool);
      int dec = nets::decode(g, model.decoder, model.arch, z);
      int loss = nets::recon_loss(g, dec, tool, cfg.mu);
      g.backward(loss, inv_b);
      loss_sum += static_cast<double>(g.value(loss)[0]);
    }
    const double mean_loss = loss_sum / cfg.batch;
    check_finite(mean_loss, step, "pretrain");
    result.train_loss.push_back(mean_loss);
    ad::adam_step(psi, adam1);
    ++model.step;
    if (cfg.verbose && (step + 1) % 100 == 0)
      std::printf("[%s pretrain %d/%d] recon %.4f\n", mode_tag.c_str(), step + 1,
                  cfg.pretrain_steps, mean_loss);
  }

  // phase 2: joint training; the tool side stays frozen in task_unaware mode
  const bool frozen_psi = cfg.mode == TrainMode::task_unaware;
  std::vector<ad::Param<real_t>*> trainable =
      frozen_psi ? model.phi_sigma_params() : model.all_params();
  ad::AdamState<real_t> adam2;
  adam2.cfg.lr = static_cast<real_t>(cfg.lr);
  adam2.init(trainable);

  auto record_checkpoint = [&](long step) {
    const double vl = validation_task_loss(model, ds, cfg.val_subset, cfg.seed);
    const std::string path =
        cfg.out_dir + "/ckpt_" + mode_tag + "_" + std::to_string(step) + ".rchk";
    nets::save_checkpoint(model, path, vl);
    result.checkpoints.push_back({step, vl, path});
    if (cfg.verbose)
      std::printf("[%s ckpt step %ld] val task loss %.4f\n", mode_tag.c_str(), step, vl);
  };

  for (int step = 0; step < cfg.task_steps; ++step) {
    for (ad::Param<real_t>* p : trainable) p->zero_grad();
    double loss_sum = 0.0;
    for (const LoadedInstance* inst : draw_batch()) {
      ad::Graph<real_t> g;
      int task = g.constant(nets::bytes_to_tensor<real_t>(inst->task, 3, ds.resolution));
      int tool = g.constant(nets::bytes_to_tensor<real_t>(inst->tool, 1, ds.resolution));
      int zg = nets::encode(g, model.phi, model.arch, task);
      int zt = nets::encode(g, model.psi, model.arch, tool, frozen_psi);
      int dec = nets::decode(g, model.decoder, model.arch, zt, frozen_psi);
      int l_recon = nets::recon_loss(g, dec, tool, cfg.mu);
      int l_task = g.softmax_xent(nets::classifier_logits(g, model.classifier, zg, zt), inst->label);
      int loss = g.add(l_recon, l_task);
      g.backward(loss, inv_b);
      loss_sum += static_cast<double>(g.value(loss)[0]);
    }
    const double mean_loss = loss_sum / cfg.batch;
    check_finite(mean_loss, step, "task");
    result.train_loss.push_back(mean_loss);
    ad::adam_step(trainable, adam2);
    ++model.step;
    model.task_trained = true;
    if ((step + 1) % cfg.val_cadence == 0 || step + 1 == cfg.task_steps)
      record_checkpoint(model.step);
    if (cfg.verbose && (step + 1) % 100 == 0)
      std::printf("[%s task %d/%d] total %.4f\n", mode_tag.c_str(), step + 1, cfg.task_steps,
                  mean_loss);
  }

  if (result.checkpoints.empty()) {
    // no phase-2 steps requested; persist the pretrained model as-is
    const std::string path = cfg.out_dir + "/ckpt_" + mode_tag + "_" + std::to_string(model.step) +
                             ".rchk";
    nets::save_checkpoint(model, path, std::numeric_limits<double>::infinity());
    result.checkpoints.push_back({model.step, std::numeric_limits<double>::infinity(), path});
  }
  result.best = select_checkpoint(result.checkpoints);

  const std::string best_path = cfg.out_dir + "/best_" + mode_tag + ".rchk";
  Model<real_t> best = nets::load_checkpoint<real_t>(result.best.path);
  nets::save_checkpoint(best, best_path, result.best.val_task_loss);
  result.best.path = best_path;
  return result;
}

}  // namespace reacher
