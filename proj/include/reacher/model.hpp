#pragma once

#include <string>
#include <vector>

#include "reacher/graph.hpp"
#include "reacher/raster.hpp"
#include "reacher/rng.hpp"

namespace reacher {

// training/eval scalar; gradient checks instantiate the double variants
using real_t = float;

struct ArchConfig {
  int resolution = 64;
  std::vector<int> encoder_channels{8, 16, 32, 64};  // conv blocks: stride-1 then stride-2 each
  int kernel = 5;
  int pad = 2;
  int z_g = 64;  // task embedding width
  int z_t = 64;  // tool embedding width
  std::vector<int> classifier_hidden{128, 64};
  std::vector<int> decoder_hidden{256, 1024};  // decoder output is resolution^2

  // spatial size after the conv trunk
  int trunk_spatial() const {
    int s = resolution;
    for (size_t i = 0; i < encoder_channels.size(); ++i) s = (s + 2 * pad - kernel) / 2 + 1;
    return s;
  }
  int trunk_features() const {
    return encoder_channels.empty() ? 0
                                    : encoder_channels.back() * trunk_spatial() * trunk_spatial();
  }
};

// Paper-scale variant: 128x128 inputs, five conv blocks, z_G 256 / z_T 512,
// classifier hidden 1024/512.
ArchConfig paper_scale_arch();

namespace nets {

template <class T>
struct ConvBlock {
  ad::Param<T> wa, ba, wb, bb;
};

template <class T>
struct Encoder {
  std::vector<ConvBlock<T>> blocks;
  ad::Param<T> head_w, head_b;
};

template <class T>
struct Mlp {
  std::vector<ad::Param<T>> w, b;
};

template <class T>
struct Model {
  ArchConfig arch;
  Encoder<T> phi;    // task encoder
  Encoder<T> psi;    // tool encoder
  Mlp<T> decoder;    // psi'
  Mlp<T> classifier; // sigma
  long step = 0;
  bool task_trained = false;  // phase-2 checkpoint

  // declared parameter order, used by the optimizer and the checkpoint file
  std::vector<ad::Param<T>*> all_params();
  std::vector<ad::Param<T>*> psi_params();        // tool encoder + decoder
  std::vector<ad::Param<T>*> phi_sigma_params();  // task encoder + classifier
};

template <class T>
Model<T> init_model(const ArchConfig& arch, uint64_t seed);

// Graph builders. frozen = parameters enter the graph as constants (no
// gradients flow into or through them being bound).
template <class T>
int encode(ad::Graph<T>& g, Encoder<T>& enc, const ArchConfig& arch, int input, bool frozen = false);
template <class T>
int decode(ad::Graph<T>& g, Mlp<T>& dec, const ArchConfig& arch, int z, bool frozen = false);
template <class T>
int classifier_logits(ad::Graph<T>& g, Mlp<T>& cls, int z_g, int z_t, bool frozen = false);

// Eq.-style losses on the graph: reconstruction = mean silhouette BCE plus
// mu * total variation; task = softmax cross-entropy on two logits.
template <class T>
int recon_loss(ad::Graph<T>& g, int decoded, int target, double mu);

// scalar task loss on a class-1 probability (clamped), for reporting
double task_loss_value(double prob1, int label);

template <class T>
Tensor<T> raster_to_tensor(const Raster& r);
template <class T>
Tensor<T> bytes_to_tensor(const std::vector<uint8_t>& bytes, int channels, int res);
Raster tensor_to_raster(const Tensor<real_t>& t);

// convenience forward passes (fresh graph per call, parameters frozen)
template <class T>
std::vector<T> tool_encode(Model<T>& m, const Raster& tool);
template <class T>
std::vector<T> task_encode(Model<T>& m, const Raster& task);
template <class T>
Raster tool_decode(Model<T>& m, const std::vector<T>& z_t);
template <class T>
double classify(Model<T>& m, const std::vector<T>& z_g, const std::vector<T>& z_t);

// Checkpoint file: magic + version + JSON header (arch, step, val loss) +
// named parameter arrays as little-endian 32-bit floats in declared order.
template <class T>
void save_checkpoint(Model<T>& m, const std::string& path, double val_loss);
template <class T>
Model<T> load_checkpoint(const std::string& path);

}  // namespace nets
}  // namespace reacher
