// Copyright 2026 The xladapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XLADAPT_NNET_HPP_
#define XLADAPT_NNET_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace xladapt {

enum class LayerKind : uint8_t { kTdnn = 0, kLstmp = 1 };

struct LayerSpec {
  LayerKind kind = LayerKind::kTdnn;
  std::vector<int> offsets;  // TDNN temporal context, sorted, distinct
  int dim = 0;               // TDNN output dimension
  int cell_dim = 0;          // LSTMP
  int proj_dim = 0;          // LSTMP recurrent/projection dimension

  int output_dim() const { return kind == LayerKind::kTdnn ? dim : proj_dim; }
};

LayerSpec tdnn_spec(std::vector<int> offsets, int dim);
LayerSpec lstmp_spec(int cell_dim, int proj_dim);

// ReLU affine over a fixed set of temporal context offsets (edge frames
// replicated), equivalent to 1-D dilated convolution over frames.
struct TdnnLayer {
  std::vector<int> offsets;
  Eigen::MatrixXd weight;  // dim x (in_dim * offsets.size())
  Eigen::VectorXd bias;    // dim
};

// LSTM with forget gate, peephole connections and a linear projection of the
// recurrent output. Gate packing order in w_in/w_rec/bias: input, forget,
// cell candidate, output.
struct LstmpLayer {
  Eigen::MatrixXd w_in;    // 4C x I
  Eigen::MatrixXd w_rec;   // 4C x P
  Eigen::VectorXd bias;    // 4C
  Eigen::VectorXd peep_in, peep_forget, peep_out;  // C, applied to the cell state
  Eigen::MatrixXd w_proj;  // P x C
};

struct Layer {
  LayerSpec spec;
  TdnnLayer tdnn;
  LstmpLayer lstmp;
};

struct AcousticModel {
  int input_dim = 0;
  std::vector<Layer> layers;
  Eigen::MatrixXd out_weight;  // |phone_set| x last_hidden_dim
  Eigen::VectorXd out_bias;
  std::vector<std::string> phone_set;
  uint64_t extractor_fingerprint = 0;
  double dropout_rate = 0.0;  // training-phase only; forward() never drops
};

struct TrainConfig {
  double initial_lr = 0.01;
  double final_lr = 0.001;
  int epochs = 1;
  int batch = 8;        // sequences per SGD step
  int bptt_chunk = 0;   // frames; 0 = backprop through the full utterance
  uint64_t seed = 0;
  double dropout_rate = 0.0;
};

struct TrainLog {
  double initial_lr = 0.0;
  double final_lr = 0.0;
  double dropout_rate = 0.0;
  int steps = 0;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_lr;  // lr at the last step of each epoch
  double first_step_lr = 0.0;
  double last_step_lr = 0.0;
};

struct TrainState {
  double last_lr = 0.0;
  uint32_t epoch = 0;
};

// Seeded uniform +-1/sqrt(fan_in) init; LSTMP forget-gate bias starts at 1.
AcousticModel make_model(int input_dim, const std::vector<LayerSpec>& specs,
                         const std::vector<std::string>& phone_set, uint64_t seed);

// Same shapes as the model, zero-filled; accumulated into by loss_and_grads.
struct Gradients {
  std::vector<Layer> layers;
  Eigen::MatrixXd out_weight;
  Eigen::VectorXd out_bias;
};
Gradients make_gradients(const AcousticModel& m);
void zero_gradients(Gradients& g);

// Parallel views over every trainable scalar of model and gradients, in a
// fixed order. Used by SGD and by finite-difference verification.
std::vector<std::pair<double*, double*>> parameter_pairs(AcousticModel& m, Gradients& g);
size_t parameter_count(const AcousticModel& m);

// Per-frame posteriors (frames x |phone_set|); every row sums to 1.
Eigen::MatrixXd forward(const AcousticModel& m, const Eigen::MatrixXd& inputs);

// Mean per-frame cross-entropy and gradients via backpropagation through
// time over the whole sequence. When training (grads != nullptr) and
// m.dropout_rate > 0, seeded inverted dropout is applied to hidden outputs.
double loss_and_grads(const AcousticModel& m, const Eigen::MatrixXd& inputs,
                      const std::vector<int>& labels, Gradients* grads,
                      uint64_t dropout_seed = 0);

struct TrainItem {
  Eigen::MatrixXd input;    // frames x input_dim
  std::vector<int> labels;  // per-frame phone indices
};

// Plain SGD with exponential lr decay from initial_lr to final_lr across
// steps. Deterministic given cfg.seed: shuffling and gradient accumulation
// order are fixed. Throws on divergence (non-finite loss).
TrainLog train(AcousticModel& m, const std::vector<TrainItem>& data, const TrainConfig& cfg);

// Hidden weights copied bit-identically; output layer freshly initialized
// for the new phone set; extractor fingerprint inherited.
AcousticModel transfer_hidden(const AcousticModel& source,
                              const std::vector<std::string>& new_phone_set, uint64_t seed);

// Everything copied bit-identically, phone set included.
AcousticModel transfer_full(const AcousticModel& source);

// Versioned little-endian binary with header {magic, version, checksum};
// round-trips bit-identically.
void save_checkpoint(const AcousticModel& m, const TrainState& state,
                     const std::filesystem::path& path);
std::pair<AcousticModel, TrainState> load_checkpoint(const std::filesystem::path& path);

// Serialized weight image (the checkpoint payload without training state);
// byte-equality of two models' images is the transfer-surgery oracle.
std::string serialize_weights(const AcousticModel& m);

}  // namespace xladapt

#endif  // XLADAPT_NNET_HPP_
