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

#include "xladapt/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "xladapt/rng.hpp"

namespace xladapt {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& a) { return 1.0 / (1.0 + (-a).exp()); }

void check_spec(const LayerSpec& s) {
  if (s.kind == LayerKind::kTdnn) {
    if (s.offsets.empty()) throw std::invalid_argument("layer: TDNN needs context offsets");
    if (!std::is_sorted(s.offsets.begin(), s.offsets.end()) ||
        std::adjacent_find(s.offsets.begin(), s.offsets.end()) != s.offsets.end()) {
      throw std::invalid_argument("layer: TDNN offsets must be sorted and distinct");
    }
    if (s.dim <= 0) throw std::invalid_argument("layer: TDNN dim must be positive");
  } else {
    if (s.cell_dim <= 0 || s.proj_dim <= 0) {
      throw std::invalid_argument("layer: LSTMP dims must be positive");
    }
  }
}

Eigen::MatrixXd uniform_matrix(long rows, long cols, double bound, Rng& rng) {
  Eigen::MatrixXd w(rows, cols);
  // Fixed fill order (column-major) so init is bit-reproducible.
  for (long c = 0; c < cols; ++c) {
    for (long r = 0; r < rows; ++r) w(r, c) = rng.uniform(-bound, bound);
  }
  return w;
}

void init_output_layer(AcousticModel& m, uint64_t seed) {
  const long fan_in = m.layers.empty() ? m.input_dim : m.layers.back().spec.output_dim();
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Rng rng(mix_seed(seed, "output-init"));
  m.out_weight = uniform_matrix(static_cast<long>(m.phone_set.size()), fan_in, bound, rng);
  m.out_bias = Eigen::VectorXd::Zero(static_cast<long>(m.phone_set.size()));
}

// Per-layer forward state kept for backpropagation.
struct TdnnCache {
  Eigen::MatrixXd spliced;  // T x (I*K)
  Eigen::MatrixXd pre;      // T x dim
};

struct LstmpCache {
  Eigen::MatrixXd gate_i, gate_f, gate_g, gate_o;  // T x C
  Eigen::MatrixXd cell, tanh_cell, hidden;         // T x C
  Eigen::MatrixXd proj;                            // T x P
};

struct LayerCache {
  TdnnCache tdnn;
  LstmpCache lstmp;
  Eigen::MatrixXd out;   // layer output after dropout, fed to the next layer
  Eigen::MatrixXd mask;  // dropout mask (empty when not training)
};

Eigen::MatrixXd splice_rows(const Eigen::MatrixXd& x, const std::vector<int>& offsets) {
  const long T = x.rows();
  const long I = x.cols();
  Eigen::MatrixXd s(T, I * static_cast<long>(offsets.size()));
  for (long t = 0; t < T; ++t) {
    for (size_t k = 0; k < offsets.size(); ++k) {
      long src = std::clamp(t + offsets[k], 0L, T - 1);
      s.block(t, static_cast<long>(k) * I, 1, I) = x.row(src);
    }
  }
  return s;
}

void tdnn_forward(const TdnnLayer& layer, const Eigen::MatrixXd& x, TdnnCache& cache) {
  cache.spliced = splice_rows(x, layer.offsets);
  cache.pre = (cache.spliced * layer.weight.transpose()).rowwise() + layer.bias.transpose();
}

void lstmp_forward(const LstmpLayer& layer, const Eigen::MatrixXd& x, LstmpCache& cache) {
  const long T = x.rows();
  const long C = layer.bias.size() / 4;
  const long P = layer.w_proj.rows();
  cache.gate_i.resize(T, C);
  cache.gate_f.resize(T, C);
  cache.gate_g.resize(T, C);
  cache.gate_o.resize(T, C);
  cache.cell.resize(T, C);
  cache.tanh_cell.resize(T, C);
  cache.hidden.resize(T, C);
  cache.proj.resize(T, P);

  const Eigen::MatrixXd zx = x * layer.w_in.transpose();  // T x 4C
  Eigen::VectorXd r_prev = Eigen::VectorXd::Zero(P);
  Eigen::ArrayXd c_prev = Eigen::ArrayXd::Zero(C);
  for (long t = 0; t < T; ++t) {
    Eigen::VectorXd z = zx.row(t).transpose() + layer.w_rec * r_prev + layer.bias;
    Eigen::ArrayXd a_i = z.segment(0, C).array() + layer.peep_in.array() * c_prev;
    Eigen::ArrayXd a_f = z.segment(C, C).array() + layer.peep_forget.array() * c_prev;
    Eigen::ArrayXd gi = sigmoid(a_i);
    Eigen::ArrayXd gf = sigmoid(a_f);
    Eigen::ArrayXd gg = z.segment(2 * C, C).array().tanh();
    Eigen::ArrayXd c = gf * c_prev + gi * gg;
    Eigen::ArrayXd a_o = z.segment(3 * C, C).array() + layer.peep_out.array() * c;
    Eigen::ArrayXd go = sigmoid(a_o);
    Eigen::ArrayXd tc = c.tanh();
    Eigen::ArrayXd m = go * tc;
    Eigen::VectorXd r = layer.w_proj * m.matrix();

    cache.gate_i.row(t) = gi.transpose();
    cache.gate_f.row(t) = gf.transpose();
    cache.gate_g.row(t) = gg.transpose();
    cache.gate_o.row(t) = go.transpose();
    cache.cell.row(t) = c.transpose();
    cache.tanh_cell.row(t) = tc.transpose();
    cache.hidden.row(t) = m.transpose();
    cache.proj.row(t) = r.transpose();
    r_prev = r;
    c_prev = c;
  }
}

// Runs the hidden stack; when rng != nullptr and dropout > 0, inverted
// dropout masks are drawn (in layer order) and kept in the caches.
Eigen::MatrixXd run_hidden(const AcousticModel& m, const Eigen::MatrixXd& inputs,
                           std::vector<LayerCache>& caches, Rng* rng) {
  if (inputs.cols() != m.input_dim) {
    throw std::invalid_argument("forward: input dim " + std::to_string(inputs.cols()) +
                                " does not match model input dim " +
                                std::to_string(m.input_dim));
  }
  caches.resize(m.layers.size());
  const Eigen::MatrixXd* x = &inputs;
  for (size_t l = 0; l < m.layers.size(); ++l) {
    const Layer& layer = m.layers[l];
    LayerCache& cache = caches[l];
    Eigen::MatrixXd out;
    if (layer.spec.kind == LayerKind::kTdnn) {
      tdnn_forward(layer.tdnn, *x, cache.tdnn);
      out = cache.tdnn.pre.cwiseMax(0.0);
    } else {
      lstmp_forward(layer.lstmp, *x, cache.lstmp);
      out = cache.lstmp.proj;
    }
    if (rng != nullptr && m.dropout_rate > 0.0) {
      const double keep = 1.0 - m.dropout_rate;
      cache.mask.resize(out.rows(), out.cols());
      for (long r = 0; r < out.rows(); ++r) {
        for (long c = 0; c < out.cols(); ++c) {
          cache.mask(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
        }
      }
      out = out.cwiseProduct(cache.mask);
    }
    cache.out = std::move(out);
    x = &cache.out;
  }
  return *x;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (long t = 0; t < logits.rows(); ++t) {
    Eigen::ArrayXd row = logits.row(t).array();
    double mx = row.maxCoeff();
    Eigen::ArrayXd e = (row - mx).exp();
    p.row(t) = (e / e.sum()).transpose();
  }
  return p;
}

void tdnn_backward(const TdnnLayer& layer, const Eigen::MatrixXd& d_out, const TdnnCache& cache,
                   TdnnLayer& grad, Eigen::MatrixXd& d_in) {
  const long T = d_out.rows();
  const long I = d_in.cols();
  Eigen::MatrixXd d_pre =
      d_out.cwiseProduct((cache.pre.array() > 0.0).cast<double>().matrix());
  grad.weight += d_pre.transpose() * cache.spliced;
  grad.bias += d_pre.colwise().sum().transpose();
  Eigen::MatrixXd d_spliced = d_pre * layer.weight;
  for (long t = 0; t < T; ++t) {
    for (size_t k = 0; k < layer.offsets.size(); ++k) {
      long src = std::clamp(t + layer.offsets[k], 0L, T - 1);
      d_in.row(src) += d_spliced.block(t, static_cast<long>(k) * I, 1, I);
    }
  }
}

void lstmp_backward(const LstmpLayer& layer, const Eigen::MatrixXd& x,
                    const Eigen::MatrixXd& d_out, const LstmpCache& cache, LstmpLayer& grad,
                    Eigen::MatrixXd& d_in) {
  const long T = x.rows();
  const long C = layer.bias.size() / 4;
  const long P = layer.w_proj.rows();

  Eigen::MatrixXd dz_all(T, 4 * C);
  Eigen::VectorXd dr_carry = Eigen::VectorXd::Zero(P);
  Eigen::ArrayXd dc_carry = Eigen::ArrayXd::Zero(C);

  for (long t = T - 1; t >= 0; --t) {
    Eigen::ArrayXd gi = cache.gate_i.row(t).transpose().array();
    Eigen::ArrayXd gf = cache.gate_f.row(t).transpose().array();
    Eigen::ArrayXd gg = cache.gate_g.row(t).transpose().array();
    Eigen::ArrayXd go = cache.gate_o.row(t).transpose().array();
    Eigen::ArrayXd c = cache.cell.row(t).transpose().array();
    Eigen::ArrayXd tc = cache.tanh_cell.row(t).transpose().array();
    Eigen::ArrayXd m = cache.hidden.row(t).transpose().array();
    Eigen::ArrayXd c_prev =
        t > 0 ? Eigen::ArrayXd(cache.cell.row(t - 1).transpose().array())
              : Eigen::ArrayXd(Eigen::ArrayXd::Zero(C));

    Eigen::VectorXd dr = d_out.row(t).transpose() + dr_carry;
    grad.w_proj += dr * m.matrix().transpose();
    Eigen::ArrayXd dm = (layer.w_proj.transpose() * dr).array();

    Eigen::ArrayXd d_go = dm * tc;
    Eigen::ArrayXd da_o = d_go * go * (1.0 - go);
    Eigen::ArrayXd dc = dm * go * (1.0 - tc.square()) + dc_carry +
                        da_o * layer.peep_out.array();
    Eigen::ArrayXd d_gi = dc * gg;
    Eigen::ArrayXd da_i = d_gi * gi * (1.0 - gi);
    Eigen::ArrayXd d_gf = dc * c_prev;
    Eigen::ArrayXd da_f = d_gf * gf * (1.0 - gf);
    Eigen::ArrayXd d_gg = dc * gi;
    Eigen::ArrayXd da_g = d_gg * (1.0 - gg.square());

    grad.peep_out.array() += da_o * c;
    grad.peep_in.array() += da_i * c_prev;
    grad.peep_forget.array() += da_f * c_prev;

    Eigen::VectorXd dz(4 * C);
    dz.segment(0, C) = da_i.matrix();
    dz.segment(C, C) = da_f.matrix();
    dz.segment(2 * C, C) = da_g.matrix();
    dz.segment(3 * C, C) = da_o.matrix();
    dz_all.row(t) = dz.transpose();

    dr_carry = layer.w_rec.transpose() * dz;
    dc_carry = dc * gf + da_i * layer.peep_in.array() + da_f * layer.peep_forget.array();
  }

  grad.bias += dz_all.colwise().sum().transpose();
  grad.w_in += dz_all.transpose() * x;
  d_in += dz_all * layer.w_in;
  // Recurrent weight gradient uses r_{t-1}: shift the projection rows.
  if (T > 1) {
    grad.w_rec += dz_all.bottomRows(T - 1).transpose() * cache.proj.topRows(T - 1);
  }
}

void append_raw(std::string& out, const void* data, size_t n) {
  out.append(static_cast<const char*>(data), n);
}

void append_u32(std::string& out, uint32_t v) { append_raw(out, &v, sizeof(v)); }
void append_i32(std::string& out, int32_t v) { append_raw(out, &v, sizeof(v)); }
void append_u64(std::string& out, uint64_t v) { append_raw(out, &v, sizeof(v)); }
void append_f64(std::string& out, double v) { append_raw(out, &v, sizeof(v)); }

void append_matrix(std::string& out, const Eigen::MatrixXd& m) {
  append_u32(out, static_cast<uint32_t>(m.rows()));
  append_u32(out, static_cast<uint32_t>(m.cols()));
  append_raw(out, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

void append_vector(std::string& out, const Eigen::VectorXd& v) {
  append_u32(out, static_cast<uint32_t>(v.size()));
  append_raw(out, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
}

class Reader {
 public:
  Reader(const std::string& buf, const std::string& what) : buf_(buf), what_(what) {}

  void raw(void* dst, size_t n) {
    if (pos_ + n > buf_.size()) throw std::runtime_error(what_ + ": truncated data");
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t u32() { uint32_t v; raw(&v, sizeof(v)); return v; }
  int32_t i32() { int32_t v; raw(&v, sizeof(v)); return v; }
  uint64_t u64() { uint64_t v; raw(&v, sizeof(v)); return v; }
  double f64() { double v; raw(&v, sizeof(v)); return v; }
  Eigen::MatrixXd matrix() {
    uint32_t r = u32(), c = u32();
    Eigen::MatrixXd m(r, c);
    raw(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
    return m;
  }
  Eigen::VectorXd vector() {
    uint32_t n = u32();
    Eigen::VectorXd v(n);
    raw(v.data(), sizeof(double) * n);
    return v;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::string& buf_;
  std::string what_;
  size_t pos_ = 0;
};

constexpr char kCheckpointMagic[8] = {'X', 'L', 'A', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kCheckpointVersion = 1;

}  // namespace

LayerSpec tdnn_spec(std::vector<int> offsets, int dim) {
  LayerSpec s;
  s.kind = LayerKind::kTdnn;
  s.offsets = std::move(offsets);
  s.dim = dim;
  check_spec(s);
  return s;
}

LayerSpec lstmp_spec(int cell_dim, int proj_dim) {
  LayerSpec s;
  s.kind = LayerKind::kLstmp;
  s.cell_dim = cell_dim;
  s.proj_dim = proj_dim;
  check_spec(s);
  return s;
}

AcousticModel make_model(int input_dim, const std::vector<LayerSpec>& specs,
                         const std::vector<std::string>& phone_set, uint64_t seed) {
  if (input_dim <= 0) throw std::invalid_argument("model: input_dim must be positive");
  if (phone_set.empty()) throw std::invalid_argument("model: empty phone set");
  AcousticModel m;
  m.input_dim = input_dim;
  m.phone_set = phone_set;
  int in_dim = input_dim;
  for (size_t l = 0; l < specs.size(); ++l) {
    check_spec(specs[l]);
    Layer layer;
    layer.spec = specs[l];
    Rng rng(mix_seed(seed, "layer-init", l));
    if (specs[l].kind == LayerKind::kTdnn) {
      const long fan_in = static_cast<long>(in_dim) * static_cast<long>(specs[l].offsets.size());
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      layer.tdnn.offsets = specs[l].offsets;
      layer.tdnn.weight = uniform_matrix(specs[l].dim, fan_in, bound, rng);
      layer.tdnn.bias = Eigen::VectorXd::Zero(specs[l].dim);
    } else {
      const long C = specs[l].cell_dim;
      const long P = specs[l].proj_dim;
      const double bi = 1.0 / std::sqrt(static_cast<double>(in_dim));
      const double br = 1.0 / std::sqrt(static_cast<double>(P));
      const double bc = 1.0 / std::sqrt(static_cast<double>(C));
      layer.lstmp.w_in = uniform_matrix(4 * C, in_dim, bi, rng);
      layer.lstmp.w_rec = uniform_matrix(4 * C, P, br, rng);
      layer.lstmp.bias = Eigen::VectorXd::Zero(4 * C);
      layer.lstmp.bias.segment(C, C).setOnes();  // forget gate starts open
      layer.lstmp.peep_in = uniform_matrix(C, 1, bc, rng).col(0);
      layer.lstmp.peep_forget = uniform_matrix(C, 1, bc, rng).col(0);
      layer.lstmp.peep_out = uniform_matrix(C, 1, bc, rng).col(0);
      layer.lstmp.w_proj = uniform_matrix(P, C, bc, rng);
    }
    in_dim = specs[l].output_dim();
    m.layers.push_back(std::move(layer));
  }
  init_output_layer(m, seed);
  return m;
}

Gradients make_gradients(const AcousticModel& m) {
  Gradients g;
  g.layers = m.layers;
  g.out_weight = m.out_weight;
  g.out_bias = m.out_bias;
  zero_gradients(g);
  return g;
}

void zero_gradients(Gradients& g) {
  for (auto& layer : g.layers) {
    if (layer.spec.kind == LayerKind::kTdnn) {
      layer.tdnn.weight.setZero();
      layer.tdnn.bias.setZero();
    } else {
      layer.lstmp.w_in.setZero();
      layer.lstmp.w_rec.setZero();
      layer.lstmp.bias.setZero();
      layer.lstmp.peep_in.setZero();
      layer.lstmp.peep_forget.setZero();
      layer.lstmp.peep_out.setZero();
      layer.lstmp.w_proj.setZero();
    }
  }
  g.out_weight.setZero();
  g.out_bias.setZero();
}

std::vector<std::pair<double*, double*>> parameter_pairs(AcousticModel& m, Gradients& g) {
  std::vector<std::pair<double*, double*>> pairs;
  auto add = [&](double* mp, double* gp, long n) {
    for (long i = 0; i < n; ++i) pairs.emplace_back(mp + i, gp + i);
  };
  for (size_t l = 0; l < m.layers.size(); ++l) {
    Layer& ml = m.layers[l];
    Layer& gl = g.layers[l];
    if (ml.spec.kind == LayerKind::kTdnn) {
      add(ml.tdnn.weight.data(), gl.tdnn.weight.data(), ml.tdnn.weight.size());
      add(ml.tdnn.bias.data(), gl.tdnn.bias.data(), ml.tdnn.bias.size());
    } else {
      add(ml.lstmp.w_in.data(), gl.lstmp.w_in.data(), ml.lstmp.w_in.size());
      add(ml.lstmp.w_rec.data(), gl.lstmp.w_rec.data(), ml.lstmp.w_rec.size());
      add(ml.lstmp.bias.data(), gl.lstmp.bias.data(), ml.lstmp.bias.size());
      add(ml.lstmp.peep_in.data(), gl.lstmp.peep_in.data(), ml.lstmp.peep_in.size());
      add(ml.lstmp.peep_forget.data(), gl.lstmp.peep_forget.data(), ml.lstmp.peep_forget.size());
      add(ml.lstmp.peep_out.data(), gl.lstmp.peep_out.data(), ml.lstmp.peep_out.size());
      add(ml.lstmp.w_proj.data(), gl.lstmp.w_proj.data(), ml.lstmp.w_proj.size());
    }
  }
  add(m.out_weight.data(), g.out_weight.data(), m.out_weight.size());
  add(m.out_bias.data(), g.out_bias.data(), m.out_bias.size());
  return pairs;
}

size_t parameter_count(const AcousticModel& m) {
  size_t n = 0;
  for (const auto& layer : m.layers) {
    if (layer.spec.kind == LayerKind::kTdnn) {
      n += static_cast<size_t>(layer.tdnn.weight.size() + layer.tdnn.bias.size());
    } else {
      n += static_cast<size_t>(layer.lstmp.w_in.size() + layer.lstmp.w_rec.size() +
                               layer.lstmp.bias.size() + layer.lstmp.peep_in.size() +
                               layer.lstmp.peep_forget.size() + layer.lstmp.peep_out.size() +
                               layer.lstmp.w_proj.size());
    }
  }
  n += static_cast<size_t>(m.out_weight.size() + m.out_bias.size());
  return n;
}

Eigen::MatrixXd forward(const AcousticModel& m, const Eigen::MatrixXd& inputs) {
  std::vector<LayerCache> caches;
  Eigen::MatrixXd hidden = run_hidden(m, inputs, caches, nullptr);
  Eigen::MatrixXd logits =
      (hidden * m.out_weight.transpose()).rowwise() + m.out_bias.transpose();
  return softmax_rows(logits);
}

double loss_and_grads(const AcousticModel& m, const Eigen::MatrixXd& inputs,
                      const std::vector<int>& labels, Gradients* grads,
                      uint64_t dropout_seed) {
  const long T = inputs.rows();
  if (static_cast<long>(labels.size()) != T) {
    throw std::invalid_argument("loss: label count does not match frame count");
  }
  const int K = static_cast<int>(m.phone_set.size());
  for (int lab : labels) {
    if (lab < 0 || lab >= K) throw std::invalid_argument("loss: label outside phone set");
  }

  Rng dropout_rng(dropout_seed);
  std::vector<LayerCache> caches;
  Eigen::MatrixXd hidden = run_hidden(m, inputs, caches, grads != nullptr ? &dropout_rng : nullptr);
  Eigen::MatrixXd logits =
      (hidden * m.out_weight.transpose()).rowwise() + m.out_bias.transpose();
  Eigen::MatrixXd posteriors = softmax_rows(logits);

  double loss = 0.0;
  for (long t = 0; t < T; ++t) {
    loss -= std::log(std::max(posteriors(t, labels[static_cast<size_t>(t)]), 1e-300));
  }
  loss /= static_cast<double>(T);
  if (grads == nullptr) return loss;

  Eigen::MatrixXd d_logits = posteriors;
  for (long t = 0; t < T; ++t) d_logits(t, labels[static_cast<size_t>(t)]) -= 1.0;
  d_logits /= static_cast<double>(T);

  grads->out_weight += d_logits.transpose() * hidden;
  grads->out_bias += d_logits.colwise().sum().transpose();
  Eigen::MatrixXd d_out = d_logits * m.out_weight;

  for (long l = static_cast<long>(m.layers.size()) - 1; l >= 0; --l) {
    const Layer& layer = m.layers[static_cast<size_t>(l)];
    LayerCache& cache = caches[static_cast<size_t>(l)];
    if (cache.mask.size() > 0) d_out = d_out.cwiseProduct(cache.mask);
    const Eigen::MatrixXd& layer_in =
        l == 0 ? inputs : caches[static_cast<size_t>(l) - 1].out;
    Eigen::MatrixXd d_in = Eigen::MatrixXd::Zero(layer_in.rows(), layer_in.cols());
    if (layer.spec.kind == LayerKind::kTdnn) {
      tdnn_backward(layer.tdnn, d_out, cache.tdnn, grads->layers[static_cast<size_t>(l)].tdnn,
                    d_in);
    } else {
      lstmp_backward(layer.lstmp, layer_in, d_out, cache.lstmp,
                     grads->layers[static_cast<size_t>(l)].lstmp, d_in);
    }
    d_out = std::move(d_in);
  }
  return loss;
}

namespace {

void sgd_step(AcousticModel& m, const Gradients& g, double lr) {
  for (size_t l = 0; l < m.layers.size(); ++l) {
    Layer& ml = m.layers[l];
    const Layer& gl = g.layers[l];
    if (ml.spec.kind == LayerKind::kTdnn) {
      ml.tdnn.weight -= lr * gl.tdnn.weight;
      ml.tdnn.bias -= lr * gl.tdnn.bias;
    } else {
      ml.lstmp.w_in -= lr * gl.lstmp.w_in;
      ml.lstmp.w_rec -= lr * gl.lstmp.w_rec;
      ml.lstmp.bias -= lr * gl.lstmp.bias;
      ml.lstmp.peep_in -= lr * gl.lstmp.peep_in;
      ml.lstmp.peep_forget -= lr * gl.lstmp.peep_forget;
      ml.lstmp.peep_out -= lr * gl.lstmp.peep_out;
      ml.lstmp.w_proj -= lr * gl.lstmp.w_proj;
    }
  }
  m.out_weight -= lr * g.out_weight;
  m.out_bias -= lr * g.out_bias;
}

}  // namespace

TrainLog train(AcousticModel& m, const std::vector<TrainItem>& data, const TrainConfig& cfg) {
  if (cfg.final_lr > cfg.initial_lr) {
    throw std::invalid_argument("train: final_lr must not exceed initial_lr");
  }
  if (cfg.epochs < 0) throw std::invalid_argument("train: negative epochs");
  if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");

  TrainLog log;
  log.initial_lr = cfg.initial_lr;
  log.final_lr = cfg.final_lr;
  log.dropout_rate = cfg.dropout_rate;
  if (cfg.epochs == 0) return log;  // no-op training, used for surgery-only runs
  if (data.empty()) throw std::invalid_argument("train: empty data");

  // Optional truncation of long sequences into independent BPTT windows.
  std::vector<TrainItem> chunks;
  const std::vector<TrainItem>* items = &data;
  if (cfg.bptt_chunk > 0) {
    for (const auto& item : data) {
      for (long start = 0; start < item.input.rows(); start += cfg.bptt_chunk) {
        long len = std::min<long>(cfg.bptt_chunk, item.input.rows() - start);
        TrainItem c;
        c.input = item.input.middleRows(start, len);
        c.labels.assign(item.labels.begin() + start, item.labels.begin() + start + len);
        chunks.push_back(std::move(c));
      }
    }
    items = &chunks;
  }

  const size_t n = items->size();
  const long steps_per_epoch =
      static_cast<long>((n + static_cast<size_t>(cfg.batch) - 1) / static_cast<size_t>(cfg.batch));
  const long total_steps = steps_per_epoch * cfg.epochs;
  auto lr_at = [&](long step) {
    if (total_steps <= 1) return cfg.initial_lr;
    double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    return cfg.initial_lr * std::pow(cfg.final_lr / cfg.initial_lr, frac);
  };

  m.dropout_rate = cfg.dropout_rate;
  Gradients grads = make_gradients(m);
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(cfg.seed, "shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    long epoch_items = 0;
    double lr = cfg.initial_lr;
    for (size_t pos = 0; pos < n; pos += static_cast<size_t>(cfg.batch)) {
      zero_gradients(grads);
      size_t batch_end = std::min(n, pos + static_cast<size_t>(cfg.batch));
      double batch_loss = 0.0;
      for (size_t i = pos; i < batch_end; ++i) {
        uint64_t dropout_seed =
            mix_seed(cfg.seed, "dropout", static_cast<uint64_t>(step) * 1000003 + order[i]);
        batch_loss += loss_and_grads(m, (*items)[order[i]].input, (*items)[order[i]].labels,
                                     &grads, dropout_seed);
      }
      const double inv = 1.0 / static_cast<double>(batch_end - pos);
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: diverged (non-finite loss) at step " +
                                 std::to_string(step));
      }
      // Scale accumulated gradients to the batch mean.
      Gradients* gp = &grads;
      for (auto& layer : gp->layers) {
        if (layer.spec.kind == LayerKind::kTdnn) {
          layer.tdnn.weight *= inv;
          layer.tdnn.bias *= inv;
        } else {
          layer.lstmp.w_in *= inv;
          layer.lstmp.w_rec *= inv;
          layer.lstmp.bias *= inv;
          layer.lstmp.peep_in *= inv;
          layer.lstmp.peep_forget *= inv;
          layer.lstmp.peep_out *= inv;
          layer.lstmp.w_proj *= inv;
        }
      }
      gp->out_weight *= inv;
      gp->out_bias *= inv;

      lr = lr_at(step);
      if (step == 0) log.first_step_lr = lr;
      sgd_step(m, grads, lr);
      epoch_loss += batch_loss * static_cast<double>(batch_end - pos);
      epoch_items += static_cast<long>(batch_end - pos);
      ++step;
    }
    log.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_items));
    log.epoch_lr.push_back(lr);
  }
  log.steps = static_cast<int>(step);
  log.last_step_lr = lr_at(total_steps - 1);
  return log;
}

AcousticModel transfer_hidden(const AcousticModel& source,
                              const std::vector<std::string>& new_phone_set, uint64_t seed) {
  if (new_phone_set.empty()) throw std::invalid_argument("transfer_hidden: empty phone set");
  AcousticModel target = source;
  target.phone_set = new_phone_set;
  init_output_layer(target, seed);
  return target;
}

AcousticModel transfer_full(const AcousticModel& source) { return source; }

std::string serialize_weights(const AcousticModel& m) {
  std::string out;
  append_u32(out, static_cast<uint32_t>(m.input_dim));
  append_f64(out, m.dropout_rate);
  append_u64(out, m.extractor_fingerprint);
  append_u32(out, static_cast<uint32_t>(m.phone_set.size()));
  for (const auto& p : m.phone_set) {
    append_u32(out, static_cast<uint32_t>(p.size()));
    append_raw(out, p.data(), p.size());
  }
  append_u32(out, static_cast<uint32_t>(m.layers.size()));
  for (const auto& layer : m.layers) {
    out.push_back(static_cast<char>(layer.spec.kind));
    if (layer.spec.kind == LayerKind::kTdnn) {
      append_u32(out, static_cast<uint32_t>(layer.tdnn.offsets.size()));
      for (int o : layer.tdnn.offsets) append_i32(out, o);
      append_matrix(out, layer.tdnn.weight);
      append_vector(out, layer.tdnn.bias);
    } else {
      append_matrix(out, layer.lstmp.w_in);
      append_matrix(out, layer.lstmp.w_rec);
      append_vector(out, layer.lstmp.bias);
      append_vector(out, layer.lstmp.peep_in);
      append_vector(out, layer.lstmp.peep_forget);
      append_vector(out, layer.lstmp.peep_out);
      append_matrix(out, layer.lstmp.w_proj);
    }
  }
  append_matrix(out, m.out_weight);
  append_vector(out, m.out_bias);
  return out;
}

namespace {

AcousticModel deserialize_weights(Reader& r) {
  AcousticModel m;
  m.input_dim = static_cast<int>(r.u32());
  m.dropout_rate = r.f64();
  m.extractor_fingerprint = r.u64();
  uint32_t n_phones = r.u32();
  m.phone_set.resize(n_phones);
  for (auto& p : m.phone_set) {
    uint32_t len = r.u32();
    p.resize(len);
    r.raw(p.data(), len);
  }
  uint32_t n_layers = r.u32();
  int in_dim = m.input_dim;
  for (uint32_t l = 0; l < n_layers; ++l) {
    Layer layer;
    char kind;
    r.raw(&kind, 1);
    layer.spec.kind = static_cast<LayerKind>(kind);
    if (layer.spec.kind == LayerKind::kTdnn) {
      uint32_t n_off = r.u32();
      layer.tdnn.offsets.resize(n_off);
      for (auto& o : layer.tdnn.offsets) o = r.i32();
      layer.tdnn.weight = r.matrix();
      layer.tdnn.bias = r.vector();
      layer.spec.offsets = layer.tdnn.offsets;
      layer.spec.dim = static_cast<int>(layer.tdnn.weight.rows());
    } else if (layer.spec.kind == LayerKind::kLstmp) {
      layer.lstmp.w_in = r.matrix();
      layer.lstmp.w_rec = r.matrix();
      layer.lstmp.bias = r.vector();
      layer.lstmp.peep_in = r.vector();
      layer.lstmp.peep_forget = r.vector();
      layer.lstmp.peep_out = r.vector();
      layer.lstmp.w_proj = r.matrix();
      layer.spec.cell_dim = static_cast<int>(layer.lstmp.bias.size() / 4);
      layer.spec.proj_dim = static_cast<int>(layer.lstmp.w_proj.rows());
    } else {
      throw std::runtime_error("checkpoint: unknown layer kind");
    }
    in_dim = layer.spec.output_dim();
    m.layers.push_back(std::move(layer));
  }
  (void)in_dim;
  m.out_weight = r.matrix();
  m.out_bias = r.vector();
  return m;
}

}  // namespace

void save_checkpoint(const AcousticModel& m, const TrainState& state,
                     const std::filesystem::path& path) {
  std::string payload;
  append_f64(payload, state.last_lr);
  append_u32(payload, state.epoch);
  payload += serialize_weights(m);

  std::string out;
  append_raw(out, kCheckpointMagic, sizeof(kCheckpointMagic));
  append_u32(out, kCheckpointVersion);
  append_u64(out, fnv1a(payload.data(), payload.size()));
  append_u64(out, payload.size());
  out += payload;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot write: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

std::pair<AcousticModel, TrainState> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kCheckpointMagic) + sizeof(uint32_t) + 2 * sizeof(uint64_t)) {
    throw std::runtime_error("checkpoint: truncated file: " + path.string());
  }
  if (std::memcmp(buf.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic: " + path.string());
  }
  size_t pos = sizeof(kCheckpointMagic);
  uint32_t version;
  uint64_t checksum, payload_len;
  std::memcpy(&version, buf.data() + pos, sizeof(version));
  pos += sizeof(version);
  std::memcpy(&checksum, buf.data() + pos, sizeof(checksum));
  pos += sizeof(checksum);
  std::memcpy(&payload_len, buf.data() + pos, sizeof(payload_len));
  pos += sizeof(payload_len);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version in " + path.string());
  }
  if (buf.size() - pos != payload_len) {
    throw std::runtime_error("checkpoint: truncated payload: " + path.string());
  }
  std::string payload = buf.substr(pos);
  if (fnv1a(payload.data(), payload.size()) != checksum) {
    throw std::runtime_error("checkpoint: checksum mismatch (corrupted file): " + path.string());
  }
  Reader r(payload, "checkpoint");
  TrainState state;
  state.last_lr = r.f64();
  state.epoch = r.u32();
  AcousticModel m = deserialize_weights(r);
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes: " + path.string());
  return {std::move(m), state};
}

}  // namespace xladapt
