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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "xladapt/rng.hpp"

using namespace xladapt;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "xladapt_nnet_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Eigen::MatrixXd random_input(uint64_t seed, long frames, long dim) {
  Rng rng(seed);
  Eigen::MatrixXd x(frames, dim);
  for (long t = 0; t < frames; ++t) {
    for (long d = 0; d < dim; ++d) x(t, d) = rng.normal() * 0.5;
  }
  return x;
}

std::vector<int> random_labels(uint64_t seed, long frames, int n_classes) {
  Rng rng(seed);
  std::vector<int> y(static_cast<size_t>(frames));
  for (auto& v : y) v = rng.uniform_int(0, n_classes - 1);
  return y;
}

bool matrices_byte_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())) == 0;
}

bool vectors_byte_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())) == 0;
}

bool hidden_layers_byte_equal(const AcousticModel& a, const AcousticModel& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (size_t l = 0; l < a.layers.size(); ++l) {
    const Layer& x = a.layers[l];
    const Layer& y = b.layers[l];
    if (x.spec.kind != y.spec.kind) return false;
    if (x.spec.kind == LayerKind::kTdnn) {
      if (x.tdnn.offsets != y.tdnn.offsets) return false;
      if (!matrices_byte_equal(x.tdnn.weight, y.tdnn.weight)) return false;
      if (!vectors_byte_equal(x.tdnn.bias, y.tdnn.bias)) return false;
    } else {
      if (!matrices_byte_equal(x.lstmp.w_in, y.lstmp.w_in)) return false;
      if (!matrices_byte_equal(x.lstmp.w_rec, y.lstmp.w_rec)) return false;
      if (!vectors_byte_equal(x.lstmp.bias, y.lstmp.bias)) return false;
      if (!vectors_byte_equal(x.lstmp.peep_in, y.lstmp.peep_in)) return false;
      if (!vectors_byte_equal(x.lstmp.peep_forget, y.lstmp.peep_forget)) return false;
      if (!vectors_byte_equal(x.lstmp.peep_out, y.lstmp.peep_out)) return false;
      if (!matrices_byte_equal(x.lstmp.w_proj, y.lstmp.w_proj)) return false;
    }
  }
  return true;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("TDNN forward matches a hand-unrolled computation") {
  // One TDNN layer, offsets {-1, 1}, 2 inputs, 2 units, 2 phones.
  AcousticModel m = make_model(2, {tdnn_spec({-1, 1}, 2)}, {"sil", "aa"}, 5);
  m.layers[0].tdnn.weight << 1.0, 0.0, 0.5, -1.0, 0.0, 2.0, -0.5, 1.0;
  m.layers[0].tdnn.bias << 0.1, -0.2;
  m.out_weight << 1.0, 0.0, 0.0, 1.0;
  m.out_bias << 0.0, 0.0;

  Eigen::MatrixXd x(3, 2);
  x << 1.0, 2.0, -1.0, 0.5, 0.25, -0.75;

  // Frame 1 context: rows 0 and 2.
  double pre0 = 1.0 * 1.0 + 0.0 * 2.0 + 0.5 * 0.25 + (-1.0) * (-0.75) + 0.1;
  double pre1 = 0.0 * 1.0 + 2.0 * 2.0 + (-0.5) * 0.25 + 1.0 * (-0.75) - 0.2;
  double h0 = std::max(0.0, pre0);
  double h1 = std::max(0.0, pre1);
  double p0 = std::exp(h0) / (std::exp(h0) + std::exp(h1));

  Eigen::MatrixXd post = forward(m, x);
  REQUIRE(post.rows() == 3);
  REQUIRE(post.cols() == 2);
  CHECK(post(1, 0) == doctest::Approx(p0).epsilon(1e-12));
  for (long t = 0; t < 3; ++t) {
    CHECK(post.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("LSTMP forward matches a step-by-step recurrence") {
  const int I = 3, C = 2, P = 2, K = 2;
  AcousticModel m = make_model(I, {lstmp_spec(C, P)}, {"sil", "aa"}, 11);
  const LstmpLayer& L = m.layers[0].lstmp;

  Eigen::MatrixXd x = random_input(3, 4, I);

  // Independent recurrence with scalar loops.
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd r_prev = Eigen::VectorXd::Zero(P);
  Eigen::MatrixXd proj(4, P);
  for (long t = 0; t < 4; ++t) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(4 * C);
    for (int g = 0; g < 4 * C; ++g) {
      for (int i = 0; i < I; ++i) z(g) += L.w_in(g, i) * x(t, i);
      for (int p = 0; p < P; ++p) z(g) += L.w_rec(g, p) * r_prev(p);
      z(g) += L.bias(g);
    }
    Eigen::VectorXd c(C), mvec(C);
    for (int j = 0; j < C; ++j) {
      double gi = sig(z(j) + L.peep_in(j) * c_prev(j));
      double gf = sig(z(C + j) + L.peep_forget(j) * c_prev(j));
      double gg = std::tanh(z(2 * C + j));
      c(j) = gf * c_prev(j) + gi * gg;
      double go = sig(z(3 * C + j) + L.peep_out(j) * c(j));
      mvec(j) = go * std::tanh(c(j));
    }
    Eigen::VectorXd r = Eigen::VectorXd::Zero(P);
    for (int p = 0; p < P; ++p) {
      for (int j = 0; j < C; ++j) r(p) += L.w_proj(p, j) * mvec(j);
    }
    proj.row(t) = r.transpose();
    c_prev = c;
    r_prev = r;
  }

  // Compare through the softmax layer by feeding known output weights.
  m.out_weight.setZero();
  m.out_weight(0, 0) = 1.0;  // logit0 = proj[0], logit1 = 0
  m.out_bias.setZero();
  Eigen::MatrixXd post = forward(m, x);
  for (long t = 0; t < 4; ++t) {
    double expected = std::exp(proj(t, 0)) / (std::exp(proj(t, 0)) + 1.0);
    CHECK(post(t, 0) == doctest::Approx(expected).epsilon(1e-10));
  }
  (void)K;
}

TEST_CASE("analytic gradients match central finite differences") {
  // The protocol's reference shape: two TDNN layers plus one LSTMP layer.
  const int input_dim = 6;
  const int n_phones = 4;
  std::vector<LayerSpec> specs = {tdnn_spec({-1, 0, 1}, 5), tdnn_spec({-2, 0, 2}, 5),
                                  lstmp_spec(4, 3)};
  AcousticModel m =
      make_model(input_dim, specs, {"sil", "aa", "bb", "cc"}, 123);

  for (int utt = 0; utt < 3; ++utt) {
    const long T = 6 + 2 * utt;
    Eigen::MatrixXd x = random_input(100 + static_cast<uint64_t>(utt), T, input_dim);
    std::vector<int> y = random_labels(200 + static_cast<uint64_t>(utt), T, n_phones);

    Gradients g = make_gradients(m);
    double base = loss_and_grads(m, x, y, &g);
    CHECK(std::isfinite(base));

    auto pairs = parameter_pairs(m, g);
    REQUIRE(pairs.size() == parameter_count(m));
    const double h = 1e-4;
    double worst = 0.0;
    for (auto& [param, grad] : pairs) {
      double saved = *param;
      *param = saved + h;
      double up = loss_and_grads(m, x, y, nullptr);
      *param = saved - h;
      double down = loss_and_grads(m, x, y, nullptr);
      *param = saved;
      double numeric = (up - down) / (2.0 * h);
      double rel = std::abs(*grad - numeric) /
                   std::max({std::abs(*grad), std::abs(numeric), 1e-2});
      worst = std::max(worst, rel);
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("transfer surgery is byte-exact on three different shapes") {
  struct Shape {
    int input_dim;
    std::vector<LayerSpec> specs;
  };
  std::vector<Shape> shapes = {
      {5, {tdnn_spec({-1, 0, 1}, 6)}},
      {7, {tdnn_spec({-2, 0, 2}, 8), lstmp_spec(6, 4)}},
      {4, {lstmp_spec(5, 3), tdnn_spec({0, 1}, 4), lstmp_spec(4, 2)}},
  };
  std::vector<std::string> phones_a = {"sil", "a1", "a2", "a3"};
  std::vector<std::string> phones_b = {"sil", "b1", "b2", "b3", "b4"};

  for (size_t s = 0; s < shapes.size(); ++s) {
    AcousticModel src =
        make_model(shapes[s].input_dim, shapes[s].specs, phones_a, 1000 + s);

    AcousticModel hid = transfer_hidden(src, phones_b, 17);
    CHECK(hidden_layers_byte_equal(src, hid));
    CHECK(hid.phone_set == phones_b);
    CHECK(hid.out_weight.rows() == static_cast<long>(phones_b.size()));
    CHECK(!matrices_byte_equal(src.out_weight, hid.out_weight));
    CHECK(hid.extractor_fingerprint == src.extractor_fingerprint);

    AcousticModel full = transfer_full(src);
    CHECK(serialize_weights(full) == serialize_weights(src));
  }
}

TEST_CASE("checkpoints round trip bit-exactly and detect corruption") {
  AcousticModel m = make_model(6, {tdnn_spec({-1, 0, 1}, 5), lstmp_spec(4, 3)},
                               {"sil", "aa", "bb"}, 77);
  m.extractor_fingerprint = 0xabcdef;
  TrainState state{0.00123, 4};

  fs::path dir = tmp_dir("ckpt");
  save_checkpoint(m, state, dir / "a.ckpt");
  auto [r, rstate] = load_checkpoint(dir / "a.ckpt");
  CHECK(rstate.last_lr == state.last_lr);
  CHECK(rstate.epoch == state.epoch);
  CHECK(serialize_weights(r) == serialize_weights(m));
  CHECK(r.extractor_fingerprint == m.extractor_fingerprint);

  save_checkpoint(r, rstate, dir / "b.ckpt");
  CHECK(file_bytes(dir / "a.ckpt") == file_bytes(dir / "b.ckpt"));

  // Flip one payload byte: the checksum must catch it.
  std::string bytes = file_bytes(dir / "a.ckpt");
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
  std::ofstream out(dir / "bad.ckpt", std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  CHECK_THROWS(load_checkpoint(dir / "bad.ckpt"));
}

TEST_CASE("training follows the exponential learning-rate schedule") {
  AcousticModel m = make_model(4, {tdnn_spec({0}, 4)}, {"sil", "aa"}, 3);
  std::vector<TrainItem> data;
  for (int i = 0; i < 4; ++i) {
    data.push_back({random_input(static_cast<uint64_t>(i), 5, 4), random_labels(50 + i, 5, 2)});
  }

  TrainConfig cfg;
  cfg.initial_lr = 0.1;
  cfg.final_lr = 0.001;
  cfg.epochs = 3;
  cfg.batch = 2;
  cfg.seed = 1;
  TrainLog log = train(m, data, cfg);
  CHECK(log.steps == 6);
  CHECK(log.first_step_lr == cfg.initial_lr);
  CHECK(log.last_step_lr == doctest::Approx(cfg.final_lr).epsilon(1e-12));
  CHECK(log.epoch_loss.size() == 3);

  // Single-step schedule stays at the initial rate.
  AcousticModel m1 = make_model(4, {tdnn_spec({0}, 4)}, {"sil", "aa"}, 3);
  TrainConfig one;
  one.initial_lr = 0.05;
  one.final_lr = 0.005;
  one.epochs = 1;
  one.batch = 8;
  TrainLog log1 = train(m1, data, one);
  CHECK(log1.steps == 1);
  CHECK(log1.first_step_lr == one.initial_lr);
  CHECK(log1.last_step_lr == one.initial_lr);
}

TEST_CASE("training is deterministic and actually learns") {
  auto build = [] {
    return make_model(4, {tdnn_spec({-1, 0, 1}, 8)}, {"sil", "aa", "bb"}, 9);
  };
  // Learnable mapping: label depends on the sign of feature 0.
  std::vector<TrainItem> data;
  for (int i = 0; i < 6; ++i) {
    Eigen::MatrixXd x = random_input(static_cast<uint64_t>(300 + i), 20, 4);
    std::vector<int> y(20);
    for (long t = 0; t < 20; ++t) y[static_cast<size_t>(t)] = x(t, 0) > 0 ? 1 : 2;
    data.push_back({x, y});
  }
  TrainConfig cfg;
  cfg.initial_lr = 0.3;
  cfg.final_lr = 0.03;
  cfg.epochs = 25;
  cfg.batch = 2;
  cfg.seed = 4;

  AcousticModel a = build();
  TrainLog la = train(a, data, cfg);
  AcousticModel b = build();
  train(b, data, cfg);
  CHECK(serialize_weights(a) == serialize_weights(b));
  CHECK(la.epoch_loss.back() < 0.5 * la.epoch_loss.front());
}

TEST_CASE("zero-epoch training is a no-op") {
  AcousticModel m = make_model(4, {tdnn_spec({0}, 4)}, {"sil", "aa"}, 3);
  std::string before = serialize_weights(m);
  TrainConfig cfg;
  cfg.epochs = 0;
  TrainLog log = train(m, {}, cfg);
  CHECK(log.steps == 0);
  CHECK(serialize_weights(m) == before);
}

TEST_CASE("dropout only applies during training") {
  AcousticModel m = make_model(4, {tdnn_spec({0}, 8)}, {"sil", "aa"}, 21);
  m.dropout_rate = 0.5;
  Eigen::MatrixXd x = random_input(1, 6, 4);
  Eigen::MatrixXd p1 = forward(m, x);
  Eigen::MatrixXd p2 = forward(m, x);
  CHECK((p1 - p2).cwiseAbs().maxCoeff() == 0.0);

  // With dropout the training loss differs between seeds.
  std::vector<int> y = random_labels(2, 6, 2);
  Gradients g = make_gradients(m);
  double l1 = loss_and_grads(m, x, y, &g, 100);
  zero_gradients(g);
  double l2 = loss_and_grads(m, x, y, &g, 101);
  CHECK(l1 != l2);
}
