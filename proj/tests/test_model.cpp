// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "pwleq/checkpoint.hpp"
#include "pwleq/model.hpp"

using namespace pwleq;
using Mat = Eigen::MatrixXd;

namespace {

ActivationSet hard_set() {
  return swap_activations(ActivationSet::exact(), fit_hard(ActivationKind::Sigmoid),
                          fit_hard(ActivationKind::Tanh));
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pwleq_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Equalizer, ZeroParamsGiveZeroOutput) {
  std::mt19937_64 rng(0);
  const auto y = equalizer_forward(EqualizerParams::zeros(kHiddenUnits), oracle::random_matrix(rng, 81, 2),
                                   ActivationSet::exact());
  EXPECT_EQ(y.rows(), 61);
  EXPECT_EQ(y.cols(), 2);
  EXPECT_TRUE(y.isZero(0.0));
}

TEST(Equalizer, OutputShape) {
  const auto p = init_params(3);
  std::mt19937_64 rng(1);
  const auto y = equalizer_forward(p, oracle::random_matrix(rng, 81, 2), ActivationSet::exact());
  EXPECT_EQ(y.rows(), kWindowLength - kKernelLength + 1);
}

TEST(Equalizer, RejectsWrongWindow) {
  const auto p = init_params(3);
  EXPECT_THROW(equalizer_forward(p, Mat::Zero(80, 2), ActivationSet::exact()), DimensionError);
  EXPECT_THROW(equalizer_forward(p, Mat::Zero(81, 3), ActivationSet::exact()), DimensionError);
}

TEST(Equalizer, MatchesScalarOracle) {
  std::mt19937_64 rng(0);
  const auto p = oracle::random_params(rng, kHiddenUnits, 0.3);
  const Mat window = oracle::random_matrix(rng, 81, 2);
  const Mat y = equalizer_forward(p, window, ActivationSet::exact());
  const Mat ref = oracle::equalizer(p, window, oracle::sigmoid, [](double v) { return std::tanh(v); });
  EXPECT_LT((y - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Equalizer, MatchesScalarOracleWithPwl) {
  std::mt19937_64 rng(5);
  const auto p = oracle::random_params(rng, 4, 0.5);
  const Mat window = oracle::random_matrix(rng, 81, 2);
  const auto s = fit_chord(ActivationKind::Sigmoid, 5, 4.0);
  const auto t = fit_chord(ActivationKind::Tanh, 5, 2.0);
  const Mat y = equalizer_forward(p, window, swap_activations(ActivationSet::exact(), s, t));
  const Mat ref = oracle::equalizer(p, window, [&](double v) { return oracle::pwl(s, v); },
                                    [&](double v) { return oracle::pwl(t, v); });
  EXPECT_LT((y - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Equalizer, BatchMatchesSingleWindows) {
  std::mt19937_64 rng(2);
  const auto p = oracle::random_params(rng, 5);
  std::vector<Mat> windows;
  for (int i = 0; i < 3; ++i) windows.push_back(oracle::random_matrix(rng, 81, 2));
  const auto fw = forward_batch(p, windows, ActivationSet::exact());
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT((fw.output(i) - equalizer_forward(p, windows[i], ActivationSet::exact())).cwiseAbs().maxCoeff(),
              1e-13);
  }
}

TEST(Equalizer, FiniteDifferenceSpotCheck) {
  const auto exact = gradcheck::over_instances(
      2, 0, [](std::uint64_t s) { return gradcheck::equalizer(s, ActivationSet::exact(), 50); });
  EXPECT_LT(exact.max_rel, 1e-4) << exact.worst;
  const auto acts = hard_set();
  const auto pwl = gradcheck::over_instances(2, 0, [&](std::uint64_t s) { return gradcheck::equalizer(s, acts, 50); });
  EXPECT_LT(pwl.max_rel, 1e-4) << pwl.worst;
}

TEST(Equalizer, ZeroUpstreamAndBiasIdentity) {
  std::mt19937_64 rng(3);
  const auto p = oracle::random_params(rng, 3);
  const Mat window = oracle::random_matrix(rng, 81, 2);
  const auto zero = equalizer_backward(p, window, ActivationSet::exact(), Mat::Zero(61, 2));
  for (const auto* t : zero.tensors()) EXPECT_TRUE(t->isZero(0.0));
  const Mat g = oracle::random_matrix(rng, 61, 2);
  const auto grads = equalizer_backward(p, window, ActivationSet::exact(), g);
  EXPECT_LT((grads.conv.bias - g.colwise().sum().transpose()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Swap, GateAtZeroIsHalf) {
  const auto acts = hard_set();
  EXPECT_EQ(acts.gate.forward(0.0), 0.5);
  EXPECT_EQ(acts.mode(), ActivationSet::Mode::Pwl);
}

TEST(Swap, KindMismatchRejected) {
  EXPECT_THROW(swap_activations(ActivationSet::exact(), fit_hard(ActivationKind::Tanh),
                                fit_hard(ActivationKind::Tanh)),
               std::invalid_argument);
}

TEST(Swap, ChangesOutputAndRoundTrips) {
  const auto p = init_params(0);
  std::mt19937_64 rng(0);
  const Mat window = oracle::random_matrix(rng, 81, 2);
  const Mat exact = equalizer_forward(p, window, ActivationSet::exact());
  const Mat swapped = equalizer_forward(p, window, hard_set());
  EXPECT_GT((exact - swapped).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(equalizer_forward(p, window, ActivationSet::exact()), exact);
}

TEST(InitParams, DeterministicWithForgetBias) {
  const auto a = init_params(9), b = init_params(9), c = init_params(10);
  EXPECT_EQ(a.forward.W, b.forward.W);
  EXPECT_NE(a.forward.W, c.forward.W);
  EXPECT_TRUE((a.forward.b.middleRows(kHiddenUnits, kHiddenUnits).array() == 1.0).all());
  EXPECT_TRUE(a.forward.b.topRows(kHiddenUnits).isZero(0.0));
  EXPECT_TRUE(a.conv.bias.isZero(0.0));
}

TEST(Windows, Counts) {
  EXPECT_EQ(window_count(81), 1u);
  EXPECT_EQ(window_count(142), 2u);
  EXPECT_EQ(window_count(141), 1u);
  EXPECT_EQ(window_count(80), 0u);
  std::vector<std::complex<double>> a(80), b(81);
  EXPECT_THROW(window_stream(a, a), std::invalid_argument);
  EXPECT_THROW(window_stream(a, b), std::invalid_argument);
}

TEST(Checkpoint, EncodeDecodeRoundTrip) {
  const auto p = init_params(4, 6);
  const auto tensors = to_named_tensors(p);
  EXPECT_EQ(decode_checkpoint(encode_checkpoint(tensors)), tensors);
  const auto back = from_named_tensors(tensors);
  EXPECT_EQ(back.forward.U, p.forward.U);
  EXPECT_EQ(back.conv.taps[20], p.conv.taps[20]);
}

TEST(Checkpoint, CorruptInputRejected) {
  const auto bytes = encode_checkpoint(to_named_tensors(init_params(1, 2)));
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
  EXPECT_THROW(decode_checkpoint("XXXX" + bytes.substr(4)), std::runtime_error);
  EXPECT_THROW(decode_checkpoint(bytes + "z"), std::runtime_error);
}

TEST(Checkpoint, SaveLoadModelKeepsActivations) {
  const auto dir = temp_dir("model");
  const auto p = init_params(2, 4);
  const auto s = fit_minimax(ActivationKind::Sigmoid, 5, 8.0, 101);
  const auto t = fit_minimax(ActivationKind::Tanh, 5, 4.0, 101);
  save_model(dir / "m", p, swap_activations(ActivationSet::exact(), s, t));
  const auto loaded = load_model(dir / "m.ckpt");
  EXPECT_EQ(loaded.params.forward.W, p.forward.W);
  EXPECT_EQ(loaded.acts.gate.spec(), s);
  EXPECT_EQ(loaded.acts.state.spec(), t);

  save_model(dir / "e", p, ActivationSet::exact());
  EXPECT_FALSE(load_model(dir / "e").acts.gate.is_pwl());
  EXPECT_THROW(load_model(dir / "missing"), std::runtime_error);
}
