// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "pwleq/experiment.hpp"

using namespace pwleq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pwleq_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + PWLEQ_CLI_PATH + "\" " + args + " > \"" + out.string() +
                          "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

constexpr const char* kTinyConfig = R"(# tiny end-to-end run
channel.n_symbols = 2521
channel.seed = 11
train.batch_size = 8
train.hidden = 4
train.lr = 0.01
train.epochs = 2
train.retrain_epochs = 1
pwl.segments = 3,5
eval.test_windows = 3
)";

}  // namespace

TEST(Config, ParseAndFormatRoundTrip) {
  const auto c = parse_experiment_config(kTinyConfig);
  EXPECT_EQ(c.channel.n_symbols, 2521u);
  EXPECT_EQ(c.pretrain.epochs, 2);
  EXPECT_EQ(c.retrain.epochs, 1);
  EXPECT_EQ(c.retrain.hidden, 4);
  EXPECT_EQ(c.pwl.segments, (std::vector<int>{3, 5}));
  const auto again = parse_experiment_config(format_experiment_config(c));
  EXPECT_EQ(format_experiment_config(again), format_experiment_config(c));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_experiment_config("bogus = 1\n"), std::invalid_argument);
  EXPECT_THROW(parse_experiment_config("pwl.segments = 4\n"), std::invalid_argument);
  EXPECT_THROW(parse_experiment_config("pwl.fitter = spline\n"), std::invalid_argument);
  EXPECT_THROW(parse_experiment_config("channel.snr_db\n"), std::invalid_argument);
  EXPECT_EQ(parse_experiment_config("channel.snr_db = inf\n").channel.snr_db, kNoNoise);
}

TEST(Cli, ApproxHardTanh) {
  const auto dir = scratch_dir("approx");
  const auto r = run_cli("--out \"" + dir.string() + "\" approx tanh hard", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("max_abs_error=0.2384058440442"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "tanh_hard_k3.pwl"));
}

TEST(Cli, GenerateIsByteIdentical) {
  const auto a = scratch_dir("gen_a"), b = scratch_dir("gen_b");
  fs::path cfg = a / "tiny.cfg";
  std::ofstream(cfg) << kTinyConfig;
  ASSERT_EQ(run_cli("--config \"" + cfg.string() + "\" --out \"" + a.string() + "\" generate", a).code, 0);
  ASSERT_EQ(run_cli("--config \"" + cfg.string() + "\" --out \"" + b.string() + "\" generate", b).code, 0);
  EXPECT_EQ(slurp(a / "dataset.csv"), slurp(b / "dataset.csv"));
  EXPECT_FALSE(slurp(a / "dataset.csv").empty());
}

TEST(Cli, CostTable) {
  const auto dir = scratch_dir("cost");
  const auto r = run_cli("cost --segments 3,9", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("pwl3,0,203,34,2,1,1,8"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("pwl9,0,1374,230,8,1,1,26"), std::string::npos) << r.out;
}

TEST(Cli, ErrorExitCodes) {
  const auto dir = scratch_dir("errors");
  EXPECT_EQ(run_cli("", dir).code, 2);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("scratch --segments 4", dir).code, 2);
  const auto bad = run_cli("--out \"" + dir.string() + "\" approx tanh spline", dir);
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("pwleq: error:"), std::string::npos);
  EXPECT_EQ(run_cli("--config /nonexistent/x.cfg generate", dir).code, 1);
}

TEST(Cli, TinySweep) {
  const auto dir = scratch_dir("sweep");
  fs::path cfg = dir / "tiny.cfg";
  std::ofstream(cfg) << kTinyConfig;
  const auto r = run_cli("--quiet --config \"" + cfg.string() + "\" --out \"" + (dir / "o").string() + "\" sweep", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir / "o" / "sweep.csv"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 1u + 1u + 2u * 2u);
  EXPECT_EQ(lines[0], sweep_header());
  EXPECT_EQ(lines[1].rfind("exact,0,exact,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("pwl_no_retrain,3,pwl,", 0), 0u);
  EXPECT_EQ(lines[5].rfind("pwl_retrain,5,pwl,", 0), 0u);
  EXPECT_TRUE(fs::exists(dir / "o" / "log_pretrain.csv"));
  EXPECT_TRUE(fs::exists(dir / "o" / "retrained_k5.ckpt"));
}
