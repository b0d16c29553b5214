// Copyright 2026 The Boundiff Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "boundiff/commands.h"
#include "boundiff/error.h"
#include "boundiff/oracles.h"
#include "boundiff/run_config.h"
#include "boundiff/train.h"
#include "test_util.h"

namespace boundiff {
namespace {

namespace fs = std::filesystem;
using Entries = std::vector<std::pair<std::string, std::string>>;

const char* kTinyConfig = R"(# tiny end-to-end setup
seed = 5
data.num_videos = 6
data.L = 20
data.D = 4
data.segments_min = 2
data.segments_max = 3
data.min_segment = 4
model.L = 20
model.D = 4
model.C = 4
model.window = 2
model.decoder_layers = 1
model.decoder_dim = 8
model.heads = 2
model.t_embed_dim = 8
model.ff_dim = 16
train.epochs = 2
train.batch_size = 4
sample.steps = 4
sample.num_predictions = 3
)";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "boundiff_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

fs::path tiny_config_file() {
  const fs::path dir = fs::temp_directory_path() / "boundiff_test_cli";
  fs::create_directories(dir);
  write_all(dir / "tiny.cfg", kTinyConfig);
  return dir / "tiny.cfg";
}

RunConfig tiny_config() {
  RunConfig c = RunConfig::from_entries(read_config_entries(tiny_config_file()));
  c.finalize();
  return c;
}

int run_cli(const std::string& args, const fs::path& log = {}) {
  const std::string sink = log.empty() ? "/dev/null" : log.string();
  const std::string cmd = std::string(BOUNDIFF_CLI_PATH) + " " + args + " >" + sink + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every regular file under dir, relative path -> bytes.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_all(e.path());
  }
  return out;
}

TEST(RunConfig, UnknownKeyAndBadValues) {
  EXPECT_THROW(RunConfig::from_entries({{"model.depth", "3"}}), ConfigError);
  EXPECT_THROW(RunConfig::from_entries({{"sample.steps", "many"}}), ConfigError);
  EXPECT_THROW(RunConfig::from_entries({{"sample.clamp", "maybe"}}), ConfigError);
  RunConfig c = RunConfig::from_entries({{"postprocess.delta", "1.5"}});
  EXPECT_THROW(c.finalize(), ConfigError);
}

TEST(RunConfig, OverrideOrderAndProfile) {
  RunConfig c = RunConfig::from_entries(
      {{"sample.steps", "8"}, {"train.lr", "0.5"}, {"sample.steps", "16"}, {"train.profile", "paper"}});
  c.finalize();
  EXPECT_EQ(c.sample.steps, 16);
  EXPECT_EQ(c.train.lr, 0.5);
  EXPECT_EQ(c.train.batch_size, 2);
  const RunConfig d = RunConfig::from_entries({});
  EXPECT_EQ(d.train_profile, "desk");
  EXPECT_EQ(d.sample.steps, 32);
  EXPECT_EQ(d.sample.guidance_weight, 0.6);
  EXPECT_EQ(d.sample.num_predictions, 5);
  EXPECT_EQ(d.postprocess.delta, 0.5);
  EXPECT_EQ(d.eval.rel_dis, 0.05);
  EXPECT_EQ(d.sweep_weights, (std::vector<double>{0.1, 0.3, 0.6, 1.0, 2.0, 5.0, 10.0}));
}

TEST(RunConfig, SeedAndScalePropagate) {
  RunConfig c = RunConfig::from_entries({{"seed", "42"}, {"signal_scale", "2"}});
  c.finalize();
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.sample.seed, 42u);
  EXPECT_EQ(c.data.seed, 42u);
  EXPECT_EQ(c.train.signal_scale, 2.0);
  EXPECT_EQ(c.sample.signal_scale, 2.0);
  EXPECT_EQ(c.postprocess.signal_scale, 2.0);
}

TEST(RunConfig, TextRoundTripCoversEveryKey) {
  const RunConfig c = tiny_config();
  const std::string text = c.to_text();
  for (const std::string& key : RunConfig::keys()) {
    EXPECT_NE(text.find(key + " = "), std::string::npos) << key;
  }
  const fs::path path = scratch("roundtrip") / "effective.cfg";
  write_all(path, text);
  RunConfig back = RunConfig::from_entries(read_config_entries(path));
  back.finalize();
  EXPECT_EQ(back.to_text(), text);
}

TEST(RunConfig, MalformedFileNamesLine) {
  const fs::path path = scratch("malformed") / "bad.cfg";
  write_all(path, "seed = 1\n# fine\nno equals sign here\n");
  try {
    read_config_entries(path);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_config_entries(path.parent_path() / "absent.cfg"), ConfigError);
}

TEST(GenData, WritesFilesDeterministically) {
  const RunConfig c = tiny_config();
  const fs::path a = scratch("gen_a");
  const fs::path b = scratch("gen_b");
  cmd_gen_data(c, a);
  cmd_gen_data(c, b);
  size_t features = 0;
  for (const auto& e : fs::directory_iterator(a / "features")) features += e.path().extension() == ".dbf";
  EXPECT_EQ(features, 6u);
  for (const char* f : {"annotations.jsonl", "latent_truth.jsonl", "manifest.txt", "effective_config.txt"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  EXPECT_NE(read_all(a / "manifest.txt").find("seed"), std::string::npos);
  EXPECT_EQ(read_all(a / "effective_config.txt"), c.to_text());
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(GenData, ZeroVideosIsConfigError) {
  RunConfig c = RunConfig::from_entries({{"data.num_videos", "0"}});
  EXPECT_THROW(
      {
        c.finalize();
        cmd_gen_data(c, scratch("gen_zero"));
      },
      ConfigError);
  EXPECT_EQ(run_cli("gen-data --set data.num_videos=0 --out " + scratch("gen_zero_cli").string()), 1);
}

TEST(Sample, OracleDenoiserRecoversLatentTruth) {
  SyntheticConfig sc;
  sc.num_videos = 12;
  sc.seed = 3;
  const SyntheticData sd = generate_synthetic(sc);
  std::vector<oracle::OracleDenoiser> oracles;
  for (const BoundarySet& truth : sd.latent_truth) oracles.emplace_back(to_signal(truth, 1.0));
  SampleConfig sample;
  sample.seed = 3;
  for (int threads : {1, 3}) {
    const auto sets = sample_boundaries(
        sd.dataset, [&](size_t v) -> const Denoiser& { return oracles[v]; },
        [](size_t) { return ConditionEmbedding{ad::Tensor::zeros(100, 1)}; },
        build_schedule(ScheduleKind::kCosine, 1000), sample, PostprocessConfig(), threads);
    ASSERT_EQ(sets.size(), 12u);
    for (size_t v = 0; v < 12; ++v) {
      ASSERT_EQ(sets[v].size(), 5u);
      for (const BoundarySet& b : sets[v]) EXPECT_EQ(b, sd.latent_truth[v]);
    }
  }
}

TEST(Sample, IndependentOfThreadCountAndVideoSet) {
  const RunConfig c = tiny_config();
  DenoiserModel model(c.model, 1);
  Rng rng(1);
  for (NamedParameter& p : model.parameters()) {
    for (double& v : p.tensor.mutable_data()) v += 0.3 * (rng.uniform() - 0.5);
  }
  SyntheticConfig sc = c.data;
  const Dataset ds = generate_synthetic(sc).dataset;
  const auto one = sample_boundaries(model, ds, c.schedule(), c.sample, c.postprocess, 1);
  const auto many = sample_boundaries(model, ds, c.schedule(), c.sample, c.postprocess, 4);
  EXPECT_EQ(one, many);
  Dataset tail;
  tail.videos.assign(ds.videos.begin() + 3, ds.videos.end());
  const auto part = sample_boundaries(model, tail, c.schedule(), c.sample, c.postprocess, 2);
  for (size_t v = 0; v < part.size(); ++v) EXPECT_EQ(part[v], one[v + 3]);

  ModelConfig other = c.model;
  other.D = 5;
  EXPECT_THROW(check_dataset_fits(ds, other), ModelError);
}

TEST(Eval, AnnotationsAgainstThemselves) {
  const RunConfig c = tiny_config();
  const fs::path data = scratch("eval_data");
  cmd_gen_data(c, data);
  std::ostringstream log;
  const EvalReport r =
      cmd_eval(c, data / "annotations.jsonl", data / "annotations.jsonl", scratch("eval_out"), log);
  const MetricValues& m = r.summary.at(0.05);
  EXPECT_EQ(m.f1_sym, 1.0);
  EXPECT_EQ(m.f1_p2g, 1.0);
  EXPECT_EQ(m.ged, 0.0);
  const Dataset ds = read_dataset(data);
  double div = 0.0;
  for (const VideoRecord& v : ds.videos) div += oracle::direct_metric_eval(v.annotations, v.annotations, 0.05).diversity;
  EXPECT_NEAR(m.diversity, div / ds.videos.size(), 1e-12);
  EXPECT_NE(log.str().find("F1_sym"), std::string::npos);
}

TEST(Eval, SweepAndGoldenCorpus) {
  RunConfig c = RunConfig::from_entries({{"eval.sweep", "true"}});
  c.finalize();
  const std::string fx = BOUNDIFF_FIXTURE_DIR;
  const fs::path out = scratch("eval_golden");
  std::ostringstream log;
  cmd_eval(c, fx + "/metric_preds.jsonl", fx + "/metric_gts.jsonl", out, log);
  std::ifstream summary(out / "eval_summary.tsv");
  std::string header;
  std::getline(summary, header);
  EXPECT_EQ(header, "rel_dis\tF1\tF1_p2g\tF1_g2p\tF1_sym\tDiversity\tGED");
  std::map<std::string, std::vector<double>> got;
  std::string line;
  while (std::getline(summary, line)) {
    std::istringstream ss(line);
    double tau;
    ss >> tau;
    std::vector<double> v(6);
    for (double& x : v) ss >> x;
    char key[16];
    std::snprintf(key, sizeof key, "%.2f", tau);
    got[key] = v;
  }
  EXPECT_EQ(got.size(), 10u);
  std::ifstream golden(fx + "/metric_golden.tsv");
  std::getline(golden, line);
  int checked = 0;
  while (std::getline(golden, line)) {
    std::istringstream ss(line);
    std::string id, tau;
    ss >> id >> tau;
    if (id != "mean") continue;
    for (size_t i = 0; i < 6; ++i) {
      double want;
      ss >> want;
      EXPECT_NEAR(got.at(tau)[i], want, 1e-12) << tau << " column " << i;
    }
    ++checked;
  }
  EXPECT_EQ(checked, 10);
}

TEST(Eval, MissingIdsAreDataErrors) {
  const fs::path dir = scratch("eval_missing");
  write_records(dir / "p.jsonl", {{"a", "pred", 0, BoundarySet({1}, 10)}});
  write_records(dir / "g.jsonl", {{"b", "gt", 0, BoundarySet({1}, 10)}});
  std::ostringstream log;
  EXPECT_THROW(cmd_eval(RunConfig(), dir / "p.jsonl", dir / "g.jsonl", dir / "out", log), DataError);
  EXPECT_EQ(run_cli("eval --predictions " + (dir / "p.jsonl").string() + " --annotations " +
                    (dir / "g.jsonl").string() + " --out " + (dir / "cli").string()),
            2);
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = scratch("pipeline");
    cfg_ = tiny_config_file().string();
    ASSERT_EQ(run_cli("gen-data --config " + cfg_ + " --out " + (root_ / "data").string()), 0);
    ASSERT_EQ(run_cli("train --config " + cfg_ + " --data " + (root_ / "data").string() + " --out " +
                      (root_ / "train").string()),
              0);
  }
  static fs::path root_;
  static std::string cfg_;
};

fs::path Pipeline::root_;
std::string Pipeline::cfg_;

TEST_F(Pipeline, TrainWritesArtifacts) {
  const fs::path t = root_ / "train";
  for (const char* f : {"checkpoint_final.ckpt", "checkpoint_best.ckpt", "metrics.tsv", "train_log.txt",
                        "effective_config.txt"}) {
    EXPECT_TRUE(fs::exists(t / f)) << f;
  }
  std::istringstream metrics(read_all(t / "metrics.tsv"));
  std::string line;
  std::getline(metrics, line);
  EXPECT_EQ(line, "epoch\tsteps\tloss");
  int rows = 0;
  while (std::getline(metrics, line)) ++rows;
  EXPECT_EQ(rows, 2);
  const Checkpoint ck = load_checkpoint(t / "checkpoint_final.ckpt");
  EXPECT_EQ(ck.meta.at("epochs_done"), "2");
}

TEST_F(Pipeline, RerunIsByteIdentical) {
  const fs::path again = root_ / "train_again";
  ASSERT_EQ(run_cli("train --config " + cfg_ + " --data " + (root_ / "data").string() + " --out " + again.string()), 0);
  auto a = snapshot(root_ / "train");
  auto b = snapshot(again);
  a.erase("train_log.txt");  // wall-clock column
  b.erase("train_log.txt");
  EXPECT_EQ(a, b);
}

TEST_F(Pipeline, ResumeMatchesStraightRun) {
  const fs::path resumed = root_ / "resumed";
  const fs::path straight = root_ / "straight";
  const std::string data = " --data " + (root_ / "data").string();
  ASSERT_EQ(run_cli("train --config " + cfg_ + data + " --epochs 1 --out " + resumed.string()), 0);
  ASSERT_EQ(run_cli("train --config " + cfg_ + data + " --epochs 3 --resume --out " + resumed.string()), 0);
  ASSERT_EQ(run_cli("train --config " + cfg_ + data + " --epochs 3 --out " + straight.string()), 0);
  EXPECT_EQ(read_all(resumed / "metrics.tsv"), read_all(straight / "metrics.tsv"));
  EXPECT_EQ(read_all(resumed / "checkpoint_final.ckpt"), read_all(straight / "checkpoint_final.ckpt"));
}

TEST_F(Pipeline, SampleIsReproducible) {
  const std::string common = "sample --config " + cfg_ + " --checkpoint " +
                             (root_ / "train" / "checkpoint_final.ckpt").string() + " --data " +
                             (root_ / "data").string() + " --out ";
  ASSERT_EQ(run_cli(common + (root_ / "s1").string()), 0);
  ASSERT_EQ(run_cli(common + (root_ / "s2").string()), 0);
  EXPECT_EQ(snapshot(root_ / "s1"), snapshot(root_ / "s2"));
  const auto recs = read_records(root_ / "s1" / "predictions.jsonl");
  EXPECT_EQ(recs.size(), 6u * 3u);
  for (const BoundaryRecord& r : recs) EXPECT_EQ(r.source, "pred");
  const auto grouped = group_records(recs);
  for (const auto& [id, sets] : grouped) EXPECT_EQ(sets.size(), 3u) << id;

  ASSERT_EQ(run_cli("eval --config " + cfg_ + " --predictions " + (root_ / "s1" / "predictions.jsonl").string() +
                    " --annotations " + (root_ / "data" / "annotations.jsonl").string() + " --out " +
                    (root_ / "e1").string()),
            0);
  ASSERT_EQ(run_cli("eval --config " + cfg_ + " --predictions " + (root_ / "s1" / "predictions.jsonl").string() +
                    " --annotations " + (root_ / "data" / "annotations.jsonl").string() + " --out " +
                    (root_ / "e2").string()),
            0);
  EXPECT_EQ(snapshot(root_ / "e1"), snapshot(root_ / "e2"));
}

TEST_F(Pipeline, SweepEchoesWeightOrder) {
  const fs::path out = root_ / "sweep";
  ASSERT_EQ(run_cli("sweep-cfg --config " + cfg_ + " --weights 2,0.5,1 --checkpoint " +
                    (root_ / "train" / "checkpoint_final.ckpt").string() + " --data " +
                    (root_ / "data").string() + " --out " + out.string()),
            0);
  std::istringstream table(read_all(out / "sweep.tsv"));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "w\tF1_sym\tF1_p2g\tF1_g2p\tDiversity\tGED");
  std::vector<std::string> ws;
  while (std::getline(table, line)) ws.push_back(line.substr(0, line.find('\t')));
  EXPECT_EQ(ws, (std::vector<std::string>{"2", "0.5", "1"}));
  const std::string plot = read_all(out / "sweep_plot.dat");
  for (const char* m : {"# F1_sym", "# Diversity", "# GED"}) EXPECT_NE(plot.find(m), std::string::npos) << m;
}

TEST_F(Pipeline, ExitCodes) {
  const std::string ckpt = (root_ / "train" / "checkpoint_final.ckpt").string();
  const std::string data = (root_ / "data").string();
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("sample --data x"), 1);
  EXPECT_EQ(run_cli("print-config --set bogus.key=1"), 1);
  // Model shape disagrees with the checkpoint.
  EXPECT_EQ(run_cli("sample --config " + cfg_ + " --set model.decoder_dim=16 --checkpoint " + ckpt +
                    " --data " + data + " --out " + (root_ / "x1").string()),
            3);
  EXPECT_EQ(run_cli("sample --config " + cfg_ + " --checkpoint " + data + "/annotations.jsonl --data " +
                    data + " --out " + (root_ / "x2").string()),
            3);
  EXPECT_EQ(run_cli("train --config " + cfg_ + " --data " + (root_ / "nowhere").string() + " --out " +
                    (root_ / "x3").string()),
            2);
  const fs::path log = root_ / "paper.txt";
  EXPECT_EQ(run_cli("print-config --set train.profile=paper", log), 0);
  const std::string text = read_all(log);
  EXPECT_NE(text.find("train.lr = 2e-05"), std::string::npos);
  EXPECT_NE(text.find("train.batch_size = 2"), std::string::npos);
}

}  // namespace
}  // namespace boundiff
