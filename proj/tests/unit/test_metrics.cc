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

#include <cmath>
#include <fstream>
#include <sstream>

#include "boundiff/data.h"
#include "boundiff/error.h"
#include "boundiff/metrics.h"
#include "boundiff/oracles.h"
#include "test_util.h"

namespace boundiff {
namespace {

using testing::random_set;
using testing::random_sets;

BoundarySet S(std::vector<int> frames, int L = 100) { return BoundarySet(std::move(frames), L); }

TEST(BoundarySet, Validation) {
  EXPECT_THROW(S({5, 5}), ArgumentError);
  EXPECT_THROW(S({7, 3}), ArgumentError);
  EXPECT_THROW(S({100}), ArgumentError);
  EXPECT_THROW(S({-1}), ArgumentError);
  EXPECT_EQ(BoundarySet::from_unsorted({9, 2, 9}, 10), S({2, 9}, 10));
}

TEST(Matching, Examples) {
  EXPECT_EQ(match_boundaries(S({10, 80}), S({12, 50}), 0.05), 1);
  EXPECT_EQ(match_boundaries(S({10, 40, 70}), S({10, 40, 70}), 0.05), 3);
  EXPECT_EQ(match_boundaries(S({}), S({10}), 0.05), 0);
  EXPECT_EQ(match_boundaries(S({10}), S({}), 0.05), 0);
  EXPECT_EQ(match_boundaries(S({10, 80}), S({12, 50}), 0.05),
            oracle::brute_force_matching(S({10, 80}), S({12, 50}), 0.05));
  EXPECT_THROW(match_boundaries(S({1}, 10), S({1}, 20), 0.05), ArgumentError);
}

TEST(Matching, GreedyEqualsBruteForce) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const int L = static_cast<int>(rng.uniform_int(5, 60));
    const BoundarySet p = random_set(rng, L, 8);
    const BoundarySet g = random_set(rng, L, 8);
    const double tau = 0.02 + 0.2 * rng.uniform();
    ASSERT_EQ(match_boundaries(p, g, tau), oracle::brute_force_matching(p, g, tau))
        << i << " L=" << L << " tau=" << tau;
  }
}

TEST(F1, Examples) {
  EXPECT_EQ(f1_reldis(S({10, 80}), S({12, 50}), 0.05), 0.5);
  EXPECT_EQ(f1_reldis(S({3, 40}), S({3, 40}), 0.05), 1.0);
  EXPECT_EQ(f1_reldis(S({}), S({}), 0.05), 1.0);
  EXPECT_EQ(f1_reldis(S({}), S({4}), 0.05), 0.0);
  EXPECT_EQ(f1_reldis(S({4}), S({}), 0.05), 0.0);
}

TEST(F1, SymmetricAndMonotoneInThreshold) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const BoundarySet a = random_set(rng, 100, 8);
    const BoundarySet b = random_set(rng, 100, 8);
    EXPECT_EQ(f1_reldis(a, b, 0.05), f1_reldis(b, a, 0.05));
    double prev = 0.0;
    for (double tau : rel_dis_sweep()) {
      const double f = f1_reldis(a, b, tau);
      EXPECT_GE(f, prev);
      prev = f;
    }
  }
}

TEST(ConventionalF1, Examples) {
  const BoundarySet A = S({20, 60});
  EXPECT_EQ(conventional_f1(A, {S({5}), A}, 0.05), 1.0);
  EXPECT_NEAR(conventional_f1(S({20, 60, 95}), {A}, 0.05), 0.8, 1e-15);
  EXPECT_EQ(conventional_f1(S({}), {A, S({3})}, 0.05), 0.0);
  EXPECT_THROW(conventional_f1(A, {}, 0.05), ArgumentError);
}

TEST(P2G, Examples) {
  const BoundarySet P = S({10, 50});
  const BoundarySet G1 = S({10, 80});
  const BoundarySet G2 = S({10, 50, 90});
  ASSERT_EQ(oracle::direct_f1(P, G1, 0.05), 0.5);
  ASSERT_NEAR(oracle::direct_f1(P, G2, 0.05), 0.8, 1e-15);
  EXPECT_NEAR(f1_p2g({P}, {G1, G2}, 0.05), 0.8, 1e-15);
  EXPECT_EQ(f1_p2g({G1, G2}, {G2, S({3}), G1}, 0.05), 1.0);
  EXPECT_DOUBLE_EQ(f1_p2g({P, P, P}, {G1, G2}, 0.05), f1_p2g({P}, {G1, G2}, 0.05));
  EXPECT_THROW(f1_p2g({}, {G1}, 0.05), ArgumentError);
  EXPECT_THROW(f1_p2g({P}, {}, 0.05), ArgumentError);
}

TEST(G2P, Examples) {
  const BoundarySet A = S({10, 30, 70});
  const BoundarySet B = S({12, 55});
  EXPECT_DOUBLE_EQ(f1_g2p({A}, {A, B}, 0.05), (1.0 + oracle::direct_f1(A, B, 0.05)) / 2.0);
  EXPECT_EQ(f1_g2p({B, A, S({1})}, {A, B}, 0.05), 1.0);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto x = random_sets(rng, 1 + i % 4, 100, 6);
    const auto y = random_sets(rng, 1 + i % 3, 100, 6);
    EXPECT_EQ(f1_g2p(x, y, 0.05), f1_p2g(y, x, 0.05));
  }
  EXPECT_THROW(f1_g2p({}, {A}, 0.05), ArgumentError);
}

TEST(Sym, Examples) {
  const BoundarySet A = S({20, 40});
  const BoundarySet far = S({90});
  EXPECT_EQ(f1_sym({A, far}, {far, A}, 0.05), 1.0);
  ASSERT_EQ(f1_p2g({A}, {A, far}, 0.05), 1.0);
  ASSERT_EQ(f1_g2p({A}, {A, far}, 0.05), 0.5);
  EXPECT_DOUBLE_EQ(f1_sym({A}, {A, far}, 0.05), 2.0 / 3.0);
  EXPECT_EQ(f1_sym({A}, {far}, 0.05), 0.0);
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const auto x = random_sets(rng, 1 + i % 4, 100, 6);
    const auto y = random_sets(rng, 1 + i % 3, 100, 6);
    EXPECT_LE(f1_sym(x, y, 0.05), std::max(f1_p2g(x, y, 0.05), f1_g2p(x, y, 0.05)) + 1e-15);
  }
}

TEST(Diversity, Examples) {
  const BoundarySet a = S({10, 80});
  EXPECT_EQ(diversity({a, a, a}, 0.05), 0.0);
  EXPECT_EQ(diversity({a, S({12, 50})}, 0.05), 0.25);
  EXPECT_EQ(diversity({S({}), S({})}, 0.05), 0.0);
  EXPECT_THROW(diversity({}, 0.05), ArgumentError);
}

TEST(Diversity, BoundsAndZeroIffIdentical) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const int n = 1 + i % 5;
    auto preds = random_sets(rng, n, 40, 4);
    if (i % 3 == 0) preds.assign(n, preds[0]);
    const double d = diversity(preds, 0.05);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, (n - 1.0) / n + 1e-15);
    bool identical = true;
    for (const BoundarySet& p : preds) identical = identical && p == preds[0];
    EXPECT_EQ(d == 0.0, identical) << i;
  }
}

TEST(Ged, Examples) {
  const BoundarySet P = S({10, 80});
  const BoundarySet G2 = S({12, 50});
  EXPECT_DOUBLE_EQ(ged({P}, {P, G2}, 0.05), 0.25);
  EXPECT_EQ(ged({P, G2}, {G2, P}, 0.05), 0.0);
  EXPECT_THROW(ged({}, {P}, 0.05), ArgumentError);
  EXPECT_THROW(ged({P}, {}, 0.05), ArgumentError);
}

TEST(Ged, SelfZeroAndSymmetric) {
  Rng rng(6);
  for (int i = 0; i < 300; ++i) {
    const auto x = random_sets(rng, 1 + i % 5, 100, 6);
    const auto y = random_sets(rng, 1 + i % 3, 100, 6);
    EXPECT_EQ(ged(x, x, 0.05), 0.0);
    EXPECT_NEAR(ged(x, y, 0.05), ged(y, x, 0.05), 1e-15);
  }
}

TEST(Metrics, FuzzAgainstDirectEvaluation) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const int L = static_cast<int>(rng.uniform_int(10, 120));
    const auto preds = random_sets(rng, 1 + static_cast<int>(rng.uniform_int(0, 4)), L, 7);
    const auto gts = random_sets(rng, 1 + static_cast<int>(rng.uniform_int(0, 4)), L, 7);
    const double tau = rel_dis_sweep()[i % 10];
    const MetricValues got = evaluate_video(preds, gts, tau);
    const MetricValues want = oracle::direct_metric_eval(preds, gts, tau);
    ASSERT_NEAR(got.f1, want.f1, 1e-12);
    ASSERT_NEAR(got.f1_p2g, want.f1_p2g, 1e-12);
    ASSERT_NEAR(got.f1_g2p, want.f1_g2p, 1e-12);
    ASSERT_NEAR(got.f1_sym, want.f1_sym, 1e-12);
    ASSERT_NEAR(got.diversity, want.diversity, 1e-12);
    ASSERT_NEAR(got.ged, want.ged, 1e-12);
    for (double v : {got.f1, got.f1_p2g, got.f1_g2p, got.f1_sym, got.diversity}) {
      ASSERT_TRUE(v >= 0.0 && v <= 1.0);
    }
    ASSERT_TRUE(got.ged >= -2.0 && got.ged <= 2.0);
  }
}

TEST(EvalConfig, Sweep) {
  const auto s = rel_dis_sweep();
  ASSERT_EQ(s.size(), 10u);
  EXPECT_DOUBLE_EQ(s.front(), 0.05);
  EXPECT_DOUBLE_EQ(s.back(), 0.5);
  EvalConfig c;
  EXPECT_EQ(c.effective_thresholds(), std::vector<double>{0.05});
}

TEST(EvaluateDataset, MeansAndErrors) {
  const BoundarySet A = S({20, 40});
  const BoundarySet far = S({90});
  std::map<std::string, std::vector<BoundarySet>> preds = {{"a", {A}}, {"b", {A, far}}};
  std::map<std::string, std::vector<BoundarySet>> gts = {{"a", {A, far}}, {"b", {far, A}}};
  const EvalReport r = evaluate_dataset(preds, gts, EvalConfig());
  ASSERT_EQ(r.per_video.size(), 2u);
  EXPECT_EQ(r.per_video[0].video_id, "a");
  EXPECT_DOUBLE_EQ(r.summary.at(0.05).f1_sym, (2.0 / 3.0 + 1.0) / 2.0);

  const EvalReport single = evaluate_dataset({{"a", {A}}}, {{"a", {A, far}}}, EvalConfig());
  EXPECT_EQ(single.summary.at(0.05).ged, single.per_video[0].values.ged);

  gts.erase("b");
  gts["c"] = {A};
  try {
    evaluate_dataset(preds, gts, EvalConfig());
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("b"), std::string::npos);
    EXPECT_NE(msg.find("c"), std::string::npos);
  }
}

TEST(EvaluateDataset, MatchesGoldenReport) {
  const std::string dir = BOUNDIFF_FIXTURE_DIR;
  const auto preds = group_records(read_records(dir + "/metric_preds.jsonl"));
  const auto gts = group_records(read_records(dir + "/metric_gts.jsonl"));
  EvalConfig cfg;
  cfg.thresholds = rel_dis_sweep();
  const EvalReport r = evaluate_dataset(preds, gts, cfg);

  std::ifstream golden(dir + "/metric_golden.tsv");
  std::string line;
  std::getline(golden, line);
  size_t rows = 0;
  while (std::getline(golden, line)) {
    std::istringstream ss(line);
    std::string id;
    double tau;
    MetricValues want;
    ss >> id >> tau >> want.f1 >> want.f1_p2g >> want.f1_g2p >> want.f1_sym >> want.diversity >> want.ged;
    MetricValues got;
    if (id == "mean") {
      bool found = false;
      for (const auto& [t, v] : r.summary) {
        if (std::abs(t - tau) < 1e-9) {
          got = v;
          found = true;
        }
      }
      ASSERT_TRUE(found) << tau;
    } else {
      bool found = false;
      for (const VideoReport& v : r.per_video) {
        if (v.video_id == id && std::abs(v.rel_dis - tau) < 1e-9) {
          got = v.values;
          found = true;
        }
      }
      ASSERT_TRUE(found) << id << " " << tau;
    }
    EXPECT_NEAR(got.f1, want.f1, 1e-12) << line;
    EXPECT_NEAR(got.f1_p2g, want.f1_p2g, 1e-12) << line;
    EXPECT_NEAR(got.f1_g2p, want.f1_g2p, 1e-12) << line;
    EXPECT_NEAR(got.f1_sym, want.f1_sym, 1e-12) << line;
    EXPECT_NEAR(got.diversity, want.diversity, 1e-12) << line;
    EXPECT_NEAR(got.ged, want.ged, 1e-12) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 10u * 9u);
}

}  // namespace
}  // namespace boundiff
