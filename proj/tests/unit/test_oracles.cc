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

#include "boundiff/error.h"
#include "boundiff/oracles.h"
#include "test_util.h"

namespace boundiff {
namespace {

BoundarySet S(std::vector<int> frames, int L = 100) { return BoundarySet(std::move(frames), L); }

TEST(OracleDenoiser, ReturnsStoredSignal) {
  Rng rng(1);
  const BoundarySignal y0 = testing::random_labels(rng, 30);
  const oracle::OracleDenoiser d(y0);
  for (int t : {0, 5, 999}) {
    EXPECT_EQ(d.predict(testing::random_signal(rng, 30), t, nullptr), y0);
  }
}

TEST(BruteForceMatching, Examples) {
  const BoundarySet a = S({5, 30, 60, 90});
  EXPECT_EQ(oracle::brute_force_matching(a, a, 0.05), 4);
  EXPECT_EQ(oracle::brute_force_matching(S({1, 2, 3}), S({80, 90}), 0.05), 0);
  EXPECT_EQ(oracle::brute_force_matching(S({10, 80}), S({12, 50}), 0.05), 1);
  // Pairing 15 with 14 first would strand 10; the optimum uses both.
  EXPECT_EQ(oracle::brute_force_matching(S({10, 15}), S({14, 19}), 0.05), 2);
  std::vector<int> eleven;
  for (int i = 0; i < 11; ++i) eleven.push_back(i * 5);
  EXPECT_THROW(oracle::brute_force_matching(S(eleven), S({1}), 0.05), ArgumentError);
  EXPECT_THROW(oracle::brute_force_matching(S({1}), S(eleven), 0.05), ArgumentError);
}

TEST(DirectF1, Conventions) {
  EXPECT_EQ(oracle::direct_f1(S({}), S({}), 0.05), 1.0);
  EXPECT_EQ(oracle::direct_f1(S({3}), S({}), 0.05), 0.0);
  EXPECT_EQ(oracle::direct_f1(S({10, 80}), S({12, 50}), 0.05), 0.5);
}

TEST(DirectMetricEval, IdenticalListsAndMetricExamples) {
  const std::vector<BoundarySet> y = {S({10, 80}), S({12, 50}), S({33})};
  const MetricValues m = oracle::direct_metric_eval(y, y, 0.05);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.f1_p2g, 1.0);
  EXPECT_EQ(m.f1_g2p, 1.0);
  EXPECT_EQ(m.f1_sym, 1.0);
  // Pairwise F1: 0.5 between the first two, 0 against {33}.
  EXPECT_NEAR(m.diversity, (2 * 0.5 + 4 * 1.0) / 9.0, 1e-15);
  EXPECT_EQ(m.ged, 0.0);

  const MetricValues g = oracle::direct_metric_eval({S({10, 80})}, {S({10, 80}), S({12, 50})}, 0.05);
  EXPECT_NEAR(g.ged, 0.25, 1e-15);
  EXPECT_NEAR(oracle::direct_metric_eval({S({10, 50})}, {S({10, 80}), S({10, 50, 90})}, 0.05).f1_p2g, 0.8,
              1e-15);
  EXPECT_NEAR(oracle::direct_metric_eval({S({20, 40})}, {S({20, 40}), S({90})}, 0.05).f1_sym, 2.0 / 3.0,
              1e-15);
  EXPECT_EQ(oracle::direct_metric_eval({S({10, 80}), S({12, 50})}, {S({1})}, 0.05).diversity, 0.25);
}

TEST(FiniteDifferenceGrad, LinearIsExact) {
  const std::vector<double> c = {0.5, -2.0, 3.0};
  const auto g = oracle::finite_difference_grad(
      [&](const std::vector<std::vector<double>>& x) {
        double s = 0.0;
        for (size_t i = 0; i < c.size(); ++i) s += c[i] * x[0][i];
        return s;
      },
      {{0.1, 0.2, 0.3}});
  for (size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(g[0][i], c[i], 1e-9);
}

TEST(FiniteDifferenceGrad, QuadraticMatchesTwoX) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> x = {{}, {}};
    for (int i = 0; i < 4; ++i) x[0].push_back(4.0 * rng.uniform() - 2.0);
    x[1].push_back(rng.uniform());
    const auto g = oracle::finite_difference_grad(
        [](const std::vector<std::vector<double>>& v) {
          double s = 0.0;
          for (const auto& part : v) {
            for (double e : part) s += e * e;
          }
          return s;
        },
        x);
    for (size_t p = 0; p < x.size(); ++p) {
      for (size_t i = 0; i < x[p].size(); ++i) EXPECT_NEAR(g[p][i], 2.0 * x[p][i], 1e-8);
    }
  }
}

TEST(DirectSelfSimilarity, SmallExample) {
  // Rows: (1,0), (1,1), (0,2). Window 1 gives [cos(l, l-1), 1, cos(l, l+1)].
  const std::vector<double> f = {1, 0, 1, 1, 0, 2};
  const auto s = oracle::direct_self_similarity(f, 3, 2, 1);
  ASSERT_EQ(s.size(), 9u);
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<double> want = {0, 1, r, r, 1, r, r, 1, 0};
  for (size_t i = 0; i < 9; ++i) EXPECT_NEAR(s[i], want[i], 1e-15) << i;
}

}  // namespace
}  // namespace boundiff
