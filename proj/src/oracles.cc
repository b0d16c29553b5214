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


#include "boundiff/oracles.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "boundiff/error.h"

namespace boundiff::oracle {
namespace {

constexpr size_t kMaxBruteForce = 10;

int best_assignment(const std::vector<int>& p, const std::vector<int>& g, size_t i,
                    std::vector<bool>& used, double window) {
  if (i == p.size()) return 0;
  // p[i] left unmatched.
  int best = best_assignment(p, g, i + 1, used, window);
  for (size_t j = 0; j < g.size(); ++j) {
    if (used[j] || std::abs(p[i] - g[j]) > window) continue;
    used[j] = true;
    best = std::max(best, 1 + best_assignment(p, g, i + 1, used, window));
    used[j] = false;
  }
  return best;
}

}  // namespace

int brute_force_matching(const BoundarySet& pred, const BoundarySet& gt, double tau) {
  if (pred.size() > kMaxBruteForce || gt.size() > kMaxBruteForce) {
    throw ArgumentError("brute_force_matching: at most 10 boundaries per side");
  }
  if (pred.L() != gt.L()) throw ArgumentError("brute_force_matching: L mismatch");
  std::vector<bool> used(gt.size(), false);
  return best_assignment(pred.frames(), gt.frames(), 0, used, tau * pred.L() + 1e-9);
}

double direct_f1(const BoundarySet& pred, const BoundarySet& gt, double tau) {
  if (pred.size() == 0 && gt.size() == 0) return 1.0;
  if (pred.size() == 0 || gt.size() == 0) return 0.0;
  const double m = brute_force_matching(pred, gt, tau);
  const double precision = m / static_cast<double>(pred.size());
  const double recall = m / static_cast<double>(gt.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

MetricValues direct_metric_eval(const std::vector<BoundarySet>& preds,
                                const std::vector<BoundarySet>& gts, double tau) {
  const size_t np = preds.size();
  const size_t ng = gts.size();
  std::vector<std::vector<double>> pg(np, std::vector<double>(ng));
  for (size_t i = 0; i < np; ++i) {
    for (size_t j = 0; j < ng; ++j) pg[i][j] = direct_f1(preds[i], gts[j], tau);
  }
  MetricValues out;
  double p2g = 0.0;
  for (size_t i = 0; i < np; ++i) {
    double best = 0.0;
    for (size_t j = 0; j < ng; ++j) best = std::max(best, pg[i][j]);
    p2g += best;
  }
  out.f1_p2g = p2g / np;
  out.f1 = out.f1_p2g;
  double g2p = 0.0;
  for (size_t j = 0; j < ng; ++j) {
    double best = 0.0;
    for (size_t i = 0; i < np; ++i) best = std::max(best, pg[i][j]);
    g2p += best;
  }
  out.f1_g2p = g2p / ng;
  out.f1_sym = (out.f1_p2g + out.f1_g2p) > 0.0
                   ? 2.0 * out.f1_p2g * out.f1_g2p / (out.f1_p2g + out.f1_g2p)
                   : 0.0;

  double pp = 0.0;
  for (size_t i = 0; i < np; ++i) {
    for (size_t k = 0; k < np; ++k) pp += 1.0 - direct_f1(preds[i], preds[k], tau);
  }
  double gg = 0.0;
  for (size_t j = 0; j < ng; ++j) {
    for (size_t k = 0; k < ng; ++k) gg += 1.0 - direct_f1(gts[j], gts[k], tau);
  }
  double cross = 0.0;
  for (size_t i = 0; i < np; ++i) {
    for (size_t j = 0; j < ng; ++j) cross += 1.0 - pg[i][j];
  }
  out.diversity = pp / (np * np);
  out.ged = 2.0 * cross / (np * ng) - pp / (np * np) - gg / (ng * ng);
  return out;
}

std::vector<std::vector<double>> finite_difference_grad(const FlatFn& f,
                                                        std::vector<std::vector<double>> inputs,
                                                        double eps) {
  std::vector<std::vector<double>> grads;
  for (size_t a = 0; a < inputs.size(); ++a) {
    std::vector<double> g(inputs[a].size());
    for (size_t k = 0; k < inputs[a].size(); ++k) {
      const double x = inputs[a][k];
      inputs[a][k] = x + eps;
      const double up = f(inputs);
      inputs[a][k] = x - eps;
      const double down = f(inputs);
      inputs[a][k] = x;
      g[k] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

std::vector<double> direct_self_similarity(const std::vector<double>& features, size_t L,
                                           size_t d, int window) {
  const size_t width = 2 * static_cast<size_t>(window) + 1;
  std::vector<double> out(L * width, 0.0);
  for (size_t l = 0; l < L; ++l) {
    for (int off = -window; off <= window; ++off) {
      const long m = static_cast<long>(l) + off;
      if (m < 0 || m >= static_cast<long>(L)) continue;
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (size_t c = 0; c < d; ++c) {
        const double a = features[l * d + c];
        const double b = features[m * d + c];
        dot += a * b;
        na += a * a;
        nb += b * b;
      }
      if (na == 0.0 || nb == 0.0) continue;
      out[l * width + (off + window)] = dot / (std::sqrt(na) * std::sqrt(nb));
    }
  }
  return out;
}

}  // namespace boundiff::oracle
