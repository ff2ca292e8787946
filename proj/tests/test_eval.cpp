// Copyright 2026 The Protosound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "protosound/eval.hpp"
#include "protosound/rng.hpp"

using namespace protosound;

namespace {

EvalTable make_table(int n, int c, std::vector<std::uint8_t> labels,
                     std::vector<double> scores) {
  EvalTable t;
  t.n = n;
  t.c = c;
  t.labels = std::move(labels);
  t.scores = std::move(scores);
  return t;
}

// Brute-force pairwise AUROC: the oracle the fast path must match to 1e-12.
double auroc_bruteforce(const EvalTable& t) {
  double total = 0.0;
  int valid = 0;
  for (int k = 0; k < t.c; ++k) {
    if (!t.masked_in(k)) continue;
    double pairs = 0.0, correct = 0.0;
    for (int i = 0; i < t.n; ++i) {
      if (!t.label(i, k)) continue;
      for (int j = 0; j < t.n; ++j) {
        if (t.label(j, k)) continue;
        pairs += 1.0;
        if (t.score(i, k) > t.score(j, k)) {
          correct += 1.0;
        } else if (t.score(i, k) == t.score(j, k)) {
          correct += 0.5;
        }
      }
    }
    if (pairs == 0.0) continue;
    total += correct / pairs;
    ++valid;
  }
  return total / valid;
}

// Precision-at-rank enumeration oracle for AP.
double cmap_bruteforce(const EvalTable& t) {
  double total = 0.0;
  int valid = 0;
  for (int k = 0; k < t.c; ++k) {
    if (!t.masked_in(k)) continue;
    std::vector<int> order(t.n);
    for (int i = 0; i < t.n; ++i) {
      order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return t.score(a, k) > t.score(b, k); });
    int positives = 0;
    double ap = 0.0;
    int hits = 0;
    for (int i = 0; i < t.n; ++i) {
      positives += t.label(i, k);
    }
    if (positives == 0) continue;
    for (int rank = 0; rank < t.n; ++rank) {
      if (t.label(order[rank], k)) {
        ++hits;
        ap += static_cast<double>(hits) / (rank + 1);
      }
    }
    total += ap / positives;
    ++valid;
  }
  return total / valid;
}

EvalTable random_table(int n, int c, std::uint64_t seed) {
  Rng rng(seed);
  EvalTable t;
  t.n = n;
  t.c = c;
  t.labels.resize(static_cast<std::size_t>(n) * c);
  t.scores.resize(static_cast<std::size_t>(n) * c);
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    t.labels[i] = rng.bernoulli(0.3) ? 1 : 0;
    // Quantized scores so ties actually occur.
    t.scores[i] = std::round(rng.uniform() * 64.0) / 64.0;
  }
  return t;
}

}  // namespace

TEST_CASE("auroc examples") {
  // pos {0.9, 0.8}, neg {0.7, 0.85}: 3 of 4 pairs correct.
  const EvalTable t = make_table(4, 1, {1, 1, 0, 0}, {0.9, 0.8, 0.7, 0.85});
  CHECK(auroc(t) == doctest::Approx(0.75).epsilon(1e-12));

  const EvalTable perfect = make_table(4, 1, {1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1});
  CHECK(auroc(perfect) == doctest::Approx(1.0));

  const EvalTable ties = make_table(4, 1, {1, 1, 0, 0}, {0.5, 0.5, 0.5, 0.5});
  CHECK(auroc(ties) == doctest::Approx(0.5));

  const EvalTable no_neg = make_table(2, 1, {1, 1}, {0.1, 0.9});
  CHECK_THROWS_WITH_AS(auroc(no_neg), "undefined AUROC", std::runtime_error);
}

TEST_CASE("cmap examples") {
  // labels [1,0,1], scores [0.9,0.8,0.7] -> AP = (1/1 + 2/3)/2.
  const EvalTable t = make_table(3, 1, {1, 0, 1}, {0.9, 0.8, 0.7});
  CHECK(cmap(t) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));

  const EvalTable first = make_table(4, 1, {1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1});
  CHECK(cmap(first) == doctest::Approx(1.0));

  const EvalTable last = make_table(5, 1, {0, 0, 0, 0, 1}, {0.9, 0.8, 0.7, 0.6, 0.1});
  CHECK(cmap(last) == doctest::Approx(1.0 / 5.0));
}

TEST_CASE("top1 examples") {
  // argmax class 1 not in {0, 2} -> miss.
  const EvalTable miss = make_table(1, 3, {1, 0, 1}, {0.2, 0.9, 0.1});
  CHECK(top1(miss) == doctest::Approx(0.0));

  const EvalTable hit = make_table(1, 3, {0, 1, 0}, {0.2, 0.9, 0.1});
  CHECK(top1(hit) == doctest::Approx(1.0));

  const EvalTable half =
      make_table(2, 2, {1, 0, 0, 1}, {0.9, 0.1, 0.8, 0.2});
  CHECK(top1(half) == doctest::Approx(0.5));

  // Instances without positives are excluded and reported.
  const EvalTable with_empty =
      make_table(2, 2, {1, 0, 0, 0}, {0.9, 0.1, 0.8, 0.2});
  CHECK(top1(with_empty) == doctest::Approx(1.0));
  const MetricReport report = evaluate(with_empty, "unit");
  CHECK(report.top1_skipped_instances == 1);
}

TEST_CASE("implementations equal brute-force oracles on random tables") {
  double worst_auroc = 0.0, worst_ap = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const EvalTable t = random_table(50, 20, 1000 + trial);
    worst_auroc = std::max(worst_auroc, std::abs(auroc(t) - auroc_bruteforce(t)));
    worst_ap = std::max(worst_ap, std::abs(cmap(t) - cmap_bruteforce(t)));
  }
  CHECK(worst_auroc < 1e-12);
  CHECK(worst_ap < 1e-12);
}

TEST_CASE("auroc is invariant under strictly monotone score transforms") {
  const EvalTable t = random_table(40, 5, 77);
  EvalTable transformed = t;
  for (double& s : transformed.scores) {
    s = 1.0 / (1.0 + std::exp(-(3.0 * s - 1.0)));  // strictly increasing
  }
  CHECK(auroc(transformed) == doctest::Approx(auroc(t)).epsilon(1e-12));
}

TEST_CASE("metrics are stable under duplicating every instance") {
  const EvalTable t = random_table(30, 6, 91);
  EvalTable doubled;
  doubled.n = 2 * t.n;
  doubled.c = t.c;
  for (int rep = 0; rep < 2; ++rep) {
    doubled.labels.insert(doubled.labels.end(), t.labels.begin(), t.labels.end());
    doubled.scores.insert(doubled.scores.end(), t.scores.begin(), t.scores.end());
  }
  // AUROC is a pure pair proportion: exactly invariant.
  CHECK(auroc(doubled) == doctest::Approx(auroc(t)).epsilon(1e-12));
  // Precision-at-rank AP shifts by O(1/N) under duplication (each positive
  // splits into two ranks); it converges, it is not exactly invariant.
  CHECK(cmap(doubled) == doctest::Approx(cmap(t)).epsilon(0.05));
}

TEST_CASE("random scores score near one half") {
  Rng rng(5);
  EvalTable t;
  t.n = 400;
  t.c = 4;
  t.labels.resize(static_cast<std::size_t>(t.n) * t.c);
  t.scores.resize(t.labels.size());
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    t.labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    t.scores[i] = rng.uniform();
  }
  CHECK(std::abs(auroc(t) - 0.5) < 0.05);
}

TEST_CASE("masking excludes classes from aggregates") {
  EvalTable t = random_table(50, 8, 13);
  t.class_names = {"a", "b", "c", "d", "e", "f", "g", "h"};
  t.class_mask.assign(8, 0);
  t.class_mask[2] = t.class_mask[5] = 1;
  const MetricReport masked = evaluate(t, "unit");
  CHECK(masked.n_classes_evaluated == 2);

  // Mask equal to all classes gives the unmasked metrics.
  EvalTable all = t;
  all.class_mask.assign(8, 1);
  EvalTable none = t;
  none.class_mask.clear();
  CHECK(evaluate(all, "unit").auroc == doctest::Approx(evaluate(none, "unit").auroc));

  EvalTable zero = t;
  zero.class_mask.assign(8, 0);
  CHECK_THROWS_AS(evaluate(zero, "unit"), std::invalid_argument);
}

TEST_CASE("permuting class order permutes per-class rows but not aggregates") {
  // Continuous scores: cross-class argmax ties would make top1's
  // first-index tie break order-dependent.
  EvalTable t = random_table(40, 6, 29);
  Rng jitter(7);
  for (double& s : t.scores) {
    s = std::min(1.0, std::max(0.0, s + 1e-6 * jitter.uniform()));
  }
  EvalTable permuted;
  permuted.n = t.n;
  permuted.c = t.c;
  permuted.labels.resize(t.labels.size());
  permuted.scores.resize(t.scores.size());
  const int perm[6] = {3, 0, 5, 1, 4, 2};
  for (int i = 0; i < t.n; ++i) {
    for (int k = 0; k < 6; ++k) {
      permuted.labels[static_cast<std::size_t>(i) * 6 + perm[k]] = t.label(i, k);
      permuted.scores[static_cast<std::size_t>(i) * 6 + perm[k]] = t.score(i, k);
    }
  }
  CHECK(auroc(permuted) == doctest::Approx(auroc(t)).epsilon(1e-12));
  CHECK(cmap(permuted) == doctest::Approx(cmap(t)).epsilon(1e-12));
  CHECK(top1(permuted) == doctest::Approx(top1(t)).epsilon(1e-12));
}

TEST_CASE("report JSON carries the contract fields") {
  EvalTable t = random_table(20, 4, 55);
  t.class_names = {"w", "x", "y", "z"};
  const MetricReport report = evaluate(t, "dataset_name");
  const nlohmann::json j = report.to_json();
  CHECK(j["dataset"] == "dataset_name");
  CHECK(j["n_instances"] == 20);
  CHECK(j.contains("auroc"));
  CHECK(j.contains("cmap"));
  CHECK(j.contains("top1"));
  CHECK(j["per_class"].is_array());
  CHECK(j.contains("skipped_classes"));
}

TEST_CASE("class mask files resolve against the class list") {
  const auto path = std::filesystem::temp_directory_path() / "protosound_mask_test.txt";
  {
    std::ofstream f(path, std::ios::trunc);
    f << "# comment\nsecond\nfourth\n";
  }
  const auto mask = load_class_mask(path.string(), {"first", "second", "third", "fourth"});
  CHECK(mask == std::vector<std::uint8_t>{0, 1, 0, 1});

  {
    std::ofstream f(path, std::ios::trunc);
    f << "unknown_class\n";
  }
  CHECK_THROWS_AS(load_class_mask(path.string(), {"first"}), std::runtime_error);
  {
    std::ofstream f(path, std::ios::trunc);
    f << "# nothing selected\n";
  }
  CHECK_THROWS_AS(load_class_mask(path.string(), {"first"}), std::runtime_error);
}

TEST_CASE("degenerate classes are skipped and listed") {
  // Class 1 has no positives anywhere.
  EvalTable t = make_table(3, 2, {1, 0, 1, 0, 0, 0}, {0.9, 0.4, 0.8, 0.3, 0.7, 0.2});
  t.class_names = {"present", "absent"};
  const MetricReport report = evaluate(t, "unit");
  CHECK(report.skipped_classes == std::vector<std::string>{"absent"});
  CHECK(report.per_class.size() == 2);
  CHECK(report.per_class[0].has_auroc);
  CHECK_FALSE(report.per_class[1].has_ap);
}
