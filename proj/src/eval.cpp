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

#include "protosound/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace protosound {

namespace {

struct ClassCounts {
  int positives = 0;
  int negatives = 0;
};

ClassCounts count_class(const EvalTable& t, int k) {
  ClassCounts counts;
  for (int i = 0; i < t.n; ++i) {
    if (t.label(i, k)) {
      ++counts.positives;
    } else {
      ++counts.negatives;
    }
  }
  return counts;
}

// Rank-sum AUROC with average ranks for ties; identical to pairwise counting
// with 0.5 credit per tie.
double auroc_class(const EvalTable& t, int k, const ClassCounts& counts) {
  std::vector<int> order(t.n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return t.score(a, k) < t.score(b, k); });
  double rank_sum_pos = 0.0;
  int i = 0;
  while (i < t.n) {
    int j = i;
    while (j < t.n && t.score(order[j], k) == t.score(order[i], k)) {
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (int r = i; r < j; ++r) {
      if (t.label(order[r], k)) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double p = counts.positives;
  const double u = rank_sum_pos - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(counts.negatives));
}

double ap_class(const EvalTable& t, int k, const ClassCounts& counts) {
  std::vector<int> order(t.n);
  std::iota(order.begin(), order.end(), 0);
  // Descending score; ties broken by ascending instance index.
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return t.score(a, k) > t.score(b, k); });
  double ap = 0.0;
  int hits = 0;
  for (int rank = 0; rank < t.n; ++rank) {
    if (t.label(order[rank], k)) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(counts.positives);
}

}  // namespace

void EvalTable::validate() const {
  if (n < 1 || c < 1) throw std::invalid_argument("eval table must be non-empty");
  const std::size_t count = static_cast<std::size_t>(n) * c;
  if (labels.size() != count || scores.size() != count) {
    throw std::invalid_argument("eval table shape mismatch");
  }
  if (!class_mask.empty() && static_cast<int>(class_mask.size()) != c) {
    throw std::invalid_argument("class mask length mismatch");
  }
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw std::invalid_argument("scores must be finite in [0, 1]");
    }
  }
  for (std::uint8_t y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be binary");
  }
}

double auroc(const EvalTable& t) {
  t.validate();
  double total = 0.0;
  int valid = 0;
  for (int k = 0; k < t.c; ++k) {
    if (!t.masked_in(k)) continue;
    const ClassCounts counts = count_class(t, k);
    if (counts.positives == 0 || counts.negatives == 0) continue;
    total += auroc_class(t, k, counts);
    ++valid;
  }
  if (valid == 0) throw std::runtime_error("undefined AUROC");
  return total / valid;
}

double cmap(const EvalTable& t) {
  t.validate();
  double total = 0.0;
  int valid = 0;
  for (int k = 0; k < t.c; ++k) {
    if (!t.masked_in(k)) continue;
    const ClassCounts counts = count_class(t, k);
    if (counts.positives == 0) continue;
    total += ap_class(t, k, counts);
    ++valid;
  }
  if (valid == 0) throw std::runtime_error("undefined cmAP");
  return total / valid;
}

double top1(const EvalTable& t) {
  t.validate();
  int hits = 0;
  int counted = 0;
  for (int i = 0; i < t.n; ++i) {
    bool any_positive = false;
    int best = -1;
    double best_score = -1.0;
    for (int k = 0; k < t.c; ++k) {
      if (!t.masked_in(k)) continue;
      if (t.label(i, k)) any_positive = true;
      if (t.score(i, k) > best_score) {
        best_score = t.score(i, k);
        best = k;
      }
    }
    if (!any_positive || best < 0) continue;  // excluded, reported separately
    ++counted;
    if (t.label(i, best)) ++hits;
  }
  if (counted == 0) return 0.0;
  return static_cast<double>(hits) / counted;
}

MetricReport evaluate(const EvalTable& t, const std::string& dataset_name) {
  t.validate();
  if (!t.class_mask.empty() &&
      std::count(t.class_mask.begin(), t.class_mask.end(), 1) == 0) {
    throw std::invalid_argument("mask selects zero classes");
  }
  MetricReport report;
  report.dataset = dataset_name;
  report.n_instances = t.n;

  double auroc_total = 0.0;
  int auroc_valid = 0;
  double ap_total = 0.0;
  int ap_valid = 0;
  for (int k = 0; k < t.c; ++k) {
    if (!t.masked_in(k)) continue;
    ClassMetrics cm;
    cm.class_index = k;
    cm.name = k < static_cast<int>(t.class_names.size()) ? t.class_names[k]
                                                         : "class_" + std::to_string(k);
    const ClassCounts counts = count_class(t, k);
    cm.positives = counts.positives;
    cm.negatives = counts.negatives;
    if (counts.positives > 0 && counts.negatives > 0) {
      cm.has_auroc = true;
      cm.auroc = auroc_class(t, k, counts);
      auroc_total += cm.auroc;
      ++auroc_valid;
    }
    if (counts.positives > 0) {
      cm.has_ap = true;
      cm.ap = ap_class(t, k, counts);
      ap_total += cm.ap;
      ++ap_valid;
    }
    if (!cm.has_auroc || !cm.has_ap) {
      report.skipped_classes.push_back(cm.name);
    }
    report.per_class.push_back(std::move(cm));
    ++report.n_classes_evaluated;
  }
  if (auroc_valid == 0) throw std::runtime_error("undefined AUROC");
  report.auroc = auroc_total / auroc_valid;
  report.cmap = ap_valid > 0 ? ap_total / ap_valid : 0.0;

  int counted = 0, hits = 0, skipped = 0;
  for (int i = 0; i < t.n; ++i) {
    bool any_positive = false;
    int best = -1;
    double best_score = -1.0;
    for (int k = 0; k < t.c; ++k) {
      if (!t.masked_in(k)) continue;
      if (t.label(i, k)) any_positive = true;
      if (t.score(i, k) > best_score) {
        best_score = t.score(i, k);
        best = k;
      }
    }
    if (!any_positive || best < 0) {
      ++skipped;
      continue;
    }
    ++counted;
    if (t.label(i, best)) ++hits;
  }
  report.top1 = counted > 0 ? static_cast<double>(hits) / counted : 0.0;
  report.top1_skipped_instances = skipped;
  return report;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["n_instances"] = n_instances;
  j["n_classes_evaluated"] = n_classes_evaluated;
  j["auroc"] = auroc;
  j["cmap"] = cmap;
  j["top1"] = top1;
  j["top1_skipped_instances"] = top1_skipped_instances;
  j["per_class"] = nlohmann::json::array();
  for (const auto& cm : per_class) {
    nlohmann::json row;
    row["class"] = cm.name;
    row["positives"] = cm.positives;
    row["negatives"] = cm.negatives;
    if (cm.has_auroc) row["auroc"] = cm.auroc;
    if (cm.has_ap) row["ap"] = cm.ap;
    j["per_class"].push_back(row);
  }
  j["skipped_classes"] = skipped_classes;
  return j;
}

std::vector<std::uint8_t> load_class_mask(const std::string& path,
                                          const std::vector<std::string>& class_names) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open class mask: " + path);
  std::vector<std::uint8_t> mask(class_names.size(), 0);
  std::string line;
  int selected = 0;
  while (std::getline(f, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (line.empty() || line[0] == '#') continue;
    const auto it = std::find(class_names.begin(), class_names.end(), line);
    if (it == class_names.end()) {
      throw std::runtime_error("mask names unknown class: " + line);
    }
    mask[static_cast<std::size_t>(it - class_names.begin())] = 1;
    ++selected;
  }
  if (selected == 0) throw std::runtime_error("mask selects zero classes");
  return mask;
}

}  // namespace protosound
