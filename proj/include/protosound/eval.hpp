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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace protosound {

// Paired true-label and confidence matrices with a class mask. Masked-out
// classes are excluded from every metric aggregate.
struct EvalTable {
  int n = 0;  // instances
  int c = 0;  // classes
  std::vector<std::uint8_t> labels;  // N x C, binary
  std::vector<double> scores;        // N x C, finite, in [0, 1]
  std::vector<std::uint8_t> class_mask;   // C; empty means all classes
  std::vector<std::string> class_names;   // optional, length C when present

  std::uint8_t label(int i, int k) const { return labels[static_cast<std::size_t>(i) * c + k]; }
  double score(int i, int k) const { return scores[static_cast<std::size_t>(i) * c + k]; }
  bool masked_in(int k) const { return class_mask.empty() || class_mask[k] != 0; }
  void validate() const;
};

// Macro AUROC: per class, the fraction of (positive, negative) pairs ranked
// with score(positive) > score(negative), ties counted 0.5; averaged over
// classes with at least one positive and one negative. Throws
// "undefined AUROC" when no class qualifies.
double auroc(const EvalTable& t);

// Macro mean average precision: AP per class is the mean over positives of
// precision at that positive's rank (descending score, ties broken by
// ascending instance index); averaged over classes with >= 1 positive.
double cmap(const EvalTable& t);

// Fraction of instances whose argmax-score class (first index on ties) is in
// the true set. Instances with empty label sets are excluded and counted.
double top1(const EvalTable& t);

struct ClassMetrics {
  int class_index = 0;
  std::string name;
  int positives = 0;
  int negatives = 0;
  bool has_auroc = false;
  double auroc = 0.0;
  bool has_ap = false;
  double ap = 0.0;
};

struct MetricReport {
  std::string dataset;
  int n_instances = 0;
  int n_classes_evaluated = 0;
  double auroc = 0.0;
  double cmap = 0.0;
  double top1 = 0.0;
  int top1_skipped_instances = 0;
  std::vector<ClassMetrics> per_class;
  std::vector<std::string> skipped_classes;  // degenerate for auroc and/or AP

  nlohmann::json to_json() const;
};

// All three metrics plus the per-class breakdown.
MetricReport evaluate(const EvalTable& t, const std::string& dataset_name);

// Newline-separated class names -> mask over the config class list. Throws if
// the mask selects zero classes or names an unknown class.
std::vector<std::uint8_t> load_class_mask(const std::string& path,
                                          const std::vector<std::string>& class_names);

}  // namespace protosound
