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

#include <string>
#include <vector>

#include <json.hpp>

#include "protosound/augment.hpp"
#include "protosound/dsp.hpp"
#include "protosound/embed.hpp"
#include "protosound/objective.hpp"
#include "protosound/trainer.hpp"

namespace protosound {

// Resolved run configuration. The on-disk format is a TOML-like key-value
// document with one [section] per module; see docs in the README.
struct RunConfig {
  std::uint64_t seed = 0;
  DspConfig dsp;
  AugmentConfig augment;

  // Backbone is either the built-in frozen extractor ("toy") or a
  // precomputed embedding store ("store").
  std::string backbone_kind = "toy";
  std::string embedding_store;  // path, when backbone_kind == "store"
  ToyBackboneConfig backbone;

  std::vector<std::string> class_names;
  int per_class = 5;  // J; any positive value accepted

  LossConfig loss;
  TrainConfig train;

  std::string eval_mask_file;

  int explain_top_k = 5;
  int explain_top_m = 5;
  int griffin_lim_iterations = 32;

  void validate() const;
  nlohmann::json to_json() const;

  static RunConfig from_file(const std::string& path);
};

}  // namespace protosound
