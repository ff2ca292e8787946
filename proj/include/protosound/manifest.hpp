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

namespace protosound {

// One JSON-lines record: {"id": ..., "audio_path" or "embedding_id": ...,
// "labels": [class names], "split": "train"|"val"|"test"}.
struct ManifestRecord {
  std::string id;
  std::string audio_path;    // may be empty when embeddings are precomputed
  std::string embedding_id;  // defaults to id
  std::vector<std::string> labels;
  std::string split;
};

// Loads and validates a manifest: unique ids, known splits, labels drawn from
// the class list.
std::vector<ManifestRecord> load_manifest(const std::string& path,
                                          const std::vector<std::string>& class_names);

// Binary label vector over the config class list.
std::vector<std::uint8_t> label_vector(const ManifestRecord& record,
                                       const std::vector<std::string>& class_names);

}  // namespace protosound
