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

#include "protosound/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace protosound {

std::vector<ManifestRecord> load_manifest(const std::string& path,
                                          const std::vector<std::string>& class_names) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    ManifestRecord record;
    if (!j.contains("id")) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": missing id");
    }
    record.id = j["id"].get<std::string>();
    if (!seen_ids.insert(record.id).second) {
      throw std::runtime_error("manifest: duplicate id " + record.id);
    }
    if (j.contains("audio_path")) record.audio_path = j["audio_path"].get<std::string>();
    record.embedding_id =
        j.contains("embedding_id") ? j["embedding_id"].get<std::string>() : record.id;
    if (j.contains("labels")) {
      record.labels = j["labels"].get<std::vector<std::string>>();
    }
    record.split = j.contains("split") ? j["split"].get<std::string>() : "train";
    if (record.split != "train" && record.split != "val" && record.split != "test") {
      throw std::runtime_error("manifest: unknown split '" + record.split + "' for id " +
                               record.id);
    }
    for (const auto& label : record.labels) {
      if (std::find(class_names.begin(), class_names.end(), label) == class_names.end()) {
        throw std::runtime_error("manifest: label '" + label +
                                 "' not in the config class list (id " + record.id + ")");
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<std::uint8_t> label_vector(const ManifestRecord& record,
                                       const std::vector<std::string>& class_names) {
  std::vector<std::uint8_t> labels(class_names.size(), 0);
  for (const auto& name : record.labels) {
    const auto it = std::find(class_names.begin(), class_names.end(), name);
    if (it == class_names.end()) {
      throw std::runtime_error("label '" + name + "' not in the class list");
    }
    labels[static_cast<std::size_t>(it - class_names.begin())] = 1;
  }
  return labels;
}

}  // namespace protosound
