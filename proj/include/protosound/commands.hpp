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

namespace protosound {

struct CommandArgs {
  std::string config;
  std::string manifest;
  std::string out;
  std::string checkpoint;
  std::string mask;
  bool has_seed = false;
  std::uint64_t seed = 0;
  int k = 0;      // 0 = take from config
  int top_m = 0;  // 0 = take from config
};

// Each command returns a process exit code: 0 success, 1 runtime failure.
// (Usage errors are the CLI front end's job and exit with 2.)
int cmd_preprocess(const CommandArgs& args);
int cmd_train(const CommandArgs& args);
int cmd_eval(const CommandArgs& args);
int cmd_project(const CommandArgs& args);
int cmd_explain(const CommandArgs& args);
int cmd_render_audio(const CommandArgs& args);

}  // namespace protosound
