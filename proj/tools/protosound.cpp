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

#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "protosound/commands.hpp"

namespace {

void add_common(CLI::App* sub, protosound::CommandArgs& args, bool* seed_given) {
  sub->add_option("--config", args.config, "run configuration file")->required();
  sub->add_option("--manifest", args.manifest, "JSON-lines dataset manifest");
  sub->add_option("--out", args.out, "output run directory");
  sub->add_option("--checkpoint", args.checkpoint, "prototype bank checkpoint");
  sub->add_option("--mask", args.mask, "class mask file (newline-separated names)");
  sub->add_option("--seed", args.seed, "seed override")->each([seed_given](const std::string&) {
    *seed_given = true;
  });
  sub->add_option("--k", args.k, "exemplars per prototype");
  sub->add_option("--top-m", args.top_m, "contributions per explanation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prototype-based interpretable multi-label audio classifier"};
  app.require_subcommand(1);

  protosound::CommandArgs args;
  bool seed_given = false;
  std::function<int(const protosound::CommandArgs&)> handler;

  struct Spec {
    const char* name;
    const char* help;
    int (*fn)(const protosound::CommandArgs&);
  };
  const Spec specs[] = {
      {"preprocess", "segment audio, extract log-mel features and embeddings",
       protosound::cmd_preprocess},
      {"train", "fit the prototype classifier on frozen embeddings", protosound::cmd_train},
      {"eval", "compute masked AUROC/cmAP/top-1 on the test split", protosound::cmd_eval},
      {"project", "retrieve top-K training exemplars per prototype", protosound::cmd_project},
      {"explain", "write per-prediction explanation bundles", protosound::cmd_explain},
      {"render-audio", "invert prototype boxes to audible WAV files",
       protosound::cmd_render_audio},
  };
  for (const Spec& spec : specs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    add_common(sub, args, &seed_given);
    sub->callback([&handler, fn = spec.fn]() { handler = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  args.has_seed = seed_given;
  try {
    return handler(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
