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

#include "protosound/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <stdexcept>

#include "protosound/config.hpp"
#include "protosound/eval.hpp"
#include "protosound/explain.hpp"
#include "protosound/manifest.hpp"
#include "protosound/wav.hpp"

namespace protosound {

namespace {

namespace fs = std::filesystem;

RunConfig load_config(const CommandArgs& args) {
  if (args.config.empty()) throw std::runtime_error("--config is required");
  RunConfig cfg = RunConfig::from_file(args.config);
  if (args.has_seed) {
    cfg.seed = args.seed;
    cfg.train.seed = args.seed;
    cfg.augment.seed = args.seed;
    cfg.backbone.seed = args.seed;
  }
  return cfg;
}

void write_snapshot(const RunConfig& cfg, const CommandArgs& args, const std::string& command) {
  if (args.out.empty()) return;
  fs::create_directories(args.out);
  nlohmann::json snapshot = cfg.to_json();
  snapshot["command"] = command;
  snapshot["manifest"] = args.manifest;
  snapshot["checkpoint"] = args.checkpoint;
  snapshot["mask"] = args.mask;
  std::ofstream f(args.out + "/config_snapshot.json", std::ios::trunc);
  f << snapshot.dump(2) << '\n';
}

// One evaluated/trainable instance: a standardized clip with its embedding.
struct ClipInstance {
  std::string id;
  std::vector<std::uint8_t> labels;
  Spectrogram spec;  // standardized; empty values when loaded from a store
  EmbeddingMap embedding;
};

std::string clip_id(const std::string& base, std::size_t index, std::size_t total) {
  return total > 1 ? base + "#" + std::to_string(index) : base;
}

std::vector<Waveform> record_clips(const ManifestRecord& record, const DspConfig& dsp) {
  Waveform audio = read_wav(record.audio_path);
  if (audio.sample_rate != dsp.sample_rate) {
    throw std::runtime_error("sample rate " + std::to_string(audio.sample_rate) +
                             " does not match config (" + std::to_string(dsp.sample_rate) +
                             "): " + record.audio_path);
  }
  return segment(audio, dsp.clip_seconds);
}

// Loads instances for one split. In store mode embeddings come from the
// store (matched by embedding_id, exact or "<id>#k"); spectrograms are
// recomputed from audio only when requested and available.
std::vector<ClipInstance> load_instances(const RunConfig& cfg,
                                         const std::vector<ManifestRecord>& records,
                                         const std::string& split, bool want_spectrograms) {
  std::vector<ClipInstance> instances;

  if (cfg.backbone_kind == "store") {
    const auto stored = load_embeddings(cfg.embedding_store);
    std::map<std::string, const EmbeddingMap*> by_id;
    for (const auto& [id, map] : stored) {
      by_id[id] = &map;
    }
    for (const auto& record : records) {
      if (record.split != split) continue;
      const auto labels = label_vector(record, cfg.class_names);
      std::vector<std::pair<std::string, const EmbeddingMap*>> matches;
      if (const auto it = by_id.find(record.embedding_id); it != by_id.end()) {
        matches.emplace_back(it->first, it->second);
      } else {
        const std::string prefix = record.embedding_id + "#";
        for (auto it = by_id.lower_bound(prefix);
             it != by_id.end() && it->first.compare(0, prefix.size(), prefix) == 0; ++it) {
          matches.emplace_back(it->first, it->second);
        }
      }
      if (matches.empty()) {
        throw std::runtime_error("no embeddings for id " + record.embedding_id + " in " +
                                 cfg.embedding_store);
      }
      std::vector<Spectrogram> specs;
      if (want_spectrograms) {
        if (record.audio_path.empty()) {
          throw std::runtime_error("record " + record.id +
                                   " has no audio_path; spectrograms unavailable");
        }
        for (const auto& clip : record_clips(record, cfg.dsp)) {
          specs.push_back(standardize(logmel(clip, cfg.dsp), cfg.dsp));
        }
        if (specs.size() != matches.size()) {
          throw std::runtime_error("store/audio clip count mismatch for id " + record.id);
        }
      }
      for (std::size_t i = 0; i < matches.size(); ++i) {
        ClipInstance inst;
        inst.id = matches[i].first;
        inst.labels = labels;
        inst.embedding = *matches[i].second;
        if (want_spectrograms) inst.spec = std::move(specs[i]);
        instances.push_back(std::move(inst));
      }
    }
    return instances;
  }

  const ToyBackbone backbone(cfg.backbone);
  for (const auto& record : records) {
    if (record.split != split) continue;
    if (record.audio_path.empty()) {
      throw std::runtime_error("record " + record.id + " has no audio_path");
    }
    const auto labels = label_vector(record, cfg.class_names);
    const auto clips = record_clips(record, cfg.dsp);
    for (std::size_t i = 0; i < clips.size(); ++i) {
      ClipInstance inst;
      inst.id = clip_id(record.id, i, clips.size());
      inst.labels = labels;
      inst.spec = standardize(logmel(clips[i], cfg.dsp), cfg.dsp);
      inst.embedding = backbone.extract(inst.spec);
      if (!want_spectrograms) inst.spec.values.clear();
      instances.push_back(std::move(inst));
    }
  }
  return instances;
}

std::vector<TrainItem> to_train_items(std::vector<ClipInstance> instances) {
  std::vector<TrainItem> items;
  items.reserve(instances.size());
  for (auto& inst : instances) {
    items.push_back({std::move(inst.id), std::move(inst.labels), std::move(inst.embedding)});
  }
  return items;
}

std::vector<Waveform> load_noise_pool(const std::string& dir, const DspConfig& dsp) {
  std::vector<Waveform> pool;
  if (dir.empty() || !fs::exists(dir)) return pool;
  // Directory iteration order is unspecified; sort so pool indices (and
  // therefore augmentation draws) are reproducible.
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    Waveform w = read_wav(path.string());
    if (w.sample_rate == dsp.sample_rate) pool.push_back(std::move(w));
  }
  return pool;
}

// Waveform-mode training source: keeps raw clips plus shift contexts and
// re-runs the augmentation pipeline per epoch.
struct WaveformTrainData {
  std::vector<LabeledClip> clips;
  std::vector<Waveform> contexts;
  NoisePools pools;
};

WaveformTrainData build_waveform_data(const RunConfig& cfg,
                                      const std::vector<ManifestRecord>& records,
                                      const std::string& split) {
  WaveformTrainData data;
  const int clip_len = cfg.dsp.clip_samples();
  const long window_len =
      std::llround(cfg.augment.shift_window_seconds * cfg.dsp.sample_rate);
  for (const auto& record : records) {
    if (record.split != split) continue;
    if (record.audio_path.empty()) {
      throw std::runtime_error("record " + record.id + " has no audio_path");
    }
    Waveform audio = read_wav(record.audio_path);
    if (audio.sample_rate != cfg.dsp.sample_rate) {
      throw std::runtime_error("sample rate mismatch: " + record.audio_path);
    }
    const auto labels = label_vector(record, cfg.class_names);
    const auto clips = segment(audio, cfg.dsp.clip_seconds);
    for (std::size_t i = 0; i < clips.size(); ++i) {
      LabeledClip clip{clips[i], labels};
      // Shift context: a window of the recording around the clip.
      Waveform context;
      context.sample_rate = audio.sample_rate;
      const long clip_start = static_cast<long>(i) * clip_len;
      const long pad = (window_len - clip_len) / 2;
      const long lo = std::max<long>(0, clip_start - pad);
      const long hi = std::min<long>(static_cast<long>(audio.samples.size()),
                                     clip_start + clip_len + pad);
      if (hi - lo > clip_len) {
        context.samples.assign(audio.samples.begin() + lo, audio.samples.begin() + hi);
      }
      data.clips.push_back(std::move(clip));
      data.contexts.push_back(std::move(context));
    }
  }
  data.pools.background = load_noise_pool(cfg.augment.background_dir, cfg.dsp);
  data.pools.nocall = load_noise_pool(cfg.augment.nocall_dir, cfg.dsp);
  if (cfg.augment.p_background > 0.0 && data.pools.background.empty()) {
    std::cerr << "warning: background noise pool is empty; mixing will be skipped\n";
  }
  if (cfg.augment.p_nocall > 0.0 && data.pools.nocall.empty()) {
    std::cerr << "warning: no-call pool is empty; swaps will be skipped\n";
  }
  return data;
}

EvalTable build_eval_table(const RunConfig& cfg, const std::vector<ClipInstance>& instances,
                           const PrototypeBank& bank, const std::string& mask_path) {
  EvalTable table;
  table.n = static_cast<int>(instances.size());
  table.c = bank.num_classes;
  table.class_names = cfg.class_names;
  table.labels.reserve(static_cast<std::size_t>(table.n) * table.c);
  table.scores.reserve(static_cast<std::size_t>(table.n) * table.c);
  for (const auto& inst : instances) {
    const Prediction pred = predict(similarity(inst.embedding, bank), bank);
    table.labels.insert(table.labels.end(), inst.labels.begin(), inst.labels.end());
    table.scores.insert(table.scores.end(), pred.confidences.begin(), pred.confidences.end());
  }
  if (!mask_path.empty()) {
    table.class_mask = load_class_mask(mask_path, cfg.class_names);
  }
  return table;
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& ch : out) {
    if (ch == '/' || ch == '\\' || ch == ' ') ch = '_';
  }
  return out;
}

}  // namespace

int cmd_preprocess(const CommandArgs& args) {
  // Always extracts with the built-in backbone; the config's backbone kind
  // only tells train/eval where embeddings come from.
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw std::runtime_error("--out is required");
  write_snapshot(cfg, args, "preprocess");
  const auto records = load_manifest(args.manifest, cfg.class_names);

  const ToyBackbone backbone(cfg.backbone);
  std::vector<std::pair<std::string, EmbeddingMap>> store_items;
  std::vector<std::string> errors;
  // Raw (unstandardized) log-mel statistics for reproducibility audits.
  std::size_t clip_count = 0;
  std::size_t value_count = 0;
  double sum = 0.0, sum_sq = 0.0;

  for (const auto& record : records) {
    try {
      if (record.audio_path.empty()) {
        throw std::runtime_error("record has no audio_path");
      }
      const auto clips = record_clips(record, cfg.dsp);
      for (std::size_t i = 0; i < clips.size(); ++i) {
        const Spectrogram raw = logmel(clips[i], cfg.dsp);
        for (double v : raw.values) {
          sum += v;
          sum_sq += v * v;
        }
        value_count += raw.values.size();
        ++clip_count;
        const Spectrogram std_spec = standardize(raw, cfg.dsp);
        store_items.emplace_back(clip_id(record.embedding_id, i, clips.size()),
                                 backbone.extract(std_spec));
      }
    } catch (const std::exception& e) {
      errors.push_back(record.id + ": " + e.what());
    }
  }

  save_embeddings(args.out + "/embeddings.apem", store_items);
  nlohmann::json stats;
  stats["clips"] = clip_count;
  stats["values"] = value_count;
  const double mean = value_count > 0 ? sum / static_cast<double>(value_count) : 0.0;
  stats["mean"] = mean;
  stats["std"] = value_count > 1
                     ? std::sqrt(std::max(0.0, sum_sq / static_cast<double>(value_count) -
                                                   mean * mean))
                     : 0.0;
  std::ofstream sf(args.out + "/embeddings.stats.json", std::ios::trunc);
  sf << stats.dump(2) << '\n';

  if (records.empty()) {
    std::cerr << "warning: empty manifest, wrote empty store\n";
  }
  for (const auto& error : errors) {
    std::cerr << "error: " << error << '\n';
  }
  std::cout << "preprocess: " << store_items.size() << " embeddings -> " << args.out
            << "/embeddings.apem\n";
  return errors.empty() ? 0 : 1;
}

int cmd_train(const CommandArgs& args) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw std::runtime_error("--out is required");
  write_snapshot(cfg, args, "train");
  const auto records = load_manifest(args.manifest, cfg.class_names);
  const int num_classes = static_cast<int>(cfg.class_names.size());

  std::vector<TrainItem> val_items;
  BatchLoader loader;
  std::size_t train_size = 0;
  int dim = 0;

  std::vector<TrainItem> train_items;  // embedding mode
  WaveformTrainData wave;              // waveform mode
  std::unique_ptr<ToyBackbone> backbone;

  if (cfg.backbone_kind == "store") {
    if (!cfg.augment.is_identity()) {
      std::cerr << "warning: training from an embedding store; waveform and spectrogram "
                   "augmentations are skipped\n";
    }
    train_items = to_train_items(load_instances(cfg, records, "train", false));
    val_items = to_train_items(load_instances(cfg, records, "val", false));
    if (train_items.empty()) throw std::runtime_error("no training instances");
    dim = train_items.front().embedding.d;
    train_size = train_items.size();
    loader = [&train_items](const std::vector<std::size_t>& indices, int, std::size_t) {
      std::vector<TrainItem> batch;
      batch.reserve(indices.size());
      for (std::size_t idx : indices) {
        batch.push_back(train_items[idx]);
      }
      return batch;
    };
  } else {
    wave = build_waveform_data(cfg, records, "train");
    if (wave.clips.empty()) throw std::runtime_error("no training instances");
    backbone = std::make_unique<ToyBackbone>(cfg.backbone);
    dim = backbone->output_channels();
    train_size = wave.clips.size();
    val_items = to_train_items(load_instances(cfg, records, "val", false));
    const RunConfig* cfg_ptr = &cfg;
    const WaveformTrainData* wave_ptr = &wave;
    const ToyBackbone* backbone_ptr = backbone.get();
    loader = [cfg_ptr, wave_ptr, backbone_ptr](const std::vector<std::size_t>& indices,
                                               int epoch, std::size_t batch_index) {
      std::vector<LabeledClip> batch;
      std::vector<Waveform> contexts;
      for (std::size_t idx : indices) {
        batch.push_back(wave_ptr->clips[idx]);
        contexts.push_back(wave_ptr->contexts[idx]);
      }
      const auto augmented =
          augment_waveform_batch(batch, contexts, wave_ptr->pools, cfg_ptr->augment,
                                 static_cast<std::uint64_t>(epoch), batch_index);
      std::vector<TrainItem> items;
      items.reserve(augmented.size());
      for (std::size_t i = 0; i < augmented.size(); ++i) {
        Spectrogram spec =
            standardize(logmel(augmented[i].waveform, cfg_ptr->dsp), cfg_ptr->dsp);
        Rng mask_rng = Rng::substream(cfg_ptr->augment.seed,
                                      {static_cast<std::uint64_t>(epoch), batch_index, i,
                                       0x5bec7});
        spec = spec_masks(spec, cfg_ptr->augment, mask_rng);
        items.push_back({"clip_" + std::to_string(indices[i]), augmented[i].labels,
                         backbone_ptr->extract(spec)});
      }
      return items;
    };
  }

  if (val_items.empty()) {
    std::cerr << "warning: no val split; validating on the training set\n";
    if (cfg.backbone_kind == "store") {
      val_items = train_items;
    } else {
      val_items = to_train_items(load_instances(cfg, records, "train", false));
    }
  }

  TrainState state;
  if (!args.checkpoint.empty() && fs::exists(fs::path(args.checkpoint).parent_path() /
                                             "optimizer_state.apos")) {
    state = load_train_state((fs::path(args.checkpoint).parent_path() /
                              "optimizer_state.apos").string());
    std::cout << "resuming from epoch " << state.epochs_done << '\n';
  } else if (!args.checkpoint.empty()) {
    state = init_train_state(load_checkpoint(args.checkpoint));
  } else {
    PrototypeBank bank = init_bank(num_classes, cfg.per_class, dim, cfg.seed);
    bank.class_names = cfg.class_names;
    state = init_train_state(std::move(bank));
  }

  nlohmann::json metadata;
  metadata["config_snapshot"] = "config_snapshot.json";  // alongside the checkpoint
  metadata["seed"] = cfg.seed;
  const TrainResult result =
      fit(std::move(state), loader, train_size, val_items, cfg.train, cfg.loss, args.out,
          metadata);
  std::cout << "train: best val loss " << result.best_val_loss << " (epoch "
            << result.best_epoch << ") -> " << result.best_checkpoint_path << '\n';
  return 0;
}

int cmd_eval(const CommandArgs& args) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw std::runtime_error("--out is required");
  if (args.checkpoint.empty()) throw std::runtime_error("--checkpoint is required");
  write_snapshot(cfg, args, "eval");
  const auto records = load_manifest(args.manifest, cfg.class_names);
  const PrototypeBank bank = load_checkpoint(args.checkpoint);
  if (bank.num_classes != static_cast<int>(cfg.class_names.size())) {
    throw std::runtime_error("checkpoint class count does not match config");
  }
  const auto instances = load_instances(cfg, records, "test", false);
  if (instances.empty()) throw std::runtime_error("no test instances");
  const std::string mask_path = !args.mask.empty() ? args.mask : cfg.eval_mask_file;
  const EvalTable table = build_eval_table(cfg, instances, bank, mask_path);
  const MetricReport report = evaluate(table, args.manifest);
  std::ofstream f(args.out + "/report.json", std::ios::trunc);
  f << report.to_json().dump(2) << '\n';
  std::cout << "eval: auroc " << report.auroc << ", cmap " << report.cmap << ", top1 "
            << report.top1 << " -> " << args.out << "/report.json\n";
  return 0;
}

int cmd_project(const CommandArgs& args) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw std::runtime_error("--out is required");
  if (args.checkpoint.empty()) throw std::runtime_error("--checkpoint is required");
  write_snapshot(cfg, args, "project");
  const auto records = load_manifest(args.manifest, cfg.class_names);
  const PrototypeBank bank = load_checkpoint(args.checkpoint);
  const int k = args.k > 0 ? args.k : cfg.explain_top_k;

  // Spectrograms are needed for rendering; tolerate their absence.
  bool have_audio = true;
  std::vector<ClipInstance> instances;
  try {
    instances = load_instances(cfg, records, "train", true);
  } catch (const std::exception&) {
    have_audio = false;
    instances = load_instances(cfg, records, "train", false);
  }
  if (instances.empty()) throw std::runtime_error("no training instances");

  std::vector<std::pair<std::string, EmbeddingMap>> items;
  std::map<std::string, const ClipInstance*> by_id;
  for (const auto& inst : instances) {
    items.emplace_back(inst.id, inst.embedding);
    by_id[inst.id] = &inst;
  }
  const int frames = cfg.dsp.frames_for(static_cast<std::size_t>(cfg.dsp.clip_samples()));
  if (k > static_cast<int>(items.size())) {
    std::cerr << "warning: k exceeds dataset size; returning all instances\n";
  }
  const auto entries = project(bank, items, k, cfg.dsp.mel_bins, frames);

  nlohmann::json index = nlohmann::json::array();
  std::map<std::string, int> rank_within;
  for (const auto& entry : entries) {
    const std::string class_name = entry.class_index < static_cast<int>(cfg.class_names.size())
                                       ? cfg.class_names[entry.class_index]
                                       : std::to_string(entry.class_index);
    const std::string dir = args.out + "/explanations/" + sanitize(class_name) + "/proto_" +
                            std::to_string(entry.proto_index);
    fs::create_directories(dir);
    const std::string key = class_name + "/" + std::to_string(entry.proto_index);
    const int rank = rank_within[key]++;
    const std::string stem = dir + "/rank_" + std::to_string(rank);
    write_box_csv(stem + ".csv", entry.class_index, entry.proto_index, entry.instance_id,
                  entry.similarity, entry.box);
    if (have_audio) {
      const ClipInstance* inst = by_id.at(entry.instance_id);
      const Heatmap hm = upscale_similarity(inst->embedding, bank, entry.class_index,
                                            entry.proto_index, cfg.dsp.mel_bins, frames);
      render_heatmap_png(stem + ".png", inst->spec, hm, &entry.box);
      render_overlay_png(stem + "_box.png", inst->spec, entry.box);
    }
    nlohmann::json row;
    row["class"] = class_name;
    row["prototype"] = entry.proto_index;
    row["rank"] = rank;
    row["instance"] = entry.instance_id;
    row["similarity"] = entry.similarity;
    row["argmax_cell"] = {entry.argmax_cell.first, entry.argmax_cell.second};
    row["box"] = {{"f_lo", entry.box.f_lo},
                  {"f_hi", entry.box.f_hi},
                  {"t_lo", entry.box.t_lo},
                  {"t_hi", entry.box.t_hi}};
    index.push_back(row);
  }
  std::ofstream f(args.out + "/explanations/index.json", std::ios::trunc);
  f << index.dump(2) << '\n';
  std::cout << "project: " << entries.size() << " exemplars -> " << args.out
            << "/explanations\n";
  return 0;
}

int cmd_explain(const CommandArgs& args) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw std::runtime_error("--out is required");
  if (args.checkpoint.empty()) throw std::runtime_error("--checkpoint is required");
  write_snapshot(cfg, args, "explain");
  const auto records = load_manifest(args.manifest, cfg.class_names);
  const PrototypeBank bank = load_checkpoint(args.checkpoint);
  const int top_m = args.top_m > 0 ? args.top_m : cfg.explain_top_m;
  const int frames = cfg.dsp.frames_for(static_cast<std::size_t>(cfg.dsp.clip_samples()));

  const auto instances = load_instances(cfg, records, "test", true);
  if (instances.empty()) throw std::runtime_error("no test instances");

  // Exemplars give each contributing prototype its training-set context.
  std::vector<ProjectionEntry> exemplars;
  try {
    const auto train_instances = load_instances(cfg, records, "train", false);
    std::vector<std::pair<std::string, EmbeddingMap>> items;
    for (const auto& inst : train_instances) {
      items.emplace_back(inst.id, inst.embedding);
    }
    if (!items.empty()) {
      exemplars = project(bank, items, cfg.explain_top_k, cfg.dsp.mel_bins, frames);
    }
  } catch (const std::exception& e) {
    std::cerr << "warning: no training exemplars (" << e.what() << ")\n";
  }

  for (const auto& inst : instances) {
    const Explanation ex = explain_prediction(inst.spec, inst.embedding, bank, top_m);
    const std::string dir = args.out + "/explanations_local/" + sanitize(inst.id);
    fs::create_directories(dir);
    nlohmann::json bundle;
    bundle["instance"] = inst.id;
    bundle["logits"] = ex.prediction.logits;
    bundle["confidences"] = ex.prediction.confidences;
    bundle["contributions"] = nlohmann::json::array();
    int rank = 0;
    for (const auto& contrib : ex.top) {
      const std::string class_name = cfg.class_names[contrib.class_index];
      const Heatmap hm = upscale_similarity(inst.embedding, bank, contrib.class_index,
                                            contrib.proto_index, cfg.dsp.mel_bins, frames);
      const std::string png =
          dir + "/rank_" + std::to_string(rank) + "_" + sanitize(class_name) + "_proto_" +
          std::to_string(contrib.proto_index) + ".png";
      render_heatmap_png(png, inst.spec, hm, &contrib.box);
      nlohmann::json row;
      row["rank"] = rank;
      row["class"] = class_name;
      row["prototype"] = contrib.proto_index;
      row["pooled_similarity"] = contrib.pooled;
      row["head_weight"] = contrib.weight;
      row["contribution"] = contrib.contribution;
      row["box"] = {{"f_lo", contrib.box.f_lo},
                    {"f_hi", contrib.box.f_hi},
                    {"t_lo", contrib.box.t_lo},
                    {"t_hi", contrib.box.t_hi}};
      row["heatmap_png"] = png;
      row["exemplars"] = nlohmann::json::array();
      for (const auto& entry : exemplars) {
        if (entry.class_index == contrib.class_index &&
            entry.proto_index == contrib.proto_index) {
          row["exemplars"].push_back(
              {{"instance", entry.instance_id}, {"similarity", entry.similarity}});
        }
      }
      bundle["contributions"].push_back(row);
      ++rank;
    }
    std::ofstream f(dir + "/explanation.json", std::ios::trunc);
    f << bundle.dump(2) << '\n';
  }
  std::cout << "explain: " << instances.size() << " instances -> " << args.out
            << "/explanations_local\n";
  return 0;
}

int cmd_render_audio(const CommandArgs& args) {
  const RunConfig cfg = load_config(args);
  if (args.out.empty()) throw std::runtime_error("--out is required");
  if (args.checkpoint.empty()) throw std::runtime_error("--checkpoint is required");
  write_snapshot(cfg, args, "render-audio");
  const auto records = load_manifest(args.manifest, cfg.class_names);
  const PrototypeBank bank = load_checkpoint(args.checkpoint);
  const int k = args.k > 0 ? args.k : cfg.explain_top_k;
  const int frames = cfg.dsp.frames_for(static_cast<std::size_t>(cfg.dsp.clip_samples()));

  const auto instances = load_instances(cfg, records, "train", true);
  if (instances.empty()) throw std::runtime_error("no training instances");
  std::vector<std::pair<std::string, EmbeddingMap>> items;
  std::map<std::string, const ClipInstance*> by_id;
  for (const auto& inst : instances) {
    items.emplace_back(inst.id, inst.embedding);
    by_id[inst.id] = &inst;
  }
  const auto entries = project(bank, items, k, cfg.dsp.mel_bins, frames);

  std::map<std::string, int> rank_within;
  for (const auto& entry : entries) {
    const std::string class_name = cfg.class_names[entry.class_index];
    const std::string dir = args.out + "/explanations/" + sanitize(class_name) + "/proto_" +
                            std::to_string(entry.proto_index);
    fs::create_directories(dir);
    const std::string key = class_name + "/" + std::to_string(entry.proto_index);
    const int rank = rank_within[key]++;
    const ClipInstance* inst = by_id.at(entry.instance_id);
    const Spectrogram raw = unstandardize(inst->spec, cfg.dsp);
    const Waveform audio = render_box_audio(raw, cfg.dsp, entry.box,
                                            cfg.griffin_lim_iterations, cfg.seed);
    write_wav(dir + "/rank_" + std::to_string(rank) + ".wav", audio);
  }
  std::cout << "render-audio: " << entries.size() << " clips -> " << args.out
            << "/explanations\n";
  return 0;
}

}  // namespace protosound
