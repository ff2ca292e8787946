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

#include "protosound/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace protosound {

namespace {

using Value = std::variant<double, std::string, bool, std::vector<double>,
                           std::vector<std::string>>;

struct Document {
  std::map<std::string, std::map<std::string, Value>> sections;

  const Value* find(const std::string& section, const std::string& key) const {
    const auto sit = sections.find(section);
    if (sit == sections.end()) return nullptr;
    const auto kit = sit->second.find(key);
    return kit == sit->second.end() ? nullptr : &kit->second;
  }
};

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

Value parse_scalar(const std::string& token, const std::string& where) {
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
    return token.substr(1, token.size() - 2);
  }
  if (token == "true") return true;
  if (token == "false") return false;
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("config: cannot parse value '" + token + "' at " + where);
}

Value parse_value(const std::string& text, const std::string& where) {
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw std::runtime_error("config: unterminated array at " + where);
    std::vector<std::string> tokens;
    std::string inner = text.substr(1, text.size() - 2);
    std::string token;
    bool in_string = false;
    for (char ch : inner) {
      if (ch == '"') in_string = !in_string;
      if (ch == ',' && !in_string) {
        tokens.push_back(trim(token));
        token.clear();
      } else {
        token.push_back(ch);
      }
    }
    if (!trim(token).empty()) tokens.push_back(trim(token));
    std::vector<double> numbers;
    std::vector<std::string> strings;
    bool all_numbers = true;
    for (const auto& tok : tokens) {
      const Value v = parse_scalar(tok, where);
      if (std::holds_alternative<double>(v)) {
        numbers.push_back(std::get<double>(v));
      } else if (std::holds_alternative<std::string>(v)) {
        all_numbers = false;
        strings.push_back(std::get<std::string>(v));
      } else {
        throw std::runtime_error("config: unsupported array element at " + where);
      }
    }
    if (all_numbers) return numbers;
    if (strings.size() == tokens.size()) return strings;
    throw std::runtime_error("config: mixed array types at " + where);
  }
  return parse_scalar(text, where);
}

Document parse_document(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  Document doc;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    // Strip comments outside strings.
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error("config: bad section header at " + where);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: expected key = value at " + where);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error("config: empty key or value at " + where);
    }
    doc.sections[section][key] = parse_value(value, where);
  }
  return doc;
}

double get_number(const Document& doc, const std::string& section, const std::string& key,
                  double fallback) {
  const Value* v = doc.find(section, key);
  if (!v) return fallback;
  if (!std::holds_alternative<double>(*v)) {
    throw std::runtime_error("config: [" + section + "] " + key + " must be a number");
  }
  return std::get<double>(*v);
}

int get_int(const Document& doc, const std::string& section, const std::string& key,
            int fallback) {
  return static_cast<int>(get_number(doc, section, key, fallback));
}

std::string get_string(const Document& doc, const std::string& section, const std::string& key,
                       const std::string& fallback) {
  const Value* v = doc.find(section, key);
  if (!v) return fallback;
  if (!std::holds_alternative<std::string>(*v)) {
    throw std::runtime_error("config: [" + section + "] " + key + " must be a string");
  }
  return std::get<std::string>(*v);
}

std::vector<double> get_numbers(const Document& doc, const std::string& section,
                                const std::string& key, std::vector<double> fallback) {
  const Value* v = doc.find(section, key);
  if (!v) return fallback;
  if (!std::holds_alternative<std::vector<double>>(*v)) {
    throw std::runtime_error("config: [" + section + "] " + key + " must be a number array");
  }
  return std::get<std::vector<double>>(*v);
}

std::vector<std::string> get_strings(const Document& doc, const std::string& section,
                                     const std::string& key,
                                     std::vector<std::string> fallback) {
  const Value* v = doc.find(section, key);
  if (!v) return fallback;
  if (std::holds_alternative<std::vector<std::string>>(*v)) {
    return std::get<std::vector<std::string>>(*v);
  }
  throw std::runtime_error("config: [" + section + "] " + key + " must be a string array");
}

}  // namespace

void RunConfig::validate() const {
  dsp.validate();
  augment.validate();
  loss.validate();
  train.validate();
  if (backbone_kind != "toy" && backbone_kind != "store") {
    throw std::invalid_argument("backbone kind must be 'toy' or 'store'");
  }
  if (backbone_kind == "store" && embedding_store.empty()) {
    throw std::invalid_argument("backbone kind 'store' requires store_path");
  }
  if (backbone_kind == "toy") backbone.validate();
  if (class_names.empty()) throw std::invalid_argument("config must list class names");
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    for (std::size_t j = i + 1; j < class_names.size(); ++j) {
      if (class_names[i] == class_names[j]) {
        throw std::invalid_argument("duplicate class name: " + class_names[i]);
      }
    }
  }
  if (per_class < 1) throw std::invalid_argument("per_class must be >= 1");
  if (explain_top_k < 1 || explain_top_m < 1) {
    throw std::invalid_argument("explain top_k/top_m must be >= 1");
  }
  if (griffin_lim_iterations < 1) {
    throw std::invalid_argument("griffin_lim_iterations must be >= 1");
  }
}

RunConfig RunConfig::from_file(const std::string& path) {
  const Document doc = parse_document(path);
  RunConfig cfg;

  cfg.seed = static_cast<std::uint64_t>(get_number(doc, "", "seed", 0.0));

  cfg.dsp.sample_rate = get_int(doc, "dsp", "sample_rate", cfg.dsp.sample_rate);
  cfg.dsp.fft_size = get_int(doc, "dsp", "fft_size", cfg.dsp.fft_size);
  cfg.dsp.hop = get_int(doc, "dsp", "hop", cfg.dsp.hop);
  cfg.dsp.mel_bins = get_int(doc, "dsp", "mel_bins", cfg.dsp.mel_bins);
  cfg.dsp.clip_seconds = get_number(doc, "dsp", "clip_seconds", cfg.dsp.clip_seconds);
  cfg.dsp.zscore_mean = get_number(doc, "dsp", "zscore_mean", cfg.dsp.zscore_mean);
  cfg.dsp.zscore_std = get_number(doc, "dsp", "zscore_std", cfg.dsp.zscore_std);

  auto& a = cfg.augment;
  a.p_time_shift = get_number(doc, "augment", "p_time_shift", a.p_time_shift);
  a.p_background = get_number(doc, "augment", "p_background", a.p_background);
  a.p_colored_noise = get_number(doc, "augment", "p_colored_noise", a.p_colored_noise);
  a.p_gain = get_number(doc, "augment", "p_gain", a.p_gain);
  a.p_mixup = get_number(doc, "augment", "p_mixup", a.p_mixup);
  a.p_nocall = get_number(doc, "augment", "p_nocall", a.p_nocall);
  a.p_freq_mask = get_number(doc, "augment", "p_freq_mask", a.p_freq_mask);
  a.p_time_mask = get_number(doc, "augment", "p_time_mask", a.p_time_mask);
  a.mixup_max_partners = get_int(doc, "augment", "mixup_max_partners", a.mixup_max_partners);
  a.shift_window_seconds =
      get_number(doc, "augment", "shift_window_seconds", a.shift_window_seconds);
  const auto gain_range =
      get_numbers(doc, "augment", "gain_range_db", {a.gain_db_min, a.gain_db_max});
  if (gain_range.size() != 2) throw std::runtime_error("gain_range_db must have two entries");
  a.gain_db_min = gain_range[0];
  a.gain_db_max = gain_range[1];
  a.mask_max_fraction = get_number(doc, "augment", "mask_max_fraction", a.mask_max_fraction);
  const auto bg_snr = get_numbers(doc, "augment", "background_snr_db",
                                  {a.background_snr_db_min, a.background_snr_db_max});
  if (bg_snr.size() != 2) throw std::runtime_error("background_snr_db must have two entries");
  a.background_snr_db_min = bg_snr[0];
  a.background_snr_db_max = bg_snr[1];
  const auto col_snr = get_numbers(doc, "augment", "colored_snr_db",
                                   {a.colored_snr_db_min, a.colored_snr_db_max});
  if (col_snr.size() != 2) throw std::runtime_error("colored_snr_db must have two entries");
  a.colored_snr_db_min = col_snr[0];
  a.colored_snr_db_max = col_snr[1];
  a.background_dir = get_string(doc, "augment", "background_dir", "");
  a.nocall_dir = get_string(doc, "augment", "nocall_dir", "");
  a.seed = static_cast<std::uint64_t>(get_number(doc, "augment", "seed",
                                                 static_cast<double>(cfg.seed)));

  cfg.backbone_kind = get_string(doc, "backbone", "kind", cfg.backbone_kind);
  cfg.embedding_store = get_string(doc, "backbone", "store_path", "");
  cfg.backbone = ToyBackboneConfig::defaults();
  const auto channels = get_numbers(doc, "backbone", "layers", {});
  if (!channels.empty()) {
    const int kernel = get_int(doc, "backbone", "kernel", 3);
    const int stride = get_int(doc, "backbone", "stride", 2);
    cfg.backbone.layers.clear();
    for (double ch : channels) {
      cfg.backbone.layers.push_back({kernel, kernel, stride, static_cast<int>(ch)});
    }
  }
  cfg.backbone.seed = static_cast<std::uint64_t>(
      get_number(doc, "backbone", "seed", static_cast<double>(cfg.seed)));

  cfg.class_names = get_strings(doc, "model", "classes", {});
  cfg.per_class = get_int(doc, "model", "per_class", cfg.per_class);

  cfg.loss.gamma_pos = get_number(doc, "loss", "gamma_pos", cfg.loss.gamma_pos);
  cfg.loss.gamma_neg = get_number(doc, "loss", "gamma_neg", cfg.loss.gamma_neg);
  cfg.loss.clip_margin = get_number(doc, "loss", "clip_margin", cfg.loss.clip_margin);
  cfg.loss.lambda_ortho = get_number(doc, "loss", "lambda_ortho", cfg.loss.lambda_ortho);

  cfg.train.epochs = get_int(doc, "train", "epochs", cfg.train.epochs);
  cfg.train.batch_size = get_int(doc, "train", "batch_size", cfg.train.batch_size);
  cfg.train.lr_prototypes = get_number(doc, "train", "lr_prototypes", cfg.train.lr_prototypes);
  cfg.train.lr_head = get_number(doc, "train", "lr_head", cfg.train.lr_head);
  cfg.train.weight_decay = get_number(doc, "train", "weight_decay", cfg.train.weight_decay);
  cfg.train.warmup_ratio = get_number(doc, "train", "warmup_ratio", cfg.train.warmup_ratio);
  cfg.train.beta1 = get_number(doc, "train", "beta1", cfg.train.beta1);
  cfg.train.beta2 = get_number(doc, "train", "beta2", cfg.train.beta2);
  cfg.train.eps_adam = get_number(doc, "train", "eps_adam", cfg.train.eps_adam);
  cfg.train.seed = static_cast<std::uint64_t>(
      get_number(doc, "train", "seed", static_cast<double>(cfg.seed)));

  cfg.eval_mask_file = get_string(doc, "eval", "mask_file", "");

  cfg.explain_top_k = get_int(doc, "explain", "top_k", cfg.explain_top_k);
  cfg.explain_top_m = get_int(doc, "explain", "top_m", cfg.explain_top_m);
  cfg.griffin_lim_iterations =
      get_int(doc, "explain", "griffin_lim_iterations", cfg.griffin_lim_iterations);

  cfg.validate();
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["dsp"] = {{"sample_rate", dsp.sample_rate},     {"fft_size", dsp.fft_size},
              {"hop", dsp.hop},                     {"mel_bins", dsp.mel_bins},
              {"stft_bins", dsp.stft_bins()},       {"clip_seconds", dsp.clip_seconds},
              {"zscore_mean", dsp.zscore_mean},     {"zscore_std", dsp.zscore_std}};
  j["augment"] = {{"p_time_shift", augment.p_time_shift},
                  {"p_background", augment.p_background},
                  {"p_colored_noise", augment.p_colored_noise},
                  {"p_gain", augment.p_gain},
                  {"p_mixup", augment.p_mixup},
                  {"p_nocall", augment.p_nocall},
                  {"p_freq_mask", augment.p_freq_mask},
                  {"p_time_mask", augment.p_time_mask},
                  {"mixup_max_partners", augment.mixup_max_partners},
                  {"shift_window_seconds", augment.shift_window_seconds},
                  {"gain_range_db", {augment.gain_db_min, augment.gain_db_max}},
                  {"mask_max_fraction", augment.mask_max_fraction},
                  {"background_snr_db",
                   {augment.background_snr_db_min, augment.background_snr_db_max}},
                  {"colored_snr_db", {augment.colored_snr_db_min, augment.colored_snr_db_max}},
                  {"background_dir", augment.background_dir},
                  {"nocall_dir", augment.nocall_dir},
                  {"seed", augment.seed}};
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : backbone.layers) {
    layers.push_back({{"kernel_h", layer.kernel_h},
                      {"kernel_w", layer.kernel_w},
                      {"stride", layer.stride},
                      {"out_channels", layer.out_channels}});
  }
  j["backbone"] = {{"kind", backbone_kind},
                   {"store_path", embedding_store},
                   {"layers", layers},
                   {"seed", backbone.seed}};
  j["model"] = {{"classes", class_names}, {"per_class", per_class}};
  j["loss"] = {{"gamma_pos", loss.gamma_pos},
               {"gamma_neg", loss.gamma_neg},
               {"clip_margin", loss.clip_margin},
               {"lambda_ortho", loss.lambda_ortho}};
  j["train"] = {{"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"lr_prototypes", train.lr_prototypes},
                {"lr_head", train.lr_head},
                {"weight_decay", train.weight_decay},
                {"warmup_ratio", train.warmup_ratio},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"eps_adam", train.eps_adam},
                {"seed", train.seed}};
  j["eval"] = {{"mask_file", eval_mask_file}};
  j["explain"] = {{"top_k", explain_top_k},
                  {"top_m", explain_top_m},
                  {"griffin_lim_iterations", griffin_lim_iterations}};
  return j;
}

}  // namespace protosound
