// Copyright 2026 Trident Contributors
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
// limitations under the license.

#include "trident/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace trident {

namespace {

struct Field {
  const char* name;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

int parse_int(const std::string& v, const char* key) {
  try {
    std::size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError(std::string("bad integer for key '") + key + "': " + v);
  }
}

std::uint64_t parse_u64(const std::string& v, const char* key) {
  try {
    std::size_t pos = 0;
    const std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError(std::string("bad integer for key '") + key + "': " + v);
  }
}

double parse_double(const std::string& v, const char* key) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw ConfigError(std::string("bad number for key '") + key + "': " + v);
  }
}

bool parse_bool(const std::string& v, const char* key) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError(std::string("bad boolean for key '") + key + "': " + v);
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

#define INT_FIELD(key, member)                                                       \
  Field{key, [](TrainConfig& c, const std::string& v) { c.member = parse_int(v, key); }, \
        [](const TrainConfig& c) { return std::to_string(c.member); }}
#define U64_FIELD(key, member)                                                       \
  Field{key, [](TrainConfig& c, const std::string& v) { c.member = parse_u64(v, key); }, \
        [](const TrainConfig& c) { return std::to_string(c.member); }}
#define DBL_FIELD(key, member)                                                          \
  Field{key, [](TrainConfig& c, const std::string& v) { c.member = parse_double(v, key); }, \
        [](const TrainConfig& c) { return fmt_double(c.member); }}
#define BOOL_FIELD(key, member)                                                       \
  Field{key, [](TrainConfig& c, const std::string& v) { c.member = parse_bool(v, key); }, \
        [](const TrainConfig& c) { return c.member ? std::string("true") : std::string("false"); }}
#define STR_FIELD(key, member)                                              \
  Field{key, [](TrainConfig& c, const std::string& v) { c.member = v; },    \
        [](const TrainConfig& c) { return c.member; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      INT_FIELD("stage", stage),
      INT_FIELD("max_iters", max_iters),
      INT_FIELD("batch_size", batch_size),
      INT_FIELD("crop_h", crop_h),
      INT_FIELD("crop_w", crop_w),
      INT_FIELD("detach_until_iter", detach_until_iter),
      INT_FIELD("aug_enable_iter", aug_enable_iter),
      DBL_FIELD("lambda_rec_s", weights.rec_s),
      DBL_FIELD("lambda_rec_t", weights.rec_t),
      DBL_FIELD("lambda_adv_s2t", weights.adv_s2t),
      DBL_FIELD("lambda_adv_t2s", weights.adv_t2s),
      DBL_FIELD("lambda_sc_s", weights.sc_s),
      DBL_FIELD("lambda_sc_t", weights.sc_t),
      DBL_FIELD("lambda_seg_s", weights.seg_s),
      DBL_FIELD("lambda_seg_s2t", weights.seg_s2t),
      DBL_FIELD("lambda_seg_t_hat", weights.seg_t_hat),
      DBL_FIELD("lambda_seg_t2s_hat", weights.seg_t2s_hat),
      DBL_FIELD("lambda_percep_rec", weights.percep_rec),
      DBL_FIELD("lambda_percep_trans", weights.percep_trans),
      DBL_FIELD("sgd_lr", sgd_lr),
      DBL_FIELD("sgd_momentum", sgd_momentum),
      DBL_FIELD("adam_lr_g", adam_lr_g),
      DBL_FIELD("adam_lr_d", adam_lr_d),
      DBL_FIELD("adam_beta1", adam_beta1),
      DBL_FIELD("adam_beta2", adam_beta2),
      DBL_FIELD("poly_power", poly_power),
      DBL_FIELD("eta_edge", eta_edge),
      DBL_FIELD("tau_edge", tau_edge),
      U64_FIELD("seed", seed),
      INT_FIELD("checkpoint_every", checkpoint_every),
      BOOL_FIELD("hflip", hflip),
      INT_FIELD("threads", threads),
      STR_FIELD("data_dir", data_dir),
      STR_FIELD("pseudo_dir", pseudo_dir),
      STR_FIELD("init_checkpoint", init_checkpoint),
      STR_FIELD("resume", resume),
      U64_FIELD("data_seed", data_seed),
      INT_FIELD("canvas_h", canvas_h),
      INT_FIELD("canvas_w", canvas_w),
      INT_FIELD("num_classes", num_classes),
      INT_FIELD("source_count", source_count),
      INT_FIELD("target_count", target_count),
      INT_FIELD("eval_count", eval_count),
      INT_FIELD("eval_batch", eval_batch),
      INT_FIELD("assay_iters", assay_iters),
      INT_FIELD("assay_batch", assay_batch),
  };
  return f;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.name) return f;
  throw ConfigError("unknown config key: " + key);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  if (max_iters <= 0) throw ConfigError("max_iters must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (crop_h <= 0 || crop_w <= 0 || crop_h % 4 || crop_w % 4)
    throw ConfigError("crop dims must be positive multiples of 4");
  if (detach_until_iter < 0 || aug_enable_iter < detach_until_iter || max_iters < aug_enable_iter)
    throw ConfigError("require detach_until_iter <= aug_enable_iter <= max_iters");
  for (double l : {weights.rec_s, weights.rec_t, weights.adv_s2t, weights.adv_t2s, weights.sc_s,
                   weights.sc_t, weights.seg_s, weights.seg_s2t, weights.seg_t_hat,
                   weights.seg_t2s_hat, weights.percep_rec, weights.percep_trans})
    if (l < 0) throw ConfigError("loss weights must be >= 0");
  if (sgd_lr <= 0 || adam_lr_g <= 0 || adam_lr_d <= 0) throw ConfigError("learning rates must be positive");
  if (poly_power <= 0) throw ConfigError("poly_power must be positive");
  if (eta_edge < 0) throw ConfigError("eta_edge must be >= 0");
  if (num_classes < 2 || num_classes > 32) throw ConfigError("num_classes must be in [2, 32]");
  if (stage == 2 && pseudo_dir.empty()) throw ConfigError("stage 2 requires pseudo_dir");
  if (checkpoint_every <= 0) throw ConfigError("checkpoint_every must be positive");
}

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    find_field(key).set(cfg, val);
  }
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_override(TrainConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, value);
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.name << " = " << f.get(cfg) << "\n";
  return os.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.name);
  return out;
}

void apply_preset(TrainConfig& cfg, const std::string& preset) {
  losses::LossWeights off;
  off.rec_s = off.rec_t = off.adv_s2t = off.adv_t2s = off.sc_s = off.sc_t = 0;
  off.seg_s2t = off.seg_t_hat = off.seg_t2s_hat = off.percep_rec = off.percep_trans = 0;
  off.seg_s = 1.0;
  const losses::LossWeights defaults;

  losses::LossWeights w = off;
  int stage = 1;
  if (preset == "row1") {
  } else if (preset == "row2") {
    w.adv_s2t = defaults.adv_s2t;
    w.adv_t2s = defaults.adv_t2s;
  } else if (preset == "row3" || preset == "row4" || preset == "row5" || preset == "row6" ||
             preset == "row7" || preset == "row8") {
    w.adv_s2t = defaults.adv_s2t;
    w.adv_t2s = defaults.adv_t2s;
    w.rec_s = defaults.rec_s;
    w.rec_t = defaults.rec_t;
    if (preset != "row3") {
      w.percep_rec = defaults.percep_rec;
      w.percep_trans = defaults.percep_trans;
    }
    if (preset != "row3" && preset != "row4") {
      w.sc_s = defaults.sc_s;
      w.sc_t = defaults.sc_t;
    }
    if (preset == "row6" || preset == "row7" || preset == "row8") w.seg_s2t = defaults.seg_s2t;
    if (preset == "row7" || preset == "row8") {
      stage = 2;
      w.seg_t_hat = defaults.seg_t_hat;
    }
    if (preset == "row8") w.seg_t2s_hat = defaults.seg_t2s_hat;
  } else if (preset == "row9") {
    // Full stage 2 minus the back-fed terms.
    stage = 2;
    w = defaults;
    w.sc_s = w.sc_t = 0;
    w.seg_s2t = 0;
    w.seg_t2s_hat = 0;
  } else {
    throw ConfigError("unknown ablation preset: " + preset);
  }
  cfg.weights = w;
  cfg.stage = stage;
}

std::vector<std::string> preset_names() {
  return {"row1", "row2", "row3", "row4", "row5", "row6", "row7", "row8", "row9"};
}

}  // namespace trident
