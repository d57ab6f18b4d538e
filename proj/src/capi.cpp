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

#include "trident/capi.h"

#include <cstring>
#include <fstream>

#include "trident/eval.hpp"
#include "trident/pseudolabel.hpp"
#include "trident/trainloop.hpp"

#define TRIDENT_EXPORT __attribute__((visibility("default")))

namespace {

namespace fs = std::filesystem;
using trident::TrainConfig;

thread_local std::string g_last_error;

trident_status fail(trident_status st, const std::string& msg) {
  g_last_error = msg;
  return st;
}

template <class F>
trident_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return TRIDENT_OK;
  } catch (const trident::train::NumericError& e) {
    return fail(TRIDENT_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(TRIDENT_ERR_DATA, e.what());
  } catch (...) {
    return fail(TRIDENT_ERR_DATA, "unknown error");
  }
}

void write_run_echo(const TrainConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "run.txt", std::ios::trunc);
  if (!out) throw trident::datagen::DataError("cannot write run.txt in " + out_dir.string());
  out << trident::serialize_config(cfg);
}

trident::datagen::GenConfig gen_config_of(const TrainConfig& cfg) {
  trident::datagen::GenConfig gen;
  gen.seed = cfg.data_seed;
  gen.canvas_h = cfg.canvas_h;
  gen.canvas_w = cfg.canvas_w;
  gen.num_classes = cfg.num_classes;
  gen.source_count = cfg.source_count;
  gen.target_count = cfg.target_count;
  gen.eval_count = cfg.eval_count;
  return gen;
}

// Bundle with parameters from a checkpoint; class count from the dataset.
std::unique_ptr<trident::ModelBundle<float>> bundle_from(const TrainConfig& cfg,
                                                         const char* checkpoint) {
  auto bundle = trident::train::make_bundle(cfg);
  trident::train::load_params_into(*bundle, trident::load_checkpoint(checkpoint));
  return bundle;
}

TrainConfig with_manifest_classes(const TrainConfig& cfg) {
  TrainConfig out = cfg;
  const auto manifest = trident::datagen::load_manifest(cfg.data_dir);
  out.num_classes = manifest.config.num_classes;
  return out;
}

}  // namespace

extern "C" {

struct trident_config {
  TrainConfig cfg;
};

TRIDENT_EXPORT const char* trident_version(void) { return "0.1.0"; }

TRIDENT_EXPORT const char* trident_last_error(void) { return g_last_error.c_str(); }

TRIDENT_EXPORT trident_status trident_config_create(trident_config** out) {
  if (!out) return fail(TRIDENT_ERR_USAGE, "null output pointer");
  return guarded([&] { *out = new trident_config{}; });
}

TRIDENT_EXPORT trident_status trident_config_load(const char* path, trident_config** out) {
  if (!path || !out) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] { *out = new trident_config{trident::parse_config_file(path)}; });
}

TRIDENT_EXPORT trident_status trident_config_set(trident_config* cfg, const char* key,
                                                 const char* value) {
  if (!cfg || !key || !value) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] { trident::apply_override(cfg->cfg, key, value); });
}

TRIDENT_EXPORT trident_status trident_config_get(const trident_config* cfg, const char* key,
                                                 char* buf, unsigned long bufsize) {
  if (!cfg || !key || !buf || bufsize == 0) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] {
    const std::string text = trident::serialize_config(cfg->cfg);
    const std::string needle = std::string(key) + " = ";
    const auto pos = text.find(needle);
    if (pos == std::string::npos || (pos != 0 && text[pos - 1] != '\n'))
      throw trident::ConfigError("unknown config key: " + std::string(key));
    const auto end = text.find('\n', pos);
    const std::string value = text.substr(pos + needle.size(), end - pos - needle.size());
    if (value.size() + 1 > bufsize) throw trident::ConfigError("buffer too small for value");
    std::memcpy(buf, value.c_str(), value.size() + 1);
  });
}

TRIDENT_EXPORT trident_status trident_config_apply_preset(trident_config* cfg, const char* preset) {
  if (!cfg || !preset) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] { trident::apply_preset(cfg->cfg, preset); });
}

TRIDENT_EXPORT trident_status trident_config_write(const trident_config* cfg, const char* path) {
  if (!cfg || !path) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw trident::datagen::DataError("cannot write config: " + std::string(path));
    out << trident::serialize_config(cfg->cfg);
  });
}

TRIDENT_EXPORT void trident_config_free(trident_config* cfg) { delete cfg; }

TRIDENT_EXPORT trident_status trident_gen_data(const trident_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] {
    if (cfg->cfg.threads > 0) trident::set_compute_threads(cfg->cfg.threads);
    trident::datagen::build_dataset(gen_config_of(cfg->cfg), out_dir);
    write_run_echo(cfg->cfg, out_dir);
  });
}

TRIDENT_EXPORT trident_status trident_train(const trident_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] {
    TrainConfig tc = with_manifest_classes(cfg->cfg);
    tc.validate();
    std::optional<fs::path> pseudo;
    if (tc.stage == 2) pseudo = tc.pseudo_dir;
    const auto data = trident::datagen::load_dataset(tc.data_dir, /*with_eval=*/false, pseudo);
    write_run_echo(tc, out_dir);
    trident::train::train(tc, data, out_dir);
  });
}

TRIDENT_EXPORT trident_status trident_pseudo_label(const trident_config* cfg,
                                                   const char* checkpoint, const char* out_dir) {
  if (!cfg || !checkpoint || !out_dir) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] {
    TrainConfig tc = with_manifest_classes(cfg->cfg);
    if (tc.threads > 0) trident::set_compute_threads(tc.threads);
    const auto data = trident::datagen::load_dataset(tc.data_dir, /*with_eval=*/false);
    auto bundle = bundle_from(tc, checkpoint);
    const auto set = trident::pseudolabel::generate(*bundle, data, tc.eval_batch);
    trident::pseudolabel::write_pseudo_labels(set, out_dir);
    write_run_echo(tc, out_dir);
  });
}

TRIDENT_EXPORT trident_status trident_evaluate(const trident_config* cfg, const char* checkpoint,
                                               const char* out_dir) {
  if (!cfg || !checkpoint || !out_dir) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] {
    TrainConfig tc = with_manifest_classes(cfg->cfg);
    if (tc.threads > 0) trident::set_compute_threads(tc.threads);
    const auto data = trident::datagen::load_dataset(tc.data_dir);
    auto bundle = bundle_from(tc, checkpoint);
    const auto out = trident::eval::evaluate_segmenter(*bundle, data, data.eval, tc.eval_batch);
    trident::eval::emit_iou_csv(fs::path(out_dir) / "iou.csv", out.iou);
    write_run_echo(tc, out_dir);
  });
}

TRIDENT_EXPORT trident_status trident_analyze(const trident_config* cfg, const char* checkpoint,
                                              const char* out_dir) {
  if (!cfg || !checkpoint || !out_dir) return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] {
    TrainConfig tc = with_manifest_classes(cfg->cfg);
    if (tc.threads > 0) trident::set_compute_threads(tc.threads);
    const auto data = trident::datagen::load_dataset(tc.data_dir);
    auto bundle = bundle_from(tc, checkpoint);
    // balanced source subset against the full eval split
    std::vector<trident::datagen::StoredSample> src(
        data.source.begin(), data.source.begin() + std::min(data.source.size(), data.eval.size()));
    const auto stats = trident::eval::domain_gap_stats(*bundle, data, src, data.eval, tc.eval_batch);
    trident::eval::emit_ccd_csv(fs::path(out_dir) / "ccd.csv", stats);
    trident::eval::emit_projection_csv(fs::path(out_dir) / "projection.csv", stats);
    trident::eval::emit_projection_svg(fs::path(out_dir) / "projection.svg", stats);
    write_run_echo(tc, out_dir);
  });
}

TRIDENT_EXPORT trident_status trident_translate(const trident_config* cfg,
                                                const char* adapted_checkpoint,
                                                const char* source_only_checkpoint,
                                                const char* out_dir) {
  if (!cfg || !adapted_checkpoint || !source_only_checkpoint || !out_dir)
    return fail(TRIDENT_ERR_USAGE, "null argument");
  return guarded([&] {
    TrainConfig tc = with_manifest_classes(cfg->cfg);
    if (tc.threads > 0) trident::set_compute_threads(tc.threads);
    const auto data = trident::datagen::load_dataset(tc.data_dir);
    auto adapted = bundle_from(tc, adapted_checkpoint);
    auto source_only = bundle_from(tc, source_only_checkpoint);
    const auto assay = trident::eval::translation_assay(*adapted, *source_only, data, tc);
    trident::eval::emit_translation_csv(fs::path(out_dir) / "translation.csv", assay);

    // a few example translations for visual inspection
    const fs::path img_dir = fs::path(out_dir) / "translated";
    fs::create_directories(img_dir);
    const int n_dump = static_cast<int>(std::min<std::size_t>(4, std::min(data.eval.size(), data.source.size())));
    char name[64];
    for (int i = 0; i < n_dump; ++i) {
      trident::datagen::Sample ev = data.decode(data.eval[static_cast<std::size_t>(i)]);
      trident::Tensor<float> one({1, 3, ev.image.shape[1], ev.image.shape[2]});
      std::copy(ev.image.data.begin(), ev.image.data.end(), one.data.begin());
      trident::Tensor<float> t2s = trident::eval::translate_batch(*adapted, one, true);
      trident::Tensor<float> img({3, ev.image.shape[1], ev.image.shape[2]});
      std::copy(t2s.data.begin(), t2s.data.end(), img.data.begin());
      std::snprintf(name, sizeof name, "t2s_%02d.ppm", i);
      trident::datagen::write_image_ppm(img_dir / name, img);

      trident::datagen::Sample sr = data.decode(data.source[static_cast<std::size_t>(i)]);
      std::copy(sr.image.data.begin(), sr.image.data.end(), one.data.begin());
      trident::Tensor<float> s2t = trident::eval::translate_batch(*adapted, one, false);
      std::copy(s2t.data.begin(), s2t.data.end(), img.data.begin());
      std::snprintf(name, sizeof name, "s2t_%02d.ppm", i);
      trident::datagen::write_image_ppm(img_dir / name, img);
    }
    write_run_echo(tc, out_dir);
  });
}

}  // extern "C"
