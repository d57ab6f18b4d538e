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

// Command-line front end. Talks to the pipeline exclusively through the C
// API in trident/capi.h.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trident/capi.h"

namespace {

struct ConfigDeleter {
  void operator()(trident_config* c) const { trident_config_free(c); }
};
using ConfigPtr = std::unique_ptr<trident_config, ConfigDeleter>;

int report(trident_status st) {
  if (st != TRIDENT_OK) std::fprintf(stderr, "error: %s\n", trident_last_error());
  return static_cast<int>(st);
}

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string seed;
  std::string data_dir;
};

void add_common(CLI::App* cmd, Common& c, bool with_data) {
  cmd->add_option("--config", c.config_path, "Config file (key = value lines)");
  cmd->add_option("--set", c.sets, "Override a config key, e.g. --set max_iters=100")
      ->take_all();
  cmd->add_option("--out", c.out_dir, "Output directory")->required();
  cmd->add_option("--seed", c.seed, "Seed override");
  if (with_data) cmd->add_option("--data", c.data_dir, "Dataset directory (sets data_dir)");
}

// Builds the config handle from file + overrides. Returns nonzero status on
// failure; *out receives the handle otherwise.
trident_status build_config(const Common& c, bool seed_is_data_seed, ConfigPtr& out) {
  trident_config* raw = nullptr;
  trident_status st =
      c.config_path.empty() ? trident_config_create(&raw) : trident_config_load(c.config_path.c_str(), &raw);
  if (st != TRIDENT_OK) return st;
  out.reset(raw);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return TRIDENT_ERR_USAGE;
    }
    st = trident_config_set(raw, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != TRIDENT_OK) return st;
  }
  if (!c.seed.empty()) {
    st = trident_config_set(raw, "seed", c.seed.c_str());
    if (st == TRIDENT_OK && seed_is_data_seed) st = trident_config_set(raw, "data_seed", c.seed.c_str());
    if (st != TRIDENT_OK) return st;
  }
  if (!c.data_dir.empty()) {
    st = trident_config_set(raw, "data_dir", c.data_dir.c_str());
    if (st != TRIDENT_OK) return st;
  }
  return TRIDENT_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trident: unsupervised domain adaptation for semantic segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", trident_version());

  Common c_gen, c_train, c_pseudo, c_eval, c_analyze, c_translate, c_ablate;
  std::string stage, resume, init_ckpt, pseudo_dir, checkpoint, source_only, preset;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic two-domain dataset");
  add_common(gen, c_gen, false);

  auto* tr = app.add_subcommand("train", "Train (stage 1 warm-up or stage 2 self-training)");
  add_common(tr, c_train, true);
  tr->add_option("--stage", stage, "Training stage (1 or 2)");
  tr->add_option("--resume", resume, "Resume from a full-state checkpoint");
  tr->add_option("--init", init_ckpt, "Initialize parameters from a checkpoint");
  tr->add_option("--pseudo", pseudo_dir, "Pseudo-label directory (stage 2)");

  auto* pl = app.add_subcommand("pseudo-label", "Generate pseudo-labels for the target split");
  add_common(pl, c_pseudo, true);
  pl->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate per-class IoU on the target eval split");
  add_common(ev, c_eval, true);
  ev->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  auto* an = app.add_subcommand("analyze", "Feature-space domain-gap analysis (CCD, projection)");
  add_common(an, c_analyze, true);
  an->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  auto* tl = app.add_subcommand("translate", "Translation-quality assay via a source-only segmenter");
  add_common(tl, c_translate, true);
  tl->add_option("--checkpoint", checkpoint, "Adapted model checkpoint")->required();
  tl->add_option("--source-only", source_only, "Source-only segmenter checkpoint")->required();

  auto* ab = app.add_subcommand("ablate", "Train with an ablation preset (row1..row9)");
  add_common(ab, c_ablate, true);
  ab->add_option("--preset", preset, "Ablation preset name")->required();
  ab->add_option("--resume", resume, "Resume from a full-state checkpoint");
  ab->add_option("--init", init_ckpt, "Initialize parameters from a checkpoint");
  ab->add_option("--pseudo", pseudo_dir, "Pseudo-label directory (stage 2 presets)");

  CLI11_PARSE(app, argc, argv);

  ConfigPtr cfg;
  auto run_train = [&](const Common& common, const char* use_preset) {
    trident_status st = build_config(common, false, cfg);
    if (st != TRIDENT_OK) return report(st);
    if (use_preset) {
      st = trident_config_apply_preset(cfg.get(), use_preset);
      if (st != TRIDENT_OK) return report(st);
    }
    if (!stage.empty()) {
      st = trident_config_set(cfg.get(), "stage", stage.c_str());
      if (st != TRIDENT_OK) return report(st);
    }
    if (!resume.empty()) {
      st = trident_config_set(cfg.get(), "resume", resume.c_str());
      if (st != TRIDENT_OK) return report(st);
    }
    if (!init_ckpt.empty()) {
      st = trident_config_set(cfg.get(), "init_checkpoint", init_ckpt.c_str());
      if (st != TRIDENT_OK) return report(st);
    }
    if (!pseudo_dir.empty()) {
      st = trident_config_set(cfg.get(), "pseudo_dir", pseudo_dir.c_str());
      if (st != TRIDENT_OK) return report(st);
    }
    return report(trident_train(cfg.get(), common.out_dir.c_str()));
  };

  if (gen->parsed()) {
    trident_status st = build_config(c_gen, true, cfg);
    if (st != TRIDENT_OK) return report(st);
    return report(trident_gen_data(cfg.get(), c_gen.out_dir.c_str()));
  }
  if (tr->parsed()) return run_train(c_train, nullptr);
  if (ab->parsed()) return run_train(c_ablate, preset.c_str());
  if (pl->parsed()) {
    trident_status st = build_config(c_pseudo, false, cfg);
    if (st != TRIDENT_OK) return report(st);
    return report(trident_pseudo_label(cfg.get(), checkpoint.c_str(), c_pseudo.out_dir.c_str()));
  }
  if (ev->parsed()) {
    trident_status st = build_config(c_eval, false, cfg);
    if (st != TRIDENT_OK) return report(st);
    return report(trident_evaluate(cfg.get(), checkpoint.c_str(), c_eval.out_dir.c_str()));
  }
  if (an->parsed()) {
    trident_status st = build_config(c_analyze, false, cfg);
    if (st != TRIDENT_OK) return report(st);
    return report(trident_analyze(cfg.get(), checkpoint.c_str(), c_analyze.out_dir.c_str()));
  }
  if (tl->parsed()) {
    trident_status st = build_config(c_translate, false, cfg);
    if (st != TRIDENT_OK) return report(st);
    return report(trident_translate(cfg.get(), checkpoint.c_str(), source_only.c_str(),
                                    c_translate.out_dir.c_str()));
  }
  return TRIDENT_ERR_USAGE;
}
