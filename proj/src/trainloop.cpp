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

#include "trident/trainloop.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "trident/parallel.hpp"

namespace trident::train {

namespace fs = std::filesystem;

Roles roles_for(datagen::DomainTag domain) {
  if (domain == datagen::DomainTag::Source) return {"gen_s", "gen_t", "d_t"};
  return {"gen_t", "gen_s", "d_s"};
}

namespace {

void add_term(FlowOutput& out, const std::string& name, Var<float> term) {
  out.report.put(name, static_cast<double>(term.item()));
  out.terms.emplace_back(name, std::move(term));
}

// Resolve the role table against a concrete bundle. Both flows go through
// this, so the dispatch declaration is the single source of truth for which
// generator reconstructs and which discriminator judges the translation.
struct BoundRoles {
  nets::Generator<float>& reconstructor;
  nets::Generator<float>& translator;
  nets::Discriminator<float>& adv_disc;
};

BoundRoles bind_roles(ModelBundle<float>& bundle, datagen::DomainTag domain) {
  const Roles r = roles_for(domain);
  auto gen = [&](const char* name) -> nets::Generator<float>& {
    return std::string(name) == "gen_s" ? bundle.gen_s : bundle.gen_t;
  };
  auto disc = [&](const char* name) -> nets::Discriminator<float>& {
    return std::string(name) == "d_s" ? bundle.d_s : bundle.d_t;
  };
  return {gen(r.reconstructor), gen(r.translator), disc(r.adv_discriminator)};
}

// Whether the translated view is needed at all for this flow.
bool need_translation(const losses::LossWeights& w, bool source_flow, bool aug_on, bool stage2) {
  const double adv = source_flow ? w.adv_s2t : w.adv_t2s;
  const double sc = source_flow ? w.sc_s : w.sc_t;
  const double back_seg = source_flow ? w.seg_s2t : (stage2 ? w.seg_t2s_hat : 0.0);
  return adv > 0 || w.percep_trans > 0 || (aug_on && (sc > 0 || back_seg > 0));
}

}  // namespace

FlowOutput forward_source(ModelBundle<float>& bundle, const nets::FeatNet<float>& featnet,
                          const Batch& x_s, const LabelBatch& y_s, const TrainConfig& cfg,
                          int iter) {
  const auto& w = cfg.weights;
  const bool aug_on = iter >= cfg.aug_enable_iter;
  const bool detached = iter < cfg.detach_until_iter;
  const int H = x_s.shape[2], W = x_s.shape[3];

  FlowOutput out;
  Var<float> x = Var<float>::leaf(x_s);

  const bool want_recon = w.rec_s > 0 || w.percep_rec > 0;
  const bool want_trans = need_translation(w, true, aug_on, cfg.stage == 2);
  const bool want_sc = aug_on && w.sc_s > 0;
  const bool want_prob = w.seg_s > 0;
  if (!(want_recon || want_trans || want_prob || want_sc)) return out;

  Var<float> f = bundle.enc(x);
  Var<float> f_gen = detached ? f.detach() : f;

  const BoundRoles roles = bind_roles(bundle, datagen::DomainTag::Source);
  Var<float> recon, trans;
  if (want_recon) recon = roles.reconstructor(f_gen);
  if (want_trans) {
    trans = roles.translator(f_gen);
    out.aug_view = trans;
  }

  if (w.rec_s > 0)
    add_term(out, "rec_s",
             losses::weighted_recon_loss(recon, x, losses::edge_weight_batch(x_s, cfg.tau_edge, cfg.eta_edge)));
  if (w.adv_s2t > 0) add_term(out, "adv_s2t", losses::lsgan_g_loss(roles.adv_disc, trans));

  Var<float> mid;
  if (want_prob) {
    auto [m, prob] = bundle.seg(f, H, W);
    mid = m;
    bool all_ignored = false;
    add_term(out, "seg_s", losses::seg_ce_loss(prob, y_s, datagen::kIgnoreIndex, &all_ignored));
    out.all_ignored_warning |= all_ignored;
  } else if (want_sc) {
    mid = bundle.seg.features(f);
  }

  if (aug_on && (w.sc_s > 0 || w.seg_s2t > 0)) {
    Var<float> f_aug = bundle.enc(trans);
    if (w.seg_s2t > 0) {
      auto [mid_aug, prob_aug] = bundle.seg(f_aug, H, W);
      if (w.sc_s > 0) add_term(out, "sc_s", losses::semantic_consistency_loss(mid_aug, mid));
      bool all_ignored = false;
      // The s2t view shares the source ground truth.
      add_term(out, "seg_s2t", losses::seg_ce_loss(prob_aug, y_s, datagen::kIgnoreIndex, &all_ignored));
      out.all_ignored_warning |= all_ignored;
    } else {
      Var<float> mid_aug = bundle.seg.features(f_aug);
      add_term(out, "sc_s", losses::semantic_consistency_loss(mid_aug, mid));
    }
  }

  if (w.percep_rec > 0) add_term(out, "percep_rec_s", losses::perceptual_loss(featnet, recon, x));
  if (w.percep_trans > 0) add_term(out, "percep_trans_s", losses::perceptual_loss(featnet, trans, x));
  return out;
}

FlowOutput forward_target(ModelBundle<float>& bundle, const nets::FeatNet<float>& featnet,
                          const Batch& x_t, const LabelBatch* pseudo, const TrainConfig& cfg,
                          int iter) {
  const auto& w = cfg.weights;
  const bool stage2 = cfg.stage == 2;
  if (stage2 && !pseudo) throw ConfigError("stage 2 target flow requires pseudo labels");
  if (!stage2 && pseudo) throw ConfigError("stage 1 target flow must not receive labels");
  const bool aug_on = iter >= cfg.aug_enable_iter;
  const bool detached = iter < cfg.detach_until_iter;
  const int H = x_t.shape[2], W = x_t.shape[3];

  FlowOutput out;
  Var<float> x = Var<float>::leaf(x_t);

  const bool want_recon = w.rec_t > 0 || w.percep_rec > 0;
  const bool want_trans = need_translation(w, false, aug_on, stage2);
  const bool want_sc = aug_on && w.sc_t > 0;
  const bool want_prob = stage2 && w.seg_t_hat > 0;
  if (!(want_recon || want_trans || want_prob || want_sc)) return out;

  Var<float> f = bundle.enc(x);
  Var<float> f_gen = detached ? f.detach() : f;

  // Roles switched: G^t reconstructs the target image, G^s translates
  // towards the source domain and is judged by D^s.
  const BoundRoles roles = bind_roles(bundle, datagen::DomainTag::Target);
  Var<float> recon, trans;
  if (want_recon) recon = roles.reconstructor(f_gen);
  if (want_trans) {
    trans = roles.translator(f_gen);
    out.aug_view = trans;
  }

  if (w.rec_t > 0)
    add_term(out, "rec_t",
             losses::weighted_recon_loss(recon, x, losses::edge_weight_batch(x_t, cfg.tau_edge, cfg.eta_edge)));
  if (w.adv_t2s > 0) add_term(out, "adv_t2s", losses::lsgan_g_loss(roles.adv_disc, trans));

  Var<float> mid;
  if (want_prob) {
    auto [m, prob] = bundle.seg(f, H, W);
    mid = m;
    bool all_ignored = false;
    add_term(out, "seg_t_hat", losses::seg_ce_loss(prob, *pseudo, datagen::kIgnoreIndex, &all_ignored));
    out.all_ignored_warning |= all_ignored;
  } else if (want_sc) {
    mid = bundle.seg.features(f);
  }

  const bool want_back_seg = stage2 && w.seg_t2s_hat > 0;
  if (aug_on && (w.sc_t > 0 || want_back_seg)) {
    Var<float> f_aug = bundle.enc(trans);
    if (want_back_seg) {
      auto [mid_aug, prob_aug] = bundle.seg(f_aug, H, W);
      if (w.sc_t > 0) add_term(out, "sc_t", losses::semantic_consistency_loss(mid_aug, mid));
      bool all_ignored = false;
      // The t2s view enjoys the same pseudo label.
      add_term(out, "seg_t2s_hat",
               losses::seg_ce_loss(prob_aug, *pseudo, datagen::kIgnoreIndex, &all_ignored));
      out.all_ignored_warning |= all_ignored;
    } else {
      Var<float> mid_aug = bundle.seg.features(f_aug);
      add_term(out, "sc_t", losses::semantic_consistency_loss(mid_aug, mid));
    }
  }

  if (w.percep_rec > 0) add_term(out, "percep_rec_t", losses::perceptual_loss(featnet, recon, x));
  if (w.percep_trans > 0) add_term(out, "percep_trans_t", losses::perceptual_loss(featnet, trans, x));
  return out;
}

DiscReport discriminator_step(ModelBundle<float>& bundle, optim::Adam<float>& adam_d,
                              const Batch& real_s, const Batch& real_t, const Var<float>& fake_t2s,
                              const Var<float>& fake_s2t, const TrainConfig& cfg, double lr_d) {
  DiscReport rep;
  const bool train_ds = cfg.weights.adv_t2s > 0 && fake_t2s.valid();
  const bool train_dt = cfg.weights.adv_s2t > 0 && fake_s2t.valid();
  if (!train_ds && !train_dt) return rep;

  for (auto& [name, p] : adam_d.params) p.zero_grad();
  Var<float> total;
  if (train_ds) {
    Var<float> l = losses::lsgan_d_loss(bundle.d_s, Var<float>::leaf(real_s), fake_t2s);
    rep.d_s = static_cast<double>(l.item());
    total = l;
  }
  if (train_dt) {
    Var<float> l = losses::lsgan_d_loss(bundle.d_t, Var<float>::leaf(real_t), fake_s2t);
    rep.d_t = static_cast<double>(l.item());
    total = total.valid() ? ops::add(total, l) : l;
  }
  if (!std::isfinite(rep.d_s) || !std::isfinite(rep.d_t))
    throw NumericError("non-finite discriminator loss");
  total.backward();
  adam_d.step(lr_d);
  rep.stepped = true;
  return rep;
}

// ---------------------------------------------------------------------------
// Bundle / checkpoint plumbing.
// ---------------------------------------------------------------------------
std::unique_ptr<ModelBundle<float>> make_bundle(const TrainConfig& cfg) {
  nets::ArchConfig arch;
  arch.num_classes = cfg.num_classes;
  return init_bundle<float>(arch, cfg.seed);
}

void load_params_into(ModelBundle<float>& bundle, const CheckpointData& ckpt) {
  if (ckpt.params.size() != bundle.store.size())
    throw CheckpointError("checkpoint layout mismatch: parameter count differs");
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& [name, tensor] = ckpt.params[i];
    const auto& [want_name, var] = bundle.store.at(i);
    if (name != want_name || tensor.shape != var.value().shape)
      throw CheckpointError("checkpoint layout mismatch at parameter " + name);
    const_cast<Var<float>&>(var).value() = tensor;
  }
}

CheckpointData snapshot_params(const ModelBundle<float>& bundle) {
  CheckpointData data;
  for (std::size_t i = 0; i < bundle.store.size(); ++i) {
    const auto& [name, var] = bundle.store.at(i);
    data.params.emplace_back(name, var.value());
  }
  return data;
}

Tensor<float> predict_probs(ModelBundle<float>& bundle, const Batch& images) {
  const int H = images.shape[2], W = images.shape[3];
  auto [mid, prob] = bundle.seg(bundle.enc(Var<float>::leaf(images)), H, W);
  return prob.value();
}

// ---------------------------------------------------------------------------
// The training loop.
// ---------------------------------------------------------------------------
namespace {

struct BatchPair {
  Batch xs, xt;
  LabelBatch ys, yt;
  bool yt_valid = false;
};

// RNG consumption order is fixed (per sample: index, crop dy, crop dx, flip)
// so a resumed run replays the identical data stream.
BatchPair sample_batches(const datagen::Dataset& data, const TrainConfig& cfg, Rng& rng,
                         bool target_labels) {
  const int B = cfg.batch_size;
  BatchPair out;
  out.xs = Batch({B, 3, cfg.crop_h, cfg.crop_w});
  out.xt = Batch({B, 3, cfg.crop_h, cfg.crop_w});
  out.ys = LabelBatch({B, cfg.crop_h, cfg.crop_w});
  out.yt = LabelBatch({B, cfg.crop_h, cfg.crop_w});
  out.yt_valid = target_labels;

  auto draw = [&](const std::vector<datagen::StoredSample>& split, Batch& xb, LabelBatch* yb, int b) {
    const int idx = rng.uniform_int(0, static_cast<int>(split.size()) - 1);
    datagen::Sample s = data.decode(split[static_cast<std::size_t>(idx)]);
    datagen::Sample crop = datagen::random_crop(s, cfg.crop_h, cfg.crop_w, rng);
    if (cfg.hflip && rng.bernoulli(0.5)) datagen::hflip_inplace(crop);
    std::copy(crop.image.data.begin(), crop.image.data.end(),
              xb.data.begin() + static_cast<std::size_t>(b) * crop.image.numel());
    if (yb) {
      if (!crop.label) throw datagen::DataError("split sample is missing a label");
      std::copy(crop.label->data.begin(), crop.label->data.end(),
                yb->data.begin() + static_cast<std::size_t>(b) * crop.label->numel());
    }
  };
  for (int b = 0; b < B; ++b) draw(data.source, out.xs, &out.ys, b);
  for (int b = 0; b < B; ++b) draw(data.target, out.xt, out.yt_valid ? &out.yt : nullptr, b);
  return out;
}

std::vector<std::pair<std::string, Var<float>>> opt_params(const ParamStore<float>& store,
                                                           std::initializer_list<const char*> prefixes) {
  std::vector<std::pair<std::string, Var<float>>> out;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& [name, v] = store.at(i);
    for (const char* p : prefixes)
      if (name.rfind(p, 0) == 0) {
        out.emplace_back(name, v);
        break;
      }
  }
  return out;
}

void write_metrics_header(std::ostream& os) {
  os << "iter,lr_seg,lr_gen";
  for (const auto& n : losses::loss_names()) os << "," << n;
  os << ",d_s,d_t,total\n";
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const datagen::Dataset& data, const fs::path& out_dir) {
  cfg.validate();
  if (cfg.threads > 0) set_compute_threads(cfg.threads);
  if (data.source.empty() || data.target.empty()) throw datagen::DataError("dataset has empty splits");
  const bool stage2 = cfg.stage == 2;
  if (stage2 && data.target.front().label.empty())
    throw ConfigError("stage 2 requires target pseudo labels (load with pseudo_dir)");

  fs::create_directories(out_dir);

  auto bundle = make_bundle(cfg);
  nets::FeatNet<float> featnet(kFeatNetSeed);

  auto sgd_params = opt_params(bundle->store, {"enc.", "seg."});
  auto adam_g_params = opt_params(bundle->store, {"gen_s.", "gen_t."});
  auto adam_d_params = opt_params(bundle->store, {"d_s.", "d_t."});
  optim::SgdMomentum<float> sgd(sgd_params, cfg.sgd_momentum);
  optim::Adam<float> adam_g(adam_g_params, cfg.adam_beta1, cfg.adam_beta2);
  optim::Adam<float> adam_d(adam_d_params, cfg.adam_beta1, cfg.adam_beta2);

  Rng rng_data = Rng::derive(cfg.seed, 0xda7a);
  int start_iter = 0;
  std::vector<std::pair<std::string, double>> averages;
  for (const auto& name : losses::loss_names()) averages.emplace_back(name, 0.0);
  averages.emplace_back("d_s", 0.0);
  averages.emplace_back("d_t", 0.0);
  averages.emplace_back("total", 0.0);

  auto opt_state_all = [&] {
    std::vector<std::pair<std::string, Tensor<float>>> st;
    for (auto& s : sgd.state("sgd")) st.push_back(std::move(s));
    for (auto& s : adam_g.state("adam_g")) st.push_back(std::move(s));
    for (auto& s : adam_d.state("adam_d")) st.push_back(std::move(s));
    return st;
  };

  if (!cfg.resume.empty()) {
    CheckpointData ckpt = load_checkpoint(cfg.resume);
    load_params_into(*bundle, ckpt);
    // Destination slots in exactly the order opt_state_all() serializes.
    std::vector<std::pair<std::string, Tensor<float>*>> slots;
    for (std::size_t i = 0; i < sgd.params.size(); ++i)
      slots.emplace_back("sgd.v." + sgd.params[i].first, &sgd.velocity[i]);
    for (std::size_t i = 0; i < adam_g.params.size(); ++i) {
      slots.emplace_back("adam_g.m." + adam_g.params[i].first, &adam_g.m[i]);
      slots.emplace_back("adam_g.v." + adam_g.params[i].first, &adam_g.v[i]);
    }
    for (std::size_t i = 0; i < adam_d.params.size(); ++i) {
      slots.emplace_back("adam_d.m." + adam_d.params[i].first, &adam_d.m[i]);
      slots.emplace_back("adam_d.v." + adam_d.params[i].first, &adam_d.v[i]);
    }
    if (ckpt.opt_state.size() != slots.size())
      throw CheckpointError("checkpoint layout mismatch: optimizer state count differs");
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (ckpt.opt_state[k].first != slots[k].first ||
          ckpt.opt_state[k].second.shape != slots[k].second->shape)
        throw CheckpointError("checkpoint layout mismatch in optimizer state");
      *slots[k].second = ckpt.opt_state[k].second;
    }
    for (const auto& [name, v] : ckpt.scalars) {
      if (name == "adam_g.t") adam_g.t = static_cast<std::int64_t>(v);
      else if (name == "adam_d.t") adam_d.t = static_cast<std::int64_t>(v);
      else if (name.rfind("avg.", 0) == 0) {
        for (auto& [an, av] : averages)
          if (name == "avg." + an) av = v;
      }
    }
    rng_data.set_state(ckpt.rng_state);
    start_iter = static_cast<int>(ckpt.iteration);
  } else if (!cfg.init_checkpoint.empty()) {
    load_params_into(*bundle, load_checkpoint(cfg.init_checkpoint));
  }

  const fs::path metrics_path = out_dir / "metrics.csv";
  const bool fresh_metrics = start_iter == 0 || !fs::exists(metrics_path);
  std::ofstream metrics(metrics_path, fresh_metrics ? std::ios::trunc : std::ios::app);
  if (!metrics) throw datagen::DataError("cannot open metrics log: " + metrics_path.string());
  if (fresh_metrics) write_metrics_header(metrics);

  auto save_state = [&](int next_iter, const fs::path& path) {
    CheckpointData ckpt = snapshot_params(*bundle);
    ckpt.iteration = static_cast<std::uint64_t>(next_iter);
    ckpt.rng_state = rng_data.state();
    ckpt.opt_state = opt_state_all();
    ckpt.scalars.emplace_back("adam_g.t", static_cast<double>(adam_g.t));
    ckpt.scalars.emplace_back("adam_d.t", static_cast<double>(adam_d.t));
    for (const auto& [name, v] : averages) ckpt.scalars.emplace_back("avg." + name, v);
    save_checkpoint(path, ckpt);
  };

  bool warned_all_ignored = false;
  char namebuf[64];
  for (int iter = start_iter; iter < cfg.max_iters; ++iter) {
    const double lr_seg = optim::poly_decay(cfg.sgd_lr, iter, cfg.max_iters, cfg.poly_power);
    const double lr_gen = optim::poly_decay(cfg.adam_lr_g, iter, cfg.max_iters, cfg.poly_power);
    const double lr_d = optim::poly_decay(cfg.adam_lr_d, iter, cfg.max_iters, cfg.poly_power);

    BatchPair batch = sample_batches(data, cfg, rng_data, stage2);

    bundle->store.zero_grads();
    FlowOutput fs_ = forward_source(*bundle, featnet, batch.xs, batch.ys, cfg, iter);
    FlowOutput ft = forward_target(*bundle, featnet, batch.xt, batch.yt_valid ? &batch.yt : nullptr,
                                   cfg, iter);
    if ((fs_.all_ignored_warning || ft.all_ignored_warning) && !warned_all_ignored) {
      warned_all_ignored = true;
      std::cerr << "warning: a segmentation batch had every pixel ignored\n";
    }

    std::vector<std::pair<std::string, Var<float>>> terms = fs_.terms;
    terms.insert(terms.end(), ft.terms.begin(), ft.terms.end());
    for (const auto& [name, term] : terms)
      if (!std::isfinite(term.item()))
        throw NumericError("non-finite loss term '" + name + "' at iteration " + std::to_string(iter));

    double total_value = 0;
    if (!terms.empty()) {
      Var<float> total = losses::total_loss(terms, cfg.weights);
      total_value = static_cast<double>(total.item());
      if (!std::isfinite(total_value))
        throw NumericError("non-finite total loss at iteration " + std::to_string(iter));
      total.backward();
      sgd.step(lr_seg);
      adam_g.step(lr_gen);
    }

    DiscReport disc = discriminator_step(*bundle, adam_d, batch.xs, batch.xt, ft.aug_view,
                                         fs_.aug_view, cfg, lr_d);

    metrics << iter << "," << lr_seg << "," << lr_gen;
    auto put_avg = [&](const std::string& name, double v) {
      for (auto& [an, av] : averages)
        if (an == name) av = 0.98 * av + 0.02 * v;
    };
    for (const auto& name : losses::loss_names()) {
      double v = 0;
      if (fs_.has(name)) v = fs_.report.get(name);
      else if (ft.has(name)) v = ft.report.get(name);
      metrics << "," << v;
      put_avg(name, v);
    }
    metrics << "," << disc.d_s << "," << disc.d_t << "," << total_value << "\n";
    put_avg("d_s", disc.d_s);
    put_avg("d_t", disc.d_t);
    put_avg("total", total_value);

    if ((iter + 1) % cfg.checkpoint_every == 0 && iter + 1 < cfg.max_iters) {
      std::snprintf(namebuf, sizeof namebuf, "ckpt_%06d.bin", iter + 1);
      save_state(iter + 1, out_dir / namebuf);
    }
  }
  metrics.flush();

  const fs::path final_path = out_dir / "ckpt_final.bin";
  save_state(cfg.max_iters, final_path);

  TrainResult res;
  res.final_param_digest = bundle->param_digest();
  res.iterations_run = cfg.max_iters - start_iter;
  res.metrics_path = metrics_path;
  res.final_checkpoint = final_path;
  res.running_averages = averages;
  return res;
}

}  // namespace trident::train
