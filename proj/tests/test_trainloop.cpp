#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "trident/eval.hpp"
#include "trident/optim.hpp"
#include "trident/trainloop.hpp"

using namespace trident;
using namespace trident::train;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  auto p = fs::temp_directory_path() / (std::string("trident_tl_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Tiny dataset + config for fast loop tests.
struct Fixture {
  fs::path data_dir;
  datagen::Dataset data;
  TrainConfig cfg;

  explicit Fixture(const char* tag) {
    data_dir = temp_dir(tag);
    datagen::GenConfig gen;
    gen.seed = 5;
    gen.canvas_h = gen.canvas_w = 16;
    gen.num_classes = 3;
    gen.source_count = 8;
    gen.target_count = 8;
    gen.eval_count = 4;
    datagen::build_dataset(gen, data_dir);
    data = datagen::load_dataset(data_dir);

    cfg.stage = 1;
    cfg.max_iters = 12;
    cfg.batch_size = 2;
    cfg.crop_h = cfg.crop_w = 16;
    cfg.detach_until_iter = 2;
    cfg.aug_enable_iter = 4;
    cfg.num_classes = 3;
    cfg.checkpoint_every = 6;
    cfg.seed = 21;
    cfg.data_dir = data_dir.string();
  }

  Batch source_batch(LabelBatch& labels) const {
    Batch x({2, 3, 16, 16});
    labels = LabelBatch({2, 16, 16});
    for (int b = 0; b < 2; ++b) {
      datagen::Sample s = data.decode(data.source[static_cast<std::size_t>(b)]);
      std::copy(s.image.data.begin(), s.image.data.end(), x.data.begin() + b * s.image.numel());
      std::copy(s.label->data.begin(), s.label->data.end(), labels.data.begin() + b * s.label->numel());
    }
    return x;
  }
  Batch target_batch() const {
    Batch x({2, 3, 16, 16});
    for (int b = 0; b < 2; ++b) {
      datagen::Sample s = data.decode(data.target[static_cast<std::size_t>(b)]);
      std::copy(s.image.data.begin(), s.image.data.end(), x.data.begin() + b * s.image.numel());
    }
    return x;
  }
};

double grad_norm(const ParamStore<float>& store, const char* prefix) {
  double acc = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& [name, v] = store.at(i);
    if (name.rfind(prefix, 0) != 0 || v.grad().data.empty()) continue;
    for (float g : v.grad().data) acc += static_cast<double>(g) * g;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("poly_decay endpoints and monotonicity") {
  CHECK(optim::poly_decay(2.5e-4, 0, 4000, 0.9) == 2.5e-4);
  CHECK(optim::poly_decay(2.5e-4, 4000, 4000, 0.9) == 0.0);
  double prev = 1e9;
  for (int i = 0; i <= 4000; ++i) {
    const double lr = optim::poly_decay(2.5e-4, i, 4000, 0.9);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK_THROWS(optim::poly_decay(1.0, -1, 10, 0.9));
  CHECK_THROWS(optim::poly_decay(1.0, 11, 10, 0.9));
}

TEST_CASE("role dispatch table") {
  const Roles src = roles_for(datagen::DomainTag::Source);
  CHECK(std::string(src.reconstructor) == "gen_s");
  CHECK(std::string(src.translator) == "gen_t");
  CHECK(std::string(src.adv_discriminator) == "d_t");
  const Roles tgt = roles_for(datagen::DomainTag::Target);
  CHECK(std::string(tgt.reconstructor) == "gen_t");
  CHECK(std::string(tgt.translator) == "gen_s");
  CHECK(std::string(tgt.adv_discriminator) == "d_s");
}

TEST_CASE("forward flows: gating, finiteness, stage rules") {
  Fixture fx("fwd");
  auto bundle = make_bundle(fx.cfg);
  nets::FeatNet<float> featnet(kFeatNetSeed);
  LabelBatch ys;
  const Batch xs = fx.source_batch(ys);
  const Batch xt = fx.target_batch();

  SUBCASE("before aug_enable there are no SC or translated-seg terms") {
    FlowOutput fo = forward_source(*bundle, featnet, xs, ys, fx.cfg, 3);
    CHECK(!fo.has("sc_s"));
    CHECK(!fo.has("seg_s2t"));
    CHECK(fo.has("rec_s"));
    CHECK(fo.has("adv_s2t"));
    CHECK(fo.has("seg_s"));
    CHECK(fo.has("percep_rec_s"));
    CHECK(fo.has("percep_trans_s"));
    for (const auto& [name, v] : fo.report.entries) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
  }
  SUBCASE("after aug_enable the back-fed terms appear") {
    FlowOutput fo = forward_source(*bundle, featnet, xs, ys, fx.cfg, 10);
    CHECK(fo.has("sc_s"));
    CHECK(fo.has("seg_s2t"));
  }
  SUBCASE("stage-1 target flow carries no segmentation terms") {
    FlowOutput fo = forward_target(*bundle, featnet, xt, nullptr, fx.cfg, 10);
    CHECK(!fo.has("seg_t_hat"));
    CHECK(!fo.has("seg_t2s_hat"));
    CHECK(fo.has("rec_t"));
    CHECK(fo.has("adv_t2s"));
    CHECK(fo.has("sc_t"));
    for (const auto& [name, v] : fo.report.entries) CHECK(std::isfinite(v));
  }
  SUBCASE("stage-2 target flow requires pseudo labels") {
    TrainConfig cfg2 = fx.cfg;
    cfg2.stage = 2;
    CHECK_THROWS_AS(forward_target(*bundle, featnet, xt, nullptr, cfg2, 10), ConfigError);
    LabelBatch pseudo({2, 16, 16}, datagen::kIgnoreIndex);
    pseudo.data[0] = 1;
    FlowOutput fo = forward_target(*bundle, featnet, xt, &pseudo, cfg2, 10);
    CHECK(fo.has("seg_t_hat"));
    CHECK(fo.has("seg_t2s_hat"));
    // and stage 1 must not receive labels
    CHECK_THROWS_AS(forward_target(*bundle, featnet, xt, &pseudo, fx.cfg, 10), ConfigError);
  }
}

TEST_CASE("detach window bars generator-path gradients from the encoder") {
  Fixture fx("detach");
  auto bundle = make_bundle(fx.cfg);
  nets::FeatNet<float> featnet(kFeatNetSeed);
  LabelBatch ys;
  const Batch xs = fx.source_batch(ys);

  TrainConfig cfg = fx.cfg;
  cfg.weights.seg_s = 0;  // keep only generator-path losses
  cfg.weights.sc_s = 0;
  cfg.weights.seg_s2t = 0;

  // iter inside the detach window: E receives exactly zero gradient
  bundle->store.zero_grads();
  FlowOutput fo = forward_source(*bundle, featnet, xs, ys, cfg, 1);
  losses::total_loss(fo.terms, cfg.weights).backward();
  CHECK(grad_norm(bundle->store, "enc.") == 0.0);
  CHECK(grad_norm(bundle->store, "gen_s.") > 0.0);
  CHECK(grad_norm(bundle->store, "gen_t.") > 0.0);

  // outside the window the same losses do reach E
  bundle->store.zero_grads();
  FlowOutput fo2 = forward_source(*bundle, featnet, xs, ys, cfg, 3);
  losses::total_loss(fo2.terms, cfg.weights).backward();
  CHECK(grad_norm(bundle->store, "enc.") > 0.0);
}

TEST_CASE("discriminator_step trains D only, on detached fakes") {
  Fixture fx("dstep");
  auto bundle = make_bundle(fx.cfg);
  nets::FeatNet<float> featnet(kFeatNetSeed);
  LabelBatch ys;
  const Batch xs = fx.source_batch(ys);
  const Batch xt = fx.target_batch();

  FlowOutput fo_s = forward_source(*bundle, featnet, xs, ys, fx.cfg, 5);
  FlowOutput fo_t = forward_target(*bundle, featnet, xt, nullptr, fx.cfg, 5);
  REQUIRE(fo_s.aug_view.valid());
  REQUIRE(fo_t.aug_view.valid());

  auto digest_of = [&](const char* prefix) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < bundle->store.size(); ++i) {
      const auto& [name, v] = bundle->store.at(i);
      if (name.rfind(prefix, 0) == 0) h = tensor_digest(v.value(), h);
    }
    return h;
  };
  const auto enc_before = digest_of("enc.");
  const auto gen_before = digest_of("gen_");
  const auto ds_before = digest_of("d_s.");
  const auto dt_before = digest_of("d_t.");

  std::vector<std::pair<std::string, Var<float>>> dparams;
  for (std::size_t i = 0; i < bundle->store.size(); ++i) {
    const auto& [name, v] = bundle->store.at(i);
    if (name.rfind("d_s.", 0) == 0 || name.rfind("d_t.", 0) == 0) dparams.emplace_back(name, v);
  }
  optim::Adam<float> adam_d(dparams, 0.9, 0.99);
  DiscReport rep = discriminator_step(*bundle, adam_d, xs, xt, fo_t.aug_view, fo_s.aug_view, fx.cfg, 1e-4);
  CHECK(rep.stepped);
  CHECK(std::isfinite(rep.d_s));
  CHECK(std::isfinite(rep.d_t));
  CHECK(digest_of("enc.") == enc_before);
  CHECK(digest_of("gen_") == gen_before);
  CHECK(digest_of("d_s.") != ds_before);
  CHECK(digest_of("d_t.") != dt_before);
}

TEST_CASE("discriminator losses decrease against frozen generators") {
  Fixture fx("dlearn");
  auto bundle = make_bundle(fx.cfg);
  nets::FeatNet<float> featnet(kFeatNetSeed);
  LabelBatch ys;
  const Batch xs = fx.source_batch(ys);
  const Batch xt = fx.target_batch();

  // fixed fakes from the frozen generators
  FlowOutput fo_s = forward_source(*bundle, featnet, xs, ys, fx.cfg, 5);
  FlowOutput fo_t = forward_target(*bundle, featnet, xt, nullptr, fx.cfg, 5);

  std::vector<std::pair<std::string, Var<float>>> dparams;
  for (std::size_t i = 0; i < bundle->store.size(); ++i) {
    const auto& [name, v] = bundle->store.at(i);
    if (name.rfind("d_s.", 0) == 0 || name.rfind("d_t.", 0) == 0) dparams.emplace_back(name, v);
  }
  optim::Adam<float> adam_d(dparams, 0.9, 0.99);
  double first = 0, last = 0;
  for (int it = 0; it < 200; ++it) {
    DiscReport rep =
        discriminator_step(*bundle, adam_d, xs, xt, fo_t.aug_view, fo_s.aug_view, fx.cfg, 1e-3);
    const double total = rep.d_s + rep.d_t;
    if (it < 20) first += total;
    if (it >= 180) last += total;
  }
  CHECK(last / 20 < first / 20);
}

TEST_CASE("train: determinism, resume, metrics schema, optimizer separation") {
  Fixture fx("loop");

  SUBCASE("two identical runs produce identical parameter digests") {
    TrainResult r1 = train::train(fx.cfg, fx.data, temp_dir("loop_a"));
    TrainResult r2 = train::train(fx.cfg, fx.data, temp_dir("loop_b"));
    CHECK(r1.final_param_digest == r2.final_param_digest);
    CHECK(r1.iterations_run == 12);
  }

  SUBCASE("resume from a mid checkpoint is bit-identical to the straight run") {
    const auto dir_full = temp_dir("loop_full");
    TrainResult full = train::train(fx.cfg, fx.data, dir_full);
    REQUIRE(fs::exists(dir_full / "ckpt_000006.bin"));  // cadence checkpoint mid-run

    TrainConfig tail = fx.cfg;
    tail.resume = (dir_full / "ckpt_000006.bin").string();
    TrainResult resumed = train::train(tail, fx.data, temp_dir("loop_tail"));
    CHECK(resumed.final_param_digest == full.final_param_digest);
    CHECK(resumed.iterations_run == 6);
  }

  SUBCASE("metrics CSV has one row per iteration with all configured columns") {
    const auto dir = temp_dir("loop_csv");
    train::train(fx.cfg, fx.data, dir);
    std::ifstream in(dir / "metrics.csv");
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    std::string want = "iter,lr_seg,lr_gen";
    for (const auto& n : losses::loss_names()) want += "," + n;
    want += ",d_s,d_t,total";
    CHECK(header == want);
    int rows = 0;
    std::string line;
    const std::size_t ncols = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      CHECK(static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1 == ncols);
      ++rows;
    }
    CHECK(rows == 12);
  }

  SUBCASE("optimizer moments exist only for their groups") {
    const auto dir = temp_dir("loop_opt");
    TrainResult r = train::train(fx.cfg, fx.data, dir);
    const CheckpointData ckpt = load_checkpoint(r.final_checkpoint);
    bool saw_sgd = false, saw_adam = false;
    for (const auto& [name, t] : ckpt.opt_state) {
      if (name.rfind("sgd.v.", 0) == 0) {
        saw_sgd = true;
        const std::string p = name.substr(6);
        CHECK((p.rfind("enc.", 0) == 0 || p.rfind("seg.", 0) == 0));
      }
      if (name.rfind("adam_g.", 0) == 0) {
        saw_adam = true;
        const std::string p = name.substr(9);
        CHECK((p.rfind("gen_s.", 0) == 0 || p.rfind("gen_t.", 0) == 0));
      }
      if (name.rfind("adam_d.", 0) == 0) {
        const std::string p = name.substr(9);
        CHECK((p.rfind("d_s.", 0) == 0 || p.rfind("d_t.", 0) == 0));
      }
    }
    CHECK(saw_sgd);
    CHECK(saw_adam);
  }

  SUBCASE("checkpoint layout mismatch is rejected") {
    const auto dir = temp_dir("loop_mismatch");
    TrainResult r = train::train(fx.cfg, fx.data, dir);
    TrainConfig other = fx.cfg;
    other.num_classes = 4;  // different seg head shape
    auto bundle = make_bundle(other);
    CHECK_THROWS_AS(load_params_into(*bundle, load_checkpoint(r.final_checkpoint)), CheckpointError);
  }
}

TEST_CASE("a diverging run aborts with a numeric error") {
  Fixture fx("nan");
  TrainConfig cfg = fx.cfg;
  cfg.adam_lr_d = 1e12;  // blow the discriminator up on purpose
  cfg.max_iters = 8;
  CHECK_THROWS_AS(train::train(cfg, fx.data, temp_dir("nan_out")), NumericError);
}

TEST_CASE("evaluation leaves parameters untouched") {
  Fixture fx("evalpure");
  auto bundle = make_bundle(fx.cfg);
  const auto before = bundle->param_digest();
  eval::EvalOutcome out = eval::evaluate_segmenter(*bundle, fx.data, fx.data.eval, 4);
  CHECK(bundle->param_digest() == before);
  CHECK(out.cm.total() > 0);
}
