#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "trident/pseudolabel.hpp"
#include "trident/rng.hpp"
#include "trident/trainloop.hpp"

using namespace trident;
using namespace trident::pseudolabel;
namespace fs = std::filesystem;

namespace {

// probmap with the given per-pixel (argmax class, confidence); other classes
// share the remaining mass equally.
Tensor<float> probmap_from(const std::vector<int>& cls, const std::vector<double>& conf, int C, int H,
                           int W) {
  Tensor<float> pm({C, H, W});
  for (int p = 0; p < H * W; ++p) {
    const double rest = (1.0 - conf[static_cast<std::size_t>(p)]) / (C - 1);
    for (int c = 0; c < C; ++c)
      pm.data[static_cast<std::size_t>(c) * H * W + p] =
          static_cast<float>(c == cls[static_cast<std::size_t>(p)] ? conf[static_cast<std::size_t>(p)] : rest);
  }
  return pm;
}

// independent sort-based oracle
std::vector<double> thresholds_oracle(const std::vector<Tensor<float>>& pms, int C, double cap) {
  std::vector<std::vector<float>> pools(static_cast<std::size_t>(C));
  for (const auto& pm : pms) {
    const std::size_t HW = pm.numel() / static_cast<std::size_t>(C);
    for (std::size_t p = 0; p < HW; ++p) {
      int best = 0;
      float bv = pm.data[p];
      for (int c = 1; c < C; ++c)
        if (pm.data[static_cast<std::size_t>(c) * HW + p] > bv) {
          bv = pm.data[static_cast<std::size_t>(c) * HW + p];
          best = c;
        }
      pools[static_cast<std::size_t>(best)].push_back(bv);
    }
  }
  std::vector<double> out(static_cast<std::size_t>(C), 1.0);
  for (int c = 0; c < C; ++c) {
    auto& pool = pools[static_cast<std::size_t>(c)];
    if (pool.empty()) continue;
    std::sort(pool.begin(), pool.end());
    out[static_cast<std::size_t>(c)] = std::min(static_cast<double>(pool[(pool.size() - 1) / 2]), cap);
  }
  return out;
}

}  // namespace

TEST_CASE("compute_thresholds: median pick, cap, never-predicted") {
  // class 1 confidences {0.5, 0.7, 0.9} -> median 0.7; classes 0/2 never argmax
  const auto pm = probmap_from({1, 1, 1}, {0.5, 0.7, 0.9}, 3, 1, 3);
  const auto thr = compute_thresholds({pm}, 3);
  CHECK(thr[1] == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(thr[0] == 1.0);
  CHECK(thr[2] == 1.0);

  // all confidences 1.0 -> capped at 0.9
  const auto pm2 = probmap_from({1, 1, 1}, {1.0, 1.0, 1.0}, 3, 1, 3);
  const auto thr2 = compute_thresholds({pm2}, 3);
  CHECK(thr2[1] == doctest::Approx(0.9));

  // lower median on even counts
  const auto pm3 = probmap_from({1, 1, 1, 1}, {0.5, 0.6, 0.7, 0.8}, 3, 1, 4);
  const auto thr3 = compute_thresholds({pm3}, 3);
  CHECK(thr3[1] == doctest::Approx(0.6).epsilon(1e-6));

  CHECK_THROWS(compute_thresholds({}, 2));
}

TEST_CASE("compute_thresholds matches the sort oracle on random pools") {
  Rng rng(41);
  for (int t = 0; t < 20; ++t) {
    const int C = rng.uniform_int(2, 5);
    std::vector<Tensor<float>> pms;
    const int n_img = rng.uniform_int(1, 4);
    for (int i = 0; i < n_img; ++i) {
      const int H = rng.uniform_int(2, 5), W = rng.uniform_int(2, 5);
      Tensor<float> pm({C, H, W});
      for (int p = 0; p < H * W; ++p) {
        double sum = 0;
        std::vector<double> v(static_cast<std::size_t>(C));
        for (auto& x : v) {
          x = rng.uniform(0.01, 1.0);
          sum += x;
        }
        for (int c = 0; c < C; ++c)
          pm.data[static_cast<std::size_t>(c) * H * W + p] = static_cast<float>(v[static_cast<std::size_t>(c)] / sum);
      }
      pms.push_back(std::move(pm));
    }
    const auto got = compute_thresholds(pms, C);
    const auto want = thresholds_oracle(pms, C, 0.9);
    REQUIRE(got.size() == want.size());
    for (std::size_t c = 0; c < got.size(); ++c) CHECK(got[c] == want[c]);  // exact
  }
}

TEST_CASE("apply_thresholds: extremes and nested-loop oracle") {
  const auto pm = probmap_from({0, 1, 2, 1}, {0.6, 0.5, 0.9, 0.8}, 3, 2, 2);
  const auto all = apply_thresholds(pm, {0.0, 0.0, 0.0});
  CHECK(all.data == std::vector<int>{0, 1, 2, 1});

  const auto none = apply_thresholds(pm, {1.0, 1.0, 1.0});
  for (int v : none.data) CHECK(v == datagen::kIgnoreIndex);

  const auto mixed = apply_thresholds(pm, {0.7, 0.6, 0.85});
  // pixel 0: class0 conf .6 < .7 -> ignore; pixel 1: class1 .5 < .6 -> ignore
  // pixel 2: class2 .9 >= .85 -> 2 ; pixel 3: class1 .8 >= .6 -> 1
  CHECK(mixed.data == std::vector<int>{255, 255, 2, 1});
}

TEST_CASE("acceptance monotonicity and argmax consistency") {
  Rng rng(43);
  Tensor<float> pm({4, 6, 6});
  for (int p = 0; p < 36; ++p) {
    double sum = 0;
    double v[4];
    for (auto& x : v) {
      x = rng.uniform(0.01, 1.0);
      sum += x;
    }
    for (int c = 0; c < 4; ++c) pm.data[static_cast<std::size_t>(c) * 36 + p] = static_cast<float>(v[c] / sum);
  }
  std::vector<double> thr = {0.3, 0.4, 0.5, 0.6};
  const auto base = apply_thresholds(pm, thr);

  // consistency: every accepted label is the argmax
  for (int p = 0; p < 36; ++p) {
    if (base.data[static_cast<std::size_t>(p)] == datagen::kIgnoreIndex) continue;
    int best = 0;
    float bv = pm.data[static_cast<std::size_t>(p)];
    for (int c = 1; c < 4; ++c)
      if (pm.data[static_cast<std::size_t>(c) * 36 + p] > bv) {
        bv = pm.data[static_cast<std::size_t>(c) * 36 + p];
        best = c;
      }
    CHECK(base.data[static_cast<std::size_t>(p)] == best);
  }

  // raising any threshold never increases the labeled set
  for (int t = 0; t < 100; ++t) {
    auto thr2 = thr;
    thr2[static_cast<std::size_t>(rng.uniform_int(0, 3))] += rng.uniform(0, 0.5);
    const auto raised = apply_thresholds(pm, thr2);
    for (int p = 0; p < 36; ++p)
      if (raised.data[static_cast<std::size_t>(p)] != datagen::kIgnoreIndex)
        CHECK(raised.data[static_cast<std::size_t>(p)] == base.data[static_cast<std::size_t>(p)]);
  }
}

TEST_CASE("write/load round trip and digest stability") {
  PseudoLabelSet set;
  set.checkpoint_id = "00deadbeef00cafe";
  set.thresholds = {0.5, 0.7, 0.9};
  set.coverage = {0.0, 0.5, 0.25};
  Rng rng(7);
  for (int i = 0; i < 3; ++i) {
    Tensor<int> lbl({8, 8});
    for (auto& v : lbl.data) v = rng.bernoulli(0.3) ? datagen::kIgnoreIndex : rng.uniform_int(0, 2);
    set.labels.push_back(std::move(lbl));
  }
  const auto dir = fs::temp_directory_path() / "trident_pl";
  fs::remove_all(dir);
  write_pseudo_labels(set, dir);
  const PseudoLabelSet back = load_pseudo_labels(dir);
  CHECK(back.checkpoint_id == set.checkpoint_id);
  REQUIRE(back.thresholds.size() == 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(back.thresholds[static_cast<std::size_t>(c)] == set.thresholds[static_cast<std::size_t>(c)]);
    CHECK(back.coverage[static_cast<std::size_t>(c)] == set.coverage[static_cast<std::size_t>(c)]);
  }
  REQUIRE(back.labels.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(back.labels[static_cast<std::size_t>(i)].data == set.labels[static_cast<std::size_t>(i)].data);

  // stats file lists C threshold lines
  std::ifstream stats(dir / "stats.txt");
  int lines = 0;
  std::string line;
  while (std::getline(stats, line))
    if (!line.empty() && line[0] != '#') ++lines;
  CHECK(lines == 3);

  // byte-stable rewrite
  auto digest_file = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a(s.data(), s.size());
  };
  const auto d1 = digest_file(dir / "lbl_00001.pgm");
  const auto s1 = digest_file(dir / "stats.txt");
  write_pseudo_labels(set, dir);
  CHECK(digest_file(dir / "lbl_00001.pgm") == d1);
  CHECK(digest_file(dir / "stats.txt") == s1);
}

TEST_CASE("generate: coverage bound holds exactly") {
  nets::ArchConfig arch;
  arch.num_classes = 3;
  auto bundle = init_bundle<float>(arch, 3);

  datagen::GenConfig gen;
  gen.seed = 9;
  gen.canvas_h = gen.canvas_w = 16;
  gen.num_classes = 3;
  gen.source_count = 2;
  gen.target_count = 6;
  gen.eval_count = 2;
  const auto dir = fs::temp_directory_path() / "trident_pl_gen";
  fs::remove_all(dir);
  datagen::build_dataset(gen, dir);
  const auto data = datagen::load_dataset(dir);

  const PseudoLabelSet set = generate(*bundle, data, 4);
  REQUIRE(set.labels.size() == 6);
  REQUIRE(set.thresholds.size() == 3);
  for (double c : set.coverage) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
  // recompute coverage from the stored labels and fresh predictions
  std::vector<std::int64_t> predicted(3, 0), accepted(3, 0);
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    Tensor<float> batch({1, 3, 16, 16});
    datagen::Sample s = data.decode(data.target[i]);
    std::copy(s.image.data.begin(), s.image.data.end(), batch.data.begin());
    const Tensor<float> probs = train::predict_probs(*bundle, batch);
    for (int p = 0; p < 256; ++p) {
      int best = 0;
      float bv = probs.data[static_cast<std::size_t>(p)];
      for (int c = 1; c < 3; ++c)
        if (probs.data[static_cast<std::size_t>(c) * 256 + p] > bv) {
          bv = probs.data[static_cast<std::size_t>(c) * 256 + p];
          best = c;
        }
      ++predicted[static_cast<std::size_t>(best)];
      if (set.labels[i].data[static_cast<std::size_t>(p)] != datagen::kIgnoreIndex)
        ++accepted[static_cast<std::size_t>(set.labels[i].data[static_cast<std::size_t>(p)])];
    }
  }
  for (int c = 0; c < 3; ++c) {
    if (predicted[static_cast<std::size_t>(c)] == 0) continue;
    CHECK(set.coverage[static_cast<std::size_t>(c)] ==
          doctest::Approx(static_cast<double>(accepted[static_cast<std::size_t>(c)]) /
                          predicted[static_cast<std::size_t>(c)])
              .epsilon(1e-12));
  }
}
