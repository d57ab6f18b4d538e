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

#include "trident/eval.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "trident/trainloop.hpp"

namespace trident::eval {

namespace fs = std::filesystem;

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (auto v : counts) t += v;
  return t;
}

void accumulate_confusion(ConfusionMatrix& cm, const Tensor<int>& pred, const Tensor<int>& gt,
                          int ignore_index) {
  if (pred.numel() != gt.numel()) throw std::invalid_argument("confusion: size mismatch");
  for (std::size_t i = 0; i < gt.numel(); ++i) {
    const int g = gt.data[i];
    if (g == ignore_index) continue;
    const int p = pred.data[i];
    if (g < 0 || g >= cm.num_classes || p < 0 || p >= cm.num_classes)
      throw std::invalid_argument("confusion: label out of range");
    ++cm.at(g, p);
  }
}

IouResult miou(const ConfusionMatrix& cm) {
  const int C = cm.num_classes;
  IouResult out;
  out.per_class.assign(static_cast<std::size_t>(C), std::nan(""));
  out.valid.assign(static_cast<std::size_t>(C), false);
  double sum = 0;
  int count = 0;
  for (int c = 0; c < C; ++c) {
    std::int64_t row = 0, col = 0;
    for (int k = 0; k < C; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    const std::int64_t inter = cm.at(c, c);
    const std::int64_t uni = row + col - inter;
    if (uni == 0) continue;  // class absent from both pred and gt
    const double iou = static_cast<double>(inter) / static_cast<double>(uni);
    out.per_class[static_cast<std::size_t>(c)] = iou;
    out.valid[static_cast<std::size_t>(c)] = true;
    sum += iou;
    ++count;
  }
  out.miou = count ? sum / count : 0.0;
  return out;
}

namespace {

Tensor<int> argmax_channels(const Tensor<float>& probs, int b) {
  const int C = probs.shape[1], H = probs.shape[2], W = probs.shape[3];
  const std::size_t HW = static_cast<std::size_t>(H) * W;
  const std::size_t base = static_cast<std::size_t>(b) * C * HW;
  Tensor<int> out({H, W});
  for (std::size_t p = 0; p < HW; ++p) {
    int best = 0;
    float bv = probs.data[base + p];
    for (int c = 1; c < C; ++c) {
      const float v = probs.data[base + static_cast<std::size_t>(c) * HW + p];
      if (v > bv) {
        bv = v;
        best = c;
      }
    }
    out.data[p] = best;
  }
  return out;
}

}  // namespace

EvalOutcome evaluate_segmenter(ModelBundle<float>& bundle, const datagen::Dataset& data,
                               const std::vector<datagen::StoredSample>& samples, int batch_size) {
  if (samples.empty()) throw datagen::DataError("evaluate_segmenter: empty sample list");
  EvalOutcome out{ConfusionMatrix(bundle.arch.num_classes), {}};
  const int n = static_cast<int>(samples.size());
  for (int base = 0; base < n; base += batch_size) {
    const int B = std::min(batch_size, n - base);
    const auto& first = samples[static_cast<std::size_t>(base)];
    Tensor<float> batch({B, 3, first.h, first.w});
    std::vector<Tensor<int>> gts(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
      datagen::Sample s = data.decode(samples[static_cast<std::size_t>(base + b)]);
      if (!s.label) throw datagen::DataError("evaluate_segmenter: sample has no label");
      std::copy(s.image.data.begin(), s.image.data.end(),
                batch.data.begin() + static_cast<std::size_t>(b) * s.image.numel());
      gts[static_cast<std::size_t>(b)] = std::move(*s.label);
    }
    Tensor<float> probs = train::predict_probs(bundle, batch);
    for (int b = 0; b < B; ++b)
      accumulate_confusion(out.cm, argmax_channels(probs, b), gts[static_cast<std::size_t>(b)]);
  }
  out.iou = miou(out.cm);
  return out;
}

// ---------------------------------------------------------------------------
// Domain gap.
// ---------------------------------------------------------------------------
namespace {

// Cyclic Jacobi eigensolver for small symmetric matrices; returns
// eigenvalues (descending) and column eigenvectors.
void jacobi_eig(std::vector<double>& a, int n, std::vector<double>& eigvals,
                std::vector<double>& eigvecs) {
  eigvecs.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) eigvecs[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  auto V = [&](int i, int j) -> double& { return eigvecs[static_cast<std::size_t>(i) * n + j]; };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off < 1e-22) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(A(p, q)) < 1e-300) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
  }
  eigvals.resize(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    eigvals[static_cast<std::size_t>(i)] = A(i, i);
    order[static_cast<std::size_t>(i)] = i;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return eigvals[static_cast<std::size_t>(x)] > eigvals[static_cast<std::size_t>(y)]; });
  std::vector<double> vals(static_cast<std::size_t>(n));
  std::vector<double> vecs(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    vals[static_cast<std::size_t>(i)] = eigvals[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    for (int k = 0; k < n; ++k)
      vecs[static_cast<std::size_t>(k) * n + i] = V(k, order[static_cast<std::size_t>(i)]);
  }
  eigvals = std::move(vals);
  eigvecs = std::move(vecs);
}

struct FeaturePools {
  // per (domain, class): feature vectors, subsampled
  std::vector<std::vector<std::vector<double>>> pools[2];
  std::vector<std::vector<double>> centroid[2];
  std::vector<std::int64_t> count[2];
};

void pool_features(ModelBundle<float>& bundle, const datagen::Dataset& data,
                   const std::vector<datagen::StoredSample>& samples, int domain, int batch_size,
                   int max_points, FeaturePools& fp) {
  const int C = bundle.arch.num_classes;
  const int n = static_cast<int>(samples.size());
  std::vector<std::int64_t> seen(static_cast<std::size_t>(C), 0);
  for (int base = 0; base < n; base += batch_size) {
    const int B = std::min(batch_size, n - base);
    const auto& first = samples[static_cast<std::size_t>(base)];
    Tensor<float> batch({B, 3, first.h, first.w});
    std::vector<Tensor<int>> gts(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
      datagen::Sample s = data.decode(samples[static_cast<std::size_t>(base + b)]);
      if (!s.label) throw datagen::DataError("domain_gap: sample has no label");
      std::copy(s.image.data.begin(), s.image.data.end(),
                batch.data.begin() + static_cast<std::size_t>(b) * s.image.numel());
      gts[static_cast<std::size_t>(b)] = std::move(*s.label);
    }
    Var<float> mid = bundle.seg.features(bundle.enc(Var<float>::leaf(batch)));
    const auto& ms = mid.value().shape;  // (B, Cm, h, w)
    const int Cm = ms[1], fh = ms[2], fw = ms[3];
    const int sy = first.h / fh, sx = first.w / fw;
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < fh; ++i)
        for (int j = 0; j < fw; ++j) {
          // nearest-neighbour downsample of the label grid
          const int gy = std::min(first.h - 1, i * sy + sy / 2);
          const int gx = std::min(first.w - 1, j * sx + sx / 2);
          const int cls = gts[static_cast<std::size_t>(b)].data[static_cast<std::size_t>(gy) * first.w + gx];
          if (cls == datagen::kIgnoreIndex) continue;
          std::vector<double> vec(static_cast<std::size_t>(Cm));
          for (int c = 0; c < Cm; ++c) vec[static_cast<std::size_t>(c)] = mid.value().at4(b, c, i, j);
          auto& cent = fp.centroid[domain][static_cast<std::size_t>(cls)];
          if (cent.empty()) cent.assign(static_cast<std::size_t>(Cm), 0.0);
          for (int c = 0; c < Cm; ++c) cent[static_cast<std::size_t>(c)] += vec[static_cast<std::size_t>(c)];
          ++fp.count[domain][static_cast<std::size_t>(cls)];
          // deterministic subsample: keep every k-th occurrence
          const std::int64_t idx = seen[static_cast<std::size_t>(cls)]++;
          if (idx % 7 == 0 && fp.pools[domain][static_cast<std::size_t>(cls)].size() <
                                  static_cast<std::size_t>(max_points))
            fp.pools[domain][static_cast<std::size_t>(cls)].push_back(std::move(vec));
        }
  }
}

}  // namespace

ClassStats domain_gap_stats(ModelBundle<float>& bundle, const datagen::Dataset& data,
                            const std::vector<datagen::StoredSample>& source_samples,
                            const std::vector<datagen::StoredSample>& target_samples,
                            int batch_size, int max_points_per_pool) {
  const int C = bundle.arch.num_classes;
  FeaturePools fp;
  for (int d = 0; d < 2; ++d) {
    fp.pools[d].resize(static_cast<std::size_t>(C));
    fp.centroid[d].resize(static_cast<std::size_t>(C));
    fp.count[d].assign(static_cast<std::size_t>(C), 0);
  }
  pool_features(bundle, data, source_samples, 0, batch_size, max_points_per_pool, fp);
  pool_features(bundle, data, target_samples, 1, batch_size, max_points_per_pool, fp);

  ClassStats st;
  st.num_classes = C;
  st.feat_dim = bundle.arch.mid_channels;
  st.centroid_source.resize(static_cast<std::size_t>(C));
  st.centroid_target.resize(static_cast<std::size_t>(C));
  st.present_source.assign(static_cast<std::size_t>(C), false);
  st.present_target.assign(static_cast<std::size_t>(C), false);
  st.ccd.assign(static_cast<std::size_t>(C), std::nan(""));
  for (int c = 0; c < C; ++c) {
    for (int d = 0; d < 2; ++d) {
      if (fp.count[d][static_cast<std::size_t>(c)] == 0) continue;
      auto cent = fp.centroid[d][static_cast<std::size_t>(c)];
      for (auto& v : cent) v /= static_cast<double>(fp.count[d][static_cast<std::size_t>(c)]);
      if (d == 0) {
        st.centroid_source[static_cast<std::size_t>(c)] = std::move(cent);
        st.present_source[static_cast<std::size_t>(c)] = true;
      } else {
        st.centroid_target[static_cast<std::size_t>(c)] = std::move(cent);
        st.present_target[static_cast<std::size_t>(c)] = true;
      }
    }
    if (st.present_source[static_cast<std::size_t>(c)] && st.present_target[static_cast<std::size_t>(c)]) {
      double acc = 0;
      for (int k = 0; k < st.feat_dim; ++k) {
        const double d = st.centroid_source[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] -
                         st.centroid_target[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
        acc += d * d;
      }
      st.ccd[static_cast<std::size_t>(c)] = std::sqrt(acc);
    }
  }

  // PCA over all pooled vectors.
  const int D = st.feat_dim;
  std::vector<double> mean(static_cast<std::size_t>(D), 0.0);
  std::int64_t total = 0;
  for (int d = 0; d < 2; ++d)
    for (int c = 0; c < C; ++c)
      for (const auto& v : fp.pools[d][static_cast<std::size_t>(c)]) {
        for (int k = 0; k < D; ++k) mean[static_cast<std::size_t>(k)] += v[static_cast<std::size_t>(k)];
        ++total;
      }
  if (total >= 2) {
    for (auto& m : mean) m /= static_cast<double>(total);
    std::vector<double> cov(static_cast<std::size_t>(D) * D, 0.0);
    for (int d = 0; d < 2; ++d)
      for (int c = 0; c < C; ++c)
        for (const auto& v : fp.pools[d][static_cast<std::size_t>(c)])
          for (int i = 0; i < D; ++i) {
            const double vi = v[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
            for (int j = i; j < D; ++j)
              cov[static_cast<std::size_t>(i) * D + j] +=
                  vi * (v[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]);
          }
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < i; ++j)
        cov[static_cast<std::size_t>(i) * D + j] = cov[static_cast<std::size_t>(j) * D + i];
    for (auto& v : cov) v /= static_cast<double>(total - 1);
    std::vector<double> eigvals, eigvecs;
    jacobi_eig(cov, D, eigvals, eigvecs);
    // sign convention: the largest-magnitude component of each axis positive
    for (int axis = 0; axis < 2; ++axis) {
      int arg = 0;
      double best = 0;
      for (int k = 0; k < D; ++k) {
        const double m = std::abs(eigvecs[static_cast<std::size_t>(k) * D + axis]);
        if (m > best) {
          best = m;
          arg = k;
        }
      }
      if (eigvecs[static_cast<std::size_t>(arg) * D + axis] < 0)
        for (int k = 0; k < D; ++k) eigvecs[static_cast<std::size_t>(k) * D + axis] *= -1.0;
    }
    for (int d = 0; d < 2; ++d)
      for (int c = 0; c < C; ++c)
        for (const auto& v : fp.pools[d][static_cast<std::size_t>(c)]) {
          ProjPoint p;
          p.class_id = c;
          p.domain = d;
          for (int k = 0; k < D; ++k) {
            const double cv = v[static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)];
            p.x += cv * eigvecs[static_cast<std::size_t>(k) * D + 0];
            p.y += cv * eigvecs[static_cast<std::size_t>(k) * D + 1];
          }
          st.points.push_back(p);
        }
  }
  return st;
}

// ---------------------------------------------------------------------------
// Translation assay.
// ---------------------------------------------------------------------------
Tensor<float> translate_batch(ModelBundle<float>& bundle, const Tensor<float>& images, bool to_source) {
  Var<float> f = bundle.enc(Var<float>::leaf(images));
  Var<float> out = to_source ? bundle.gen_s(f) : bundle.gen_t(f);
  return out.value();
}

namespace {

double eval_on_translated(ModelBundle<float>& segmenter, const datagen::Dataset& data,
                          const std::vector<datagen::StoredSample>& samples,
                          const TranslateFn& translate, int batch_size) {
  ConfusionMatrix cm(segmenter.arch.num_classes);
  const int n = static_cast<int>(samples.size());
  for (int base = 0; base < n; base += batch_size) {
    const int B = std::min(batch_size, n - base);
    const auto& first = samples[static_cast<std::size_t>(base)];
    Tensor<float> batch({B, 3, first.h, first.w});
    std::vector<Tensor<int>> gts(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
      datagen::Sample s = data.decode(samples[static_cast<std::size_t>(base + b)]);
      std::copy(s.image.data.begin(), s.image.data.end(),
                batch.data.begin() + static_cast<std::size_t>(b) * s.image.numel());
      gts[static_cast<std::size_t>(b)] = std::move(*s.label);
    }
    Tensor<float> translated = translate ? translate(batch) : batch;
    Tensor<float> probs = train::predict_probs(segmenter, translated);
    for (int b = 0; b < B; ++b)
      accumulate_confusion(cm, argmax_channels(probs, b), gts[static_cast<std::size_t>(b)]);
  }
  return miou(cm).miou;
}

std::uint8_t quantize_byte(float v) {
  const double v01 = (static_cast<double>(v) + 1.0) / 2.0;
  return static_cast<std::uint8_t>(std::clamp(std::lround(v01 * 255.0), 0l, 255l));
}

}  // namespace

TranslationAssay translation_assay(const TranslateFn& translate_t2s, const TranslateFn& translate_s2t,
                                   ModelBundle<float>& source_only, const datagen::Dataset& data,
                                   const TrainConfig& cfg) {
  TranslationAssay out;
  out.miou_source_only_raw = eval_on_translated(source_only, data, data.eval, nullptr, cfg.eval_batch);
  out.miou_t2s = eval_on_translated(source_only, data, data.eval, translate_t2s, cfg.eval_batch);

  // Fresh segmenter trained on s2t-translated source images with the source
  // ground truth, evaluated on raw target eval.
  datagen::Dataset translated = data;
  const int n = static_cast<int>(translated.source.size());
  for (int base = 0; base < n; base += cfg.eval_batch) {
    const int B = std::min(cfg.eval_batch, n - base);
    const auto& first = translated.source[static_cast<std::size_t>(base)];
    Tensor<float> batch({B, 3, first.h, first.w});
    for (int b = 0; b < B; ++b) {
      datagen::Sample s = data.decode(data.source[static_cast<std::size_t>(base + b)]);
      std::copy(s.image.data.begin(), s.image.data.end(),
                batch.data.begin() + static_cast<std::size_t>(b) * s.image.numel());
    }
    Tensor<float> tr = translate_s2t ? translate_s2t(batch) : batch;
    for (int b = 0; b < B; ++b) {
      auto& stored = translated.source[static_cast<std::size_t>(base + b)];
      const std::size_t HW = static_cast<std::size_t>(stored.h) * stored.w;
      for (int i = 0; i < stored.h; ++i)
        for (int j = 0; j < stored.w; ++j)
          for (int c = 0; c < 3; ++c)
            stored.image[(static_cast<std::size_t>(i) * stored.w + j) * 3 + c] =
                quantize_byte(tr.data[((static_cast<std::size_t>(b) * 3 + c) * stored.h + i) * stored.w + j]);
      (void)HW;
    }
  }
  TrainConfig seg_cfg = cfg;
  apply_preset(seg_cfg, "row1");
  seg_cfg.max_iters = cfg.assay_iters;
  seg_cfg.batch_size = cfg.assay_batch;
  seg_cfg.detach_until_iter = 0;
  seg_cfg.aug_enable_iter = 0;
  seg_cfg.checkpoint_every = std::max(1, cfg.assay_iters);
  seg_cfg.pseudo_dir.clear();
  seg_cfg.resume.clear();
  seg_cfg.init_checkpoint.clear();
  const fs::path tmp_dir = fs::temp_directory_path() /
                           ("trident_assay_" + hex64(fnv1a(&cfg.seed, sizeof cfg.seed) ^
                                                     static_cast<std::uint64_t>(::getpid())));
  train::TrainResult tr = train::train(seg_cfg, translated, tmp_dir);
  {
    auto fresh = train::make_bundle(seg_cfg);
    train::load_params_into(*fresh, load_checkpoint(tr.final_checkpoint));
    out.miou_s2t_trained = eval_on_translated(*fresh, data, data.eval, nullptr, cfg.eval_batch);
  }
  std::error_code ec;
  fs::remove_all(tmp_dir, ec);

  out.delta_t2s = out.miou_t2s - out.miou_source_only_raw;
  out.delta_s2t_trained = out.miou_s2t_trained - out.miou_source_only_raw;
  return out;
}

TranslationAssay translation_assay(ModelBundle<float>& adapted, ModelBundle<float>& source_only,
                                   const datagen::Dataset& data, const TrainConfig& cfg) {
  TranslateFn t2s = [&](const Tensor<float>& imgs) { return translate_batch(adapted, imgs, true); };
  TranslateFn s2t = [&](const Tensor<float>& imgs) { return translate_batch(adapted, imgs, false); };
  return translation_assay(t2s, s2t, source_only, data, cfg);
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------
namespace {

std::ofstream open_report(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw datagen::DataError("cannot write report: " + path.string());
  return out;
}

}  // namespace

void emit_iou_csv(const fs::path& path, const IouResult& iou) {
  auto out = open_report(path);
  out << "class,iou\n";
  for (std::size_t c = 0; c < iou.per_class.size(); ++c) {
    out << c << ",";
    if (iou.valid[c]) out << iou.per_class[c];
    out << "\n";
  }
  out << "mean," << iou.miou << "\n";
}

void emit_ccd_csv(const fs::path& path, const ClassStats& stats) {
  auto out = open_report(path);
  out << "# cluster-center distance over unnormalized mid features\n";
  out << "class,ccd\n";
  for (std::size_t c = 0; c < stats.ccd.size(); ++c) {
    out << c << ",";
    if (stats.present_source[c] && stats.present_target[c]) out << stats.ccd[c];
    out << "\n";
  }
}

void emit_projection_csv(const fs::path& path, const ClassStats& stats) {
  auto out = open_report(path);
  out << "x,y,class,domain\n";
  for (const auto& p : stats.points)
    out << p.x << "," << p.y << "," << p.class_id << "," << (p.domain ? "target" : "source") << "\n";
}

void emit_projection_svg(const fs::path& path, const ClassStats& stats) {
  auto out = open_report(path);
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!stats.points.empty()) {
    xmin = xmax = stats.points[0].x;
    ymin = ymax = stats.points[0].y;
    for (const auto& p : stats.points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  const double sx = 600.0 / std::max(1e-12, xmax - xmin);
  const double sy = 600.0 / std::max(1e-12, ymax - ymin);
  static const char* colors[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
                                 "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac"};
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
         "viewBox=\"0 0 640 640\">\n"
      << "<!-- PCA projection of mid features; circles = source, squares = target -->\n"
      << "<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";
  for (const auto& p : stats.points) {
    const double px = 20 + (p.x - xmin) * sx;
    const double py = 20 + (ymax - p.y) * sy;
    const char* color = colors[static_cast<std::size_t>(p.class_id) % 10];
    if (p.domain == 0)
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"2\" fill=\"" << color
          << "\" fill-opacity=\"0.5\"/>\n";
    else
      out << "<rect x=\"" << px - 2 << "\" y=\"" << py - 2
          << "\" width=\"4\" height=\"4\" fill=\"" << color << "\" fill-opacity=\"0.5\"/>\n";
  }
  out << "</svg>\n";
}

void emit_translation_csv(const fs::path& path, const TranslationAssay& assay) {
  auto out = open_report(path);
  out << "row,miou,delta\n";
  out << "source_only_raw," << assay.miou_source_only_raw << ",0\n";
  out << "t2s," << assay.miou_t2s << "," << assay.delta_t2s << "\n";
  out << "s2t_trained," << assay.miou_s2t_trained << "," << assay.delta_s2t_trained << "\n";
}

}  // namespace trident::eval
