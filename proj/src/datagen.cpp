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

#include "trident/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trident/parallel.hpp"

namespace trident::datagen {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Scene generation.
// ---------------------------------------------------------------------------
SceneSpec generate_scene(std::uint64_t seed, int height, int width, int num_classes) {
  if (num_classes < 2 || num_classes > 32)
    throw std::invalid_argument("generate_scene: num_classes must be in [2, 32]");
  if (height < 16 || width < 16)
    throw std::invalid_argument("generate_scene: canvas dims must be >= 16");
  SceneSpec scene;
  scene.seed = seed;
  scene.height = height;
  scene.width = width;
  scene.num_classes = num_classes;
  Rng rng = Rng::derive(seed, 0x5ce7e);
  const int count = rng.uniform_int(1, 6);
  for (int i = 0; i < count; ++i) {
    Shape sh;
    sh.class_id = rng.uniform_int(1, num_classes - 1);
    // Geometry is the class's domain-invariant signature: the kind is a
    // function of the class, so classes stay identifiable across domains
    // even though the palettes are permuted.
    sh.kind = static_cast<ShapeKind>((sh.class_id - 1) % 4);
    switch (sh.kind) {
      case ShapeKind::Circle:
        sh.p[0] = rng.uniform(0.15, 0.85);  // cx
        sh.p[1] = rng.uniform(0.15, 0.85);  // cy
        sh.p[2] = rng.uniform(0.08, 0.30);  // radius
        break;
      case ShapeKind::Rectangle:
        sh.p[0] = rng.uniform(0.10, 0.90);  // cx
        sh.p[1] = rng.uniform(0.10, 0.90);  // cy
        sh.p[2] = rng.uniform(0.08, 0.30);  // half w
        sh.p[3] = rng.uniform(0.08, 0.30);  // half h
        break;
      case ShapeKind::Triangle: {
        const double cx = rng.uniform(0.2, 0.8), cy = rng.uniform(0.2, 0.8);
        const double rot = rng.uniform(0, 6.283185307179586);
        const double r = rng.uniform(0.12, 0.35);
        for (int v = 0; v < 3; ++v) {
          const double ang = rot + v * 2.0943951023931953;  // 2*pi/3
          sh.p[static_cast<std::size_t>(2 * v)] = cx + r * std::cos(ang);
          sh.p[static_cast<std::size_t>(2 * v + 1)] = cy + r * std::sin(ang);
        }
        break;
      }
      case ShapeKind::Stripe:
        sh.p[0] = rng.uniform(0, 3.141592653589793);  // normal angle
        sh.p[1] = rng.uniform(-0.2, 1.2);             // offset along normal
        sh.p[2] = rng.uniform(0.05, 0.25);            // thickness
        break;
    }
    scene.shapes.push_back(sh);
  }
  return scene;
}

namespace {

bool inside(const Shape& s, double x, double y) {
  switch (s.kind) {
    case ShapeKind::Circle: {
      const double dx = x - s.p[0], dy = y - s.p[1];
      return dx * dx + dy * dy <= s.p[2] * s.p[2];
    }
    case ShapeKind::Rectangle:
      return std::abs(x - s.p[0]) <= s.p[2] && std::abs(y - s.p[1]) <= s.p[3];
    case ShapeKind::Triangle: {
      auto cross = [](double ax, double ay, double bx, double by, double px, double py) {
        return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
      };
      const double d1 = cross(s.p[0], s.p[1], s.p[2], s.p[3], x, y);
      const double d2 = cross(s.p[2], s.p[3], s.p[4], s.p[5], x, y);
      const double d3 = cross(s.p[4], s.p[5], s.p[0], s.p[1], x, y);
      const bool neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
      const bool pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
      return !(neg && pos);
    }
    case ShapeKind::Stripe: {
      const double proj = x * std::cos(s.p[0]) + y * std::sin(s.p[0]);
      return std::abs(proj - s.p[1]) <= s.p[2] / 2.0;
    }
  }
  return false;
}

}  // namespace

Tensor<int> rasterize_labels(const SceneSpec& scene) {
  Tensor<int> lbl({scene.height, scene.width});
  for (int i = 0; i < scene.height; ++i)
    for (int j = 0; j < scene.width; ++j) {
      const double y = (i + 0.5) / scene.height;
      const double x = (j + 0.5) / scene.width;
      int cls = 0;
      for (const auto& sh : scene.shapes)
        if (inside(sh, x, y)) cls = sh.class_id;  // later shapes are on top
      lbl.data[static_cast<std::size_t>(i) * scene.width + j] = cls;
    }
  return lbl;
}

// ---------------------------------------------------------------------------
// Styles and rendering.
// ---------------------------------------------------------------------------
namespace {

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = v - c;
  return {r + m, g + m, b + m};
}

void apply_transform(const PhotometricTransform& t, Tensor<float>& img01) {
  const int H = img01.shape[1], W = img01.shape[2];
  switch (t.kind) {
    case TransformKind::Identity:
      return;
    case TransformKind::HueRotate: {
      const double th = t.theta_deg * 3.141592653589793 / 180.0;
      const double c = std::cos(th), s = std::sin(th);
      // Rotation about the gray axis (1,1,1)/sqrt(3).
      const double oneth = (1.0 - c) / 3.0;
      const double k = s / std::sqrt(3.0);
      const double m[3][3] = {{c + oneth, oneth - k, oneth + k},
                              {oneth + k, c + oneth, oneth - k},
                              {oneth - k, oneth + k, c + oneth}};
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
          const double r = img01.at3(0, i, j), g = img01.at3(1, i, j), b = img01.at3(2, i, j);
          for (int ch = 0; ch < 3; ++ch) {
            const double v = m[ch][0] * r + m[ch][1] * g + m[ch][2] * b;
            img01.at3(ch, i, j) = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
        }
      return;
    }
    case TransformKind::BrightnessInvert:
      for (auto& v : img01.data) v = 1.0f - v;
      return;
    case TransformKind::SinusoidalGrating: {
      const double scale = 6.283185307179586 * t.freq / std::max(H, W);
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
          const double g = t.amp * std::sin(scale * (i + j));
          for (int ch = 0; ch < 3; ++ch)
            img01.at3(ch, i, j) = static_cast<float>(std::clamp(img01.at3(ch, i, j) + g, 0.0, 1.0));
        }
      return;
    }
  }
}

}  // namespace

std::string PhotometricTransform::describe() const {
  char buf[96];
  switch (kind) {
    case TransformKind::Identity:
      return "identity";
    case TransformKind::HueRotate:
      std::snprintf(buf, sizeof buf, "hue_rotate(%g)", theta_deg);
      return buf;
    case TransformKind::BrightnessInvert:
      return "brightness_invert";
    case TransformKind::SinusoidalGrating:
      std::snprintf(buf, sizeof buf, "sinusoidal_grating(%g,%g)", freq, amp);
      return buf;
  }
  return "?";
}

std::string DomainStyle::describe() const {
  std::ostringstream os;
  os << (tag == DomainTag::Source ? "source" : "target") << ";noise=" << noise_sigma << ";";
  for (std::size_t i = 0; i < transforms.size(); ++i) os << (i ? "+" : "") << transforms[i].describe();
  os << ";palette=";
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& rgb : palette) h = fnv1a(rgb.data(), sizeof rgb, h);
  os << hex64(h);
  return os.str();
}

DomainStyle default_style(DomainTag tag, int num_classes) {
  DomainStyle st;
  st.tag = tag;
  std::vector<std::array<double, 3>> base(static_cast<std::size_t>(num_classes));
  base[0] = {0.15, 0.17, 0.20};
  for (int c = 1; c < num_classes; ++c)
    base[static_cast<std::size_t>(c)] = hsv_to_rgb((c - 1) / static_cast<double>(num_classes - 1), 0.7, 0.85);
  if (tag == DomainTag::Source) {
    st.palette = base;
    st.noise_sigma = 0.02;
    st.transforms = {};
  } else {
    // The domain gap: permuted palette, rotated hues, a low-amplitude grating
    // and slightly heavier noise. Layout (and therefore labels) is shared.
    st.palette.resize(base.size());
    for (int c = 0; c < num_classes; ++c)
      st.palette[static_cast<std::size_t>(c)] = base[static_cast<std::size_t>((c + 1) % num_classes)];
    st.noise_sigma = 0.03;
    st.transforms = {{TransformKind::HueRotate, 60.0, 0, 0},
                     {TransformKind::SinusoidalGrating, 0, 4.0, 0.10}};
  }
  return st;
}

Sample render(const SceneSpec& scene, const DomainStyle& style, std::uint64_t rng_seed) {
  if (style.palette.size() < static_cast<std::size_t>(scene.num_classes))
    throw std::invalid_argument("render: palette smaller than num_classes");
  const int H = scene.height, W = scene.width;
  Tensor<int> lbl = rasterize_labels(scene);

  Tensor<float> img01({3, H, W});
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      const auto& rgb = style.palette[static_cast<std::size_t>(lbl.data[static_cast<std::size_t>(i) * W + j])];
      for (int c = 0; c < 3; ++c) img01.at3(c, i, j) = static_cast<float>(rgb[static_cast<std::size_t>(c)]);
    }
  for (const auto& t : style.transforms) apply_transform(t, img01);

  Sample s;
  s.image = Tensor<float>({3, H, W});
  Rng noise = Rng::derive(rng_seed, 0x4015e);
  for (std::size_t i = 0; i < img01.numel(); ++i) {
    double v = img01.data[i] * 2.0 - 1.0;
    if (style.noise_sigma > 0) v += style.noise_sigma * noise.normal();
    s.image.data[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  s.label = std::move(lbl);
  return s;
}

// ---------------------------------------------------------------------------
// Crops and flips.
// ---------------------------------------------------------------------------
Sample random_crop(const Sample& s, int crop_h, int crop_w, Rng& rng) {
  const int H = s.image.shape[1], W = s.image.shape[2];
  if (crop_h > H || crop_w > W || crop_h <= 0 || crop_w <= 0)
    throw std::invalid_argument("random_crop: crop larger than canvas");
  const int dy = rng.uniform_int(0, H - crop_h);
  const int dx = rng.uniform_int(0, W - crop_w);
  Sample out;
  out.image = Tensor<float>({3, crop_h, crop_w});
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < crop_h; ++i)
      for (int j = 0; j < crop_w; ++j) out.image.at3(c, i, j) = s.image.at3(c, i + dy, j + dx);
  if (s.label) {
    Tensor<int> lbl({crop_h, crop_w});
    for (int i = 0; i < crop_h; ++i)
      for (int j = 0; j < crop_w; ++j)
        lbl.data[static_cast<std::size_t>(i) * crop_w + j] =
            s.label->data[static_cast<std::size_t>(i + dy) * W + (j + dx)];
    out.label = std::move(lbl);
  }
  return out;
}

void hflip_inplace(Sample& s) {
  const int H = s.image.shape[1], W = s.image.shape[2];
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W / 2; ++j) std::swap(s.image.at3(c, i, j), s.image.at3(c, i, W - 1 - j));
  if (s.label)
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W / 2; ++j)
        std::swap(s.label->data[static_cast<std::size_t>(i) * W + j],
                  s.label->data[static_cast<std::size_t>(i) * W + (W - 1 - j)]);
}

// ---------------------------------------------------------------------------
// PNM IO.
// ---------------------------------------------------------------------------
namespace {

// Reads one PNM header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

struct PnmHeader {
  int w = 0, h = 0, maxval = 0;
};

PnmHeader read_header(std::istream& in, const char* magic, const fs::path& path) {
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != magic[0] || m1 != magic[1])
    throw PnmError(PnmError::Kind::BadMagic, path.string() + ": bad magic, expected " + magic);
  auto parse_int = [&](const char* what) {
    const std::string tok = next_token(in);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw PnmError(PnmError::Kind::BadHeader, path.string() + ": malformed " + what + " field");
    return std::stoi(tok);
  };
  PnmHeader hd;
  hd.w = parse_int("width");
  hd.h = parse_int("height");
  if (hd.w <= 0 || hd.h <= 0 || hd.w > 1 << 16 || hd.h > 1 << 16)
    throw PnmError(PnmError::Kind::BadDims, path.string() + ": dimensions out of range");
  hd.maxval = parse_int("maxval");
  if (hd.maxval != 255)
    throw PnmError(PnmError::Kind::BadMaxval, path.string() + ": maxval must be 255");
  return hd;
}

std::vector<std::uint8_t> read_payload(std::istream& in, std::size_t n, const fs::path& path) {
  std::vector<std::uint8_t> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw PnmError(PnmError::Kind::Truncated, path.string() + ": truncated payload");
  return buf;
}

std::uint8_t quantize(float v) {
  const double v01 = (static_cast<double>(v) + 1.0) / 2.0;
  const long q = std::lround(v01 * 255.0);
  return static_cast<std::uint8_t>(std::clamp(q, 0l, 255l));
}

float dequantize(std::uint8_t b) { return static_cast<float>(b / 255.0 * 2.0 - 1.0); }

void write_file(const fs::path& path, const std::string& header, const std::uint8_t* payload,
                std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PnmError(PnmError::Kind::Io, "cannot open for write: " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload), static_cast<std::streamsize>(n));
  if (!out) throw PnmError(PnmError::Kind::Io, "write failed: " + path.string());
}

}  // namespace

void write_image_ppm(const fs::path& path, const Tensor<float>& image) {
  const int H = image.shape[1], W = image.shape[2];
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(H) * W * 3);
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j)
      for (int c = 0; c < 3; ++c)
        bytes[(static_cast<std::size_t>(i) * W + j) * 3 + c] = quantize(image.at3(c, i, j));
  std::ostringstream hd;
  hd << "P6\n" << W << " " << H << "\n255\n";
  write_file(path, hd.str(), bytes.data(), bytes.size());
}

Tensor<float> read_image_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PnmError(PnmError::Kind::Io, "cannot open: " + path.string());
  const PnmHeader hd = read_header(in, "P6", path);
  const auto bytes = read_payload(in, static_cast<std::size_t>(hd.w) * hd.h * 3, path);
  Tensor<float> img({3, hd.h, hd.w});
  for (int i = 0; i < hd.h; ++i)
    for (int j = 0; j < hd.w; ++j)
      for (int c = 0; c < 3; ++c)
        img.at3(c, i, j) = dequantize(bytes[(static_cast<std::size_t>(i) * hd.w + j) * 3 + c]);
  return img;
}

void write_label_pgm(const fs::path& path, const Tensor<int>& label) {
  const int H = label.shape[0], W = label.shape[1];
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(H) * W);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const int v = label.data[i];
    if (v < 0 || v > 255) throw std::invalid_argument("write_label_pgm: label out of byte range");
    bytes[i] = static_cast<std::uint8_t>(v);
  }
  std::ostringstream hd;
  hd << "P5\n" << W << " " << H << "\n255\n";
  write_file(path, hd.str(), bytes.data(), bytes.size());
}

Tensor<int> read_label_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PnmError(PnmError::Kind::Io, "cannot open: " + path.string());
  const PnmHeader hd = read_header(in, "P5", path);
  const auto bytes = read_payload(in, static_cast<std::size_t>(hd.w) * hd.h, path);
  Tensor<int> lbl({hd.h, hd.w});
  for (std::size_t i = 0; i < bytes.size(); ++i) lbl.data[i] = bytes[i];
  return lbl;
}

void write_sample(const fs::path& image_path, const Sample& s,
                  const std::optional<fs::path>& label_path) {
  write_image_ppm(image_path, s.image);
  if (label_path) {
    if (!s.label) throw std::invalid_argument("write_sample: no label to write");
    write_label_pgm(*label_path, *s.label);
  }
}

Sample read_sample(const fs::path& image_path, const std::optional<fs::path>& label_path) {
  Sample s;
  s.image = read_image_ppm(image_path);
  if (label_path) s.label = read_label_pgm(*label_path);
  return s;
}

// ---------------------------------------------------------------------------
// Dataset build.
// ---------------------------------------------------------------------------
namespace {

std::string img_name(const char* split, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/img_%05d.ppm", split, i);
  return buf;
}
std::string lbl_name(const char* split, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/lbl_%05d.pgm", split, i);
  return buf;
}

std::uint64_t file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read back for digest: " + p.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

// Scene seeds: disjoint arithmetic streams keep the splits unpaired.
std::uint64_t scene_seed(const GenConfig& cfg, int split, int index) {
  return cfg.seed + 3ull * static_cast<std::uint64_t>(index) + static_cast<std::uint64_t>(split);
}

}  // namespace

DatasetManifest build_dataset(const GenConfig& cfg, const fs::path& root) {
  if (cfg.source_count <= 0 || cfg.target_count <= 0 || cfg.eval_count <= 0)
    throw DataError("build_dataset: split sizes must be positive");
  const DomainStyle src_style = cfg.source_style_or_default();
  const DomainStyle tgt_style = cfg.target_style_or_default();
  if (src_style.palette == tgt_style.palette && src_style.transforms == tgt_style.transforms)
    throw DataError("build_dataset: source and target styles must differ");

  std::error_code ec;
  fs::create_directories(root / "source", ec);
  fs::create_directories(root / "target", ec);
  fs::create_directories(root / "eval", ec);
  if (ec) throw DataError("build_dataset: cannot create directories under " + root.string());
  if (!fs::is_directory(root / "source") || !fs::is_directory(root / "target") ||
      !fs::is_directory(root / "eval"))
    throw DataError("build_dataset: destination not writable: " + root.string());

  DatasetManifest m;
  m.root = root;
  m.config = cfg;
  m.source_style = src_style.describe();
  m.target_style = tgt_style.describe();

  struct Job {
    std::string img, lbl;  // lbl empty when unlabeled on disk
    std::uint64_t seed;
    const DomainStyle* style;
  };
  std::vector<Job> jobs;
  for (int i = 0; i < cfg.source_count; ++i)
    jobs.push_back({img_name("source", i), lbl_name("source", i), scene_seed(cfg, 0, i), &src_style});
  for (int i = 0; i < cfg.target_count; ++i)
    jobs.push_back({img_name("target", i), "", scene_seed(cfg, 1, i), &tgt_style});
  for (int i = 0; i < cfg.eval_count; ++i)
    jobs.push_back({img_name("eval", i), lbl_name("eval", i), scene_seed(cfg, 2, i), &tgt_style});

  std::vector<std::string> errors(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), [&](int j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    const SceneSpec scene = generate_scene(job.seed, cfg.canvas_h, cfg.canvas_w, cfg.num_classes);
    const Sample s = render(scene, *job.style, job.seed);
    write_sample(root / job.img, s, job.lbl.empty() ? std::nullopt : std::optional<fs::path>(root / job.lbl));
  });

  for (const auto& job : jobs) {
    m.files.emplace_back(job.img, file_digest(root / job.img));
    if (!job.lbl.empty()) m.files.emplace_back(job.lbl, file_digest(root / job.lbl));
  }

  // Manifest goes last; its presence marks a complete dataset.
  const fs::path mpath = root / "manifest.txt";
  std::ofstream out(mpath, std::ios::trunc);
  if (!out) throw DataError("build_dataset: cannot write manifest");
  out << "canvas_h=" << cfg.canvas_h << "\ncanvas_w=" << cfg.canvas_w << "\nnum_classes="
      << cfg.num_classes << "\nseed=" << cfg.seed << "\nsource_count=" << cfg.source_count
      << "\ntarget_count=" << cfg.target_count << "\neval_count=" << cfg.eval_count
      << "\nsource_style=" << m.source_style << "\ntarget_style=" << m.target_style << "\n";
  for (const auto& [rel, dig] : m.files) out << "file " << rel << " " << hex64(dig) << "\n";
  if (!out.flush()) throw DataError("build_dataset: manifest write failed");
  return m;
}

DatasetManifest load_manifest(const fs::path& root) {
  std::ifstream in(root / "manifest.txt");
  if (!in) throw DataError("no manifest at " + (root / "manifest.txt").string());
  DatasetManifest m;
  m.root = root;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("file ", 0) == 0) {
      std::istringstream ls(line.substr(5));
      std::string rel, dig;
      ls >> rel >> dig;
      if (rel.empty() || dig.size() != 16) throw DataError("manifest: bad file line: " + line);
      m.files.emplace_back(rel, std::stoull(dig, nullptr, 16));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("manifest: bad line: " + line);
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "canvas_h") m.config.canvas_h = std::stoi(val);
    else if (key == "canvas_w") m.config.canvas_w = std::stoi(val);
    else if (key == "num_classes") m.config.num_classes = std::stoi(val);
    else if (key == "seed") m.config.seed = std::stoull(val);
    else if (key == "source_count") m.config.source_count = std::stoi(val);
    else if (key == "target_count") m.config.target_count = std::stoi(val);
    else if (key == "eval_count") m.config.eval_count = std::stoi(val);
    else if (key == "source_style") m.source_style = val;
    else if (key == "target_style") m.target_style = val;
    else throw DataError("manifest: unknown key: " + key);
  }
  return m;
}

void verify_manifest(const DatasetManifest& m) {
  for (const auto& [rel, dig] : m.files)
    if (file_digest(m.root / rel) != dig) throw DataError("digest mismatch for " + rel);
}

// ---------------------------------------------------------------------------
// Loading.
// ---------------------------------------------------------------------------
namespace {

StoredSample load_stored(const fs::path& img, const std::optional<fs::path>& lbl, int num_classes) {
  StoredSample s;
  {
    std::ifstream in(img, std::ios::binary);
    if (!in) throw DataError("cannot open: " + img.string());
    const PnmHeader hd = read_header(in, "P6", img);
    s.h = hd.h;
    s.w = hd.w;
    s.image = read_payload(in, static_cast<std::size_t>(hd.w) * hd.h * 3, img);
  }
  if (lbl) {
    std::ifstream in(*lbl, std::ios::binary);
    if (!in) throw DataError("cannot open: " + lbl->string());
    const PnmHeader hd = read_header(in, "P5", *lbl);
    if (hd.h != s.h || hd.w != s.w) throw DataError("label/image size mismatch: " + lbl->string());
    s.label = read_payload(in, static_cast<std::size_t>(hd.w) * hd.h, *lbl);
    for (auto v : s.label)
      if (v != kIgnoreIndex && v >= num_classes)
        throw DataError("label value out of range in " + lbl->string());
  }
  return s;
}

}  // namespace

Sample Dataset::decode(const StoredSample& s) const {
  Sample out;
  out.image = Tensor<float>({3, s.h, s.w});
  for (int i = 0; i < s.h; ++i)
    for (int j = 0; j < s.w; ++j)
      for (int c = 0; c < 3; ++c)
        out.image.at3(c, i, j) = dequantize(s.image[(static_cast<std::size_t>(i) * s.w + j) * 3 + c]);
  if (!s.label.empty()) {
    Tensor<int> lbl({s.h, s.w});
    for (std::size_t i = 0; i < s.label.size(); ++i) lbl.data[i] = s.label[i];
    out.label = std::move(lbl);
  }
  return out;
}

Dataset load_dataset(const fs::path& root, bool with_eval,
                     const std::optional<fs::path>& target_labels_dir) {
  const DatasetManifest m = load_manifest(root);
  Dataset ds;
  ds.config = m.config;
  ds.root = root;
  ds.source.resize(static_cast<std::size_t>(m.config.source_count));
  ds.target.resize(static_cast<std::size_t>(m.config.target_count));
  if (with_eval) ds.eval.resize(static_cast<std::size_t>(m.config.eval_count));

  const int C = m.config.num_classes;
  parallel_for(m.config.source_count, [&](int i) {
    ds.source[static_cast<std::size_t>(i)] =
        load_stored(root / img_name("source", i), root / lbl_name("source", i), C);
  });
  parallel_for(m.config.target_count, [&](int i) {
    std::optional<fs::path> lbl;
    if (target_labels_dir) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "lbl_%05d.pgm", i);
      lbl = *target_labels_dir / buf;
    }
    ds.target[static_cast<std::size_t>(i)] = load_stored(root / img_name("target", i), lbl, C);
  });
  if (with_eval)
    parallel_for(m.config.eval_count, [&](int i) {
      ds.eval[static_cast<std::size_t>(i)] =
          load_stored(root / img_name("eval", i), root / lbl_name("eval", i), C);
    });
  return ds;
}

}  // namespace trident::datagen
