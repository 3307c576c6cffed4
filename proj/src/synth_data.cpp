// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/synth_data.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csg/error.hpp"
#include "csg/image_io.hpp"

namespace csg {

namespace {

namespace fs = std::filesystem;

constexpr std::array<std::array<int, 3>, 6> kPerms = {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};

// Rotation about the gray axis (1,1,1)/sqrt(3); preserves the channel sum, so
// grayscale content survives palette changes exactly (up to clamping).
std::array<double, 9> gray_axis_rotation(double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  double a = 1.0 / std::sqrt(3.0);
  double one_c = 1.0 - c;
  std::array<double, 9> m{};
  // R = c*I + s*[a]_x + (1-c) * a a^T with a = (1,1,1)/sqrt(3)
  m[0] = c + one_c / 3.0;
  m[1] = one_c / 3.0 - s * a;
  m[2] = one_c / 3.0 + s * a;
  m[3] = one_c / 3.0 + s * a;
  m[4] = c + one_c / 3.0;
  m[5] = one_c / 3.0 - s * a;
  m[6] = one_c / 3.0 - s * a;
  m[7] = one_c / 3.0 + s * a;
  m[8] = c + one_c / 3.0;
  return m;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Saturated palette around the hue circle with alternating value levels.
std::vector<std::array<double, 3>> quantize_palette(int size, double hue_offset) {
  std::vector<std::array<double, 3>> out;
  for (int i = 0; i < size; ++i) {
    double hue = hue_offset + i * 2.0 * 3.14159265358979323846 / size;
    double value = i % 2 == 0 ? 0.9 : 0.4;
    // hue to rgb on the value-scaled hexagon, saturation 0.85
    double hh = std::fmod(hue / (3.14159265358979323846 / 3.0), 6.0);
    if (hh < 0) hh += 6.0;
    double c = value * 0.85;
    double xx = c * (1.0 - std::abs(std::fmod(hh, 2.0) - 1.0));
    double m = value - c;
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hh)) {
      case 0: r = c, g = xx; break;
      case 1: r = xx, g = c; break;
      case 2: g = c, b = xx; break;
      case 3: g = xx, b = c; break;
      case 4: r = xx, b = c; break;
      default: r = c, b = xx; break;
    }
    out.push_back({clamp01(r + m), clamp01(g + m), clamp01(b + m)});
  }
  return out;
}

}  // namespace

StyleTransform StyleTransform::from_id(int style_id) {
  check(style_id >= 0, "style: negative style id");
  StyleTransform st;
  int variant = style_id / 4;
  switch (style_id % 4) {
    case 0:
      st.kind = StyleKind::palette_remap;
      st.perm = 1 + (style_id * 7 + 3) % 5;  // never the identity permutation
      st.angle = 1.2 + 0.5 * variant;
      break;
    case 1:
      st.kind = StyleKind::stripe_texture;
      st.stripe_horizontal = variant % 2 == 0;
      st.stripe_alpha = 0.5 + 0.1 * (variant % 3);
      st.stripe_lo = 0.05;
      st.stripe_hi = 0.95;
      break;
    case 2:
      st.kind = StyleKind::edge_outline;
      st.edge_threshold = 0.03;
      st.edge_strength = 1.0 - 0.1 * (variant % 2);
      break;
    default:
      st.kind = StyleKind::block_quantize;
      st.quant_block = 4;
      st.quant_palette = 4;
      st.quant_hue = 0.6 * variant;
      break;
  }
  return st;
}

ImageTensor gen_content(uint64_t seed, int size) {
  check(size >= 8 && size % 2 == 0, "gen_content: size must be even and >= 8");
  Rng rng(seed, 0x636f6e74656e74ull);  // "content" stream
  size_t plane = static_cast<size_t>(size) * size;
  std::vector<double> data(3 * plane);

  double bg[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
  for (int c = 0; c < 3; ++c) std::fill_n(data.begin() + static_cast<long>(c) * plane, plane, bg[c]);

  int num_shapes = 1 + rng.below(4);
  for (int s = 0; s < num_shapes; ++s) {
    double col[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    bool disk = rng.bernoulli(0.5);
    if (disk) {
      double cy = rng.uniform() * size;
      double cx = rng.uniform() * size;
      double r = size * (0.125 + rng.uniform() * 0.21);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
          if (dy * dy + dx * dx <= r * r) {
            for (int c = 0; c < 3; ++c)
              data[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * size + x] = col[c];
          }
        }
    } else {
      int x0 = rng.below(size), y0 = rng.below(size);
      int w = 2 + rng.below(std::max(2, size / 2));
      int h = 2 + rng.below(std::max(2, size / 2));
      for (int y = y0; y < std::min(size, y0 + h); ++y)
        for (int x = x0; x < std::min(size, x0 + w); ++x)
          for (int c = 0; c < 3; ++c)
            data[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * size + x] = col[c];
    }
  }
  return ImageTensor(Tensor::from_data({3, size, size}, std::move(data)));
}

ImageTensor apply_style(const StyleTransform& style, const ImageTensor& img) {
  int h = img.height(), w = img.width();
  size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> data(img.tensor().data());

  switch (style.kind) {
    case StyleKind::palette_remap: {
      check(style.perm >= 0 && style.perm < 6, "palette_remap: invalid permutation index");
      auto rot = gray_axis_rotation(style.angle);
      const auto& perm = kPerms[static_cast<size_t>(style.perm)];
      for (size_t i = 0; i < plane; ++i) {
        double v[3] = {data[i], data[plane + i], data[2 * plane + i]};
        double r[3];
        for (int c = 0; c < 3; ++c)
          r[c] = rot[static_cast<size_t>(c) * 3] * v[0] + rot[static_cast<size_t>(c) * 3 + 1] * v[1] +
                 rot[static_cast<size_t>(c) * 3 + 2] * v[2];
        // Gamut-map by desaturating toward the pixel's gray level instead of
        // clamping channels; the chroma offsets sum to zero, so the gray
        // level (and thus grayscale structure) is preserved exactly.
        double g = (r[0] + r[1] + r[2]) / 3.0;
        double s = 1.0;
        for (int c = 0; c < 3; ++c) {
          double delta = r[c] - g;
          if (g + delta > 1.0) s = std::min(s, (1.0 - g) / delta);
          if (g + delta < 0.0) s = std::min(s, -g / delta);
        }
        s = std::max(0.0, s);
        for (int c = 0; c < 3; ++c) r[c] = g + s * (r[c] - g);
        for (int c = 0; c < 3; ++c)
          data[static_cast<size_t>(c) * plane + i] =
              clamp01(r[static_cast<size_t>(perm[static_cast<size_t>(c)])]);
      }
      break;
    }
    case StyleKind::stripe_texture: {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          int band = style.stripe_horizontal ? y : x;
          double stripe = band % 2 == 0 ? style.stripe_lo : style.stripe_hi;
          for (int c = 0; c < 3; ++c) {
            size_t idx = static_cast<size_t>(c) * plane + static_cast<size_t>(y) * w + x;
            data[idx] = clamp01((1.0 - style.stripe_alpha) * data[idx] + style.stripe_alpha * stripe);
          }
        }
      break;
    }
    case StyleKind::edge_outline: {
      // Gradient magnitude of the grayscale image via forward differences.
      std::vector<double> gray(plane);
      for (size_t i = 0; i < plane; ++i)
        gray[i] = (data[i] + data[plane + i] + data[2 * plane + i]) / 3.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double gx = x + 1 < w ? gray[static_cast<size_t>(y) * w + x + 1] - gray[static_cast<size_t>(y) * w + x] : 0;
          double gy = y + 1 < h ? gray[(static_cast<size_t>(y) + 1) * w + x] - gray[static_cast<size_t>(y) * w + x] : 0;
          if (std::sqrt(gx * gx + gy * gy) > style.edge_threshold) {
            for (int c = 0; c < 3; ++c) {
              size_t idx = static_cast<size_t>(c) * plane + static_cast<size_t>(y) * w + x;
              data[idx] = clamp01(data[idx] * (1.0 - style.edge_strength));
            }
          }
        }
      break;
    }
    case StyleKind::block_quantize: {
      // Adaptive posterization: block luminance quantiles map onto a fixed
      // per-style palette (ordered dark to bright), so every quantized image
      // uses the whole palette in near-equal proportions.
      int bs = style.quant_block;
      check(bs > 0 && style.quant_palette >= 2, "block_quantize: invalid parameters");
      auto palette = quantize_palette(style.quant_palette, style.quant_hue);
      std::sort(palette.begin(), palette.end(),
                [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
                  return a[0] + a[1] + a[2] < b[0] + b[1] + b[2];
                });
      struct Block {
        int y0, x0;
        double luminance;
        size_t order;
      };
      std::vector<Block> blocks;
      for (int y0 = 0; y0 < h; y0 += bs)
        for (int x0 = 0; x0 < w; x0 += bs) {
          int y1 = std::min(h, y0 + bs), x1 = std::min(w, x0 + bs);
          double acc = 0;
          for (int c = 0; c < 3; ++c)
            for (int y = y0; y < y1; ++y)
              for (int x = x0; x < x1; ++x)
                acc += data[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * w + x];
          acc /= static_cast<double>(3 * (y1 - y0) * (x1 - x0));
          blocks.push_back(Block{y0, x0, acc, blocks.size()});
        }
      std::sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
        if (a.luminance != b.luminance) return a.luminance < b.luminance;
        return a.order < b.order;  // deterministic tie-break
      });
      size_t nblocks = blocks.size();
      for (size_t r = 0; r < nblocks; ++r) {
        size_t p = r * palette.size() / nblocks;
        const Block& blk = blocks[r];
        int y1 = std::min(h, blk.y0 + bs), x1 = std::min(w, blk.x0 + bs);
        for (int c = 0; c < 3; ++c)
          for (int y = blk.y0; y < y1; ++y)
            for (int x = blk.x0; x < x1; ++x)
              data[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * w + x] =
                  palette[p][static_cast<size_t>(c)];
      }
      break;
    }
  }
  return ImageTensor(Tensor::from_data({3, h, w}, std::move(data)));
}

std::vector<FourTuple> gen_dataset(const DatasetConfig& cfg) {
  check(cfg.n >= 1, "gen_dataset: n must be >= 1");
  check(cfg.num_styles >= 2, "gen_dataset: num_styles must be >= 2");
  std::vector<int> allowed;
  for (int s = 0; s < cfg.num_styles; ++s) {
    if (!cfg.holdout_styles.count(s)) allowed.push_back(s);
  }
  check(!allowed.empty(), "gen_dataset: all styles held out");

  std::vector<FourTuple> out;
  out.reserve(static_cast<size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) {
    // Per-tuple derived seeds keep generation order-independent.
    uint64_t tuple_seed = cfg.seed + static_cast<uint64_t>(i);
    Rng rng(tuple_seed, 0x7475706c65ull);  // "tuple" stream
    int style_id = allowed[static_cast<size_t>(rng.below(static_cast<int>(allowed.size())))];
    StyleTransform style = StyleTransform::from_id(style_id);
    uint64_t content_seed = rng.next_u64();
    uint64_t ref_seed = rng.next_u64();
    ImageTensor source = gen_content(content_seed, cfg.size);
    ImageTensor ref = apply_style(style, gen_content(ref_seed, cfg.size));
    ImageTensor gt = apply_style(style, source);
    out.push_back(FourTuple{style_id, std::move(ref), std::move(source), std::move(gt), tuple_seed});
  }
  return out;
}

void save_dataset(const std::vector<FourTuple>& tuples, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  check(manifest.good(), "save_dataset: cannot open manifest in " + dir);
  for (size_t i = 0; i < tuples.size(); ++i) {
    const FourTuple& t = tuples[i];
    std::ostringstream base;
    base << std::setfill('0') << std::setw(5) << i;
    std::string ref = base.str() + "_ref.ppm";
    std::string src = base.str() + "_source.ppm";
    std::string gt = base.str() + "_gt.ppm";
    save_ppm(t.img_ref, (fs::path(dir) / ref).string());
    save_ppm(t.img_source, (fs::path(dir) / src).string());
    save_ppm(t.img_gt, (fs::path(dir) / gt).string());
    manifest << i << " " << t.style_id << " " << t.seed << " " << ref << " " << src << " " << gt
             << "\n";
  }
  check(manifest.good(), "save_dataset: manifest write failed in " + dir);
}

std::vector<FourTuple> load_dataset(const std::string& dir) {
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  check(manifest.good(), "load_dataset: cannot open manifest in " + dir);
  std::vector<FourTuple> out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    size_t idx = 0;
    int style_id = 0;
    uint64_t seed = 0;
    std::string ref, src, gt;
    ss >> idx >> style_id >> seed >> ref >> src >> gt;
    check(!ss.fail(), "load_dataset: malformed manifest line: " + line);
    out.push_back(FourTuple{style_id, load_ppm((fs::path(dir) / ref).string()),
                            load_ppm((fs::path(dir) / src).string()),
                            load_ppm((fs::path(dir) / gt).string()), seed});
  }
  check(!out.empty(), "load_dataset: empty dataset in " + dir);
  return out;
}

}  // namespace csg
