// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural training data: random shape images plus deterministic style
// transforms. Each four-tuple carries a style id, a reference image (the
// style applied to a different content), a clean content image, and the
// ground-truth stylized content. By construction gt == apply_style(source),
// so the generator doubles as the oracle for every downstream metric.

#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "csg/codec.hpp"
#include "csg/rng.hpp"

namespace csg {

enum class StyleKind { palette_remap, stripe_texture, edge_outline, block_quantize };

struct StyleTransform {
  StyleKind kind = StyleKind::palette_remap;
  // palette_remap: channel permutation index (0 = identity) and rotation
  // angle about the gray axis; rotation preserves the channel sum, so
  // grayscale structure survives the remap.
  int perm = 0;
  double angle = 0.0;
  // stripe_texture
  double stripe_alpha = 0.5;
  bool stripe_horizontal = true;
  double stripe_lo = 0.05, stripe_hi = 0.95;
  // edge_outline
  double edge_threshold = 0.03;
  double edge_strength = 1.0;
  // block_quantize: block means snap to the nearest entry of a fixed
  // palette, giving every quantized image the same reduced color set.
  int quant_block = 4;
  int quant_palette = 4;      // palette size
  double quant_hue = 0.0;     // palette hue offset in radians

  // Deterministic transform for a style id; ids cycle through the four kinds
  // with parameter variants.
  static StyleTransform from_id(int style_id);
};

struct FourTuple {
  int style_id = 0;
  ImageTensor img_ref;     // style applied to a different content
  ImageTensor img_source;  // clean content
  ImageTensor img_gt;      // style applied to img_source
  uint64_t seed = 0;
};

struct DatasetConfig {
  int n = 256;
  int num_styles = 4;
  int size = 16;
  uint64_t seed = 0;
  std::set<int> holdout_styles;  // excluded style ids
};

ImageTensor gen_content(uint64_t seed, int size);
ImageTensor apply_style(const StyleTransform& style, const ImageTensor& img);
std::vector<FourTuple> gen_dataset(const DatasetConfig& cfg);

// Dataset directory: numbered PPM triples plus a manifest
// (one line per tuple: index, style_id, seeds, file paths).
void save_dataset(const std::vector<FourTuple>& tuples, const std::string& dir);
std::vector<FourTuple> load_dataset(const std::string& dir);

}  // namespace csg
