// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/image_io.hpp"

#include <cmath>
#include <fstream>

#include "csg/error.hpp"

namespace csg {

void save_ppm(const ImageTensor& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "save_ppm: cannot open " + path);
  int h = img.height(), w = img.width();
  out << "P6\n" << w << " " << h << "\n255\n";
  const auto& d = img.tensor().data();
  size_t plane = static_cast<size_t>(h) * w;
  std::string row;
  row.reserve(plane * 3);
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      double v = d[static_cast<size_t>(c) * plane + i];
      int q = static_cast<int>(std::lround(v * 255.0));
      row.push_back(static_cast<char>(std::clamp(q, 0, 255)));
    }
  }
  out.write(row.data(), static_cast<std::streamsize>(row.size()));
  check(out.good(), "save_ppm: write failed for " + path);
}

ImageTensor load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "load_ppm: cannot open " + path);
  std::string magic;
  in >> magic;
  check(magic == "P6", "load_ppm: bad magic in " + path);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  check(w > 0 && h > 0 && maxval == 255, "load_ppm: unsupported header in " + path);
  in.get();  // single whitespace after header
  size_t plane = static_cast<size_t>(h) * w;
  std::vector<char> raw(plane * 3);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  check(in.gcount() == static_cast<std::streamsize>(raw.size()),
        "load_ppm: truncated file " + path);
  std::vector<double> data(plane * 3);
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      data[static_cast<size_t>(c) * plane + i] =
          static_cast<double>(static_cast<unsigned char>(raw[i * 3 + static_cast<size_t>(c)])) /
          255.0;
    }
  }
  return ImageTensor(Tensor::from_data({3, h, w}, std::move(data)));
}

void save_pgm_signed(const Tensor& plane, const std::string& path) {
  check(plane.rank() == 2 || (plane.rank() == 3 && plane.dim(0) == 1),
        "save_pgm: expected a single plane, got shape " + shape_str(plane.shape()));
  int h = plane.rank() == 2 ? plane.dim(0) : plane.dim(1);
  int w = plane.rank() == 2 ? plane.dim(1) : plane.dim(2);
  double scale = 0;
  for (double v : plane.data()) scale = std::max(scale, std::abs(v));
  if (scale == 0) scale = 1;
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "save_pgm: cannot open " + path);
  out << "P5\n" << w << " " << h << "\n255\n";
  std::string row;
  row.reserve(plane.data().size());
  for (double v : plane.data()) {
    int q = 128 + static_cast<int>(std::lround(127.0 * v / scale));
    row.push_back(static_cast<char>(std::clamp(q, 0, 255)));
  }
  out.write(row.data(), static_cast<std::streamsize>(row.size()));
  check(out.good(), "save_pgm: write failed for " + path);
}

}  // namespace csg
