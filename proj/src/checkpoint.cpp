// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "csg/error.hpp"

namespace csg {

namespace {

void put_u16(std::string& buf, uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) {
    check(pos + n <= buf.size(), "checkpoint: truncated file");
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(static_cast<unsigned char>(buf[pos]) |
                                       (static_cast<unsigned char>(buf[pos + 1]) << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<size_t>(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf[pos++]);
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void write_checkpoint_records(const NamedTensors& records, const std::string& path) {
  std::string buf;
  buf += "CSGF";
  put_u32(buf, kCheckpointVersion);
  put_u32(buf, static_cast<uint32_t>(records.size()));
  for (const auto& [name, t] : records) {
    check(name.size() <= 0xffff, "checkpoint: record name too long: " + name);
    put_u16(buf, static_cast<uint16_t>(name.size()));
    buf += name;
    put_u32(buf, static_cast<uint32_t>(t.rank()));
    for (int d : t.shape()) put_u32(buf, static_cast<uint32_t>(d));
    buf.push_back(t.dtype() == DType::F32 ? 1 : 0);
    if (t.dtype() == DType::F32) {
      for (double v : t.data()) {
        float f = static_cast<float>(v);
        put_u32(buf, std::bit_cast<uint32_t>(f));
      }
    } else {
      for (double v : t.data()) put_u64(buf, std::bit_cast<uint64_t>(v));
    }
  }
  uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary);
  check(out.good(), "checkpoint: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  check(out.good(), "checkpoint: write failed for " + path);
}

NamedTensors read_checkpoint_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  check(buf.size() >= 16, "checkpoint: truncated file");
  uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= static_cast<uint32_t>(static_cast<unsigned char>(buf[buf.size() - 4 + static_cast<size_t>(i)]))
                  << (8 * i);
  uint32_t actual_crc = static_cast<uint32_t>(crc32(
      0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size() - 4)));
  check(stored_crc == actual_crc, "checkpoint: checksum mismatch");

  Reader r{buf};
  check(r.bytes(4) == "CSGF", "checkpoint: bad magic");
  uint32_t version = r.u32();
  check(version == kCheckpointVersion,
        "checkpoint: unsupported version " + std::to_string(version));
  uint32_t count = r.u32();

  NamedTensors out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t name_len = r.u16();
    std::string name = r.bytes(name_len);
    uint32_t rank = r.u32();
    check(rank <= 8, "checkpoint: implausible rank in record " + name);
    Shape shape;
    int64_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      uint32_t dim = r.u32();
      check(dim > 0 && dim < (1u << 24), "checkpoint: implausible dim in record " + name);
      shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    uint8_t flag = r.u8();
    check(flag == 0 || flag == 1, "checkpoint: unknown dtype flag in record " + name);
    std::vector<double> data(static_cast<size_t>(n));
    if (flag == 1) {
      for (double& v : data) v = static_cast<double>(std::bit_cast<float>(r.u32()));
    } else {
      for (double& v : data) v = std::bit_cast<double>(r.u64());
    }
    out.emplace_back(std::move(name),
                     Tensor::from_data(std::move(shape), std::move(data),
                                       flag == 1 ? DType::F32 : DType::F64));
  }
  check(r.pos == buf.size() - 4, "checkpoint: trailing bytes before checksum");
  return out;
}

}  // namespace csg
