#include "lcc/png_io.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>

#include "lcc/common.hpp"

namespace lcc {

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

uint32_t get_u32_be(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const uint8_t* data, size_t len) {
  put_u32_be(out, uint32_t(len));
  size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data, data + len);
  uLong crc = crc32(0L, out.data() + type_at, uInt(4 + len));
  put_u32_be(out, uint32_t(crc));
}

constexpr uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void write_png_rgb(const std::string& path, uint32_t width, uint32_t height,
                   const std::vector<uint8_t>& rgb) {
  if (width == 0 || height == 0 || rgb.size() != size_t(width) * height * 3)
    throw Error(Err::ShapeMismatch, "png buffer does not match dimensions");

  // raw scanlines, filter byte 0 per row
  const size_t stride = size_t(width) * 3;
  std::vector<uint8_t> raw((stride + 1) * height);
  for (uint32_t y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0;
    std::memcpy(&raw[y * (stride + 1) + 1], &rgb[y * stride], stride);
  }

  uLongf comp_cap = compressBound(uLong(raw.size()));
  std::vector<uint8_t> comp(comp_cap);
  if (compress2(comp.data(), &comp_cap, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw Error(Err::IoFailure, "zlib compress failed");
  comp.resize(comp_cap);

  std::vector<uint8_t> out;
  out.insert(out.end(), kPngSig, kPngSig + 8);
  uint8_t ihdr[13];
  ihdr[0] = uint8_t(width >> 24); ihdr[1] = uint8_t(width >> 16);
  ihdr[2] = uint8_t(width >> 8);  ihdr[3] = uint8_t(width);
  ihdr[4] = uint8_t(height >> 24); ihdr[5] = uint8_t(height >> 16);
  ihdr[6] = uint8_t(height >> 8);  ihdr[7] = uint8_t(height);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // color type: truecolor
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter method
  ihdr[12] = 0;  // no interlace
  append_chunk(out, "IHDR", ihdr, sizeof(ihdr));
  append_chunk(out, "IDAT", comp.data(), comp.size());
  append_chunk(out, "IEND", nullptr, 0);

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(Err::IoFailure, "cannot open " + path);
  size_t n = std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);
  if (n != out.size()) throw Error(Err::IoFailure, "short write to " + path);
}

PngImage read_png_rgb(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw Error(Err::IoFailure, "cannot open " + path);
  std::vector<uint8_t> bytes;
  uint8_t buf[65536];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) bytes.insert(bytes.end(), buf, buf + n);
  std::fclose(f);

  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
    throw Error(Err::BadMagic, "not a PNG file: " + path);

  PngImage img;
  std::vector<uint8_t> idat;
  size_t at = 8;
  uint8_t bit_depth = 0, color_type = 0, interlace = 0;
  while (at + 8 <= bytes.size()) {
    uint32_t len = get_u32_be(&bytes[at]);
    if (at + 12 + len > bytes.size())
      throw Error(Err::TruncatedPayload, "truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(&bytes[at + 4]);
    const uint8_t* data = &bytes[at + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      img.width = get_u32_be(data);
      img.height = get_u32_be(data + 4);
      bit_depth = data[8];
      color_type = data[9];
      interlace = data[12];
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    at += 12 + len;
  }
  if (bit_depth != 8 || color_type != 2 || interlace != 0)
    throw Error(Err::UnsupportedVersion, "only 8-bit RGB non-interlaced PNG supported");
  if (img.width == 0 || img.height == 0)
    throw Error(Err::InvalidHeader, "zero PNG dimension");

  const size_t stride = size_t(img.width) * 3;
  std::vector<uint8_t> raw((stride + 1) * img.height);
  uLongf raw_len = uLongf(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw Error(Err::TruncatedPayload, "PNG inflate failed");

  img.rgb.assign(stride * img.height, 0);
  // undo per-row filter; bpp = 3
  for (uint32_t y = 0; y < img.height; y++) {
    uint8_t filter = raw[y * (stride + 1)];
    const uint8_t* src = &raw[y * (stride + 1) + 1];
    uint8_t* cur = &img.rgb[y * stride];
    const uint8_t* up = y > 0 ? &img.rgb[(y - 1) * stride] : nullptr;
    for (size_t x = 0; x < stride; x++) {
      int a = x >= 3 ? cur[x - 3] : 0;
      int b = up ? up[x] : 0;
      int c = (up && x >= 3) ? up[x - 3] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw Error(Err::InvalidHeader, "unknown PNG filter");
      }
      cur[x] = uint8_t(v);
    }
  }
  return img;
}

}  // namespace lcc
