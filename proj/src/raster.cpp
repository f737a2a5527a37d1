#include "lcc/raster.hpp"

#include <cstdio>
#include <cstring>

#include "lcc/png_io.hpp"

namespace lcc {

Raster Raster::make_u8(uint32_t w, uint32_t h, uint16_t bands, uint8_t fill) {
  Raster r;
  r.width = w;
  r.height = h;
  r.bands = bands;
  r.dtype = Dtype::U8;
  r.u8.assign(size_t(w) * h * bands, fill);
  return r;
}

Raster Raster::make_f32(uint32_t w, uint32_t h, uint16_t bands, float fill) {
  Raster r;
  r.width = w;
  r.height = h;
  r.bands = bands;
  r.dtype = Dtype::F32;
  r.f32.assign(size_t(w) * h * bands, fill);
  return r;
}

void Raster::validate() const {
  if (width < 1 || height < 1 || bands < 1)
    throw Error(Err::InvalidHeader, "raster dimensions must be >= 1");
  size_t want = sample_count();
  size_t have = dtype == Dtype::U8 ? u8.size() : f32.size();
  size_t other = dtype == Dtype::U8 ? f32.size() : u8.size();
  if (have != want || other != 0)
    throw Error(Err::ShapeMismatch, "raster data length does not match dimensions");
}

uint8_t scheme_max_id(Scheme s) {
  switch (s) {
    case Scheme::NlcdIds: return 14;
    case Scheme::TargetIds: return 3;
    case Scheme::ChangeCodes: return 8;
    case Scheme::Mask: return 1;
    case Scheme::Raw: return 255;
  }
  return 255;
}

namespace {

constexpr char kMagic[4] = {'L', 'C', 'R', 'T'};
constexpr uint16_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 24));
}
uint16_t get_u16(const uint8_t* p) { return uint16_t(p[0] | (p[1] << 8)); }
uint32_t get_u32(const uint8_t* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}

bool is_id_scheme(Scheme s) { return s != Scheme::Raw; }

}  // namespace

std::vector<uint8_t> encode_tile(const Raster& r, Scheme scheme) {
  r.validate();
  if (r.width > kMaxTileDimension || r.height > kMaxTileDimension)
    throw Error(Err::OversizeDimension, "tile dimension exceeds 2^20");
  if (is_id_scheme(scheme)) {
    if (r.dtype != Dtype::U8)
      throw Error(Err::SchemeDtypeMismatch, "scheme tags 1-4 require U8 data");
    if (r.bands != 1)
      throw Error(Err::SchemeDtypeMismatch, "scheme tags 1-4 require a single band");
  }

  std::vector<uint8_t> out;
  out.reserve(kTileHeaderSize + r.sample_count() * dtype_size(r.dtype));
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  put_u32(out, r.width);
  put_u32(out, r.height);
  put_u16(out, r.bands);
  out.push_back(uint8_t(r.dtype));
  out.push_back(uint8_t(scheme));
  out.insert(out.end(), 14, 0);

  if (r.dtype == Dtype::U8) {
    out.insert(out.end(), r.u8.begin(), r.u8.end());
  } else {
    // IEEE-754 single precision, little-endian
    size_t base = out.size();
    out.resize(base + r.f32.size() * 4);
    static_assert(sizeof(float) == 4);
    std::memcpy(out.data() + base, r.f32.data(), r.f32.size() * 4);
  }
  return out;
}

std::pair<Raster, Scheme> decode_tile(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < kTileHeaderSize)
    throw Error(Err::TruncatedPayload, "input shorter than tile header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(Err::BadMagic, "bad tile magic");
  uint16_t version = get_u16(&bytes[4]);
  if (version != kVersion)
    throw Error(Err::UnsupportedVersion, "tile version " + std::to_string(version));

  Raster r;
  r.width = get_u32(&bytes[6]);
  r.height = get_u32(&bytes[10]);
  r.bands = get_u16(&bytes[14]);
  uint8_t dtype_raw = bytes[16];
  uint8_t scheme_raw = bytes[17];
  if (r.width < 1 || r.height < 1 || r.bands < 1)
    throw Error(Err::InvalidHeader, "zero tile dimension");
  if (r.width > kMaxTileDimension || r.height > kMaxTileDimension)
    throw Error(Err::OversizeDimension, "tile dimension exceeds 2^20");
  if (dtype_raw > 1) throw Error(Err::InvalidHeader, "unknown dtype");
  if (scheme_raw > 4) throw Error(Err::InvalidHeader, "unknown scheme tag");
  r.dtype = Dtype(dtype_raw);
  Scheme scheme = Scheme(scheme_raw);

  size_t payload = r.sample_count() * dtype_size(r.dtype);
  if (bytes.size() != kTileHeaderSize + payload)
    throw Error(Err::TruncatedPayload, "payload size mismatch");

  const uint8_t* p = bytes.data() + kTileHeaderSize;
  if (r.dtype == Dtype::U8) {
    r.u8.assign(p, p + payload);
  } else {
    r.f32.resize(r.sample_count());
    std::memcpy(r.f32.data(), p, payload);
  }

  if (is_id_scheme(scheme)) {
    if (r.dtype != Dtype::U8 || r.bands != 1)
      throw Error(Err::SchemeDtypeMismatch, "scheme tags 1-4 require single-band U8");
    uint8_t max_id = scheme_max_id(scheme);
    for (uint8_t v : r.u8)
      if (v > max_id)
        throw Error(Err::InvalidClassId,
                    "id " + std::to_string(v) + " out of range for scheme tag " +
                        std::to_string(scheme_raw));
  }
  return {std::move(r), scheme};
}

void write_tile(const std::string& path, const Raster& r, Scheme scheme) {
  std::vector<uint8_t> bytes = encode_tile(r, scheme);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw Error(Err::IoFailure, "cannot open " + path);
  size_t n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (n != bytes.size()) throw Error(Err::IoFailure, "short write to " + path);
}

std::pair<Raster, Scheme> read_tile(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw Error(Err::IoFailure, "cannot open " + path);
  std::vector<uint8_t> bytes;
  uint8_t buf[65536];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) bytes.insert(bytes.end(), buf, buf + n);
  std::fclose(f);
  return decode_tile(bytes);
}

Raster read_tile_expect(const std::string& path, Scheme expect) {
  auto [r, scheme] = read_tile(path);
  if (scheme != expect)
    throw Error(Err::SchemeDtypeMismatch,
                path + ": expected scheme tag " + std::to_string(int(expect)) +
                    ", found " + std::to_string(int(scheme)));
  return std::move(r);
}

std::optional<uint8_t> Palette::find(Rgb8 c) const {
  for (int i = 0; i < 256; i++)
    if (entries[i] && *entries[i] == c) return uint8_t(i);
  return std::nullopt;
}

void render_png(const Raster& r, const Palette& palette, const std::string& out_path) {
  r.validate();
  if (r.dtype != Dtype::U8 || r.bands != 1)
    throw Error(Err::SchemeDtypeMismatch, "render_png needs a single-band U8 raster");

  std::vector<uint8_t> rgb(size_t(r.width) * r.height * 3);
  for (size_t i = 0; i < r.pixel_count(); i++) {
    auto c = palette.get(r.u8[i]);
    if (!c)
      throw Error(Err::MissingPaletteEntry,
                  "no palette entry for id " + std::to_string(r.u8[i]));
    rgb[i * 3 + 0] = c->r;
    rgb[i * 3 + 1] = c->g;
    rgb[i * 3 + 2] = c->b;
  }
  write_png_rgb(out_path, r.width, r.height, rgb);
}

}  // namespace lcc
