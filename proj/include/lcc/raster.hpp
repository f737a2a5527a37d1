#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcc/common.hpp"

namespace lcc {

enum class Dtype : uint8_t { U8 = 0, F32 = 1 };

// Scheme tags carried by the tile format. Tags 1..4 require U8 single-band
// data and a valid id range, checked at decode.
enum class Scheme : uint8_t {
  Raw = 0,          // imagery, probabilities, anything numeric
  NlcdIds = 1,      // ids 0..14
  TargetIds = 2,    // ids 0..3
  ChangeCodes = 3,  // ids 0..8
  Mask = 4,         // 0=invalid, 1=valid
};

inline size_t dtype_size(Dtype d) { return d == Dtype::U8 ? 1 : 4; }

// In-memory pixel grid. Row-major, band-sequential: sample (x, y, band) lives
// at index (band*height + y)*width + x. Immutable by convention once built;
// all pipeline operations take const references and return fresh rasters.
struct Raster {
  uint32_t width = 0;
  uint32_t height = 0;
  uint16_t bands = 1;
  Dtype dtype = Dtype::U8;
  std::vector<uint8_t> u8;  // populated when dtype == U8
  std::vector<float> f32;   // populated when dtype == F32

  static Raster make_u8(uint32_t w, uint32_t h, uint16_t bands = 1, uint8_t fill = 0);
  static Raster make_f32(uint32_t w, uint32_t h, uint16_t bands = 1, float fill = 0.f);

  size_t pixel_count() const { return size_t(width) * height; }
  size_t sample_count() const { return pixel_count() * bands; }

  uint8_t& at_u8(uint32_t x, uint32_t y, uint16_t b = 0) {
    return u8[(size_t(b) * height + y) * width + x];
  }
  uint8_t at_u8(uint32_t x, uint32_t y, uint16_t b = 0) const {
    return u8[(size_t(b) * height + y) * width + x];
  }
  float& at_f32(uint32_t x, uint32_t y, uint16_t b = 0) {
    return f32[(size_t(b) * height + y) * width + x];
  }
  float at_f32(uint32_t x, uint32_t y, uint16_t b = 0) const {
    return f32[(size_t(b) * height + y) * width + x];
  }

  bool same_shape(const Raster& o) const {
    return width == o.width && height == o.height && bands == o.bands;
  }
  bool operator==(const Raster& o) const {
    return width == o.width && height == o.height && bands == o.bands &&
           dtype == o.dtype && u8 == o.u8 && f32 == o.f32;
  }

  // Throws if the structural invariants don't hold.
  void validate() const;
};

// ---------------------------------------------------------------------------
// LCRT tile format. 32-byte header, little-endian, then the raw sample grid.
//
//   offset  size  field
//        0     4  magic "LCRT"
//        4     2  version (= 1)
//        6     4  width
//       10     4  height
//       14     2  bands
//       16     1  dtype      (0 = U8, 1 = F32)
//       17     1  scheme tag (0..4)
//       18    14  reserved, zero
//
// Total file size is exactly 32 + width*height*bands*sizeof(dtype).
// ---------------------------------------------------------------------------

inline constexpr uint32_t kMaxTileDimension = 1u << 20;
inline constexpr size_t kTileHeaderSize = 32;

std::vector<uint8_t> encode_tile(const Raster& r, Scheme scheme);
std::pair<Raster, Scheme> decode_tile(const std::vector<uint8_t>& bytes);

// File helpers on top of the byte codec.
void write_tile(const std::string& path, const Raster& r, Scheme scheme);
std::pair<Raster, Scheme> read_tile(const std::string& path);
Raster read_tile_expect(const std::string& path, Scheme expect);

// Upper id bound (inclusive) admitted by a scheme tag, or 255 for Raw.
uint8_t scheme_max_id(Scheme s);

// ---------------------------------------------------------------------------
// Palette rendering. A palette maps u8 ids to RGB; rendering a single-band
// U8 raster writes an 8-bit RGB PNG (no alpha) whose pixel colors are exactly
// the palette entries.
// ---------------------------------------------------------------------------

struct Rgb8 {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

inline constexpr Rgb8 rgb_from_hex(uint32_t hex) {
  return Rgb8{uint8_t(hex >> 16), uint8_t(hex >> 8), uint8_t(hex)};
}

struct Palette {
  std::array<std::optional<Rgb8>, 256> entries;

  void set(uint8_t id, Rgb8 c) { entries[id] = c; }
  std::optional<Rgb8> get(uint8_t id) const { return entries[id]; }
  // id for a color, if the palette is injective and contains it
  std::optional<uint8_t> find(Rgb8 c) const;
};

void render_png(const Raster& r, const Palette& palette, const std::string& out_path);

}  // namespace lcc
