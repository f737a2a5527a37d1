#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lcc {

// Minimal PNG codec for 8-bit RGB images, deflate via zlib. The writer emits
// non-interlaced color type 2 with filter 0 on every scanline; the reader
// accepts any of the five standard filters so it can round-trip files from
// other writers too.

void write_png_rgb(const std::string& path, uint32_t width, uint32_t height,
                   const std::vector<uint8_t>& rgb);

struct PngImage {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major
};

PngImage read_png_rgb(const std::string& path);

}  // namespace lcc
