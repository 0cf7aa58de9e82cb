#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reacher/raster.hpp"

namespace reacher {

struct ImageBytes {
  int width = 0;
  int height = 0;
  int channels = 1;            // 1 = gray, 3 = RGB
  std::vector<uint8_t> data;   // row-major, interleaved channels
};

// 8-bit binary PGM (P5), single channel.
void write_pgm(const std::string& path, const ImageBytes& img);
ImageBytes read_pgm(const std::string& path);

// Minimal PNG codec: 8-bit gray or RGB, non-interlaced. The reader handles
// all five scanline filters; the writer emits filter 0 rows.
void write_png(const std::string& path, const ImageBytes& img);
ImageBytes read_png(const std::string& path);

// [0,1] raster values <-> 0/255 bytes. Multi-channel rasters interleave.
ImageBytes raster_to_bytes(const Raster& r);
Raster bytes_to_raster(const ImageBytes& img);

}  // namespace reacher
