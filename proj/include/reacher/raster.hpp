#pragma once

#include <cassert>
#include <vector>

namespace reacher {

// Channel-major (CHW) grid of values in [0,1]. Task rasters carry 3 channels
// (boundary band, target disk, obstacle fill), tool silhouettes 1 channel.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> values;  // size = channels * height * width

  Raster() = default;
  Raster(int ch, int h, int w) : width(w), height(h), channels(ch), values(static_cast<size_t>(ch) * h * w, 0.0) {}

  double& at(int c, int y, int x) { return values[(static_cast<size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return values[(static_cast<size_t>(c) * height + y) * width + x]; }

  size_t size() const { return values.size(); }
};

// Workspace is the unit square; row 0 is the top of the image (y near 1).
inline double pixel_center_x(int col, int width) { return (col + 0.5) / width; }
inline double pixel_center_y(int row, int height) { return 1.0 - (row + 0.5) / height; }

}  // namespace reacher
