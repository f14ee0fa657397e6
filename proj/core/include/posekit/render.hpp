#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "posekit/plucker.hpp"

namespace posekit {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major r,g,b triples

  static RgbImage filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  std::uint8_t* px(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* px(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  bool operator==(const RgbImage&) const = default;
};

struct RenderConfig {
  int out_width = 640;
  int out_height = 360;
  double max_magnitude = 20.0;  // flow normalization ceiling, px
  bool draw_arrows = false;
  double arrow_scale = 1.0;
};

/// Rasterize one motion frame into RGB. Background is (128,128,0); each grid
/// point becomes a filled disc of radius ceil(min(s_x,s_y)/4) px at its
/// position scaled into the output, colored
///   R = clamp(128 + 127 dx / max_magnitude)
///   G = clamp(128 + 127 dy / max_magnitude)
///   B = clamp(255 |(dx,dy)| / max_magnitude)
/// Invalid vectors are drawn as (0,0,255).
RgbImage rasterize(const SparseMotionField& field, int frame_idx, const RenderConfig& cfg);

/// Return a copy of `img` with a black Bresenham segment per grid point along
/// (dx, dy) * arrow_scale plus a 2 px head. Zero-length and invalid vectors
/// leave the image untouched.
RgbImage draw_arrows(const RgbImage& img, const SparseMotionField& field, int frame_idx,
                     const RenderConfig& cfg);

/// Binary PPM: "P6\n<w> <h>\n255\n" + raw RGB. Returns total bytes written.
std::size_t write_ppm(const RgbImage& img, std::ostream& sink);

/// write_ppm to a file path. Throws IoError.
std::size_t write_ppm_file(const RgbImage& img, const std::string& path);

/// One rasterized image per motion frame (arrows overlaid when configured).
std::vector<RgbImage> field_to_sequence(const SparseMotionField& field, const RenderConfig& cfg);

}  // namespace posekit
