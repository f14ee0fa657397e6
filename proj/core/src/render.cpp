#include "posekit/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

std::uint8_t clamp_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::llround(v), 0LL, 255LL));
}

void check_frame(const SparseMotionField& field, int frame_idx) {
  if (frame_idx < 0 || frame_idx >= field.n_motion_frames) {
    throw FrameOutOfRange("frame " + std::to_string(frame_idx) + " out of range [0, " +
                          std::to_string(field.n_motion_frames) + ")");
  }
}

void put_px(RgbImage& img, int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  std::uint8_t* p = img.px(x, y);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

void draw_disc(RgbImage& img, int cx, int cy, int radius,
               std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) put_px(img, cx + dx, cy + dy, r, g, b);
    }
  }
}

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1) {
  // Bresenham, black.
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  int x = x0, y = y0;
  while (true) {
    put_px(img, x, y, 0, 0, 0);
    if (x == x1 && y == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

}  // namespace

RgbImage RgbImage::filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

RgbImage rasterize(const SparseMotionField& field, int frame_idx, const RenderConfig& cfg) {
  check_frame(field, frame_idx);
  if (cfg.out_width <= 0 || cfg.out_height <= 0 || cfg.max_magnitude <= 0.0) {
    throw Error("render config needs positive dimensions and max_magnitude");
  }
  RgbImage img = RgbImage::filled(cfg.out_width, cfg.out_height, 128, 128, 0);

  const SampleGrid& grid = field.grid;
  const double sx = static_cast<double>(cfg.out_width) / grid.width_px;
  const double sy = static_cast<double>(cfg.out_height) / grid.height_px;
  const int radius = static_cast<int>(
      std::ceil(std::min(grid.stride_x, grid.stride_y) / 4.0));

  for (int j = 0; j < grid.rows; ++j) {
    for (int i = 0; i < grid.cols; ++i) {
      const MotionVector& mv = field.at(frame_idx, j, i);
      const Eigen::Vector2i pt = grid.points[static_cast<std::size_t>(j) * grid.cols + i];
      const int cx = static_cast<int>(std::lround(pt.x() * sx));
      const int cy = static_cast<int>(std::lround(pt.y() * sy));
      if (!mv.valid) {
        draw_disc(img, cx, cy, radius, 0, 0, 255);
        continue;
      }
      const double mag = std::hypot(mv.dx, mv.dy);
      draw_disc(img, cx, cy, radius,
                clamp_channel(128.0 + 127.0 * mv.dx / cfg.max_magnitude),
                clamp_channel(128.0 + 127.0 * mv.dy / cfg.max_magnitude),
                clamp_channel(255.0 * mag / cfg.max_magnitude));
    }
  }
  return img;
}

RgbImage draw_arrows(const RgbImage& img, const SparseMotionField& field, int frame_idx,
                     const RenderConfig& cfg) {
  check_frame(field, frame_idx);
  RgbImage out = img;

  const SampleGrid& grid = field.grid;
  const double sx = static_cast<double>(out.width) / grid.width_px;
  const double sy = static_cast<double>(out.height) / grid.height_px;

  for (int j = 0; j < grid.rows; ++j) {
    for (int i = 0; i < grid.cols; ++i) {
      const MotionVector& mv = field.at(frame_idx, j, i);
      if (!mv.valid) continue;
      const int lx = static_cast<int>(std::lround(mv.dx * cfg.arrow_scale));
      const int ly = static_cast<int>(std::lround(mv.dy * cfg.arrow_scale));
      if (lx == 0 && ly == 0) continue;

      const Eigen::Vector2i pt = grid.points[static_cast<std::size_t>(j) * grid.cols + i];
      const int x0 = static_cast<int>(std::lround(pt.x() * sx));
      const int y0 = static_cast<int>(std::lround(pt.y() * sy));
      const int x1 = x0 + lx, y1 = y0 + ly;
      draw_line(out, x0, y0, x1, y1);

      // 2 px head: barbs at +-135 degrees off the shaft direction.
      const double len = std::hypot(static_cast<double>(lx), static_cast<double>(ly));
      const double ux = lx / len, uy = ly / len;
      const double c = -M_SQRT1_2;  // cos(135 deg)
      const double s = M_SQRT1_2;   // sin(135 deg)
      const int bx1 = x1 + static_cast<int>(std::lround(2.0 * (c * ux - s * uy)));
      const int by1 = y1 + static_cast<int>(std::lround(2.0 * (s * ux + c * uy)));
      const int bx2 = x1 + static_cast<int>(std::lround(2.0 * (c * ux + s * uy)));
      const int by2 = y1 + static_cast<int>(std::lround(2.0 * (-s * ux + c * uy)));
      draw_line(out, x1, y1, bx1, by1);
      draw_line(out, x1, y1, bx2, by2);
    }
  }
  return out;
}

std::size_t write_ppm(const RgbImage& img, std::ostream& sink) {
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  sink.write(header.data(), static_cast<std::streamsize>(header.size()));
  sink.write(reinterpret_cast<const char*>(img.pixels.data()),
             static_cast<std::streamsize>(img.pixels.size()));
  if (!sink) throw IoError("failed writing PPM stream");
  return header.size() + img.pixels.size();
}

std::size_t write_ppm_file(const RgbImage& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return write_ppm(img, f);
}

std::vector<RgbImage> field_to_sequence(const SparseMotionField& field, const RenderConfig& cfg) {
  std::vector<RgbImage> frames;
  frames.reserve(static_cast<std::size_t>(field.n_motion_frames));
  for (int f = 0; f < field.n_motion_frames; ++f) {
    RgbImage img = rasterize(field, f, cfg);
    if (cfg.draw_arrows) img = draw_arrows(img, field, f, cfg);
    frames.push_back(std::move(img));
  }
  return frames;
}

}  // namespace posekit
