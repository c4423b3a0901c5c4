#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "otdrimg/encodings.hpp"
#include "otdrimg/error.hpp"

namespace otdrimg {

/// 8-bit single-channel image, row-major.
class GrayImage {
 public:
  GrayImage(std::size_t height, std::size_t width, std::uint8_t fill = 0)
      : GrayImage(height, width, std::vector<std::uint8_t>(height * width, fill)) {}

  GrayImage(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels)
      : height_(height), width_(width), pixels_(std::move(pixels)) {
    if (height_ < 1 || width_ < 1) {
      throw Error(Errc::GridShape, "image dimensions must be at least 1x1");
    }
    if (pixels_.size() != height_ * width_) {
      throw Error(Errc::GridShape, "pixel count " + std::to_string(pixels_.size()) +
                                       " does not match " + std::to_string(height_) + "x" +
                                       std::to_string(width_));
    }
  }

  [[nodiscard]] std::size_t height() const noexcept { return height_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::uint8_t at(std::size_t y, std::size_t x) const noexcept {
    return pixels_[y * width_ + x];
  }
  std::uint8_t& at(std::size_t y, std::size_t x) noexcept { return pixels_[y * width_ + x]; }
  [[nodiscard]] std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  [[nodiscard]] std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::uint8_t> pixels_;
};

/// Three planar 8-bit channels in fixed R, G, B order.
class RgbImage {
 public:
  RgbImage(GrayImage red, GrayImage green, GrayImage blue)
      : planes_{std::move(red), std::move(green), std::move(blue)} {
    for (const auto& p : planes_) {
      if (p.height() != planes_[0].height() || p.width() != planes_[0].width()) {
        throw Error(Errc::ChannelShape, "RGB planes must share dimensions");
      }
    }
  }

  [[nodiscard]] std::size_t height() const noexcept { return planes_[0].height(); }
  [[nodiscard]] std::size_t width() const noexcept { return planes_[0].width(); }
  [[nodiscard]] const GrayImage& channel(std::size_t c) const { return planes_.at(c); }

  /// Interleaved RGBRGB... scanlines.
  [[nodiscard]] std::vector<std::uint8_t> interleaved() const {
    const std::size_t n = height() * width();
    std::vector<std::uint8_t> out(n * 3);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto plane = planes_[c].pixels();
      for (std::size_t i = 0; i < n; ++i) {
        out[i * 3 + c] = plane[i];
      }
    }
    return out;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::array<GrayImage, 3> planes_;
};

struct GridLayout {
  std::size_t rows = 3;
  std::size_t cols = 4;
  std::size_t tile_height = 500;
  std::size_t tile_width = 500;

  [[nodiscard]] std::size_t tile_count() const noexcept { return rows * cols; }
};

namespace detail {

// [-1,1] -> [0,255], round half away from zero.
[[nodiscard]] inline std::uint8_t quantize_signed_unit(double v) noexcept {
  return static_cast<std::uint8_t>(std::lround((v + 1.0) / 2.0 * 255.0));
}

}  // namespace detail

/// Quantizes an encoding matrix to 8 bits. GASF/GADF use the affine map
/// [-1,1] -> [0,255]; RP maps 0 -> 0 and 1 -> 255.
[[nodiscard]] inline GrayImage matrix_to_gray(const EncodingMatrix& matrix) {
  const auto entries = matrix.entries();
  std::vector<std::uint8_t> px(entries.size());
  if (matrix.kind() == EncodingKind::RP) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const double v = entries[i];
      if (v != 0.0 && v != 1.0) {
        throw Error(Errc::EncodingRange, "RP entry " + std::to_string(v) + " is not binary");
      }
      px[i] = v == 1.0 ? 255 : 0;
    }
  } else {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const double v = entries[i];
      if (!(v >= -1.0 && v <= 1.0)) {
        throw Error(Errc::EncodingRange, std::string(to_string(matrix.kind())) + " entry " +
                                             std::to_string(v) + " outside [-1,1]");
      }
      px[i] = detail::quantize_signed_unit(v);
    }
  }
  return GrayImage(matrix.size(), matrix.size(), std::move(px));
}

/// Tiles images row-major into a rows x cols grid: tile k lands at grid row
/// k / cols, grid column k % cols.
[[nodiscard]] inline GrayImage compose_grid(std::span<const GrayImage> tiles,
                                            const GridLayout& layout) {
  if (tiles.size() != layout.tile_count() || layout.tile_count() == 0) {
    throw Error(Errc::GridShape, "expected " + std::to_string(layout.tile_count()) +
                                     " tiles, got " + std::to_string(tiles.size()));
  }
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    if (tiles[k].height() != layout.tile_height || tiles[k].width() != layout.tile_width) {
      throw Error(Errc::GridShape, "tile " + std::to_string(k) + " is " +
                                       std::to_string(tiles[k].height()) + "x" +
                                       std::to_string(tiles[k].width()) + ", expected " +
                                       std::to_string(layout.tile_height) + "x" +
                                       std::to_string(layout.tile_width));
    }
  }
  GrayImage out(layout.rows * layout.tile_height, layout.cols * layout.tile_width);
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const std::size_t y0 = (k / layout.cols) * layout.tile_height;
    const std::size_t x0 = (k % layout.cols) * layout.tile_width;
    const auto src = tiles[k].pixels();
    for (std::size_t y = 0; y < layout.tile_height; ++y) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(y * layout.tile_width),
                  layout.tile_width, &out.at(y0 + y, x0));
    }
  }
  return out;
}

/// Copies the rectangle of tile k back out of a composed grid.
[[nodiscard]] inline GrayImage crop_tile(const GrayImage& grid, const GridLayout& layout,
                                         std::size_t k) {
  if (k >= layout.tile_count() || grid.height() != layout.rows * layout.tile_height ||
      grid.width() != layout.cols * layout.tile_width) {
    throw Error(Errc::GridShape, "grid does not match layout or tile index out of range");
  }
  GrayImage tile(layout.tile_height, layout.tile_width);
  const std::size_t y0 = (k / layout.cols) * layout.tile_height;
  const std::size_t x0 = (k % layout.cols) * layout.tile_width;
  for (std::size_t y = 0; y < layout.tile_height; ++y) {
    for (std::size_t x = 0; x < layout.tile_width; ++x) {
      tile.at(y, x) = grid.at(y0 + y, x0 + x);
    }
  }
  return tile;
}

/// Stacks three planes as R, G, B. The pipeline passes GADF, GASF, RP in that order.
[[nodiscard]] inline RgbImage fuse_rgb(GrayImage red, GrayImage green, GrayImage blue) {
  if (red.height() != green.height() || red.height() != blue.height() ||
      red.width() != green.width() || red.width() != blue.width()) {
    throw Error(Errc::ChannelShape, "channel planes differ in size: R " +
                                        std::to_string(red.height()) + "x" +
                                        std::to_string(red.width()) + ", G " +
                                        std::to_string(green.height()) + "x" +
                                        std::to_string(green.width()) + ", B " +
                                        std::to_string(blue.height()) + "x" +
                                        std::to_string(blue.width()));
  }
  return RgbImage(std::move(red), std::move(green), std::move(blue));
}

namespace detail {

struct Contribution {
  std::size_t source = 0;
  double weight = 0.0;
};

// For each output index, the source indices its footprint overlaps and the
// overlap length (in source pixels). Weights of one output sum to in/out.
[[nodiscard]] inline std::vector<std::vector<Contribution>> area_weights(std::size_t in,
                                                                         std::size_t out) {
  std::vector<std::vector<Contribution>> table(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double begin = static_cast<double>(o) * scale;
    const double end = static_cast<double>(o + 1) * scale;
    auto first = static_cast<std::size_t>(std::floor(begin));
    auto last = std::min(in, static_cast<std::size_t>(std::ceil(end)));
    for (std::size_t s = first; s < last; ++s) {
      const double overlap =
          std::min(end, static_cast<double>(s + 1)) - std::max(begin, static_cast<double>(s));
      if (overlap > 0.0) {
        table[o].push_back({s, overlap});
      }
    }
  }
  return table;
}

[[nodiscard]] inline GrayImage resize_plane_area(const GrayImage& src, std::size_t out_h,
                                                 std::size_t out_w) {
  const auto wx = area_weights(src.width(), out_w);
  const auto wy = area_weights(src.height(), out_h);
  // Horizontal pass into doubles, then vertical pass with rounding.
  std::vector<double> tmp(src.height() * out_w, 0.0);
  for (std::size_t y = 0; y < src.height(); ++y) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      double acc = 0.0;
      for (const auto& c : wx[ox]) {
        acc += c.weight * src.at(y, c.source);
      }
      tmp[y * out_w + ox] = acc;
    }
  }
  const double area = (static_cast<double>(src.width()) / static_cast<double>(out_w)) *
                      (static_cast<double>(src.height()) / static_cast<double>(out_h));
  GrayImage out(out_h, out_w);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      double acc = 0.0;
      for (const auto& c : wy[oy]) {
        acc += c.weight * tmp[c.source * out_w + ox];
      }
      out.at(oy, ox) = static_cast<std::uint8_t>(std::clamp(std::lround(acc / area), 0L, 255L));
    }
  }
  return out;
}

}  // namespace detail

/// Box/area downsampling per channel. Each output pixel is the coverage-weighted
/// mean of the source pixels under its footprint. Aspect ratio is not kept.
[[nodiscard]] inline RgbImage resize_area(const RgbImage& image, std::size_t out_height,
                                          std::size_t out_width) {
  if (out_height < 1 || out_width < 1) {
    throw Error(Errc::UnsupportedResize, "output dimensions must be at least 1x1");
  }
  if (out_height > image.height() || out_width > image.width()) {
    throw Error(Errc::UnsupportedResize,
                "upscaling " + std::to_string(image.height()) + "x" +
                    std::to_string(image.width()) + " to " + std::to_string(out_height) + "x" +
                    std::to_string(out_width) + " is not supported");
  }
  return RgbImage(detail::resize_plane_area(image.channel(0), out_height, out_width),
                  detail::resize_plane_area(image.channel(1), out_height, out_width),
                  detail::resize_plane_area(image.channel(2), out_height, out_width));
}

}  // namespace otdrimg
