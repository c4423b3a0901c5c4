#pragma once

// Deterministic RGB PNG writer.
//
// Encoder settings are fixed: 8 bits per channel, color type 2 (RGB, no
// alpha), no interlace, no ancillary chunks. Each scanline picks the filter
// (None, Sub, Up, Average, Paeth) with the smallest sum of absolute signed
// residuals, ties going to the lower filter id. The filtered stream is
// compressed by zlib at level 9, window 15, memLevel 9, default strategy, in
// a single IDAT chunk. The same image therefore always yields the same bytes
// for a given zlib build.

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "otdrimg/error.hpp"
#include "otdrimg/hash.hpp"
#include "otdrimg/imaging.hpp"

namespace otdrimg {

namespace detail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24U));
  out.push_back(static_cast<std::uint8_t>(v >> 16U));
  out.push_back(static_cast<std::uint8_t>(v >> 8U));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5],
                      std::span<const std::uint8_t> data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

[[nodiscard]] inline std::uint8_t paeth(int a, int b, int c) noexcept {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) {
    return static_cast<std::uint8_t>(a);
  }
  return static_cast<std::uint8_t>(pb <= pc ? b : c);
}

// Filters one scanline with the given PNG filter type into out (bpp = 3).
inline void filter_row(int type, std::span<const std::uint8_t> row,
                       std::span<const std::uint8_t> prev, std::span<std::uint8_t> out) {
  constexpr std::size_t bpp = 3;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const int a = i >= bpp ? row[i - bpp] : 0;
    const int b = prev.empty() ? 0 : prev[i];
    const int c = (i >= bpp && !prev.empty()) ? prev[i - bpp] : 0;
    int predicted = 0;
    switch (type) {
      case 0: predicted = 0; break;
      case 1: predicted = a; break;
      case 2: predicted = b; break;
      case 3: predicted = (a + b) / 2; break;
      default: predicted = paeth(a, b, c); break;
    }
    out[i] = static_cast<std::uint8_t>(row[i] - predicted);
  }
}

[[nodiscard]] inline std::vector<std::uint8_t> filtered_scanlines(const RgbImage& image) {
  const std::size_t stride = image.width() * 3;
  const auto raw = image.interleaved();
  std::vector<std::uint8_t> out;
  out.reserve(image.height() * (stride + 1));
  std::vector<std::uint8_t> candidate(stride);
  std::vector<std::uint8_t> best(stride);
  for (std::size_t y = 0; y < image.height(); ++y) {
    std::span<const std::uint8_t> row(raw.data() + y * stride, stride);
    std::span<const std::uint8_t> prev;
    if (y > 0) {
      prev = std::span<const std::uint8_t>(raw.data() + (y - 1) * stride, stride);
    }
    int best_type = 0;
    std::uint64_t best_cost = UINT64_MAX;
    for (int type = 0; type < 5; ++type) {
      filter_row(type, row, prev, candidate);
      std::uint64_t cost = 0;
      for (std::uint8_t v : candidate) {
        cost += static_cast<std::uint64_t>(std::abs(static_cast<int>(static_cast<std::int8_t>(v))));
      }
      if (cost < best_cost) {
        best_cost = cost;
        best_type = type;
        best.swap(candidate);
      }
    }
    out.push_back(static_cast<std::uint8_t>(best_type));
    out.insert(out.end(), best.begin(), best.end());
  }
  return out;
}

[[nodiscard]] inline std::vector<std::uint8_t> zlib_compress(std::span<const std::uint8_t> data) {
  z_stream zs{};
  if (deflateInit2(&zs, 9, Z_DEFLATED, 15, 9, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(Errc::Io, "deflateInit2 failed");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(data.size())));
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw Error(Errc::Io, "deflate did not finish");
  }
  out.resize(produced);
  return out;
}

}  // namespace detail

/// Encodes the image as PNG bytes in memory.
[[nodiscard]] inline std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  static constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G',
                                                             '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());

  std::vector<std::uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(image.width()));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(image.height()));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  detail::put_chunk(out, "IHDR", ihdr);

  const auto idat = detail::zlib_compress(detail::filtered_scanlines(image));
  detail::put_chunk(out, "IDAT", idat);
  detail::put_chunk(out, "IEND", {});
  return out;
}

/// Writes the image to path and returns the FNV-1a 64 hash of the file bytes.
inline std::uint64_t write_png(const RgbImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  }
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  file.close();
  if (!file) {
    throw Error(Errc::Io, "failed writing " + path.string());
  }
  return fnv1a64(bytes);
}

}  // namespace otdrimg
