#pragma once

// MAT-file level 5 reader, restricted to real numeric 2-D arrays.
//
// Layout handled:
//   header   116 bytes text, 8 bytes subsystem offset, u16 version (0x0100),
//            2 bytes endian indicator ("IM" little-endian, "MI" big-endian)
//   element  u32 type, u32 byte count, payload padded to 8 bytes; or the
//            small form where the upper 16 bits of the first word hold the
//            byte count (<= 4) and the payload sits in the second word
//   miMATRIX (14)      array flags, dimensions, name, real part
//   miCOMPRESSED (15)  zlib stream holding further elements, no padding
//
// Cell, struct, object, char, sparse, complex and N-D (N > 2) arrays are
// skipped with a warning. v7.3 (HDF5) files are rejected.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "otdrimg/error.hpp"

namespace otdrimg {

/// A decoded real 2-D array; data is row-major and widened to double.
struct MatArray {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string source_class;
  std::vector<double> data;

  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const noexcept {
    return data[r * cols + c];
  }
};

struct MatReadOptions {
  /// When set, only the variable with this name is returned.
  std::optional<std::string> variable;
  /// Upper bound on the inflated size of one compressed element.
  std::size_t max_inflated_bytes = std::size_t{1} << 31U;
};

struct MatContents {
  std::vector<MatArray> arrays;
  std::vector<std::string> warnings;
};

namespace mat_detail {

enum : std::uint32_t {
  miINT8 = 1,
  miUINT8 = 2,
  miINT16 = 3,
  miUINT16 = 4,
  miINT32 = 5,
  miUINT32 = 6,
  miSINGLE = 7,
  miDOUBLE = 9,
  miINT64 = 12,
  miUINT64 = 13,
  miMATRIX = 14,
  miCOMPRESSED = 15,
  miUTF8 = 16,
};

inline constexpr std::array<std::uint8_t, 8> kHdf5Magic = {0x89, 'H', 'D', 'F', '\r', '\n', 0x1A, '\n'};

[[nodiscard]] inline const char* class_name(std::uint32_t cls) noexcept {
  switch (cls) {
    case 1: return "cell";
    case 2: return "struct";
    case 3: return "object";
    case 4: return "char";
    case 5: return "sparse";
    case 6: return "double";
    case 7: return "single";
    case 8: return "int8";
    case 9: return "uint8";
    case 10: return "int16";
    case 11: return "uint16";
    case 12: return "int32";
    case 13: return "uint32";
    case 14: return "int64";
    case 15: return "uint64";
    default: return "unknown";
  }
}

[[nodiscard]] inline std::size_t type_width(std::uint32_t type) noexcept {
  switch (type) {
    case miINT8:
    case miUINT8:
    case miUTF8: return 1;
    case miINT16:
    case miUINT16: return 2;
    case miINT32:
    case miUINT32:
    case miSINGLE: return 4;
    case miDOUBLE:
    case miINT64:
    case miUINT64: return 8;
    default: return 0;
  }
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, bool big_endian)
      : bytes_(bytes), big_endian_(big_endian) {}

  [[nodiscard]] bool at_end() const noexcept { return pos_ >= bytes_.size(); }
  [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  template <typename T>
  [[nodiscard]] T load(std::size_t offset) const {
    if (offset > bytes_.size() || bytes_.size() - offset < sizeof(T)) {
      throw Error(Errc::CorruptMatFile, "read past end of data at offset " + std::to_string(offset));
    }
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
    if (big_endian_ != (std::endian::native == std::endian::big)) {
      std::reverse(raw.begin(), raw.end());
    }
    return std::bit_cast<T>(raw);
  }

  struct Element {
    std::uint32_t type = 0;
    std::span<const std::uint8_t> payload;
  };

  Element next_element() {
    if (remaining() < 8) {
      throw Error(Errc::CorruptMatFile, "truncated element tag at offset " + std::to_string(pos_));
    }
    const auto word0 = load<std::uint32_t>(pos_);
    if ((word0 >> 16U) != 0) {
      const std::uint32_t nbytes = word0 >> 16U;
      if (nbytes > 4) {
        throw Error(Errc::CorruptMatFile, "small data element claims " + std::to_string(nbytes) + " bytes");
      }
      Element e{word0 & 0xFFFFU, bytes_.subspan(pos_ + 4, nbytes)};
      pos_ += 8;
      return e;
    }
    const auto nbytes = static_cast<std::size_t>(load<std::uint32_t>(pos_ + 4));
    if (remaining() - 8 < nbytes) {
      throw Error(Errc::CorruptMatFile, "element at offset " + std::to_string(pos_) + " declares " +
                                            std::to_string(nbytes) + " bytes, only " +
                                            std::to_string(remaining() - 8) + " remain");
    }
    Element e{word0, bytes_.subspan(pos_ + 8, nbytes)};
    std::size_t advance = 8 + nbytes;
    if (word0 != miCOMPRESSED) {
      advance = std::min(remaining(), (advance + 7) & ~std::size_t{7});
    }
    pos_ += advance;
    return e;
  }

  [[nodiscard]] bool big_endian() const noexcept { return big_endian_; }

 private:
  std::span<const std::uint8_t> bytes_;
  bool big_endian_;
  std::size_t pos_ = 0;
};

[[nodiscard]] inline std::vector<double> decode_numeric(const Reader::Element& e, bool big_endian) {
  const std::size_t width = type_width(e.type);
  if (width == 0 || e.type == miUTF8) {
    throw Error(Errc::CorruptMatFile, "non-numeric data element type " + std::to_string(e.type));
  }
  if (e.payload.size() % width != 0) {
    throw Error(Errc::CorruptMatFile, "data element size is not a multiple of its type width");
  }
  Reader r(e.payload, big_endian);
  const std::size_t count = e.payload.size() / width;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = i * width;
    switch (e.type) {
      case miINT8: out[i] = r.load<std::int8_t>(off); break;
      case miUINT8: out[i] = r.load<std::uint8_t>(off); break;
      case miINT16: out[i] = r.load<std::int16_t>(off); break;
      case miUINT16: out[i] = r.load<std::uint16_t>(off); break;
      case miINT32: out[i] = r.load<std::int32_t>(off); break;
      case miUINT32: out[i] = r.load<std::uint32_t>(off); break;
      case miSINGLE: out[i] = r.load<float>(off); break;
      case miDOUBLE: out[i] = r.load<double>(off); break;
      case miINT64: out[i] = static_cast<double>(r.load<std::int64_t>(off)); break;
      case miUINT64: out[i] = static_cast<double>(r.load<std::uint64_t>(off)); break;
      default: break;
    }
  }
  return out;
}

[[nodiscard]] inline std::vector<std::uint8_t> inflate_element(std::span<const std::uint8_t> data,
                                                               std::size_t limit) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) {
    throw Error(Errc::CorruptMatFile, "inflateInit failed");
  }
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1U << 16U> chunk{};
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(Errc::CorruptMatFile, std::string("compressed element is corrupt: ") +
                                            (zs.msg != nullptr ? zs.msg : "inflate error"));
    }
    const std::size_t produced = chunk.size() - zs.avail_out;
    if (out.size() + produced > limit) {
      inflateEnd(&zs);
      throw Error(Errc::CorruptMatFile, "compressed element inflates past the size limit");
    }
    out.insert(out.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(produced));
    if (rc == Z_OK && produced == 0 && zs.avail_in == 0) {
      inflateEnd(&zs);
      throw Error(Errc::CorruptMatFile, "compressed element is truncated");
    }
  }
  inflateEnd(&zs);
  return out;
}

inline void read_matrix(std::span<const std::uint8_t> payload, bool big_endian,
                        const MatReadOptions& options, MatContents& out) {
  Reader r(payload, big_endian);
  if (r.at_end()) {
    return;  // empty miMATRIX: MATLAB writes these for [] placeholders
  }
  const auto flags_el = r.next_element();
  if (flags_el.type != miUINT32 || flags_el.payload.size() < 8) {
    throw Error(Errc::CorruptMatFile, "array flags subelement missing");
  }
  const auto flags = Reader(flags_el.payload, big_endian).load<std::uint32_t>(0);
  const std::uint32_t cls = flags & 0xFFU;
  const bool complex = (flags & 0x0800U) != 0;

  const auto dims_el = r.next_element();
  if (dims_el.type != miINT32 || dims_el.payload.size() < 8 || dims_el.payload.size() % 4 != 0) {
    throw Error(Errc::CorruptMatFile, "dimensions subelement missing");
  }
  Reader dims_reader(dims_el.payload, big_endian);
  std::vector<std::int32_t> dims(dims_el.payload.size() / 4);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    dims[i] = dims_reader.load<std::int32_t>(i * 4);
    if (dims[i] < 0) {
      throw Error(Errc::CorruptMatFile, "negative dimension");
    }
  }

  const auto name_el = r.next_element();
  if (name_el.type != miINT8 && name_el.type != miUTF8) {
    throw Error(Errc::CorruptMatFile, "array name subelement missing");
  }
  std::string name(name_el.payload.begin(), name_el.payload.end());

  if (options.variable && *options.variable != name) {
    return;
  }
  if (cls < 6 || cls > 15) {
    out.warnings.push_back("skipping '" + name + "': unsupported class " + class_name(cls));
    return;
  }
  if (complex) {
    out.warnings.push_back("skipping '" + name + "': complex data");
    return;
  }
  if (dims.size() != 2) {
    out.warnings.push_back("skipping '" + name + "': " + std::to_string(dims.size()) +
                           "-D array");
    return;
  }
  const auto rows = static_cast<std::size_t>(dims[0]);
  const auto cols = static_cast<std::size_t>(dims[1]);

  const auto real_el = r.next_element();
  auto column_major = decode_numeric(real_el, big_endian);
  if (column_major.size() != rows * cols) {
    throw Error(Errc::CorruptMatFile, "'" + name + "' holds " + std::to_string(column_major.size()) +
                                          " values for a " + std::to_string(rows) + "x" +
                                          std::to_string(cols) + " array");
  }
  MatArray a{name, rows, cols, class_name(cls), std::vector<double>(rows * cols)};
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t row = 0; row < rows; ++row) {
      a.data[row * cols + c] = column_major[c * rows + row];
    }
  }
  out.arrays.push_back(std::move(a));
}

inline void read_elements(std::span<const std::uint8_t> bytes, bool big_endian,
                          const MatReadOptions& options, MatContents& out, int depth) {
  Reader r(bytes, big_endian);
  while (!r.at_end()) {
    const auto e = r.next_element();
    if (e.type == miMATRIX) {
      read_matrix(e.payload, big_endian, options, out);
    } else if (e.type == miCOMPRESSED) {
      if (depth > 0) {
        throw Error(Errc::CorruptMatFile, "nested compressed element");
      }
      const auto inflated = inflate_element(e.payload, options.max_inflated_bytes);
      read_elements(inflated, big_endian, options, out, depth + 1);
    } else {
      out.warnings.push_back("skipping top-level element of type " + std::to_string(e.type));
    }
  }
}

}  // namespace mat_detail

/// Decodes a MAT level 5 image held in memory.
[[nodiscard]] inline MatContents parse_mat_bytes(std::span<const std::uint8_t> bytes,
                                                 const MatReadOptions& options = {}) {
  using mat_detail::kHdf5Magic;
  const auto has_hdf5_magic_at = [&](std::size_t offset) {
    return bytes.size() >= offset + kHdf5Magic.size() &&
           std::equal(kHdf5Magic.begin(), kHdf5Magic.end(), bytes.begin() + static_cast<std::ptrdiff_t>(offset));
  };
  if (has_hdf5_magic_at(0) || has_hdf5_magic_at(512)) {
    throw Error(Errc::UnsupportedMatV73,
                "file is a MAT v7.3 (HDF5) container; re-save it in MATLAB with "
                "save(..., '-v7') or convert it to the CSV fallback format");
  }
  if (bytes.size() < 128) {
    throw Error(Errc::UnsupportedMatFormat, "file shorter than the 128-byte MAT header");
  }
  bool big_endian = false;
  if (bytes[126] == 'I' && bytes[127] == 'M') {
    big_endian = false;
  } else if (bytes[126] == 'M' && bytes[127] == 'I') {
    big_endian = true;
  } else {
    throw Error(Errc::UnsupportedMatFormat, "missing endian indicator in MAT header");
  }
  const auto version = mat_detail::Reader(bytes, big_endian).load<std::uint16_t>(124);
  if (version == 0x0200) {
    throw Error(Errc::UnsupportedMatV73,
                "header declares MAT v7.3 (HDF5); re-save with '-v7' or use the CSV fallback");
  }
  if (version != 0x0100) {
    throw Error(Errc::UnsupportedMatFormat, "unknown MAT version 0x" + [&] {
      std::array<char, 8> buf{};
      std::snprintf(buf.data(), buf.size(), "%04x", static_cast<unsigned>(version));
      return std::string(buf.data());
    }());
  }
  MatContents out;
  mat_detail::read_elements(bytes.subspan(128), big_endian, options, out, 0);
  return out;
}

[[nodiscard]] inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw Error(Errc::Io, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  if (file.bad()) {
    throw Error(Errc::Io, "failed reading " + path.string());
  }
  return bytes;
}

/// Reads a MAT file and returns every real numeric 2-D array in it (or only
/// the requested variable).
[[nodiscard]] inline MatContents parse_mat(const std::filesystem::path& path,
                                           const MatReadOptions& options = {}) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_mat_bytes(bytes, options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

}  // namespace otdrimg
