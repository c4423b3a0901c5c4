#pragma once

// Turns measurement files into RawSample records.
//
// CSV fallback format: UTF-8 text, one row per time step with 12
// comma-separated decimal values (one per fiber region, region 0 first),
// 10,000 rows per sample. Samples are separated by one or more blank lines.
// CR before LF is tolerated. Lines starting with '#' are comments.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "otdrimg/encodings.hpp"
#include "otdrimg/error.hpp"
#include "otdrimg/mat.hpp"

namespace otdrimg {

inline constexpr std::size_t kRegionCount = 12;
inline constexpr std::size_t kSeriesLength = 10'000;
inline constexpr int kClassCount = 6;

/// Event name <-> class label. Matching on names ignores ASCII case.
class LabelMap {
 public:
  static const LabelMap& standard() {
    static const LabelMap map;
    return map;
  }

  [[nodiscard]] std::optional<int> label_of(std::string_view event) const {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
      if (iequals(kNames[i], event)) {
        return static_cast<int>(i);
      }
    }
    return std::nullopt;
  }

  [[nodiscard]] std::string_view name_of(int label) const {
    if (label < 0 || label >= kClassCount) {
      throw Error(Errc::LabelRange, "label " + std::to_string(label) + " outside 0..5");
    }
    return kNames[static_cast<std::size_t>(label)];
  }

  [[nodiscard]] static constexpr std::size_t size() noexcept { return kNames.size(); }

 private:
  static constexpr std::array<std::string_view, kClassCount> kNames = {
      "Background", "Digging", "Knocking", "Watering", "Shaking", "Walking"};

  static bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
             return std::tolower(static_cast<unsigned char>(x)) ==
                    std::tolower(static_cast<unsigned char>(y));
           });
  }
};

/// One measurement: 12 region series of 10,000 points and its class label.
struct RawSample {
  std::string sample_id;
  std::vector<TimeSeries> regions;
  int label = 0;

  void validate() const {
    if (regions.size() != kRegionCount) {
      throw Error(Errc::ShapeMismatch, sample_id + ": expected " + std::to_string(kRegionCount) +
                                           " regions, got " + std::to_string(regions.size()));
    }
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (regions[r].size() != kSeriesLength) {
        throw Error(Errc::ShapeMismatch, sample_id + ": region " + std::to_string(r) + " has " +
                                             std::to_string(regions[r].size()) + " points, expected " +
                                             std::to_string(kSeriesLength));
      }
    }
    if (label < 0 || label >= kClassCount) {
      throw Error(Errc::LabelRange, sample_id + ": label " + std::to_string(label));
    }
  }
};

struct IngestConfig {
  /// Files or directories per event name. Directories are scanned
  /// recursively for *.mat and *.csv.
  std::map<std::string, std::vector<std::filesystem::path>> sources;
  /// MAT variable to read from every file; empty reads all numeric arrays.
  std::string mat_variable;
  /// Per-file variable override, keyed by the file name (no directories).
  std::map<std::string, std::string> mat_variable_overrides;
  /// Accept 10,000 x 12 arrays and read regions from columns.
  bool transpose = false;

  void validate() const {
    for (const auto& [event, paths] : sources) {
      if (!LabelMap::standard().label_of(event)) {
        throw Error(Errc::InvalidConfig, "unknown event name '" + event + "'");
      }
    }
  }

  [[nodiscard]] std::optional<std::string> variable_for(const std::filesystem::path& file) const {
    if (const auto it = mat_variable_overrides.find(file.filename().string());
        it != mat_variable_overrides.end()) {
      return it->second;
    }
    if (!mat_variable.empty()) {
      return mat_variable;
    }
    return std::nullopt;
  }
};

/// Converts decoded 2-D arrays into samples. sample_id is
/// "<event>_<file stem>_<index>".
[[nodiscard]] inline std::vector<RawSample> to_samples(const std::vector<MatArray>& matrices,
                                                       std::string_view event,
                                                       std::string_view file_stem,
                                                       const IngestConfig& config) {
  const auto label = LabelMap::standard().label_of(event);
  if (!label) {
    throw Error(Errc::InvalidConfig, "unknown event name '" + std::string(event) + "'");
  }
  const std::string canonical(LabelMap::standard().name_of(*label));
  std::vector<RawSample> out;
  out.reserve(matrices.size());
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    const auto& m = matrices[k];
    const std::size_t regions = config.transpose ? m.cols : m.rows;
    const std::size_t length = config.transpose ? m.rows : m.cols;
    if (regions != kRegionCount || length != kSeriesLength) {
      throw Error(Errc::ShapeMismatch,
                  "array '" + m.name + "' is " + std::to_string(m.rows) + "x" +
                      std::to_string(m.cols) + (config.transpose ? " (transposed read)" : "") +
                      ", expected " + std::to_string(config.transpose ? kSeriesLength : kRegionCount) +
                      "x" + std::to_string(config.transpose ? kRegionCount : kSeriesLength));
    }
    RawSample s;
    s.sample_id = canonical + "_" + std::string(file_stem) + "_" + std::to_string(k);
    s.label = *label;
    s.regions.reserve(kRegionCount);
    for (std::size_t r = 0; r < kRegionCount; ++r) {
      std::vector<double> series(kSeriesLength);
      for (std::size_t t = 0; t < kSeriesLength; ++t) {
        series[t] = config.transpose ? m(t, r) : m(r, t);
      }
      try {
        s.regions.emplace_back(std::move(series));
      } catch (const Error& e) {
        throw Error(e.code(), s.sample_id + " region " + std::to_string(r) + ": " + e.message());
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {

[[nodiscard]] inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace detail

/// Parses the CSV fallback format from a stream. event and file_stem build the
/// sample ids; file_stem also names the input in error messages.
[[nodiscard]] inline std::vector<RawSample> parse_csv_stream(std::istream& in,
                                                             std::string_view event,
                                                             std::string_view file_stem) {
  const auto label = LabelMap::standard().label_of(event);
  if (!label) {
    throw Error(Errc::InvalidConfig, "unknown event name '" + std::string(event) + "'");
  }
  const std::string canonical(LabelMap::standard().name_of(*label));

  std::vector<RawSample> out;
  std::array<std::vector<double>, kRegionCount> columns;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t block_start = 0;

  const auto flush = [&](std::size_t end_line) {
    if (rows == 0) {
      return;
    }
    if (rows != kSeriesLength) {
      throw Error(Errc::CsvShape, std::string(file_stem) + " line " + std::to_string(end_line) +
                                      ": sample starting at line " + std::to_string(block_start) +
                                      " has " + std::to_string(rows) + " rows, expected " +
                                      std::to_string(kSeriesLength));
    }
    RawSample s;
    s.sample_id = canonical + "_" + std::string(file_stem) + "_" + std::to_string(out.size());
    s.label = *label;
    for (auto& col : columns) {
      s.regions.emplace_back(std::move(col));
      col.clear();
    }
    out.push_back(std::move(s));
    rows = 0;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (!text.empty() && text.front() == '#') {
      continue;
    }
    if (text.empty()) {
      flush(line_no);
      continue;
    }
    if (rows == 0) {
      block_start = line_no;
      for (auto& col : columns) {
        col.reserve(kSeriesLength);
      }
    }
    std::size_t field = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = text.find(',', pos);
      const auto token = detail::trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (field >= kRegionCount) {
        ++field;
      } else {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
          throw Error(Errc::CsvShape, std::string(file_stem) + " line " + std::to_string(line_no) +
                                          ": field " + std::to_string(field + 1) +
                                          " is not a number: '" + std::string(token) + "'");
        }
        columns[field].push_back(v);
        ++field;
      }
      if (comma == std::string_view::npos) {
        break;
      }
      pos = comma + 1;
    }
    if (field != kRegionCount) {
      throw Error(Errc::CsvShape, std::string(file_stem) + " line " + std::to_string(line_no) +
                                      ": expected " + std::to_string(kRegionCount) +
                                      " fields, got " + std::to_string(field));
    }
    ++rows;
  }
  flush(line_no);
  return out;
}

[[nodiscard]] inline std::vector<RawSample> parse_csv_fallback(const std::filesystem::path& path,
                                                               std::string_view event) {
  std::ifstream file(path);
  if (!file) {
    throw Error(Errc::Io, "cannot open " + path.string());
  }
  return parse_csv_stream(file, event, path.stem().string());
}

/// Writes samples in the CSV fallback format using shortest round-trip decimals.
inline void write_csv_fallback(std::ostream& out, const std::vector<RawSample>& samples) {
  std::array<char, 32> buf{};
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (s > 0) {
      out << '\n';
    }
    const auto& regions = samples[s].regions;
    for (std::size_t t = 0; t < kSeriesLength; ++t) {
      for (std::size_t r = 0; r < regions.size(); ++r) {
        if (r > 0) {
          out << ',';
        }
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), regions[r][t]);
        out.write(buf.data(), res.ptr - buf.data());
      }
      out << '\n';
    }
  }
}

/// Reads one source file (.mat or .csv) as samples of the given event.
[[nodiscard]] inline std::vector<RawSample> ingest_file(const std::filesystem::path& path,
                                                        std::string_view event,
                                                        const IngestConfig& config) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".csv" || ext == ".txt") {
    return parse_csv_fallback(path, event);
  }
  MatReadOptions options;
  options.variable = config.variable_for(path);
  const auto contents = parse_mat(path, options);
  try {
    return to_samples(contents.arrays, event, path.stem().string(), config);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

/// One input file tagged with its event name.
struct SourceFile {
  std::filesystem::path path;
  std::string event;
};

/// Expands the configured sources into a sorted file list.
[[nodiscard]] inline std::vector<SourceFile> enumerate_sources(const IngestConfig& config) {
  config.validate();
  std::vector<SourceFile> files;
  const auto accept = [](const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".mat" || ext == ".csv";
  };
  for (const auto& [event, paths] : config.sources) {
    const std::string canonical(
        LabelMap::standard().name_of(*LabelMap::standard().label_of(event)));
    for (const auto& p : paths) {
      std::error_code ec;
      if (std::filesystem::is_directory(p, ec)) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(p)) {
          if (entry.is_regular_file() && accept(entry.path())) {
            files.push_back({entry.path(), canonical});
          }
        }
      } else if (std::filesystem::is_regular_file(p, ec)) {
        files.push_back({p, canonical});
      } else {
        throw Error(Errc::Io, "source path does not exist: " + p.string());
      }
    }
  }
  std::sort(files.begin(), files.end(), [](const SourceFile& a, const SourceFile& b) {
    return a.path < b.path;
  });
  return files;
}

/// Builds sources from a directory whose subdirectories are named after events
/// (case-insensitive). Unrelated subdirectories are ignored.
[[nodiscard]] inline IngestConfig sources_from_event_dirs(const std::filesystem::path& root,
                                                          IngestConfig base = {}) {
  if (!std::filesystem::is_directory(root)) {
    throw Error(Errc::Io, "input directory does not exist: " + root.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_directory()) {
      continue;
    }
    const auto name = entry.path().filename().string();
    if (const auto label = LabelMap::standard().label_of(name)) {
      base.sources[std::string(LabelMap::standard().name_of(*label))].push_back(entry.path());
    }
  }
  return base;
}

}  // namespace otdrimg
