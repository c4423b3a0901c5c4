#pragma once

// Batch orchestration: sample -> RGB image -> PNG, with manifest and stats.
//
// Output directory layout:
//   images/<Event>/<sample_id>.png
//   manifest.csv   see write_manifest
//   stats.txt      key=value, see write_stats
//   errors.txt     one "<unit or sample>\t<message>" line per failure
//
// Work units are processed by a pool of threads; results land in per-unit
// slots and the manifest is sorted by sample_id, so the output does not depend
// on the worker count or scheduling.

#include <algorithm>
#include <atomic>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "otdrimg/encodings.hpp"
#include "otdrimg/error.hpp"
#include "otdrimg/evalkit.hpp"
#include "otdrimg/hash.hpp"
#include "otdrimg/imaging.hpp"
#include "otdrimg/ingest.hpp"
#include "otdrimg/png.hpp"
#include "otdrimg/rng.hpp"

namespace otdrimg {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class SplitScheme { Holdout, KFold };

struct PipelineConfig {
  IngestConfig ingest;
  std::size_t paa_length = 500;
  RpConfig rp;
  std::size_t grid_rows = 3;
  std::size_t grid_cols = 4;
  std::size_t out_height = 224;
  std::size_t out_width = 224;
  std::filesystem::path output_dir = "out";
  SplitScheme split = SplitScheme::Holdout;
  HoldoutRatios ratios;
  int folds = 5;
  std::uint64_t seed = 0;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;

  [[nodiscard]] GridLayout layout() const noexcept {
    return GridLayout{grid_rows, grid_cols, paa_length, paa_length};
  }

  void validate() const {
    if (paa_length < 2 || paa_length > kSeriesLength) {
      throw Error(Errc::InvalidConfig, "paa_length must lie in [2, " +
                                           std::to_string(kSeriesLength) + "], got " +
                                           std::to_string(paa_length));
    }
    if (grid_rows * grid_cols != kRegionCount) {
      throw Error(Errc::InvalidConfig, "grid " + std::to_string(grid_rows) + "x" +
                                           std::to_string(grid_cols) + " does not hold " +
                                           std::to_string(kRegionCount) + " regions");
    }
    if (out_height < 1 || out_width < 1) {
      throw Error(Errc::InvalidConfig, "output resolution must be at least 1x1");
    }
    if (out_height > grid_rows * paa_length || out_width > grid_cols * paa_length) {
      throw Error(Errc::InvalidConfig, "output resolution exceeds the composed grid size");
    }
    if (split == SplitScheme::KFold && folds < 2) {
      throw Error(Errc::InvalidConfig, "k-fold needs at least 2 folds");
    }
    ingest.validate();
  }
};

/// Canonical text of every setting that affects output bytes. Worker count and
/// output directory are excluded.
[[nodiscard]] inline std::string canonical_config(const PipelineConfig& c,
                                                  std::string_view source_tag) {
  std::ostringstream s;
  s << "tool=" << kToolVersion << '\n'
    << "source=" << source_tag << '\n'
    << "paa_length=" << c.paa_length << '\n'
    << "rp=" << c.rp.describe() << '\n'
    << "grid=" << c.grid_rows << 'x' << c.grid_cols << '\n'
    << "resolution=" << c.out_height << 'x' << c.out_width << '\n';
  if (c.split == SplitScheme::Holdout) {
    s << "split=holdout(" << detail::format_double(c.ratios.train) << ','
      << detail::format_double(c.ratios.val) << ',' << detail::format_double(c.ratios.test) << ")\n";
  } else {
    s << "split=kfold(" << c.folds << ")\n";
  }
  s << "seed=" << c.seed << '\n'
    << "transpose=" << c.ingest.transpose << '\n'
    << "mat_variable=" << c.ingest.mat_variable << '\n';
  for (const auto& [file, var] : c.ingest.mat_variable_overrides) {
    s << "mat_variable_override=" << file << ':' << var << '\n';
  }
  return s.str();
}

[[nodiscard]] inline std::string config_digest(const PipelineConfig& c, std::string_view source_tag) {
  return to_hex(fnv1a64(canonical_config(c, source_tag)));
}

/// The three quantized encodings of one region.
struct RegionTiles {
  GrayImage gadf;
  GrayImage gasf;
  GrayImage rp;
};

/// rescale -> PAA -> {GADF, GASF, RP}, each quantized to paa_length^2 pixels.
[[nodiscard]] inline RegionTiles encode_region(const TimeSeries& series, const PipelineConfig& config) {
  const auto normalized = rescale_minmax(series);
  auto reduced = paa(normalized.values(), config.paa_length);
  for (double& v : reduced) {
    v = std::clamp(v, -1.0, 1.0);
  }
  const NormalizedSeries compact(std::move(reduced));
  const auto angles = to_polar(compact);
  return RegionTiles{matrix_to_gray(gadf(angles)), matrix_to_gray(gasf(angles)),
                     matrix_to_gray(recurrence_plot(compact, config.rp))};
}

/// Full-resolution per-technique grids of one sample.
struct TechniqueGrids {
  GrayImage gadf;
  GrayImage gasf;
  GrayImage rp;
};

[[nodiscard]] inline TechniqueGrids transform_sample_grids(const RawSample& sample,
                                                           const PipelineConfig& config) {
  sample.validate();
  std::vector<GrayImage> gadf_tiles;
  std::vector<GrayImage> gasf_tiles;
  std::vector<GrayImage> rp_tiles;
  for (std::size_t r = 0; r < sample.regions.size(); ++r) {
    try {
      auto tiles = encode_region(sample.regions[r], config);
      gadf_tiles.push_back(std::move(tiles.gadf));
      gasf_tiles.push_back(std::move(tiles.gasf));
      rp_tiles.push_back(std::move(tiles.rp));
    } catch (const Error& e) {
      throw Error(e.code(), sample.sample_id + " region " + std::to_string(r) + ": " + e.message());
    }
  }
  const auto layout = config.layout();
  return TechniqueGrids{compose_grid(gadf_tiles, layout), compose_grid(gasf_tiles, layout),
                        compose_grid(rp_tiles, layout)};
}

/// Sample -> fused RGB (R = GADF, G = GASF, B = RP) at the output resolution.
[[nodiscard]] inline RgbImage transform_sample(const RawSample& sample, const PipelineConfig& config) {
  auto grids = transform_sample_grids(sample, config);
  try {
    return resize_area(fuse_rgb(std::move(grids.gadf), std::move(grids.gasf), std::move(grids.rp)),
                       config.out_height, config.out_width);
  } catch (const Error& e) {
    throw Error(e.code(), sample.sample_id + ": " + e.message());
  }
}

/// Something that yields samples: a source file or a generated batch.
struct WorkUnit {
  std::string name;
  std::function<std::vector<RawSample>()> load;
  /// Bytes the unit consumes from its input (file size on disk, or the
  /// float64 size of generated data).
  std::uint64_t input_bytes = 0;
};

struct ManifestRow {
  std::string sample_id;
  int label = 0;
  std::string event;
  std::string path;
  std::string checksum;
  std::string split;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct DatasetManifest {
  std::string tool_version{kToolVersion};
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string split_scheme;
  std::array<std::int64_t, 6> census{};
  std::vector<ManifestRow> rows;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct RunStats {
  std::uint64_t input_bytes = 0;
  std::uint64_t output_bytes = 0;
  std::uint64_t samples_processed = 0;
  std::uint64_t samples_failed = 0;
  std::uint64_t units_failed = 0;
  /// Summed over workers.
  double load_seconds = 0.0;
  double transform_seconds = 0.0;
  double write_seconds = 0.0;
  double wall_seconds = 0.0;

  [[nodiscard]] double compression_ratio() const noexcept {
    return input_bytes == 0 ? 0.0
                            : static_cast<double>(output_bytes) / static_cast<double>(input_bytes);
  }
};

struct UnitError {
  std::string unit;
  std::string message;
};

struct BatchResult {
  DatasetManifest manifest;
  RunStats stats;
  std::vector<UnitError> errors;

  [[nodiscard]] bool ok() const noexcept { return errors.empty(); }
};

/// Manifest CSV. Leading `# key=value` lines carry the header fields, then:
///   sample_id,label,event,path,checksum,split
/// path is relative to the output directory with '/' separators; checksum is
/// the FNV-1a 64 of the PNG bytes as 16 hex digits; split is train/val/test
/// or fold<k>. Rows are sorted by sample_id.
inline void write_manifest(std::ostream& out, const DatasetManifest& m) {
  out << "# tool_version=" << m.tool_version << '\n'
      << "# config_digest=" << m.config_digest << '\n'
      << "# seed=" << m.seed << '\n'
      << "# split=" << m.split_scheme << '\n'
      << "# census=";
  for (int c = 0; c < kClassCount; ++c) {
    out << (c > 0 ? "," : "") << LabelMap::standard().name_of(c) << ':'
        << m.census[static_cast<std::size_t>(c)];
  }
  out << '\n' << "sample_id,label,event,path,checksum,split\n";
  for (const auto& r : m.rows) {
    out << r.sample_id << ',' << r.label << ',' << r.event << ',' << r.path << ',' << r.checksum
        << ',' << r.split << '\n';
  }
}

[[nodiscard]] inline DatasetManifest read_manifest(std::istream& in) {
  DatasetManifest m;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::array<std::int64_t, 6> counted{};
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        continue;
      }
      const auto key = line.substr(2, eq - 2);
      const auto value = line.substr(eq + 1);
      if (key == "tool_version") {
        m.tool_version = value;
      } else if (key == "config_digest") {
        m.config_digest = value;
      } else if (key == "seed") {
        m.seed = std::stoull(value);
      } else if (key == "split") {
        m.split_scheme = value;
      } else if (key == "census") {
        std::istringstream parts(value);
        std::string part;
        while (std::getline(parts, part, ',')) {
          const auto colon = part.find(':');
          const auto label = LabelMap::standard().label_of(part.substr(0, colon));
          if (colon == std::string::npos || !label) {
            throw Error(Errc::PredictionFormat, "manifest census entry '" + part + "' is malformed");
          }
          m.census[static_cast<std::size_t>(*label)] = std::stoll(part.substr(colon + 1));
        }
      }
      continue;
    }
    if (!header_seen) {
      if (line != "sample_id,label,event,path,checksum,split") {
        throw Error(Errc::PredictionFormat, "manifest line " + std::to_string(line_no) +
                                                ": unexpected column header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) {
      fields.push_back(field);
    }
    if (fields.size() != 6) {
      throw Error(Errc::PredictionFormat,
                  "manifest line " + std::to_string(line_no) + ": expected 6 fields");
    }
    ManifestRow r{fields[0], detail::parse_label(fields[1], line_no), fields[2], fields[3], fields[4],
                  fields[5]};
    ++counted[static_cast<std::size_t>(r.label)];
    m.rows.push_back(std::move(r));
  }
  if (!header_seen) {
    throw Error(Errc::PredictionFormat, "manifest has no column header");
  }
  if (counted != m.census) {
    throw Error(Errc::PredictionFormat, "manifest census does not match its rows");
  }
  return m;
}

/// key=value: input_bytes, output_bytes, compression_ratio, samples_processed,
/// samples_failed, units_failed, load_seconds, transform_seconds,
/// write_seconds, wall_seconds. input_bytes counts bytes on disk of the source
/// files consumed (generated data counts 8 bytes per value).
inline void write_stats(std::ostream& out, const RunStats& s) {
  using detail::format_double;
  out << "input_bytes=" << s.input_bytes << '\n'
      << "output_bytes=" << s.output_bytes << '\n'
      << "compression_ratio=" << format_double(s.compression_ratio()) << '\n'
      << "samples_processed=" << s.samples_processed << '\n'
      << "samples_failed=" << s.samples_failed << '\n'
      << "units_failed=" << s.units_failed << '\n'
      << "load_seconds=" << format_double(s.load_seconds) << '\n'
      << "transform_seconds=" << format_double(s.transform_seconds) << '\n'
      << "write_seconds=" << format_double(s.write_seconds) << '\n'
      << "wall_seconds=" << format_double(s.wall_seconds) << '\n';
}

namespace detail {

struct ProducedSample {
  ManifestRow row;
  std::uint64_t png_bytes = 0;
};

struct UnitOutcome {
  std::vector<ProducedSample> samples;
  std::vector<UnitError> errors;
  double load_seconds = 0.0;
  double transform_seconds = 0.0;
  double write_seconds = 0.0;
  bool load_failed = false;
};

[[nodiscard]] inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

[[nodiscard]] inline UnitOutcome process_unit(const WorkUnit& unit, const PipelineConfig& config) {
  UnitOutcome outcome;
  auto t0 = std::chrono::steady_clock::now();
  std::vector<RawSample> samples;
  try {
    samples = unit.load();
  } catch (const std::exception& e) {
    outcome.load_failed = true;
    outcome.errors.push_back({unit.name, e.what()});
    return outcome;
  }
  outcome.load_seconds = seconds_since(t0);
  for (const auto& sample : samples) {
    try {
      t0 = std::chrono::steady_clock::now();
      const auto image = transform_sample(sample, config);
      outcome.transform_seconds += seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      const std::string event(LabelMap::standard().name_of(sample.label));
      const std::string rel = "images/" + event + "/" + sample.sample_id + ".png";
      const auto bytes = encode_png(image);
      {
        const auto path = config.output_dir / rel;
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        file.write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));
        file.close();
        if (!file) {
          throw Error(Errc::Io, "failed writing " + path.string());
        }
      }
      outcome.write_seconds += seconds_since(t0);
      outcome.samples.push_back(
          {ManifestRow{sample.sample_id, sample.label, event, rel, to_hex(fnv1a64(bytes)), ""},
           bytes.size()});
    } catch (const std::exception& e) {
      outcome.errors.push_back({sample.sample_id, e.what()});
    }
  }
  return outcome;
}

}  // namespace detail

/// Transforms every unit, writes PNGs, manifest, stats and the error report.
/// A failing unit or sample is recorded and the rest still run.
[[nodiscard]] inline BatchResult run_units(const std::vector<WorkUnit>& units,
                                           const PipelineConfig& config,
                                           std::string_view source_tag) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  std::error_code ec;
  for (int c = 0; c < kClassCount; ++c) {
    fs::create_directories(config.output_dir / "images" / std::string(LabelMap::standard().name_of(c)), ec);
    if (ec) {
      throw Error(Errc::Io, "cannot create output directory under " + config.output_dir.string() +
                                ": " + ec.message());
    }
  }

  std::vector<detail::UnitOutcome> outcomes(units.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < units.size(); i = next.fetch_add(1)) {
      outcomes[i] = detail::process_unit(units[i], config);
    }
  };
  unsigned workers = config.workers == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                         : config.workers;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, units.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back(worker);
    }
  }

  BatchResult result;
  auto& stats = result.stats;
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.load_failed) {
      stats.input_bytes += units[i].input_bytes;
    } else {
      ++stats.units_failed;
    }
    stats.load_seconds += o.load_seconds;
    stats.transform_seconds += o.transform_seconds;
    stats.write_seconds += o.write_seconds;
    stats.samples_failed += o.load_failed ? 0 : o.errors.size();
    for (auto& s : o.samples) {
      stats.output_bytes += s.png_bytes;
      result.manifest.rows.push_back(std::move(s.row));
    }
    for (auto& e : o.errors) {
      result.errors.push_back(std::move(e));
    }
  }
  stats.samples_processed = result.manifest.rows.size();

  auto& rows = result.manifest.rows;
  std::sort(rows.begin(), rows.end(),
            [](const ManifestRow& a, const ManifestRow& b) { return a.sample_id < b.sample_id; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].sample_id == rows[i - 1].sample_id) {
      throw Error(Errc::InvalidConfig, "duplicate sample id '" + rows[i].sample_id +
                                           "' across inputs; file stems must be unique per event");
    }
  }

  auto& manifest = result.manifest;
  manifest.config_digest = config_digest(config, source_tag);
  manifest.seed = config.seed;
  std::vector<LabeledId> ids;
  ids.reserve(rows.size());
  for (const auto& r : rows) {
    ids.push_back({r.sample_id, r.label});
    ++manifest.census[static_cast<std::size_t>(r.label)];
  }
  if (!rows.empty()) {
    SplitAssignment split;
    if (config.split == SplitScheme::Holdout) {
      split = split_holdout(ids, config.seed, config.ratios);
      manifest.split_scheme = "holdout(" + detail::format_double(config.ratios.train) + "," +
                              detail::format_double(config.ratios.val) + "," +
                              detail::format_double(config.ratios.test) + ")";
    } else {
      split = split_kfold(ids, config.folds, config.seed);
      manifest.split_scheme = "kfold(" + std::to_string(config.folds) + ")";
    }
    for (auto& r : rows) {
      r.split = split.label_for(r.sample_id);
    }
  }

  std::sort(result.errors.begin(), result.errors.end(),
            [](const UnitError& a, const UnitError& b) { return a.unit < b.unit; });
  stats.wall_seconds = detail::seconds_since(wall_start);

  const auto write_text = [&](const fs::path& name, const auto& emit) {
    std::ofstream file(config.output_dir / name, std::ios::trunc);
    emit(file);
    file.close();
    if (!file) {
      throw Error(Errc::Io, "failed writing " + (config.output_dir / name).string());
    }
  };
  write_text("manifest.csv", [&](std::ostream& o) { write_manifest(o, manifest); });
  write_text("stats.txt", [&](std::ostream& o) { write_stats(o, stats); });
  write_text("errors.txt", [&](std::ostream& o) {
    for (const auto& e : result.errors) {
      o << e.unit << '\t' << e.message << '\n';
    }
  });
  return result;
}

/// Work units for the configured ingest sources, one per file.
[[nodiscard]] inline std::vector<WorkUnit> units_from_sources(const IngestConfig& ingest) {
  std::vector<WorkUnit> units;
  for (const auto& source : enumerate_sources(ingest)) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(source.path, ec);
    units.push_back(WorkUnit{source.path.string(),
                             [source, ingest] { return ingest_file(source.path, source.event, ingest); },
                             ec ? 0 : static_cast<std::uint64_t>(size)});
  }
  return units;
}

/// Runs the batch over config.ingest sources.
[[nodiscard]] inline BatchResult run_batch(const PipelineConfig& config) {
  config.validate();
  const auto units = units_from_sources(config.ingest);
  std::string tag = "files:";
  for (const auto& u : units) {
    tag += std::filesystem::path(u.name).filename().string() + ";";
  }
  return run_units(units, config, "ingest:" + to_hex(fnv1a64(tag)));
}

/// Signal parameters for one synthetic class.
struct SyntheticClass {
  double frequency_hz;
  double amplitude;
  double noise_sigma;
  /// Width (in regions) of the gaussian envelope around the event location.
  double spread;
};

/// Surrogates for the six event classes: distinct frequency, amplitude, noise.
inline constexpr std::array<SyntheticClass, 6> kSyntheticClasses = {{
    {0.5, 0.2, 0.30, 6.0},  // Background: slow drift under noise
    {3.0, 4.0, 0.50, 1.5},  // Digging
    {6.0, 4.0, 0.40, 1.0},  // Knocking
    {1.5, 2.0, 0.80, 2.5},  // Watering
    {12.0, 3.0, 0.30, 2.0}, // Shaking
    {9.0, 2.0, 0.20, 1.2},  // Walking
}};

inline constexpr double kSyntheticSampleRate = 1000.0;

/// One deterministic synthetic sample. Each region is a sinusoid whose
/// amplitude falls off with distance from a seed-chosen event region, plus noise.
[[nodiscard]] inline RawSample synthetic_sample(int label, std::size_t index, std::uint64_t seed,
                                                const SyntheticClass& params) {
  SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(label), index));
  const double center = 2.0 + static_cast<double>(rng.next() % 8);
  RawSample s;
  s.label = label;
  std::array<char, 8> idx{};
  std::snprintf(idx.data(), idx.size(), "%05zu", index);
  s.sample_id = std::string(LabelMap::standard().name_of(label)) + "_demo_" + idx.data();
  for (std::size_t r = 0; r < kRegionCount; ++r) {
    const double dist = (static_cast<double>(r) - center) / params.spread;
    SinusoidSpec spec;
    spec.amplitude = params.amplitude * std::exp(-0.5 * dist * dist);
    spec.frequency_hz = params.frequency_hz;
    spec.duration_s = static_cast<double>(kSeriesLength) / kSyntheticSampleRate;
    spec.sample_rate_hz = kSyntheticSampleRate;
    spec.noise_sigma = params.noise_sigma;
    spec.seed = mix_seed(seed, static_cast<std::uint64_t>(label), index, r + 1);
    s.regions.push_back(generate_sinusoid(spec));
  }
  return s;
}

/// n_per_class synthetic samples per class as lazily generated work units.
[[nodiscard]] inline std::vector<WorkUnit> synthetic_units(std::size_t n_per_class, std::uint64_t seed) {
  std::vector<WorkUnit> units;
  for (int label = 0; label < kClassCount; ++label) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const auto& params = kSyntheticClasses[static_cast<std::size_t>(label)];
      units.push_back(WorkUnit{
          std::string(LabelMap::standard().name_of(label)) + "#" + std::to_string(i),
          [=] { return std::vector<RawSample>{synthetic_sample(label, i, seed, params)}; },
          kRegionCount * kSeriesLength * sizeof(double)});
    }
  }
  return units;
}

/// Generates the synthetic dataset and runs the batch over it.
[[nodiscard]] inline BatchResult demo_synthetic(const PipelineConfig& config, std::size_t n_per_class,
                                                std::uint64_t seed) {
  if (n_per_class < 1) {
    throw Error(Errc::InvalidConfig, "n_per_class must be at least 1");
  }
  return run_units(synthetic_units(n_per_class, seed), config,
                   "demo:n=" + std::to_string(n_per_class) + ",seed=" + std::to_string(seed));
}

}  // namespace otdrimg
