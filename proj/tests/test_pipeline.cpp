#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "png_decode.hpp"
#include "scratch_dir.hpp"
#include "otdrimg/config_json.hpp"
#include "otdrimg/pipeline.hpp"

using namespace otdrimg;
namespace fs = std::filesystem;

namespace {

RawSample sinusoid_sample(const std::string& id, int label, double freq_hz) {
  RawSample s;
  s.sample_id = id;
  s.label = label;
  for (std::size_t r = 0; r < kRegionCount; ++r) {
    SinusoidSpec spec;
    spec.frequency_hz = freq_hz;
    spec.duration_s = 10.0;
    spec.amplitude = 1.0 + static_cast<double>(r);
    spec.noise_sigma = 0.1;
    spec.seed = r;
    s.regions.push_back(generate_sinusoid(spec));
  }
  return s;
}

RawSample constant_sample() {
  RawSample s;
  s.sample_id = "Background_flat_0";
  s.label = 0;
  for (std::size_t r = 0; r < kRegionCount; ++r) {
    s.regions.emplace_back(std::vector<double>(kSeriesLength, 3.25));
  }
  return s;
}

PipelineConfig config_in(const fs::path& out, unsigned workers = 1) {
  PipelineConfig c;
  c.output_dir = out;
  c.workers = workers;
  return c;
}

}  // namespace

TEST(Transform, DefaultGeometry) {
  const auto sample = sinusoid_sample("Digging_x_0", 1, 6.0);
  const PipelineConfig config;
  const auto tiles = encode_region(sample.regions[0], config);
  EXPECT_EQ(tiles.gasf.height(), 500U);
  EXPECT_EQ(tiles.gasf.width(), 500U);
  EXPECT_EQ(tiles.rp.height(), 500U);
  const auto grids = transform_sample_grids(sample, config);
  for (const auto* g : {&grids.gadf, &grids.gasf, &grids.rp}) {
    EXPECT_EQ(g->height(), 1500U);
    EXPECT_EQ(g->width(), 2000U);
  }
  // Tile k of the grid is region k, row-major.
  const auto region7 = encode_region(sample.regions[7], config);
  EXPECT_EQ(crop_tile(grids.gasf, config.layout(), 7), region7.gasf);
  const auto img = transform_sample(sample, config);
  EXPECT_EQ(img.height(), 224U);
  EXPECT_EQ(img.width(), 224U);
}

TEST(Transform, ConstantRegionsGiveFlatPlanes) {
  const auto img = transform_sample(constant_sample(), PipelineConfig{});
  const auto all = [](const GrayImage& g, std::uint8_t v) {
    return std::all_of(g.pixels().begin(), g.pixels().end(), [v](std::uint8_t p) { return p == v; });
  };
  EXPECT_TRUE(all(img.channel(0), 128));  // GADF: sin(0)
  EXPECT_TRUE(all(img.channel(1), 0));    // GASF: cos(pi)
  EXPECT_TRUE(all(img.channel(2), 255));  // RP: everything recurs
}

TEST(Transform, DifferentFrequenciesDiffer) {
  const PipelineConfig config;
  const auto a = transform_sample(sinusoid_sample("Digging_a_0", 1, 3.0), config);
  const auto b = transform_sample(sinusoid_sample("Digging_b_0", 1, 6.0), config);
  EXPECT_NE(a, b);
}

TEST(Transform, RepeatableBytes) {
  const auto s = sinusoid_sample("Walking_r_0", 5, 6.0);
  EXPECT_EQ(encode_png(transform_sample(s, PipelineConfig{})),
            encode_png(transform_sample(s, PipelineConfig{})));
}

TEST(Transform, BadRegionIsTaggedWithSampleAndRegion) {
  auto s = sinusoid_sample("Knocking_bad_0", 2, 6.0);
  s.regions[4] = TimeSeries(std::vector<double>(100, 1.0));
  try {
    (void)transform_sample(s, PipelineConfig{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("Knocking_bad_0"), std::string::npos) << e.what();
  }
}

TEST(Config, DigestIgnoresWorkersAndOutputDir) {
  PipelineConfig a;
  PipelineConfig b;
  b.workers = 8;
  b.output_dir = "/elsewhere";
  EXPECT_EQ(config_digest(a, "x"), config_digest(b, "x"));
  b.paa_length = 250;
  EXPECT_NE(config_digest(a, "x"), config_digest(b, "x"));
  EXPECT_NE(config_digest(a, "x"), config_digest(a, "y"));
  PipelineConfig c;
  c.rp = RpConfig::fixed(0.1);
  EXPECT_NE(config_digest(a, "x"), config_digest(c, "x"));
}

TEST(Config, ValidationRejectsBadSettings) {
  PipelineConfig c;
  c.grid_cols = 5;
  EXPECT_THROW(c.validate(), Error);
  c = PipelineConfig{};
  c.paa_length = 1;
  EXPECT_THROW(c.validate(), Error);
  c = PipelineConfig{};
  c.out_height = 5000;
  EXPECT_THROW(c.validate(), Error);
  c = PipelineConfig{};
  c.split = SplitScheme::KFold;
  c.folds = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Config, JsonOverridesDefaults) {
  const auto j = nlohmann::json::parse(R"({
    "sources": {"digging": ["a.mat"]},
    "mat_variable": "data",
    "mat_variable_overrides": {"odd.mat": "trace"},
    "transpose": true,
    "paa_length": 250,
    "rp_epsilon": 0.05,
    "resolution": [112, 100],
    "split": "kfold",
    "folds": 4,
    "seed": 9,
    "workers": 3,
    "output_dir": "out"
  })");
  const auto c = pipeline_config_from_json(j, "/base");
  EXPECT_EQ(c.ingest.sources.at("digging").at(0), fs::path("/base/a.mat"));
  EXPECT_EQ(c.ingest.mat_variable, "data");
  EXPECT_EQ(c.ingest.mat_variable_overrides.at("odd.mat"), "trace");
  EXPECT_TRUE(c.ingest.transpose);
  EXPECT_EQ(c.paa_length, 250U);
  EXPECT_EQ(c.rp.describe(), RpConfig::fixed(0.05).describe());
  EXPECT_EQ(c.out_height, 112U);
  EXPECT_EQ(c.out_width, 100U);
  EXPECT_EQ(c.split, SplitScheme::KFold);
  EXPECT_EQ(c.folds, 4);
  EXPECT_EQ(c.seed, 9U);
  EXPECT_EQ(c.workers, 3U);
  EXPECT_EQ(c.output_dir, fs::path("/base/out"));
}

TEST(Config, JsonRejectsConflicts) {
  EXPECT_THROW((void)pipeline_config_from_json(nlohmann::json::parse(R"({"rp_epsilon":0.1,"rp_percentile":5})"), "."),
               Error);
  EXPECT_THROW((void)pipeline_config_from_json(nlohmann::json::parse(R"({"split":"random"})"), "."), Error);
  EXPECT_THROW((void)pipeline_config_from_json(nlohmann::json::parse(R"({"paa_length":"big"})"), "."), Error);
}

TEST(Manifest, RoundTrip) {
  DatasetManifest m;
  m.config_digest = "0123456789abcdef";
  m.seed = 42;
  m.split_scheme = "kfold(5)";
  m.census = {1, 0, 0, 0, 0, 1};
  m.rows = {{"Background_a_0", 0, "Background", "images/Background/Background_a_0.png",
             "00000000000000ff", "fold0"},
            {"Walking_b_0", 5, "Walking", "images/Walking/Walking_b_0.png", "ffffffffffffffff", "fold3"}};
  std::stringstream ss;
  write_manifest(ss, m);
  EXPECT_EQ(read_manifest(ss), m);
}

TEST(Manifest, CensusMustMatchRows) {
  std::istringstream in(
      "# census=Background:2,Digging:0,Knocking:0,Watering:0,Shaking:0,Walking:0\n"
      "sample_id,label,event,path,checksum,split\n"
      "Background_a_0,0,Background,images/Background/Background_a_0.png,00,train\n");
  EXPECT_THROW((void)read_manifest(in), Error);
}

TEST(Batch, DemoWritesImagesManifestAndStats) {
  ScratchDir dir("demo");
  const auto result = demo_synthetic(config_in(dir.path(), 2), 2, 7);
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(result.manifest.rows.size(), 12U);
  for (auto c : result.manifest.census) {
    EXPECT_EQ(c, 2);
  }
  std::size_t pngs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "images")) {
    pngs += e.path().extension() == ".png" ? 1 : 0;
  }
  EXPECT_EQ(pngs, 12U);
  std::uint64_t total = 0;
  for (const auto& row : result.manifest.rows) {
    const auto bytes = slurp(dir / row.path);
    total += bytes.size();
    EXPECT_EQ(to_hex(fnv1a64(bytes)), row.checksum);
    const auto png = decode_png(bytes);
    EXPECT_EQ(png.width, 224U);
    EXPECT_EQ(png.height, 224U);
    EXPECT_EQ(png.color_type, 2);
  }
  EXPECT_EQ(result.stats.output_bytes, total);
  EXPECT_EQ(result.stats.input_bytes, 12U * 960'000U);
  EXPECT_EQ(result.stats.samples_processed, 12U);

  std::ifstream in(dir / "manifest.csv");
  EXPECT_EQ(read_manifest(in), result.manifest);
  const auto stats = slurp_text(dir / "stats.txt");
  EXPECT_NE(stats.find("compression_ratio="), std::string::npos) << stats;
  EXPECT_TRUE(fs::exists(dir / "errors.txt"));
  EXPECT_EQ(fs::file_size(dir / "errors.txt"), 0U);
}

TEST(Batch, WorkerCountDoesNotChangeOutput) {
  ScratchDir one("w1");
  ScratchDir many("w8");
  const auto a = demo_synthetic(config_in(one.path(), 1), 2, 11);
  const auto b = demo_synthetic(config_in(many.path(), 8), 2, 11);
  ASSERT_EQ(a.manifest, b.manifest);
  EXPECT_EQ(slurp(one / "manifest.csv"), slurp(many / "manifest.csv"));
  for (const auto& row : a.manifest.rows) {
    EXPECT_EQ(slurp(one / row.path), slurp(many / row.path)) << row.sample_id;
  }
}

TEST(Batch, KFoldManifest) {
  ScratchDir dir("kfold");
  auto config = config_in(dir.path(), 4);
  config.split = SplitScheme::KFold;
  config.folds = 3;
  const auto result = demo_synthetic(config, 3, 1);
  EXPECT_EQ(result.manifest.split_scheme, "kfold(3)");
  std::set<std::string> folds;
  for (const auto& row : result.manifest.rows) {
    folds.insert(row.split);
  }
  EXPECT_EQ(folds, (std::set<std::string>{"fold0", "fold1", "fold2"}));
}

TEST(Batch, FailuresAreCollectedAndOthersStillWritten) {
  ScratchDir dir("fail");
  std::vector<WorkUnit> units;
  units.push_back({"good", [] { return std::vector<RawSample>{sinusoid_sample("Digging_good_0", 1, 6.0)}; }, 10});
  units.push_back({"unreadable", []() -> std::vector<RawSample> { throw Error(Errc::Io, "boom"); }, 99});
  units.push_back({"mixed", [] {
                     auto bad = sinusoid_sample("Walking_bad_0", 5, 6.0);
                     bad.regions.pop_back();
                     return std::vector<RawSample>{bad, sinusoid_sample("Walking_ok_0", 5, 9.0)};
                   },
                   20});
  const auto result = run_units(units, config_in(dir.path(), 3), "test");
  EXPECT_FALSE(result.ok());
  ASSERT_EQ(result.errors.size(), 2U);
  EXPECT_EQ(result.errors[0].unit, "Walking_bad_0");
  EXPECT_EQ(result.errors[1].unit, "unreadable");
  EXPECT_EQ(result.manifest.rows.size(), 2U);
  EXPECT_EQ(result.stats.units_failed, 1U);
  EXPECT_EQ(result.stats.samples_failed, 1U);
  EXPECT_EQ(result.stats.input_bytes, 30U);
  EXPECT_TRUE(fs::exists(dir / "images/Digging/Digging_good_0.png"));
  EXPECT_TRUE(fs::exists(dir / "images/Walking/Walking_ok_0.png"));
  const auto errors = slurp_text(dir / "errors.txt");
  EXPECT_NE(errors.find("unreadable\tIoError: boom"), std::string::npos) << errors;
  EXPECT_NE(errors.find("Walking_bad_0\t"), std::string::npos) << errors;
}

TEST(Batch, DuplicateSampleIdsAreFatal) {
  ScratchDir dir("dup");
  std::vector<WorkUnit> units(2, WorkUnit{"u", [] { return std::vector<RawSample>{constant_sample()}; }, 1});
  EXPECT_THROW((void)run_units(units, config_in(dir.path()), "test"), Error);
}

TEST(Batch, RunBatchOverMatAndCsvSources) {
  ScratchDir in("src");
  ScratchDir out("dst");
  fs::create_directories(in / "digging");
  fs::create_directories(in / "Walking");
  fs::create_directories(in / "notes");
  fs::copy_file(fs::path(OTDRIMG_TEST_DATA_DIR) / "sample_12x10000_int16.mat", in / "digging/site1.mat");
  {
    std::ofstream csv(in / "Walking/trail.csv");
    write_csv_fallback(csv, {sinusoid_sample("unused", 5, 2.0), sinusoid_sample("unused", 5, 4.0)});
  }
  {
    std::ofstream junk(in / "notes/readme.csv");
    junk << "not a sample\n";
  }
  auto config = config_in(out.path(), 2);
  config.ingest = sources_from_event_dirs(in.path());
  const auto result = run_batch(config);
  ASSERT_TRUE(result.ok()) << result.errors.front().message;
  std::vector<std::string> ids;
  for (const auto& row : result.manifest.rows) {
    ids.push_back(row.sample_id);
  }
  EXPECT_EQ(ids, (std::vector<std::string>{"Digging_site1_0", "Walking_trail_0", "Walking_trail_1"}));
  EXPECT_EQ(result.stats.input_bytes, fs::file_size(in / "digging/site1.mat") + fs::file_size(in / "Walking/trail.csv"));
  EXPECT_EQ(result.manifest.census[1], 1);
  EXPECT_EQ(result.manifest.census[5], 2);
}

TEST(Throughput, DoublingPaaLengthCostsAtMostFiveTimes) {
  const auto sample = synthetic_sample(4, 0, 3, kSyntheticClasses[4]);
  const auto best_of = [&](std::size_t paa_length) {
    PipelineConfig config;
    config.paa_length = paa_length;
    double best = 1e9;
    for (int i = 0; i < 3; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)transform_sample(sample, config);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
  };
  const double t250 = best_of(250);
  const double t500 = best_of(500);
  EXPECT_LE(t500 / t250, 5.0) << t250 << " s vs " << t500 << " s";
}
