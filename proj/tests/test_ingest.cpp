#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "otdrimg/ingest.hpp"

using namespace otdrimg;

namespace {

const std::filesystem::path kData = OTDRIMG_TEST_DATA_DIR;

MatArray make_array(std::size_t rows, std::size_t cols) {
  MatArray m{"x", rows, cols, "double", std::vector<double>(rows * cols)};
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = static_cast<double>(i % 97) * 0.5;
  }
  return m;
}

RawSample ramp_sample(const std::string& id, int label, double offset) {
  RawSample s;
  s.sample_id = id;
  s.label = label;
  for (std::size_t r = 0; r < kRegionCount; ++r) {
    std::vector<double> v(kSeriesLength);
    for (std::size_t t = 0; t < kSeriesLength; ++t) {
      v[t] = offset + 0.1 * static_cast<double>(r) + std::sin(0.001 * static_cast<double>(t * (r + 1))) / 3.0;
    }
    s.regions.emplace_back(std::move(v));
  }
  return s;
}

std::string to_csv(const std::vector<RawSample>& samples) {
  std::ostringstream out;
  write_csv_fallback(out, samples);
  return out.str();
}

}  // namespace

TEST(LabelMap, StandardTable) {
  const auto& map = LabelMap::standard();
  const char* names[] = {"Background", "Digging", "Knocking", "Watering", "Shaking", "Walking"};
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(map.label_of(names[i]), i);
    EXPECT_EQ(map.name_of(i), names[i]);
  }
  EXPECT_EQ(map.label_of("digging"), 1);
  EXPECT_FALSE(map.label_of("Running"));
  EXPECT_THROW((void)map.name_of(6), Error);
}

TEST(ToSamples, DiggingMatrixGetsLabelOne) {
  const auto samples = to_samples({make_array(12, 10'000)}, "Digging", "f01", {});
  ASSERT_EQ(samples.size(), 1U);
  EXPECT_EQ(samples[0].label, 1);
  EXPECT_EQ(samples[0].sample_id, "Digging_f01_0");
  EXPECT_NO_THROW(samples[0].validate());
  EXPECT_EQ(samples[0].regions[3][17], make_array(12, 10'000)(3, 17));
}

TEST(ToSamples, TransposeReadsColumns) {
  const auto m = make_array(10'000, 12);
  IngestConfig cfg;
  cfg.transpose = true;
  const auto samples = to_samples({m}, "Walking", "f", cfg);
  ASSERT_EQ(samples.size(), 1U);
  EXPECT_EQ(samples[0].regions[5][123], m(123, 5));
  EXPECT_THROW((void)to_samples({m}, "Walking", "f", {}), Error);
}

TEST(ToSamples, WrongShapeNamesDimensions) {
  try {
    (void)to_samples({make_array(11, 10'000)}, "Digging", "f", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("11x10000"), std::string::npos);
  }
}

TEST(ToSamples, GoldenMatFilesBothOrientations) {
  IngestConfig transposed;
  transposed.transpose = true;
  const auto a = ingest_file(kData / "sample_12x10000_int16.mat", "Knocking", {});
  const auto b = ingest_file(kData / "sample_10000x12_int16.mat", "Knocking", transposed);
  ASSERT_EQ(a.size(), 1U);
  ASSERT_EQ(b.size(), 1U);
  EXPECT_EQ(a[0].sample_id, "Knocking_sample_12x10000_int16_0");
  for (std::size_t r = 0; r < kRegionCount; ++r) {
    for (std::size_t t = 0; t < kSeriesLength; t += 997) {
      const double want = static_cast<double>(static_cast<int>((r * 37 + t * 7) % 1000) - 500);
      EXPECT_EQ(a[0].regions[r][t], want);
      EXPECT_EQ(b[0].regions[r][t], want);
    }
  }
}

TEST(CsvFallback, SingleAndDoubleSample) {
  const auto one = to_csv({ramp_sample("a", 0, 0.0)});
  std::istringstream in1(one);
  EXPECT_EQ(parse_csv_stream(in1, "Shaking", "f").size(), 1U);

  const auto two = to_csv({ramp_sample("a", 0, 0.0), ramp_sample("b", 0, 1.0)});
  std::istringstream in2(two);
  const auto parsed = parse_csv_stream(in2, "Shaking", "f");
  ASSERT_EQ(parsed.size(), 2U);
  EXPECT_EQ(parsed[1].sample_id, "Shaking_f_1");
  EXPECT_EQ(parsed[1].label, 4);
}

TEST(CsvFallback, RaggedRowReportsLine) {
  auto text = to_csv({ramp_sample("a", 0, 0.0)});
  // Drop the last field of row 42.
  std::size_t pos = 0;
  for (int line = 1; line < 42; ++line) {
    pos = text.find('\n', pos) + 1;
  }
  const auto eol = text.find('\n', pos);
  const auto last_comma = text.rfind(',', eol);
  text.erase(last_comma, eol - last_comma);
  std::istringstream in(text);
  try {
    (void)parse_csv_stream(in, "Digging", "f");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CsvShape);
    EXPECT_NE(std::string(e.what()).find("line 42"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("got 11"), std::string::npos) << e.what();
  }
}

TEST(CsvFallback, ShortBlockIsAnError) {
  std::istringstream in("1,2,3,4,5,6,7,8,9,10,11,12\n");
  EXPECT_THROW((void)parse_csv_stream(in, "Digging", "f"), Error);
}

TEST(CsvFallback, RoundTripIsValueIdentical) {
  std::vector<RawSample> samples{ramp_sample("x", 2, -3.25), ramp_sample("y", 2, 1e-7)};
  std::istringstream in(to_csv(samples));
  const auto parsed = parse_csv_stream(in, "Knocking", "f");
  ASSERT_EQ(parsed.size(), samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (std::size_t r = 0; r < kRegionCount; ++r) {
      const auto a = samples[s].regions[r].values();
      const auto b = parsed[s].regions[r].values();
      ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST(Sources, EventDirectoriesAreDiscovered) {
  const auto root = std::filesystem::temp_directory_path() / "otdrimg_sources_test";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root / "digging");
  std::filesystem::create_directories(root / "notes");
  std::filesystem::copy_file(kData / "double_2x3.mat", root / "digging" / "a.mat");
  std::ofstream(root / "digging" / "readme.md") << "ignored";
  const auto cfg = sources_from_event_dirs(root);
  const auto files = enumerate_sources(cfg);
  ASSERT_EQ(files.size(), 1U);
  EXPECT_EQ(files[0].event, "Digging");
  EXPECT_EQ(files[0].path.filename(), "a.mat");
  std::filesystem::remove_all(root);

  IngestConfig bad;
  bad.sources["Running"] = {root};
  EXPECT_THROW((void)enumerate_sources(bad), Error);
}
