#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "otdrimg/imaging.hpp"

using namespace otdrimg;

namespace {

GrayImage random_image(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  std::uniform_int_distribution<int> px(0, 255);
  GrayImage img(h, w);
  for (auto& v : img.pixels()) {
    v = static_cast<std::uint8_t>(px(rng));
  }
  return img;
}

}  // namespace

TEST(MatrixToGray, GasfEndpointsAndMidpoint) {
  const auto img = matrix_to_gray(EncodingMatrix(2, EncodingKind::GASF, {-1, 0, 0, 1}));
  EXPECT_EQ(std::vector<std::uint8_t>(img.pixels().begin(), img.pixels().end()),
            (std::vector<std::uint8_t>{0, 128, 128, 255}));
}

TEST(MatrixToGray, RpIsBinary) {
  const auto img = matrix_to_gray(EncodingMatrix(2, EncodingKind::RP, {1, 0, 0, 1}));
  EXPECT_EQ(std::vector<std::uint8_t>(img.pixels().begin(), img.pixels().end()),
            (std::vector<std::uint8_t>{255, 0, 0, 255}));
}

TEST(MatrixToGray, GadfDiagonalIsMidGray) {
  const auto img = matrix_to_gray(EncodingMatrix(3, EncodingKind::GADF, {0, 0.5, -1, -0.5, 0, 0.25, 1, -0.25, 0}));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(img.at(i, i), 128);
  }
}

TEST(MatrixToGray, RejectsOutOfRange) {
  try {
    (void)matrix_to_gray(EncodingMatrix(1, EncodingKind::GASF, {1.5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EncodingRange);
  }
  EXPECT_THROW((void)matrix_to_gray(EncodingMatrix(1, EncodingKind::RP, {0.5})), Error);
}

TEST(MatrixToGray, Monotone) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10'000; ++i) {
    double a = u(rng);
    double b = u(rng);
    if (a > b) std::swap(a, b);
    const auto img = matrix_to_gray(EncodingMatrix(2, EncodingKind::GASF, {a, b, b, a}));
    ASSERT_LE(img.at(0, 0), img.at(0, 1));
  }
}

TEST(ComposeGrid, DefaultGeometry) {
  std::vector<GrayImage> tiles(12, GrayImage(500, 500, 7));
  const auto grid = compose_grid(tiles, GridLayout{});
  EXPECT_EQ(grid.height(), 1500U);
  EXPECT_EQ(grid.width(), 2000U);
}

TEST(ComposeGrid, IdentityGrid) {
  std::mt19937_64 rng(1);
  const std::vector<GrayImage> tiles{random_image(rng, 3, 5)};
  EXPECT_EQ(compose_grid(tiles, GridLayout{1, 1, 3, 5}), tiles[0]);
}

TEST(ComposeGrid, QuadrantsHoldTheirConstants) {
  const std::vector<GrayImage> tiles{GrayImage(2, 2, 10), GrayImage(2, 2, 20), GrayImage(2, 2, 30),
                                     GrayImage(2, 2, 40)};
  const auto grid = compose_grid(tiles, GridLayout{2, 2, 2, 2});
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      const std::size_t k = (y / 2) * 2 + x / 2;
      EXPECT_EQ(grid.at(y, x), 10 * (k + 1)) << y << "," << x;
    }
  }
}

TEST(ComposeGrid, CropRecoversEveryTile) {
  std::mt19937_64 rng(2);
  const GridLayout layout{3, 4, 6, 9};
  std::vector<GrayImage> tiles;
  for (int k = 0; k < 12; ++k) {
    tiles.push_back(random_image(rng, 6, 9));
  }
  const auto grid = compose_grid(tiles, layout);
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_EQ(crop_tile(grid, layout, k), tiles[k]);
  }
}

TEST(ComposeGrid, ShapeErrors) {
  std::vector<GrayImage> tiles(11, GrayImage(2, 2));
  try {
    (void)compose_grid(tiles, GridLayout{3, 4, 2, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::GridShape);
  }
  tiles.emplace_back(2, 3);
  EXPECT_THROW((void)compose_grid(tiles, GridLayout{3, 4, 2, 2}), Error);
}

TEST(FuseRgb, ChannelIsolationAndRoundTrip) {
  const auto red = fuse_rgb(GrayImage(2, 2, 255), GrayImage(2, 2, 0), GrayImage(2, 2, 0));
  const auto rgb = red.interleaved();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(rgb[i * 3], 255);
    EXPECT_EQ(rgb[i * 3 + 1], 0);
    EXPECT_EQ(rgb[i * 3 + 2], 0);
  }
  std::mt19937_64 rng(3);
  const auto r = random_image(rng, 4, 6);
  const auto g = random_image(rng, 4, 6);
  const auto b = random_image(rng, 4, 6);
  const auto fused = fuse_rgb(r, g, b);
  EXPECT_EQ(fused.channel(0), r);
  EXPECT_EQ(fused.channel(1), g);
  EXPECT_EQ(fused.channel(2), b);
  const auto gray = fuse_rgb(r, r, r).interleaved();
  for (std::size_t i = 0; i < 24; ++i) {
    EXPECT_EQ(gray[i * 3], gray[i * 3 + 1]);
    EXPECT_EQ(gray[i * 3], gray[i * 3 + 2]);
  }
}

TEST(FuseRgb, DimensionMismatch) {
  try {
    (void)fuse_rgb(GrayImage(2, 2), GrayImage(2, 3), GrayImage(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ChannelShape);
  }
}

TEST(ResizeArea, ConstantAndCheckerboard) {
  const auto flat = resize_area(fuse_rgb(GrayImage(2, 2, 9), GrayImage(2, 2, 9), GrayImage(2, 2, 9)), 1, 1);
  EXPECT_EQ(flat.channel(0).at(0, 0), 9);

  GrayImage checker(4, 4);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      checker.at(y, x) = (x + y) % 2 == 0 ? 255 : 0;
    }
  }
  const auto out = resize_area(fuse_rgb(checker, checker, checker), 2, 2);
  const auto exact = oracle::area_resize_exact(checker, 2, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(exact[i], 127.5);
    EXPECT_EQ(out.channel(0).pixels()[i], 128);
  }
}

TEST(ResizeArea, DefaultOutputSize) {
  const GrayImage plane(1500, 2000, 3);
  const auto out = resize_area(fuse_rgb(plane, plane, plane), 224, 224);
  EXPECT_EQ(out.height(), 224U);
  EXPECT_EQ(out.width(), 224U);
}

TEST(ResizeArea, MatchesTwoDimensionalOverlapOracle) {
  std::mt19937_64 rng(11);
  for (const auto [h, w, oh, ow] : {std::array<std::size_t, 4>{15, 20, 4, 7}, {30, 40, 7, 7}, {9, 9, 9, 9},
                                    {10, 13, 3, 5}}) {
    const auto plane = random_image(rng, h, w);
    const auto out = resize_area(fuse_rgb(plane, plane, plane), oh, ow);
    const auto exact = oracle::area_resize_exact(plane, oh, ow);
    for (std::size_t i = 0; i < oh * ow; ++i) {
      EXPECT_NEAR(static_cast<double>(out.channel(1).pixels()[i]), exact[i], 0.5 + 1e-9);
    }
  }
}

TEST(ResizeArea, GlobalMeanPreservedForIntegerFactors) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    std::uniform_int_distribution<std::size_t> factor(1, 5);
    const std::size_t oh = dim(rng);
    const std::size_t ow = dim(rng);
    const auto plane = random_image(rng, oh * factor(rng), ow * factor(rng));
    const auto out = resize_area(fuse_rgb(plane, plane, plane), oh, ow);
    double in_mean = 0.0;
    for (auto v : plane.pixels()) in_mean += v;
    in_mean /= static_cast<double>(plane.pixels().size());
    double out_mean = 0.0;
    for (auto v : out.channel(2).pixels()) out_mean += v;
    out_mean /= static_cast<double>(out.channel(2).pixels().size());
    EXPECT_NEAR(out_mean, in_mean, 1.0);
  }
}

TEST(ResizeArea, RejectsUpscaling) {
  const GrayImage p(2, 2);
  try {
    (void)resize_area(fuse_rgb(p, p, p), 3, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnsupportedResize);
  }
}
