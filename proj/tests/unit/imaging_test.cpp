#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "abm/image_io.hpp"
#include "abm/imaging.hpp"

namespace abm {
namespace {

namespace fs = std::filesystem;

template <int C>
Raster<C> random_raster(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Raster<C> r(h, w);
  for (double& v : r.data()) v = u(rng);
  return r;
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("abm_imaging_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Composite, AlphaOneGivesForeground) {
  auto f = random_raster<3>(5, 7, 1);
  auto b = random_raster<3>(5, 7, 2);
  AlphaMatte a(5, 7, 1.0);
  EXPECT_EQ(composite(f, b, a), f);
}

TEST(Composite, AlphaZeroGivesBackground) {
  auto f = random_raster<3>(5, 7, 1);
  auto b = random_raster<3>(5, 7, 2);
  AlphaMatte a(5, 7, 0.0);
  EXPECT_EQ(composite(f, b, a), b);
}

TEST(Composite, SinglePixelQuarterAlpha) {
  Frame f(1, 1, 1.0);
  Frame b(1, 1, 0.0);
  AlphaMatte a(1, 1, 0.25);
  Frame out = composite(f, b, a);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.at(0, 0, c), 0.25);
}

TEST(Composite, DimensionMismatchThrows) {
  EXPECT_THROW(composite(Frame(2, 2), Frame(2, 3), AlphaMatte(2, 2)), ShapeError);
  EXPECT_THROW(composite(Frame(2, 2), Frame(2, 2), AlphaMatte(3, 2)), ShapeError);
}

TEST(Composite, OutputInUnitRangeAndDeterministic) {
  auto f = random_raster<3>(9, 4, 3);
  auto b = random_raster<3>(9, 4, 4);
  auto a = random_raster<1>(9, 4, 5);
  Frame first = composite(f, b, a);
  EXPECT_TRUE(in_unit_range(first));
  EXPECT_EQ(first, composite(f, b, a));
}

TEST(Resize, ConstantStaysExact) {
  Frame src(5, 3, 0.3);
  for (auto [h, w] : {std::pair{1, 1}, {7, 11}, {2, 9}, {13, 2}}) {
    Frame out = resize_bilinear(src, h, w);
    for (double v : out.data()) EXPECT_EQ(v, 0.3);
  }
}

TEST(Resize, IdentitySizeIsBitIdentical) {
  auto src = random_raster<3>(6, 5, 7);
  EXPECT_EQ(resize_bilinear(src, 6, 5), src);
}

TEST(Resize, TwoByTwoStepToTwoByFour) {
  AlphaMatte src(2, 2, std::vector<double>{0, 1, 0, 1});
  AlphaMatte out = resize_bilinear(src, 2, 4);
  // Half-pixel source columns: -0.25, 0.25, 0.75, 1.25, clamped to [0, 1].
  const double expected[4] = {0.0, 0.25, 0.75, 1.0};
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 4; ++x) EXPECT_DOUBLE_EQ(out.at(y, x), expected[x]);
    for (int x = 1; x < 4; ++x) EXPECT_LE(out.at(y, x - 1), out.at(y, x));
  }
}

TEST(Resize, HalvingAveragesTwoByTwoBlocks) {
  AlphaMatte src(2, 2, std::vector<double>{0.0, 0.2, 0.4, 1.0});
  EXPECT_DOUBLE_EQ(resize_bilinear(src, 1, 1).at(0, 0), 0.4);
}

TEST(Resize, PreservesSourceRange) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto src = random_raster<1>(3 + seed % 5, 2 + seed % 7, seed);
    const auto [lo, hi] = std::minmax_element(src.data().begin(), src.data().end());
    auto out = resize_bilinear(src, 1 + (seed * 7) % 13, 1 + (seed * 5) % 17);
    for (double v : out.data()) {
      EXPECT_GE(v, *lo);
      EXPECT_LE(v, *hi);
    }
  }
}

TEST(Resize, RejectsNonPositiveTarget) {
  EXPECT_THROW(resize_bilinear(Frame(2, 2), 0, 3), ShapeError);
}

TEST(CropAndZoom, FullBoxAtSourceSizeIsIdentity) {
  auto src = random_raster<3>(6, 8, 9);
  CropTransform t{{0, 0, 6, 8}, 6};
  // Target is square; use a square source to hit the identity path.
  auto sq = random_raster<3>(6, 6, 10);
  EXPECT_EQ(crop_and_zoom(sq, CropTransform{{0, 0, 6, 6}, 6}), sq);
  EXPECT_NO_THROW(crop_and_zoom(src, t));
}

TEST(CropAndZoom, ConstantImageStaysConstant) {
  AlphaMatte src(9, 12, 0.6);
  auto out = crop_and_zoom(src, CropTransform{{2, 3, 7, 10}, 16});
  EXPECT_EQ(out.height(), 16);
  for (double v : out.data()) EXPECT_EQ(v, 0.6);
}

TEST(CropAndZoom, LeftHalfOfRampMatchesComposedReferenceOps) {
  AlphaMatte ramp(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) ramp.at(y, x) = (4 * y + x) / 15.0;
  AlphaMatte left(4, 2);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 2; ++x) left.at(y, x) = ramp.at(y, x);
  EXPECT_EQ(crop_and_zoom(ramp, CropTransform{{0, 0, 4, 2}, 4}), resize_bilinear(left, 4, 4));
}

TEST(CropAndZoom, OutOfBoundsBoxThrows) {
  AlphaMatte src(4, 4);
  EXPECT_THROW(crop_and_zoom(src, CropTransform{{0, 0, 5, 4}, 4}), GeometryError);
  EXPECT_THROW(crop_and_zoom(src, CropTransform{{2, 2, 2, 3}, 4}), GeometryError);
  EXPECT_THROW(crop_and_zoom(src, CropTransform{{-1, 0, 2, 3}, 4}), GeometryError);
}

TEST(PasteBack, ZeroMatteRoundTripStaysZero) {
  AlphaMatte src(10, 14, 0.0);
  CropTransform t{{1, 2, 8, 9}, 12};
  auto zoomed = crop_and_zoom(src, t);
  auto pasted = paste_back(zoomed, t, 10, 14);
  for (double v : pasted.data()) EXPECT_EQ(v, 0.0);
}

TEST(PasteBack, FullBoxEqualsResize) {
  auto refined = random_raster<1>(8, 8, 11);
  CropTransform t{{0, 0, 5, 7}, 8};
  EXPECT_EQ(paste_back(refined, t, 5, 7), resize_bilinear(refined, 5, 7));
}

TEST(PasteBack, InteriorBoxOfOnes) {
  AlphaMatte refined(6, 6, 1.0);
  CropTransform t{{3, 4, 9, 10}, 6};
  auto out = paste_back(refined, t, 12, 15);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 15; ++x) EXPECT_EQ(out.at(y, x), t.box.contains(y, x) ? 1.0 : 0.0);
}

TEST(PasteBack, WrongRefinedSizeThrows) {
  EXPECT_THROW(paste_back(AlphaMatte(5, 5), CropTransform{{0, 0, 4, 4}, 6}, 8, 8), ShapeError);
  EXPECT_THROW(paste_back(AlphaMatte(6, 6), CropTransform{{0, 0, 9, 4}, 6}, 8, 8), GeometryError);
}

TEST(PasteBack, RoundTripOfBoxConstantMatteWithinTolerance) {
  // Constant on the box, arbitrary outside: paste(crop) reproduces the box.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto src = random_raster<1>(20, 24, trial);
    CropBox box{2 + trial % 3, 1 + trial % 4, 15, 20 - trial % 5};
    const double level = 0.1 * trial;
    for (int y = box.top; y < box.bottom; ++y)
      for (int x = box.left; x < box.right; ++x) src.at(y, x) = level;
    CropTransform t{box, 32};
    auto back = paste_back(crop_and_zoom(src, t), t, 20, 24);
    for (int y = box.top; y < box.bottom; ++y)
      for (int x = box.left; x < box.right; ++x) EXPECT_NEAR(back.at(y, x), level, 2.0 / 255.0);
  }
}

TEST(Geometry, TranslateReplicatesEdges) {
  AlphaMatte src(1, 4, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  auto right = translate_replicate(src, 0, 2);
  EXPECT_EQ(right.data()[0], 0.1);
  EXPECT_EQ(right.data()[1], 0.1);
  EXPECT_EQ(right.data()[2], 0.1);
  EXPECT_EQ(right.data()[3], 0.2);
  EXPECT_EQ(translate_replicate(src, 0, 0), src);
}

TEST(Geometry, FlipIsAnInvolution) {
  auto src = random_raster<3>(4, 5, 12);
  EXPECT_EQ(flip_horizontal(flip_horizontal(src)), src);
  EXPECT_EQ(flip_horizontal(src).at(1, 0, 2), src.at(1, 4, 2));
}

TEST(Quantize, EightBitConversion) {
  EXPECT_EQ(to_u8(0.0), 0);
  EXPECT_EQ(to_u8(1.0), 255);
  EXPECT_EQ(to_u8(0.5), 128);  // 127.5 rounds half up
  EXPECT_EQ(to_u8(1.5 / 255.0), 2);
  EXPECT_EQ(to_u8(-0.2), 0);
  EXPECT_EQ(to_u8(3.0), 255);
  for (int v = 0; v < 256; ++v) EXPECT_EQ(to_u8(from_u8(static_cast<std::uint8_t>(v))), v);
}

TEST(VideoSequenceTest, RejectsMixedSizesAndReverses) {
  VideoSequence v;
  v.push_back(Frame(2, 2, 0.1));
  v.push_back(Frame(2, 2, 0.2));
  EXPECT_THROW(v.push_back(Frame(3, 2)), ShapeError);
  auto r = v.reversed();
  EXPECT_EQ(r[0].at(0, 0), 0.2);
  EXPECT_EQ(r.reversed()[0], v[0]);
}

TEST(PngIo, RoundTripOfQuantizedRasters) {
  auto dir = temp_dir("png");
  auto frame = quantize_u8(random_raster<3>(7, 9, 13));
  auto matte = quantize_u8(random_raster<1>(7, 9, 14));
  write_png(dir / "f.png", frame);
  write_png(dir / "m.png", matte);
  EXPECT_EQ(read_png_frame(dir / "f.png"), frame);
  EXPECT_EQ(read_png_matte(dir / "m.png"), matte);
  EXPECT_THROW(read_png_frame(dir / "missing.png"), InputError);
}

TEST(PngIo, VideoDirectoryIsReadInNameOrder) {
  auto dir = temp_dir("video");
  for (int i = 2; i >= 0; --i) write_png(dir / frame_filename(i), Frame(3, 4, i / 10.0));
  auto video = read_video_dir(dir);
  ASSERT_EQ(video.size(), 3u);
  EXPECT_NEAR(video[2].at(0, 0), 0.2, 0.5 / 255);
  EXPECT_EQ(frame_filename(42), "000042.png");
}

TEST(AbmfIo, HeaderLayoutAndLosslessRoundTrip) {
  auto dir = temp_dir("abmf");
  auto raster = random_raster<3>(3, 5, 15);
  for (double& v : raster.data()) v = static_cast<float>(v);
  write_raster_abmf(dir / "r.abmf", raster);
  EXPECT_EQ(read_raster_abmf<3>(dir / "r.abmf"), raster);

  std::ifstream in(dir / "r.abmf", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ASSERT_EQ(bytes.size(), 4u + 4u + 3u * 4u + 45u * 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ABMF");
  EXPECT_EQ(bytes[4], 3);  // rank, little endian
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[12], 5);
  EXPECT_EQ(bytes[16], 3);
  EXPECT_THROW(read_raster_abmf<1>(dir / "r.abmf"), ShapeError);
}

}  // namespace
}  // namespace abm
