#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "abm/imaging.hpp"

namespace abm {

// 8-bit PNG I/O. Reading converts with v / 255; writing rounds half up.
Frame read_png_frame(const std::filesystem::path& path);
AlphaMatte read_png_matte(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Frame& frame);
void write_png(const std::filesystem::path& path, const AlphaMatte& matte);

/// Frame file name used by every directory layout: 000042.png.
std::string frame_filename(std::size_t index);

/// Sorted list of *.png files in `dir`; throws InputError when the directory is missing.
std::vector<std::filesystem::path> list_png_files(const std::filesystem::path& dir);

VideoSequence read_video_dir(const std::filesystem::path& dir);
std::vector<AlphaMatte> read_matte_dir(const std::filesystem::path& dir);

/// Raw little-endian float32 tensor: "ABMF", u32 rank, u32 dims[rank], payload.
struct FloatTensorFile {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void write_abmf(std::ostream& out, std::span<const std::uint32_t> dims, std::span<const float> values);
FloatTensorFile read_abmf(std::istream& in);
void write_abmf(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                std::span<const float> values);
FloatTensorFile read_abmf(const std::filesystem::path& path);

/// Rasters as (H, W, C) tensors.
template <int C>
void write_raster_abmf(const std::filesystem::path& path, const Raster<C>& r);
template <int C>
Raster<C> read_raster_abmf(const std::filesystem::path& path);

}  // namespace abm
