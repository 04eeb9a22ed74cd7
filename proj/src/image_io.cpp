#include "abm/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace abm {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_png_pixels(const fs::path& path, std::uint32_t format, int& h, int& w) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw InputError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw InputError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  h = static_cast<int>(image.height);
  w = static_cast<int>(image.width);
  return buf;
}

void write_png_pixels(const fs::path& path, std::uint32_t format, int h, int w,
                      const std::vector<std::uint8_t>& buf) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw InputError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

template <int C>
Raster<C> from_bytes(const std::vector<std::uint8_t>& buf, int h, int w) {
  Raster<C> r(h, w);
  auto d = r.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = from_u8(buf[i]);
  return r;
}

template <int C>
std::vector<std::uint8_t> to_bytes(const Raster<C>& r) {
  std::vector<std::uint8_t> buf(r.data().size());
  std::transform(r.data().begin(), r.data().end(), buf.begin(), to_u8);
  return buf;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                        static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw InputError("truncated ABMF header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr std::uint32_t kMaxRank = 16;

}  // namespace

Frame read_png_frame(const fs::path& path) {
  int h = 0, w = 0;
  auto buf = read_png_pixels(path, PNG_FORMAT_RGB, h, w);
  return from_bytes<3>(buf, h, w);
}

AlphaMatte read_png_matte(const fs::path& path) {
  int h = 0, w = 0;
  auto buf = read_png_pixels(path, PNG_FORMAT_GRAY, h, w);
  return from_bytes<1>(buf, h, w);
}

void write_png(const fs::path& path, const Frame& frame) {
  write_png_pixels(path, PNG_FORMAT_RGB, frame.height(), frame.width(), to_bytes(frame));
}

void write_png(const fs::path& path, const AlphaMatte& matte) {
  write_png_pixels(path, PNG_FORMAT_GRAY, matte.height(), matte.width(), to_bytes(matte));
}

std::string frame_filename(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return digits + ".png";
}

std::vector<fs::path> list_png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

VideoSequence read_video_dir(const fs::path& dir) {
  VideoSequence video;
  for (const auto& f : list_png_files(dir)) video.push_back(read_png_frame(f));
  return video;
}

std::vector<AlphaMatte> read_matte_dir(const fs::path& dir) {
  std::vector<AlphaMatte> mattes;
  for (const auto& f : list_png_files(dir)) mattes.push_back(read_png_matte(f));
  return mattes;
}

void write_abmf(std::ostream& out, std::span<const std::uint32_t> dims, std::span<const float> values) {
  std::size_t count = 1;
  for (auto d : dims) count *= d;
  if (count != values.size()) throw ShapeError("ABMF payload length does not match dims");
  out.write("ABMF", 4);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_u32(out, d);
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

FloatTensorFile read_abmf(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || std::memcmp(magic.data(), "ABMF", 4) != 0) throw InputError("bad ABMF magic");
  FloatTensorFile t;
  const std::uint32_t rank = get_u32(in);
  if (rank > kMaxRank) throw InputError("ABMF rank too large");
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(get_u32(in));
    count *= t.dims.back();
  }
  t.values.resize(count);
  for (auto& v : t.values) v = std::bit_cast<float>(get_u32(in));
  return t;
}

void write_abmf(const fs::path& path, std::span<const std::uint32_t> dims, std::span<const float> values) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string());
  write_abmf(out, dims, values);
}

FloatTensorFile read_abmf(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_abmf(in);
}

template <int C>
void write_raster_abmf(const fs::path& path, const Raster<C>& r) {
  const std::array<std::uint32_t, 3> dims{static_cast<std::uint32_t>(r.height()),
                                          static_cast<std::uint32_t>(r.width()),
                                          static_cast<std::uint32_t>(C)};
  std::vector<float> values(r.data().begin(), r.data().end());
  write_abmf(path, dims, values);
}

template <int C>
Raster<C> read_raster_abmf(const fs::path& path) {
  auto t = read_abmf(path);
  if (t.dims.size() != 3 || t.dims[2] != static_cast<std::uint32_t>(C)) {
    throw ShapeError("ABMF file is not an (H, W, " + std::to_string(C) + ") raster");
  }
  return Raster<C>(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                   std::vector<double>(t.values.begin(), t.values.end()));
}

template void write_raster_abmf(const fs::path&, const Raster<1>&);
template void write_raster_abmf(const fs::path&, const Raster<3>&);
template Raster<1> read_raster_abmf(const fs::path&);
template Raster<3> read_raster_abmf(const fs::path&);

}  // namespace abm
