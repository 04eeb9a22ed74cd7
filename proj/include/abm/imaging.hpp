#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "abm/errors.hpp"

namespace abm {

/// Row-major (y, x, channel) pixel container. Values are nominally in [0,1];
/// signed fields (foreground residuals) reuse the same storage.
template <int Channels>
class Raster {
  static_assert(Channels >= 1);

 public:
  static constexpr int kChannels = Channels;

  Raster() = default;
  Raster(int height, int width, double fill = 0.0);
  Raster(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  static constexpr int channels() { return Channels; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  template <int Other>
  bool same_size(const Raster<Other>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

using Frame = Raster<3>;
using AlphaMatte = Raster<1>;

/// Ordered frames sharing one size.
class VideoSequence {
 public:
  VideoSequence() = default;
  explicit VideoSequence(std::vector<Frame> frames);

  void push_back(Frame frame);
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<Frame>& frames() const { return frames_; }
  int height() const { return frames_.empty() ? 0 : frames_.front().height(); }
  int width() const { return frames_.empty() ? 0 : frames_.front().width(); }

  VideoSequence reversed() const;

 private:
  std::vector<Frame> frames_;
};

/// Half-open pixel box [top, bottom) x [left, right).
struct CropBox {
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;

  int height() const { return bottom - top; }
  int width() const { return right - left; }
  bool contains(int y, int x) const { return y >= top && y < bottom && x >= left && x < right; }
  bool operator==(const CropBox&) const = default;
};

struct CropTransform {
  CropBox box;
  int target_size = 0;  // square zoom resolution
  bool operator==(const CropTransform&) const = default;
};

/// Throws GeometryError unless `t` is a non-empty box inside a src_h x src_w
/// image with a positive target size.
void validate_crop(const CropTransform& t, int src_h, int src_w);

/// I = alpha * F + (1 - alpha) * B, per channel.
Frame composite(const Frame& fgr, const Frame& bgr, const AlphaMatte& alpha);

/// Bilinear resampling with half-pixel centers and edge clamping. Identity
/// sizes copy; constants stay exact; output stays within the source range.
template <int C>
Raster<C> resize_bilinear(const Raster<C>& src, int out_h, int out_w);

template <int C>
Raster<C> crop(const Raster<C>& src, const CropBox& box);

/// Extract `t.box` and resize it to target_size x target_size.
template <int C>
Raster<C> crop_and_zoom(const Raster<C>& src, const CropTransform& t);

/// Resize `refined` back to the box extent and write it into a zero-filled
/// full_h x full_w raster.
template <int C>
Raster<C> paste_back(const Raster<C>& refined, const CropTransform& t, int full_h, int full_w);

template <int C>
Raster<C> flip_horizontal(const Raster<C>& src);

/// Integer shift with edge replication: out(y, x) = src(y - dy, x - dx).
template <int C>
Raster<C> translate_replicate(const Raster<C>& src, int dy, int dx);

Frame shift_brightness(const Frame& src, double delta);
Frame clamp_unit(Frame f);
AlphaMatte clamp_unit(AlphaMatte a);

/// Mean over pixels of the channel-mean absolute difference.
double mean_abs_difference(const Frame& a, const Frame& b);

/// Per-pixel channel-mean |a - b| as a grayscale map.
AlphaMatte abs_difference_map(const Frame& a, const Frame& b);

std::uint8_t to_u8(double v);
inline double from_u8(std::uint8_t v) { return v / 255.0; }

/// Snap every value to the nearest 8-bit level.
template <int C>
Raster<C> quantize_u8(const Raster<C>& src);

/// True when every component lies in [0,1].
template <int C>
bool in_unit_range(const Raster<C>& r);

extern template class Raster<1>;
extern template class Raster<3>;

}  // namespace abm
