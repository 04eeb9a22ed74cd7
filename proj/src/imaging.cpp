#include "abm/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace abm {

template <int C>
Raster<C>::Raster(int height, int width, double fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw ShapeError("raster extents must be positive, got " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(height) * width * C, fill);
}

template <int C>
Raster<C>::Raster(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 1 || width < 1) {
    throw ShapeError("raster extents must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * C) {
    throw ShapeError("raster data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(height) + "x" + std::to_string(width) +
                     "x" + std::to_string(C));
  }
}

template class Raster<1>;
template class Raster<3>;

VideoSequence::VideoSequence(std::vector<Frame> frames) {
  for (auto& f : frames) push_back(std::move(f));
}

void VideoSequence::push_back(Frame frame) {
  if (!frames_.empty() && !frame.same_size(frames_.front())) {
    throw ShapeError("video frames must share one size");
  }
  frames_.push_back(std::move(frame));
}

VideoSequence VideoSequence::reversed() const {
  VideoSequence out;
  out.frames_.assign(frames_.rbegin(), frames_.rend());
  return out;
}

void validate_crop(const CropTransform& t, int src_h, int src_w) {
  const auto& b = t.box;
  if (b.top < 0 || b.left < 0 || b.bottom > src_h || b.right > src_w || b.bottom <= b.top ||
      b.right <= b.left) {
    throw GeometryError("crop box (" + std::to_string(b.top) + "," + std::to_string(b.left) + ")-(" +
                        std::to_string(b.bottom) + "," + std::to_string(b.right) +
                        ") outside " + std::to_string(src_h) + "x" + std::to_string(src_w));
  }
  if (t.target_size < 1) throw GeometryError("crop target size must be positive");
}

Frame composite(const Frame& fgr, const Frame& bgr, const AlphaMatte& alpha) {
  if (!fgr.same_size(bgr) || !fgr.same_size(alpha)) {
    throw ShapeError("composite: foreground, background and alpha sizes differ");
  }
  Frame out(fgr.height(), fgr.width());
  auto f = fgr.data();
  auto b = bgr.data();
  auto a = alpha.data();
  auto o = out.data();
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double w = a[p];
    for (int c = 0; c < 3; ++c) {
      const std::size_t i = p * 3 + c;
      o[i] = std::clamp(w * f[i] + (1.0 - w) * b[i], 0.0, 1.0);
    }
  }
  return out;
}

namespace {

struct Tap {
  int i0;
  int i1;
  double w;
};

// Half-pixel-center source coordinate for every output index.
std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double s = (o + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    int i0 = static_cast<int>(std::floor(s));
    int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, s - i0};
  }
  return taps;
}

// Lerp written as a + w (b - a) so equal endpoints reproduce exactly; the clamp
// keeps rounding from leaving [min(a,b), max(a,b)].
inline double lerp_clamped(double a, double b, double w) {
  const double v = a + w * (b - a);
  return std::clamp(v, std::min(a, b), std::max(a, b));
}

}  // namespace

template <int C>
Raster<C> resize_bilinear(const Raster<C>& src, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize target must be positive");
  if (out_h == src.height() && out_w == src.width()) return src;
  const auto ty = bilinear_taps(src.height(), out_h);
  const auto tx = bilinear_taps(src.width(), out_w);
  Raster<C> out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < out_w; ++x) {
      const Tap& b = tx[x];
      for (int c = 0; c < C; ++c) {
        const double top = lerp_clamped(src.at(a.i0, b.i0, c), src.at(a.i0, b.i1, c), b.w);
        const double bot = lerp_clamped(src.at(a.i1, b.i0, c), src.at(a.i1, b.i1, c), b.w);
        out.at(y, x, c) = lerp_clamped(top, bot, a.w);
      }
    }
  }
  return out;
}

template <int C>
Raster<C> crop(const Raster<C>& src, const CropBox& box) {
  validate_crop({box, 1}, src.height(), src.width());
  Raster<C> out(box.height(), box.width());
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) {
      for (int c = 0; c < C; ++c) out.at(y, x, c) = src.at(box.top + y, box.left + x, c);
    }
  }
  return out;
}

template <int C>
Raster<C> crop_and_zoom(const Raster<C>& src, const CropTransform& t) {
  validate_crop(t, src.height(), src.width());
  return resize_bilinear(crop(src, t.box), t.target_size, t.target_size);
}

template <int C>
Raster<C> paste_back(const Raster<C>& refined, const CropTransform& t, int full_h, int full_w) {
  validate_crop(t, full_h, full_w);
  if (refined.height() != t.target_size || refined.width() != t.target_size) {
    throw ShapeError("paste_back: refined raster is not target_size square");
  }
  const Raster<C> patch = resize_bilinear(refined, t.box.height(), t.box.width());
  Raster<C> out(full_h, full_w, 0.0);
  for (int y = 0; y < patch.height(); ++y) {
    for (int x = 0; x < patch.width(); ++x) {
      for (int c = 0; c < C; ++c) out.at(t.box.top + y, t.box.left + x, c) = patch.at(y, x, c);
    }
  }
  return out;
}

template <int C>
Raster<C> flip_horizontal(const Raster<C>& src) {
  Raster<C> out(src.height(), src.width());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      for (int c = 0; c < C; ++c) out.at(y, src.width() - 1 - x, c) = src.at(y, x, c);
    }
  }
  return out;
}

template <int C>
Raster<C> translate_replicate(const Raster<C>& src, int dy, int dx) {
  Raster<C> out(src.height(), src.width());
  for (int y = 0; y < src.height(); ++y) {
    const int sy = std::clamp(y - dy, 0, src.height() - 1);
    for (int x = 0; x < src.width(); ++x) {
      const int sx = std::clamp(x - dx, 0, src.width() - 1);
      for (int c = 0; c < C; ++c) out.at(y, x, c) = src.at(sy, sx, c);
    }
  }
  return out;
}

Frame shift_brightness(const Frame& src, double delta) {
  Frame out = src;
  for (double& v : out.data()) v = std::clamp(v + delta, 0.0, 1.0);
  return out;
}

Frame clamp_unit(Frame f) {
  for (double& v : f.data()) v = std::clamp(v, 0.0, 1.0);
  return f;
}

AlphaMatte clamp_unit(AlphaMatte a) {
  for (double& v : a.data()) v = std::clamp(v, 0.0, 1.0);
  return a;
}

double mean_abs_difference(const Frame& a, const Frame& b) {
  if (!a.same_size(b)) throw ShapeError("mean_abs_difference: sizes differ");
  auto x = a.data();
  auto y = b.data();
  double total = 0.0;
  for (std::size_t p = 0; p < a.pixel_count(); ++p) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += std::abs(x[p * 3 + c] - y[p * 3 + c]);
    total += s / 3.0;
  }
  return total / static_cast<double>(a.pixel_count());
}

AlphaMatte abs_difference_map(const Frame& a, const Frame& b) {
  if (!a.same_size(b)) throw ShapeError("abs_difference_map: sizes differ");
  AlphaMatte out(a.height(), a.width());
  auto x = a.data();
  auto y = b.data();
  auto o = out.data();
  for (std::size_t p = 0; p < o.size(); ++p) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += std::abs(x[p * 3 + c] - y[p * 3 + c]);
    o[p] = s / 3.0;
  }
  return out;
}

std::uint8_t to_u8(double v) {
  const double scaled = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

template <int C>
Raster<C> quantize_u8(const Raster<C>& src) {
  Raster<C> out = src;
  for (double& v : out.data()) v = from_u8(to_u8(v));
  return out;
}

template <int C>
bool in_unit_range(const Raster<C>& r) {
  return std::all_of(r.data().begin(), r.data().end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

#define ABM_INSTANTIATE(C)                                                                  \
  template Raster<C> resize_bilinear(const Raster<C>&, int, int);                           \
  template Raster<C> crop(const Raster<C>&, const CropBox&);                                \
  template Raster<C> crop_and_zoom(const Raster<C>&, const CropTransform&);                 \
  template Raster<C> paste_back(const Raster<C>&, const CropTransform&, int, int);          \
  template Raster<C> flip_horizontal(const Raster<C>&);                                     \
  template Raster<C> translate_replicate(const Raster<C>&, int, int);                       \
  template Raster<C> quantize_u8(const Raster<C>&);                                         \
  template bool in_unit_range(const Raster<C>&);

ABM_INSTANTIATE(1)
ABM_INSTANTIATE(3)

#undef ABM_INSTANTIATE

}  // namespace abm
