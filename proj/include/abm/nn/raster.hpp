#pragma once

#include "abm/imaging.hpp"
#include "abm/nn/tensor.hpp"

namespace abm::nn {

/// Copy raster channels into planes [c0, c0 + C) of batch item n of a
/// rank-4 tensor with matching spatial size.
template <int C>
void write_planes(Tensor& t, std::size_t n, std::size_t c0, const Raster<C>& r) {
  if (t.rank() != 4 || t.dim(2) != static_cast<std::size_t>(r.height()) ||
      t.dim(3) != static_cast<std::size_t>(r.width()) || c0 + C > t.dim(1)) {
    throw ShapeError("write_planes: raster does not fit tensor " + shape_string(t.shape()));
  }
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x)
      for (int c = 0; c < C; ++c) t.at(n, c0 + c, y, x) = r.at(y, x, c);
}

template <int C>
Raster<C> read_planes(const Tensor& t, std::size_t n, std::size_t c0) {
  if (t.rank() != 4 || c0 + C > t.dim(1)) throw ShapeError("read_planes: channel range out of bounds");
  Raster<C> r(static_cast<int>(t.dim(2)), static_cast<int>(t.dim(3)));
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x)
      for (int c = 0; c < C; ++c) r.at(y, x, c) = t.at(n, c0 + c, y, x);
  return r;
}

}  // namespace abm::nn
