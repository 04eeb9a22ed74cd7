#pragma once

#include <span>
#include <vector>

#include "abm/nn/tape.hpp"

namespace abm::nn {

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kBceEpsilon = 1e-6;

/// Cross-correlation of x[N,C,H,W] with weight[K,C,kh,kw] plus bias[K].
/// Output extent (H + 2 pad - kh) / stride + 1. Each output accumulates
/// weight * input in (c, ky, kx) order starting from zero, then adds the bias.
Var conv2d(Var x, Var weight, Var bias, int stride, int padding);

Var relu(Var x);
Var leaky_relu(Var x, double slope = kLeakySlope);
Var sigmoid(Var x);

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);

/// Bilinear resample of the spatial dims of x[N,C,H,W]; half-pixel centers,
/// edge clamping (the imaging-core convention).
Var resize_bilinear(Var x, int out_h, int out_w);
Var bilinear_upsample(Var x, int factor);

/// Spatial window [top, top + h) x [left, left + w) of x[N,C,H,W].
Var crop(Var x, int top, int left, int h, int w);

/// x[N,D] * weight[D,M] + bias[M].
Var dense(Var x, Var weight, Var bias);

/// x[N,C,H,W] -> [N,C] spatial mean.
Var global_avg_pool(Var x);

Var concat_channels(std::span<const Var> xs);
Var concat_channels(std::initializer_list<Var> xs);
Var slice_channels(Var x, int begin, int count);

/// mean |pred - target|; the subgradient at pred == target is 0.
Var l1_loss(Var pred, Var target);

/// mean of -t log p - (1 - t) log(1 - p) with p clamped to [eps, 1 - eps].
Var bce_loss(Var pred, Var target);

}  // namespace abm::nn
