#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "abm/dataset.hpp"
#include "abm/imaging.hpp"

namespace abm {

struct BinaryMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  BinaryMap() = default;
  BinaryMap(int h, int w, bool fill = false) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}
  bool at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int y, int x, bool v) { data[static_cast<std::size_t>(y) * width + x] = v; }
  std::size_t count() const;
  bool operator==(const BinaryMap&) const = default;
};

/// Pixels with value >= threshold.
BinaryMap threshold_map(const AlphaMatte& m, double threshold);

/// |A & B| / |A | B| of {pred >= 0.5} and {gt > 0.5}; 1 when both are empty.
double mask_iou(const AlphaMatte& pred, const AlphaMatte& gt);

// All four matte metrics are per-pixel means scaled by 1e3.
double sad(const AlphaMatte& pred, const AlphaMatte& gt);
double mse(const AlphaMatte& pred, const AlphaMatte& gt);

inline constexpr double kGradientSigma = 1.4;

/// Mean squared difference of Gaussian-derivative gradient magnitudes.
/// Filters are d/dx g(x) g(y) and its transpose, sigma 1.4, radius 5,
/// scaled to unit L2 norm; borders replicate edge pixels.
double gradient_error(const AlphaMatte& pred, const AlphaMatte& gt);

/// Largest 4-connected true region; on equal sizes the region whose first
/// pixel comes first in raster order wins.
BinaryMap largest_connected_component(const BinaryMap& map);

/// Union of every component of maximal size. Unlike the raster tie rule this
/// is invariant under flips, which the connectivity metric relies on.
BinaryMap largest_components_union(const BinaryMap& map);

inline constexpr double kConnectivityTheta = 0.15;

/// Per-pixel connectivity level l_i: the largest t in {0, 0.1, ..., 1}
/// such that pixel i reaches `omega` through pixels with m >= t.
AlphaMatte connectivity_levels(const AlphaMatte& m, const BinaryMap& omega);

/// mean |phi_pred - phi_gt| * 1e3 with phi = 1 - d [d >= 0.15], d = m - l,
/// omega the largest component(s) of {pred >= 0.5} and {gt >= 0.5}.
double connectivity_error(const AlphaMatte& pred, const AlphaMatte& gt);

/// Mean channel-mean |matched - gt|, unscaled.
double bg_difference(const Frame& matched, const Frame& gt_bg);

struct FrameMetrics {
  double sad = 0.0;
  double mse = 0.0;
  double gradient = 0.0;
  double connectivity = 0.0;
};

FrameMetrics evaluate_frame(const AlphaMatte& pred, const AlphaMatte& gt);

struct MetricsReport {
  double sad = 0.0;
  double mse = 0.0;
  double gradient = 0.0;
  double connectivity = 0.0;
  std::size_t n_frames = 0;
  std::vector<FrameMetrics> per_frame;
};

MetricsReport evaluate_mattes(const std::vector<AlphaMatte>& pred, const std::vector<AlphaMatte>& gt,
                              unsigned threads = 0);
MetricsReport evaluate_clip(const std::vector<AlphaMatte>& pred, const SyntheticClip& clip, unsigned threads = 0);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace abm
