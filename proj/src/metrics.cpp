#include "abm/metrics.hpp"

#include <cmath>
#include <algorithm>
#include <deque>

#include "abm/parallel.hpp"

namespace abm {

namespace {

void require_same(const AlphaMatte& a, const AlphaMatte& b, const char* what) {
  if (!a.same_size(b)) throw ShapeError(std::string(what) + ": matte sizes differ");
}

constexpr int kGradientRadius = 5;  // ceil(3 sigma)

struct GaussianTaps {
  std::vector<double> smooth, deriv;
  double norm = 1.0;
};

const GaussianTaps& gaussian_taps() {
  static const GaussianTaps taps = [] {
    GaussianTaps t;
    double s2 = 0.0, d2 = 0.0;
    for (int i = -kGradientRadius; i <= kGradientRadius; ++i) {
      const double g = std::exp(-(i * i) / (2.0 * kGradientSigma * kGradientSigma));
      t.smooth.push_back(g);
      t.deriv.push_back(-i / (kGradientSigma * kGradientSigma) * g);
      s2 += g * g;
      d2 += t.deriv.back() * t.deriv.back();
    }
    t.norm = std::sqrt(s2 * d2);
    return t;
  }();
  return taps;
}

// Separable correlation with edge replication: taps_x along x, then taps_y along y.
std::vector<double> filter(const AlphaMatte& m, const std::vector<double>& taps_x, const std::vector<double>& taps_y) {
  const int h = m.height(), w = m.width(), r = kGradientRadius;
  std::vector<double> tmp(static_cast<std::size_t>(h) * w), out(tmp.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += taps_x[k + r] * m.at(y, std::clamp(x + k, 0, w - 1));
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += taps_y[k + r] * tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  return out;
}

std::vector<double> gradient_magnitude(const AlphaMatte& m) {
  const auto& t = gaussian_taps();
  const auto gx = filter(m, t.deriv, t.smooth);
  const auto gy = filter(m, t.smooth, t.deriv);
  std::vector<double> mag(gx.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(gx[i], gy[i]) / t.norm;
  return mag;
}

constexpr int kDy[] = {-1, 1, 0, 0};
constexpr int kDx[] = {0, 0, -1, 1};

}  // namespace

std::size_t BinaryMap::count() const {
  std::size_t n = 0;
  for (auto v : data) n += v != 0;
  return n;
}

BinaryMap threshold_map(const AlphaMatte& m, double threshold) {
  BinaryMap out(m.height(), m.width());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.set(y, x, m.at(y, x) >= threshold);
  return out;
}

double mask_iou(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same(pred, gt, "mask_iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    const bool p = pred.data()[i] >= 0.5, g = gt.data()[i] > 0.5;
    inter += p && g;
    uni += p || g;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double sad(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same(pred, gt, "sad");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) s += std::abs(pred.data()[i] - gt.data()[i]);
  return s / pred.data().size() * 1e3;
}

double mse(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same(pred, gt, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    const double d = pred.data()[i] - gt.data()[i];
    s += d * d;
  }
  return s / pred.data().size() * 1e3;
}

double gradient_error(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same(pred, gt, "gradient_error");
  const auto a = gradient_magnitude(pred), b = gradient_magnitude(gt);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / a.size() * 1e3;
}

namespace {

// Labels 4-connected components in raster order of their first pixel;
// returns the labels and the size of each component.
std::pair<std::vector<int>, std::vector<std::size_t>> label_components(const BinaryMap& map) {
  const int h = map.height, w = map.width;
  std::vector<int> label(map.data.size(), -1);
  std::vector<std::size_t> sizes;
  int next = 0;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!map.at(y, x) || label[static_cast<std::size_t>(y) * w + x] >= 0) continue;
      std::size_t size = 0;
      label[static_cast<std::size_t>(y) * w + x] = next;
      queue.emplace_back(y, x);
      while (!queue.empty()) {
        auto [cy, cx] = queue.front();
        queue.pop_front();
        ++size;
        for (int k = 0; k < 4; ++k) {
          const int ny = cy + kDy[k], nx = cx + kDx[k];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w || !map.at(ny, nx)) continue;
          int& l = label[static_cast<std::size_t>(ny) * w + nx];
          if (l >= 0) continue;
          l = next;
          queue.emplace_back(ny, nx);
        }
      }
      sizes.push_back(size);
      ++next;
    }
  return {std::move(label), std::move(sizes)};
}

}  // namespace

BinaryMap largest_connected_component(const BinaryMap& map) {
  const auto [label, sizes] = label_components(map);
  int best = -1;
  for (std::size_t l = 0; l < sizes.size(); ++l)
    if (best < 0 || sizes[l] > sizes[best]) best = static_cast<int>(l);
  BinaryMap out(map.height, map.width);
  for (std::size_t i = 0; i < label.size(); ++i) out.data[i] = best >= 0 && label[i] == best;
  return out;
}

BinaryMap largest_components_union(const BinaryMap& map) {
  const auto [label, sizes] = label_components(map);
  const std::size_t best = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
  BinaryMap out(map.height, map.width);
  for (std::size_t i = 0; i < label.size(); ++i) out.data[i] = label[i] >= 0 && sizes[label[i]] == best;
  return out;
}

AlphaMatte connectivity_levels(const AlphaMatte& m, const BinaryMap& omega) {
  const int h = m.height(), w = m.width();
  if (omega.height != h || omega.width != w) throw ShapeError("connectivity_levels: omega size differs");
  AlphaMatte level(h, w, 0.0);
  if (omega.count() == 0) return level;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(h) * w);
  std::deque<std::pair<int, int>> queue;
  // Reachable sets shrink as t grows, so each level overwrites the previous.
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    std::fill(seen.begin(), seen.end(), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (omega.at(y, x) && m.at(y, x) >= t) {
          seen[static_cast<std::size_t>(y) * w + x] = 1;
          queue.emplace_back(y, x);
        }
    while (!queue.empty()) {
      auto [cy, cx] = queue.front();
      queue.pop_front();
      level.at(cy, cx) = t;
      for (int d = 0; d < 4; ++d) {
        const int ny = cy + kDy[d], nx = cx + kDx[d];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        auto& s = seen[static_cast<std::size_t>(ny) * w + nx];
        if (s || m.at(ny, nx) < t) continue;
        s = 1;
        queue.emplace_back(ny, nx);
      }
    }
  }
  return level;
}

double connectivity_error(const AlphaMatte& pred, const AlphaMatte& gt) {
  require_same(pred, gt, "connectivity_error");
  BinaryMap both(pred.height(), pred.width());
  for (int y = 0; y < pred.height(); ++y)
    for (int x = 0; x < pred.width(); ++x) both.set(y, x, pred.at(y, x) >= 0.5 && gt.at(y, x) >= 0.5);
  const BinaryMap omega = largest_components_union(both);
  const AlphaMatte lp = connectivity_levels(pred, omega), lg = connectivity_levels(gt, omega);
  auto phi = [](double m, double l) {
    const double d = m - l;
    return 1.0 - (d >= kConnectivityTheta ? d : 0.0);
  };
  double s = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i)
    s += std::abs(phi(pred.data()[i], lp.data()[i]) - phi(gt.data()[i], lg.data()[i]));
  return s / pred.data().size() * 1e3;
}

double bg_difference(const Frame& matched, const Frame& gt_bg) { return mean_abs_difference(matched, gt_bg); }

FrameMetrics evaluate_frame(const AlphaMatte& pred, const AlphaMatte& gt) {
  return {sad(pred, gt), mse(pred, gt), gradient_error(pred, gt), connectivity_error(pred, gt)};
}

MetricsReport evaluate_mattes(const std::vector<AlphaMatte>& pred, const std::vector<AlphaMatte>& gt,
                              unsigned threads) {
  if (pred.size() != gt.size()) throw InputError("evaluate: prediction and ground-truth frame counts differ");
  if (pred.empty()) throw InputError("evaluate: no frames");
  MetricsReport r;
  r.n_frames = pred.size();
  r.per_frame.resize(pred.size());
  parallel_for(pred.size(), threads, [&](std::size_t i) { r.per_frame[i] = evaluate_frame(pred[i], gt[i]); });
  for (const auto& f : r.per_frame) {
    r.sad += f.sad;
    r.mse += f.mse;
    r.gradient += f.gradient;
    r.connectivity += f.connectivity;
  }
  const double n = static_cast<double>(r.n_frames);
  r.sad /= n;
  r.mse /= n;
  r.gradient /= n;
  r.connectivity /= n;
  return r;
}

MetricsReport evaluate_clip(const std::vector<AlphaMatte>& pred, const SyntheticClip& clip, unsigned threads) {
  std::vector<AlphaMatte> gt;
  for (const auto& s : clip.samples) gt.push_back(s.alpha_gt);
  return evaluate_mattes(pred, gt, threads);
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t i = 0; i < report.per_frame.size(); ++i) {
    const auto& f = report.per_frame[i];
    frames.push_back(
        {{"frame_index", i}, {"sad", f.sad}, {"mse", f.mse}, {"gradient", f.gradient}, {"connectivity", f.connectivity}});
  }
  return {{"sad", report.sad},
          {"mse", report.mse},
          {"gradient", report.gradient},
          {"connectivity", report.connectivity},
          {"n_frames", report.n_frames},
          {"scale", 1e3},
          {"per_frame", frames}};
}

}  // namespace abm
