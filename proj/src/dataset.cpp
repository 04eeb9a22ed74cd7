#include "abm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "json.hpp"

#include "abm/image_io.hpp"
#include "abm/matching.hpp"
#include "abm/nn/params.hpp"

namespace abm {

namespace fs = std::filesystem;

VideoSequence SyntheticClip::frames() const {
  VideoSequence v;
  for (const auto& s : samples) v.push_back(s.frame);
  return v;
}

VideoSequence SyntheticClip::background_track() const {
  VideoSequence v;
  for (const auto& s : samples) v.push_back(s.bgr_gt);
  return v;
}

SyntheticClip compose_clip(const VideoSequence& fgr_video, const std::vector<AlphaMatte>& alpha_video,
                           const VideoSequence& bgr_video) {
  if (fgr_video.empty() || alpha_video.empty() || bgr_video.empty()) throw InputError("compose_clip: empty track");
  if (fgr_video.size() != alpha_video.size() || fgr_video.size() != bgr_video.size()) {
    throw InputError("compose_clip: tracks have different frame counts");
  }
  const int h = fgr_video.height(), w = fgr_video.width();
  SyntheticClip clip;
  VideoSequence backgrounds;
  for (std::size_t i = 0; i < fgr_video.size(); ++i) {
    CompositeSample s;
    s.fgr_gt = fgr_video[i];
    s.alpha_gt = alpha_video[i].same_size(s.fgr_gt) ? alpha_video[i] : resize_bilinear(alpha_video[i], h, w);
    s.bgr_gt = bgr_video[i].same_size(s.fgr_gt) ? bgr_video[i] : resize_bilinear(bgr_video[i], h, w);
    s.frame = composite(s.fgr_gt, s.bgr_gt, s.alpha_gt);
    backgrounds.push_back(s.bgr_gt);
    clip.samples.push_back(std::move(s));
  }
  clip.captured_background = backgrounds.reversed();
  return clip;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Wave {
  double fx, fy;  // cycles per pixel
  double amplitude;
  double phase[3];
};

Wave random_wave(nn::Rng& rng, double min_period, double max_period, double amplitude) {
  const double period = rng.uniform(min_period, max_period);
  const double angle = rng.uniform(0.0, kTwoPi);
  Wave w{std::cos(angle) / period, std::sin(angle) / period, amplitude, {}};
  for (double& p : w.phase) p = rng.uniform(0.0, kTwoPi);
  return w;
}

double wave_at(const Wave& w, double x, double y, int c) {
  return w.amplitude * std::sin(kTwoPi * (w.fx * x + w.fy * y) + w.phase[c]);
}

}  // namespace

SyntheticClip synth_toy_clip(std::uint64_t seed, int n_frames, int height, int width) {
  if (n_frames < 1) throw InputError("synth_toy_clip: n_frames must be at least 1");
  if (height < 1 || width < 1) throw InputError("synth_toy_clip: empty frame size");
  nn::Rng rng(seed);
  const double scale = std::min(height, width);

  // Background: broad waves that drift, fixed fine detail, global brightness ramp.
  std::vector<Wave> broad, detail;
  for (int i = 0; i < 3; ++i) broad.push_back(random_wave(rng, 0.6 * width, 1.3 * width, 0.11));
  for (int i = 0; i < 2; ++i) detail.push_back(random_wave(rng, 0.08 * scale, 0.16 * scale, 0.035));
  double base[3];
  for (double& b : base) b = rng.uniform(0.4, 0.6);
  const double drift_angle = rng.uniform(0.0, kTwoPi);
  const double speed = 0.25 * width / std::max(n_frames - 1, 8);
  const double vx = speed * std::cos(drift_angle), vy = speed * std::sin(drift_angle);
  const double ramp = 0.06;

  // Foreground blob.
  const double phase_x = rng.uniform(0.0, kTwoPi), phase_y = rng.uniform(0.0, kTwoPi);
  const double lobe_phase = rng.uniform(0.0, kTwoPi), fine_phase = rng.uniform(0.0, kTwoPi);
  const int lobes = static_cast<int>(rng.integer(3, 5));
  const int fine_lobes = static_cast<int>(rng.integer(11, 17));
  const double radius0 = 0.24 * height;
  const double edge = std::max(1.0, 2.0 * height / 96.0);
  const double tint = rng.uniform(-0.1, 0.1);

  VideoSequence fgr_video, bgr_video;
  std::vector<AlphaMatte> alphas;
  for (int t = 0; t < n_frames; ++t) {
    Frame bgr(height, width), fgr(height, width);
    AlphaMatte alpha(height, width);
    const double level = ramp * (n_frames > 1 ? static_cast<double>(t) / (n_frames - 1) - 0.5 : 0.0);
    const double cx = width * (0.5 + 0.18 * std::sin(kTwoPi * t / 64.0 + phase_x));
    const double cy = height * (0.52 + 0.08 * std::sin(kTwoPi * t / 90.0 + phase_y));
    const double radius = radius0 * (1.0 + 0.05 * std::sin(0.1 * t));
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double u = x + vx * t, v = y + vy * t;
        for (int c = 0; c < 3; ++c) {
          double value = base[c] + level;
          for (const auto& w : broad) value += wave_at(w, u, v, c);
          for (const auto& w : detail) value += wave_at(w, x, y, c);
          bgr.at(y, x, c) = std::clamp(value, 0.0, 1.0);
        }
        fgr.at(y, x, 0) = std::clamp(0.82 + tint + 0.08 * std::sin(kTwoPi * y / 17.0), 0.0, 1.0);
        fgr.at(y, x, 1) = std::clamp(0.25 + 0.3 * y / height, 0.0, 1.0);
        fgr.at(y, x, 2) = std::clamp(0.2 - tint + 0.1 * std::cos(kTwoPi * x / 23.0), 0.0, 1.0);

        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const double r = std::hypot(dx, dy), theta = std::atan2(dy, dx);
        const double boundary = radius * (1.0 + 0.12 * std::sin(lobes * theta + lobe_phase + 0.05 * t) +
                                          0.04 * std::sin(fine_lobes * theta + fine_phase));
        alpha.at(y, x) = std::clamp((boundary - r) / edge + 0.5, 0.0, 1.0);
      }
    }
    fgr_video.push_back(std::move(fgr));
    bgr_video.push_back(std::move(bgr));
    alphas.push_back(std::move(alpha));
  }
  SyntheticClip clip = compose_clip(fgr_video, alphas, bgr_video);
  clip.seed = seed;
  return clip;
}

std::vector<SyntheticClip> compose_dataset(const std::vector<VideoSequence>& fgr_videos,
                                           const std::vector<std::vector<AlphaMatte>>& alpha_videos,
                                           const std::vector<VideoSequence>& bgr_videos,
                                           int backgrounds_per_foreground) {
  if (fgr_videos.size() != alpha_videos.size()) throw InputError("compose_dataset: alpha/foreground count mismatch");
  if (bgr_videos.empty() || backgrounds_per_foreground < 1) throw InputError("compose_dataset: no backgrounds");
  std::vector<SyntheticClip> out;
  for (std::size_t f = 0; f < fgr_videos.size(); ++f) {
    const std::size_t count = std::min<std::size_t>(backgrounds_per_foreground, bgr_videos.size());
    for (std::size_t j = 0; j < count; ++j) {
      const auto& bg = bgr_videos[(f + j) % bgr_videos.size()];
      // Backgrounds longer than the foreground are truncated; shorter ones loop.
      VideoSequence fitted;
      for (std::size_t t = 0; t < fgr_videos[f].size(); ++t) fitted.push_back(bg[t % bg.size()]);
      out.push_back(compose_clip(fgr_videos[f], alpha_videos[f], fitted));
    }
  }
  return out;
}

SyntheticClip quantize_clip(const SyntheticClip& clip) {
  SyntheticClip out;
  out.seed = clip.seed;
  VideoSequence backgrounds;
  for (const auto& s : clip.samples) {
    CompositeSample q;
    q.fgr_gt = quantize_u8(s.fgr_gt);
    q.bgr_gt = quantize_u8(s.bgr_gt);
    q.alpha_gt = quantize_u8(s.alpha_gt);
    q.frame = quantize_u8(composite(q.fgr_gt, q.bgr_gt, q.alpha_gt));
    backgrounds.push_back(q.bgr_gt);
    out.samples.push_back(std::move(q));
  }
  out.captured_background = backgrounds.reversed();
  return out;
}

namespace {

std::size_t other_frame(std::size_t i, std::size_t n, nn::Rng& rng) {
  // Mostly nearby frames, the hard negatives for a drifting background.
  static constexpr long kReach[] = {2, 4, 8, 16, 1L << 30};
  const long reach = std::min<long>(kReach[rng.integer(0, 4)], static_cast<long>(n) - 1);
  const long offset = rng.integer(1, reach);
  const long forward = static_cast<long>(i) + offset, backward = static_cast<long>(i) - offset;
  const bool can_forward = forward < static_cast<long>(n), can_backward = backward >= 0;
  if (can_forward && (!can_backward || rng.integer(0, 1) == 0)) return static_cast<std::size_t>(forward);
  if (can_backward) return static_cast<std::size_t>(backward);
  return (i + 1) % n;
}

}  // namespace

std::vector<BmnPair> make_bmn_pairs(const SyntheticClip& clip, const BmnPairOptions& options) {
  if (clip.samples.empty()) throw InputError("make_bmn_pairs: empty clip");
  nn::Rng rng(options.seed);
  std::vector<std::size_t> indices = options.frame_indices;
  if (indices.empty()) {
    for (std::size_t i = 0; i < clip.size(); ++i) indices.push_back(i);
  }
  const bool resize = options.out_height > 0 && options.out_width > 0;
  auto store = [&](const Frame& f) { return resize ? resize_bilinear(f, options.out_height, options.out_width) : f; };

  std::vector<BmnPair> pairs;
  for (std::size_t i : indices) {
    if (i >= clip.size()) throw InputError("make_bmn_pairs: frame index out of range");
    const auto& s = clip.samples[i];
    const Frame frame = store(s.frame);
    auto emit = [&](const Frame& candidate) {
      pairs.push_back({frame, store(candidate), oracle_similarity(s.frame, candidate, s.alpha_gt)});
    };
    emit(s.bgr_gt);
    for (int j = 0; j < options.n_negatives; ++j) {
      if (j % 2 == 0 && clip.size() > 1) {
        emit(clip.samples[other_frame(i, clip.size(), rng)].bgr_gt);
        continue;
      }
      const int m = options.transform_magnitude;
      int dy = 0, dx = 0;
      if (m > 0) {
        do {
          dy = static_cast<int>(rng.integer(-m, m));
          dx = static_cast<int>(rng.integer(-m, m));
        } while (dy == 0 && dx == 0);
      }
      const double delta = rng.uniform(-options.max_brightness, options.max_brightness);
      emit(shift_brightness(translate_replicate(s.bgr_gt, dy, dx), delta));
    }
  }
  return pairs;
}

namespace {

const char* const kTracks[] = {"frame", "alpha", "fgr", "bgr", "captured_bg"};

}  // namespace

void write_clip_dir(const fs::path& dir, const SyntheticClip& clip) {
  for (const char* track : kTracks) fs::create_directories(dir / track);
  for (std::size_t i = 0; i < clip.size(); ++i) {
    const auto& s = clip.samples[i];
    const std::string name = frame_filename(i);
    write_png(dir / "frame" / name, s.frame);
    write_png(dir / "alpha" / name, s.alpha_gt);
    write_png(dir / "fgr" / name, s.fgr_gt);
    write_png(dir / "bgr" / name, s.bgr_gt);
  }
  for (std::size_t i = 0; i < clip.captured_background.size(); ++i) {
    write_png(dir / "captured_bg" / frame_filename(i), clip.captured_background[i]);
  }
  nlohmann::json meta = {{"frame_count", clip.size()},
                         {"height", clip.height()},
                         {"width", clip.width()},
                         {"seed", clip.seed}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
}

SyntheticClip read_clip_dir(const fs::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw InputError("missing " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed meta.json: ") + e.what());
  }
  const auto frames = read_video_dir(dir / "frame");
  const auto alphas = read_matte_dir(dir / "alpha");
  const auto fgrs = read_video_dir(dir / "fgr");
  const auto bgrs = read_video_dir(dir / "bgr");
  SyntheticClip clip;
  clip.seed = meta.value("seed", std::uint64_t{0});
  clip.captured_background = read_video_dir(dir / "captured_bg");
  const std::size_t n = meta.value("frame_count", std::size_t{0});
  if (frames.size() != n || alphas.size() != n || fgrs.size() != n || bgrs.size() != n) {
    throw InputError("clip directory track lengths disagree with meta.json");
  }
  for (std::size_t i = 0; i < n; ++i) clip.samples.push_back({frames[i], alphas[i], fgrs[i], bgrs[i]});
  return clip;
}

}  // namespace abm
