#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "abm/imaging.hpp"

namespace abm {

struct CompositeSample {
  Frame frame;
  AlphaMatte alpha_gt;
  Frame fgr_gt;
  Frame bgr_gt;
};

/// Composed clip plus the mismatched "captured" background stream, which is
/// the background track in reverse order.
struct SyntheticClip {
  std::vector<CompositeSample> samples;
  VideoSequence captured_background;
  std::uint64_t seed = 0;

  std::size_t size() const { return samples.size(); }
  int height() const { return samples.empty() ? 0 : samples.front().frame.height(); }
  int width() const { return samples.empty() ? 0 : samples.front().frame.width(); }
  VideoSequence frames() const;
  VideoSequence background_track() const;
};

/// Compose frame i of each track. Alpha and background are resized to the
/// foreground size when they differ.
SyntheticClip compose_clip(const VideoSequence& fgr_video, const std::vector<AlphaMatte>& alpha_video,
                           const VideoSequence& bgr_video);

/// Procedural clip: a moving blob with a wavy soft boundary over a slowly
/// drifting, slowly brightening texture.
SyntheticClip synth_toy_clip(std::uint64_t seed, int n_frames, int height, int width);

/// Pair every foreground track with `backgrounds_per_foreground` background
/// tracks, chosen round-robin starting at the foreground's own index. No
/// track is shared between two calls made with disjoint inputs, which is how
/// train and test splits are kept apart.
std::vector<SyntheticClip> compose_dataset(const std::vector<VideoSequence>& fgr_videos,
                                           const std::vector<std::vector<AlphaMatte>>& alpha_videos,
                                           const std::vector<VideoSequence>& bgr_videos,
                                           int backgrounds_per_foreground);

/// Snap F, B and alpha to 8-bit levels and recompose, so the PNG copy of a
/// clip still satisfies the compositing equation to within half a level.
SyntheticClip quantize_clip(const SyntheticClip& clip);

struct BmnPair {
  Frame frame;
  Frame candidate_bg;
  double label = 0.0;
};

struct BmnPairOptions {
  int n_negatives = 7;
  int transform_magnitude = 4;  // max |dy|, |dx| in pixels
  double max_brightness = 0.1;
  std::uint64_t seed = 0;
  /// Sample indices to draw pairs from; empty means all.
  std::vector<std::size_t> frame_indices;
  /// When positive, stored images are resized to this size after labelling.
  int out_height = 0;
  int out_width = 0;
};

/// One positive plus `n_negatives` negatives per selected sample. Negatives
/// alternate between another frame's background and a translated,
/// brightness-shifted copy of the true one. Labels are the oracle
/// similarity at full resolution under the ground-truth alpha.
std::vector<BmnPair> make_bmn_pairs(const SyntheticClip& clip, const BmnPairOptions& options);

/// Writes frame/, alpha/, fgr/, bgr/, captured_bg/ PNG tracks and meta.json.
void write_clip_dir(const std::filesystem::path& dir, const SyntheticClip& clip);
SyntheticClip read_clip_dir(const std::filesystem::path& dir);

}  // namespace abm
