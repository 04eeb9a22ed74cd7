#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "abm/dataset.hpp"
#include "abm/imaging.hpp"
#include "abm/nn/params.hpp"
#include "abm/nn/tape.hpp"

namespace abm {

struct RenConfig {
  int height = 48;
  int width = 80;
  std::vector<int> channels = {16, 32, 64, 128};
  int lateral = 32;
};

struct RenModel {
  RenConfig config;
  nn::ParameterStore params;
};

/// Sigmoid alpha at 1, 1/2 and 1/4 of the input size.
struct CoarseAlpha {
  AlphaMatte full;
  AlphaMatte half;
  AlphaMatte quarter;
};

/// Head outputs on a tape: [N,1,h,w], [N,1,h/2,w/2], [N,1,h/4,w/4].
struct RenHeads {
  nn::Var full;
  nn::Var half;
  nn::Var quarter;
};

RenModel make_ren(const RenConfig& config, std::uint64_t seed);

/// Input [N,6,h,w] with h and w divisible by 8; frame planes first.
RenHeads ren_forward(const RenModel& model, nn::Tape& tape, nn::Var input);

/// Runs at the size of the inputs, which must match and be divisible by 8.
CoarseAlpha ren_forward(const RenModel& model, const Frame& frame, const Frame& matched_bg);

/// Resizes both inputs to the model resolution first.
CoarseAlpha ren_estimate(const RenModel& model, const Frame& frame, const Frame& matched_bg);

nn::Tensor ren_input(const std::vector<const Frame*>& frames, const std::vector<const Frame*>& backgrounds);

/// Sum of BCE at the three scales; targets are bilinear downscales of
/// `alpha_gt` [N,1,h,w].
nn::Var ren_loss(nn::Tape& tape, const RenHeads& heads, const nn::Tensor& alpha_gt);
double ren_loss(const CoarseAlpha& coarse, const AlphaMatte& alpha_gt);

struct RenTrainConfig {
  int steps = 1000;
  int batch_size = 4;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  /// Chance that a sample's background is replaced by a shifted copy.
  double perturb_prob = 0.5;
  int max_shift = 3;
  double max_brightness = 0.05;
};

/// Training sample at model resolution.
struct RenSample {
  Frame frame;
  Frame background;
  AlphaMatte alpha;
};

std::vector<RenSample> ren_samples(const RenModel& model, const std::vector<SyntheticClip>& clips);

/// Background with the training-time perturbation applied, or unchanged.
Frame perturb_background(const Frame& bg, const RenTrainConfig& config, nn::Rng& rng);

/// Adam on ren_loss with the ground-truth background as the matched input.
std::vector<double> train_ren(RenModel& model, const std::vector<SyntheticClip>& clips,
                              const RenTrainConfig& config);

nlohmann::json to_json(const RenConfig& config);
RenConfig ren_config_from_json(const nlohmann::json& j);

}  // namespace abm
