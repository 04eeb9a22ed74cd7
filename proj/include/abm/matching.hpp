#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "abm/dataset.hpp"
#include "abm/imaging.hpp"
#include "abm/nn/params.hpp"
#include "abm/nn/tape.hpp"

namespace abm {

/// 1 - sum_i (1 - a_i) mean_c |x_ic - y_ic| / sum_i (1 - a_i).
/// Throws DegenerateRegionError when alpha is 1 everywhere.
double oracle_similarity(const Frame& frame, const Frame& candidate_bg, const AlphaMatte& alpha);

struct BmnConfig {
  int height = 24;
  int width = 40;
  std::vector<int> channels = {16, 32, 64, 128, 128};
  int hidden = 64;
  /// Fraction of first-layer filters initialized with candidate weights equal
  /// to minus the frame weights, so they start as difference detectors.
  double difference_filters = 0.5;
  /// Initial output logit; 3 puts the untrained prediction near 0.95, where
  /// most labels lie, instead of 0.5.
  double output_bias = 3.0;
};

struct BmnModel {
  BmnConfig config;
  nn::ParameterStore params;
};

BmnModel make_bmn(const BmnConfig& config, std::uint64_t seed);

/// [N, 6, h, w] -> [N, 1] similarity estimates in (0, 1).
nn::Var bmn_forward(const BmnModel& model, nn::Tape& tape, nn::Var input);

/// Frames at model resolution packed as the network input: frame channels
/// first, candidate channels second.
nn::Tensor bmn_input(const Frame& frame_low, const std::vector<const Frame*>& candidates_low);

/// Score one pair; both images are resized to the model resolution.
double bmn_score(const BmnModel& model, const Frame& frame, const Frame& candidate_bg);

/// mean_b |prediction_b - label_b| over a batch already packed by bmn_input.
nn::Var bmn_loss(const BmnModel& model, nn::Tape& tape, const nn::Tensor& input, const std::vector<double>& labels);

struct BmnTrainConfig {
  int steps = 200;
  int batch_size = 16;
  double lr = 1e-4;
  std::uint64_t seed = 0;
};

/// Adam on shuffled mini-batches; returns the loss of every step.
std::vector<double> train_bmn(BmnModel& model, const std::vector<BmnPair>& pairs, const BmnTrainConfig& config);

struct MatchResult {
  std::size_t best_index = 0;
  double score = 0.0;
  std::size_t candidates_evaluated = 0;
};

/// Scores a frame against chosen frames of a background video.
class CandidateScorer {
 public:
  virtual ~CandidateScorer() = default;
  virtual std::vector<double> score(const Frame& frame, const VideoSequence& bg_video,
                                    const std::vector<std::size_t>& indices) const = 0;
};

/// Exact similarity under a known alpha.
class OracleScorer : public CandidateScorer {
 public:
  explicit OracleScorer(const AlphaMatte& alpha) : alpha_(alpha) {}
  std::vector<double> score(const Frame& frame, const VideoSequence& bg_video,
                            const std::vector<std::size_t>& indices) const override;

 private:
  const AlphaMatte& alpha_;
};

/// Downscaled copy of a background video at the BMN resolution, built once.
class BackgroundIndex {
 public:
  BackgroundIndex(const VideoSequence& video, int height, int width);
  const VideoSequence& source() const { return *source_; }
  const Frame& low(std::size_t i) const { return low_[i]; }

 private:
  const VideoSequence* source_;
  std::vector<Frame> low_;
};

class BmnScorer : public CandidateScorer {
 public:
  /// With an index, candidates from that video skip the resize.
  explicit BmnScorer(const BmnModel& model, std::shared_ptr<const BackgroundIndex> index = nullptr,
                     std::size_t batch = 16)
      : model_(model), index_(std::move(index)), batch_(batch) {}
  std::vector<double> score(const Frame& frame, const VideoSequence& bg_video,
                            const std::vector<std::size_t>& indices) const override;

 private:
  const BmnModel& model_;
  std::shared_ptr<const BackgroundIndex> index_;
  std::size_t batch_;
};

/// Candidates 0, k, 2k, ...; the highest score wins, ties go to the lowest index.
MatchResult find_best_background(const CandidateScorer& scorer, const Frame& frame, const VideoSequence& bg_video,
                                 int interval);

std::vector<std::size_t> sampled_indices(std::size_t n, int interval);

/// ceil(n_bg / interval) * t_match_ms + t_mat_ms.
double estimate_inference_cost(long n_bg, int interval, double t_match_ms, double t_mat_ms);

}  // namespace abm
