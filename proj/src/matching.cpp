#include "abm/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abm/nn/ops.hpp"

namespace abm {

using nn::Tape;
using nn::Tensor;
using nn::Var;

double oracle_similarity(const Frame& frame, const Frame& candidate_bg, const AlphaMatte& alpha) {
  if (!frame.same_size(candidate_bg) || !frame.same_size(alpha)) {
    throw ShapeError("oracle_similarity: frame, candidate and alpha sizes differ");
  }
  const auto x = frame.data(), y = candidate_bg.data(), a = alpha.data();
  double weighted = 0.0, weight = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double w = 1.0 - a[i];
    const double d = (std::abs(x[3 * i] - y[3 * i]) + std::abs(x[3 * i + 1] - y[3 * i + 1]) +
                      std::abs(x[3 * i + 2] - y[3 * i + 2])) /
                     3.0;
    weighted += d * w;
    weight += w;
  }
  if (weight <= 0.0) throw DegenerateRegionError("oracle_similarity: alpha leaves no background region");
  return 1.0 - weighted / weight;
}

BmnModel make_bmn(const BmnConfig& config, std::uint64_t seed) {
  if (config.height < 1 || config.width < 1 || config.channels.empty() || config.hidden < 1) {
    throw ConfigError("invalid BMN configuration");
  }
  BmnModel model{config, {}};
  nn::Rng rng(seed);
  std::size_t in = 6;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    nn::add_conv_params(model.params, "bmn.conv" + std::to_string(i), in, config.channels[i], 3, rng);
    in = config.channels[i];
  }
  nn::add_dense_params(model.params, "bmn.fc1", in, config.hidden, rng);
  nn::add_dense_params(model.params, "bmn.fc2", config.hidden, 1, rng);

  nn::Tensor& w0 = model.params.get_mutable("bmn.conv0.weight");
  const std::size_t paired = static_cast<std::size_t>(config.difference_filters * config.channels[0]);
  for (std::size_t k = 0; k < paired; ++k)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 9; ++i) w0[(k * 6 + 3 + c) * 9 + i] = -w0[(k * 6 + c) * 9 + i];
  model.params.get_mutable("bmn.fc2.bias")[0] = config.output_bias;
  return model;
}

namespace {

Var param(Tape& tape, const BmnModel& m, const std::string& name) { return tape.parameter(name, m.params.get(name)); }

}  // namespace

Var bmn_forward(const BmnModel& model, Tape& tape, Var input) {
  Var h = input;
  for (std::size_t i = 0; i < model.config.channels.size(); ++i) {
    const std::string p = "bmn.conv" + std::to_string(i);
    h = nn::leaky_relu(nn::conv2d(h, param(tape, model, p + ".weight"), param(tape, model, p + ".bias"), 2, 1));
  }
  h = nn::global_avg_pool(h);
  h = nn::leaky_relu(nn::dense(h, param(tape, model, "bmn.fc1.weight"), param(tape, model, "bmn.fc1.bias")));
  return nn::sigmoid(nn::dense(h, param(tape, model, "bmn.fc2.weight"), param(tape, model, "bmn.fc2.bias")));
}

Tensor bmn_input(const Frame& frame_low, const std::vector<const Frame*>& candidates_low) {
  const std::size_t h = frame_low.height(), w = frame_low.width(), n = candidates_low.size();
  Tensor t({n, 6, h, w});
  for (std::size_t b = 0; b < n; ++b) {
    if (!candidates_low[b]->same_size(frame_low)) throw ShapeError("bmn_input: candidate size differs from frame");
    for (int half = 0; half < 2; ++half) {
      const Frame& src = half == 0 ? frame_low : *candidates_low[b];
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          for (int c = 0; c < 3; ++c) t.at(b, 3 * half + c, y, x) = src.at(y, x, c);
    }
  }
  return t;
}

namespace {

Frame to_model_size(const BmnModel& model, const Frame& f) {
  return resize_bilinear(f, model.config.height, model.config.width);
}

std::vector<double> score_low(const BmnModel& model, const Frame& frame_low,
                              const std::vector<const Frame*>& candidates_low) {
  Tape tape(false);
  Var out = bmn_forward(model, tape, tape.constant(bmn_input(frame_low, candidates_low)));
  const auto v = out.value().data();
  return {v.begin(), v.end()};
}

}  // namespace

double bmn_score(const BmnModel& model, const Frame& frame, const Frame& candidate_bg) {
  const Frame c = to_model_size(model, candidate_bg);
  return score_low(model, to_model_size(model, frame), {&c}).front();
}

Var bmn_loss(const BmnModel& model, Tape& tape, const Tensor& input, const std::vector<double>& labels) {
  if (labels.size() != input.dim(0)) throw ShapeError("bmn_loss: label count differs from batch size");
  Var pred = bmn_forward(model, tape, tape.constant(input));
  return nn::l1_loss(pred, tape.constant(Tensor({labels.size(), 1}, labels)));
}

std::vector<double> train_bmn(BmnModel& model, const std::vector<BmnPair>& pairs, const BmnTrainConfig& config) {
  if (pairs.empty()) throw InputError("train_bmn: no training pairs");
  std::vector<Frame> frames, candidates;
  for (const auto& p : pairs) {
    const bool fits = p.frame.height() == model.config.height && p.frame.width() == model.config.width;
    frames.push_back(fits ? p.frame : to_model_size(model, p.frame));
    candidates.push_back(fits ? p.candidate_bg : to_model_size(model, p.candidate_bg));
  }
  nn::Rng rng(config.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t batch = std::min<std::size_t>(std::max(config.batch_size, 1), pairs.size());
  nn::AdamConfig adam;
  adam.lr = config.lr;

  std::vector<double> trace;
  for (int step = 0; step < config.steps; ++step) {
    std::vector<std::size_t> picked;
    while (picked.size() < batch) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.integer(0, i - 1)]);
        cursor = 0;
      }
      picked.push_back(order[cursor++]);
    }
    // Pack each pair on its own frame so mixed-frame batches stay correct.
    const std::size_t h = model.config.height, w = model.config.width;
    Tensor input({batch, 6, h, w});
    std::vector<double> labels;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t i = picked[b];
      Tensor one = bmn_input(frames[i], {&candidates[i]});
      std::copy(one.data().begin(), one.data().end(), input.data().begin() + b * one.size());
      labels.push_back(pairs[i].label);
    }
    Tape tape;
    Var loss = bmn_loss(model, tape, input, labels);
    tape.backward(loss);
    nn::adam_step(model.params, tape.parameter_grads(), adam);
    trace.push_back(loss.value().item());
  }
  return trace;
}

std::vector<double> OracleScorer::score(const Frame& frame, const VideoSequence& bg_video,
                                        const std::vector<std::size_t>& indices) const {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(oracle_similarity(frame, bg_video[i], alpha_));
  return out;
}

BackgroundIndex::BackgroundIndex(const VideoSequence& video, int height, int width) : source_(&video) {
  low_.reserve(video.size());
  for (const auto& f : video.frames()) low_.push_back(resize_bilinear(f, height, width));
}

std::vector<double> BmnScorer::score(const Frame& frame, const VideoSequence& bg_video,
                                     const std::vector<std::size_t>& indices) const {
  const Frame frame_low = to_model_size(model_, frame);
  const bool indexed = index_ && &index_->source() == &bg_video;
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch_) {
    const std::size_t end = std::min(indices.size(), start + batch_);
    std::vector<Frame> resized;
    resized.reserve(end - start);
    std::vector<const Frame*> candidates;
    for (std::size_t k = start; k < end; ++k) {
      if (indexed) {
        candidates.push_back(&index_->low(indices[k]));
      } else {
        resized.push_back(to_model_size(model_, bg_video[indices[k]]));
        candidates.push_back(&resized.back());
      }
    }
    const auto scores = score_low(model_, frame_low, candidates);
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

std::vector<std::size_t> sampled_indices(std::size_t n, int interval) {
  if (interval < 1) throw InputError("sampling interval must be at least 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(interval)) out.push_back(i);
  return out;
}

MatchResult find_best_background(const CandidateScorer& scorer, const Frame& frame, const VideoSequence& bg_video,
                                 int interval) {
  if (bg_video.empty()) throw InputError("find_best_background: empty background video");
  const auto indices = sampled_indices(bg_video.size(), interval);
  const auto scores = scorer.score(frame, bg_video, indices);
  MatchResult r;
  r.candidates_evaluated = indices.size();
  r.best_index = indices.front();
  r.score = scores.front();
  for (std::size_t k = 1; k < indices.size(); ++k) {
    if (scores[k] > r.score) {
      r.score = scores[k];
      r.best_index = indices[k];
    }
  }
  return r;
}

double estimate_inference_cost(long n_bg, int interval, double t_match_ms, double t_mat_ms) {
  if (n_bg < 0 || interval < 1) throw InputError("estimate_inference_cost: invalid arguments");
  const long candidates = (n_bg + interval - 1) / interval;
  return static_cast<double>(candidates) * t_match_ms + t_mat_ms;
}

}  // namespace abm
