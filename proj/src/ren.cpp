#include "abm/ren.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abm/nn/ops.hpp"
#include "abm/nn/raster.hpp"

namespace abm {

using nn::Tape;
using nn::Tensor;
using nn::Var;

RenModel make_ren(const RenConfig& config, std::uint64_t seed) {
  if (config.height < 8 || config.width < 8 || config.height % 8 || config.width % 8) {
    throw ConfigError("REN resolution must be positive multiples of 8");
  }
  if (config.channels.size() != 4 || config.lateral < 1 ||
      std::any_of(config.channels.begin(), config.channels.end(), [](int c) { return c < 1; })) {
    throw ConfigError("REN needs four positive encoder widths and a positive lateral width");
  }
  RenModel model{config, {}};
  nn::Rng rng(seed);
  std::size_t in = 6;
  for (std::size_t i = 0; i < 4; ++i) {
    nn::add_conv_params(model.params, "ren.enc" + std::to_string(i), in, config.channels[i], 3, rng);
    nn::add_conv_params(model.params, "ren.lat" + std::to_string(i), config.channels[i], config.lateral, 1, rng);
    in = config.channels[i];
  }
  nn::add_conv_params(model.params, "ren.lat_in", 6, config.lateral, 1, rng);
  for (const char* head : {"ren.head_full", "ren.head_half", "ren.head_quarter"})
    nn::add_conv_params(model.params, head, config.lateral, 1, 3, rng);
  return model;
}

namespace {

Var conv(const RenModel& m, Tape& tape, const std::string& name, Var x, int stride, int pad) {
  return nn::conv2d(x, tape.parameter(name + ".weight", m.params.get(name + ".weight")),
                    tape.parameter(name + ".bias", m.params.get(name + ".bias")), stride, pad);
}

// Lateral projection of `skip` plus `top` resized onto it.
Var merge(const RenModel& m, Tape& tape, const std::string& lateral, Var skip, Var top) {
  Var l = conv(m, tape, lateral, skip, 1, 0);
  const auto& s = l.shape();
  return nn::leaky_relu(nn::add(l, nn::resize_bilinear(top, static_cast<int>(s[2]), static_cast<int>(s[3]))));
}

void require_divisible(std::size_t h, std::size_t w) {
  if (h == 0 || w == 0 || h % 8 || w % 8) {
    throw ShapeError("REN input " + std::to_string(h) + "x" + std::to_string(w) + " is not divisible by 8");
  }
}

}  // namespace

RenHeads ren_forward(const RenModel& model, Tape& tape, Var input) {
  const auto& s = input.shape();
  if (s.size() != 4 || s[1] != 6) throw ShapeError("REN input must be [N,6,h,w], got " + nn::shape_string(s));
  require_divisible(s[2], s[3]);

  std::vector<Var> enc;
  Var h = input;
  for (int i = 0; i < 4; ++i) {
    h = nn::leaky_relu(conv(model, tape, "ren.enc" + std::to_string(i), h, 2, 1));
    enc.push_back(h);
  }
  Var top = conv(model, tape, "ren.lat3", enc[3], 1, 0);
  top = merge(model, tape, "ren.lat2", enc[2], top);
  const Var at_quarter = merge(model, tape, "ren.lat1", enc[1], top);
  const Var at_half = merge(model, tape, "ren.lat0", enc[0], at_quarter);
  const Var at_full = merge(model, tape, "ren.lat_in", input, at_half);
  return {nn::sigmoid(conv(model, tape, "ren.head_full", at_full, 1, 1)),
          nn::sigmoid(conv(model, tape, "ren.head_half", at_half, 1, 1)),
          nn::sigmoid(conv(model, tape, "ren.head_quarter", at_quarter, 1, 1))};
}

Tensor ren_input(const std::vector<const Frame*>& frames, const std::vector<const Frame*>& backgrounds) {
  if (frames.empty() || frames.size() != backgrounds.size()) throw ShapeError("ren_input: frame/background counts");
  const Frame& f0 = *frames.front();
  Tensor t({frames.size(), 6, static_cast<std::size_t>(f0.height()), static_cast<std::size_t>(f0.width())});
  for (std::size_t n = 0; n < frames.size(); ++n) {
    if (!frames[n]->same_size(f0) || !backgrounds[n]->same_size(f0)) throw ShapeError("ren_input: sizes differ");
    nn::write_planes(t, n, 0, *frames[n]);
    nn::write_planes(t, n, 3, *backgrounds[n]);
  }
  return t;
}

CoarseAlpha ren_forward(const RenModel& model, const Frame& frame, const Frame& matched_bg) {
  if (!frame.same_size(matched_bg)) throw ShapeError("ren_forward: frame and background sizes differ");
  require_divisible(frame.height(), frame.width());
  Tape tape(false);
  const RenHeads heads = ren_forward(model, tape, tape.constant(ren_input({&frame}, {&matched_bg})));
  return {nn::read_planes<1>(heads.full.value(), 0, 0), nn::read_planes<1>(heads.half.value(), 0, 0),
          nn::read_planes<1>(heads.quarter.value(), 0, 0)};
}

CoarseAlpha ren_estimate(const RenModel& model, const Frame& frame, const Frame& matched_bg) {
  const int h = model.config.height, w = model.config.width;
  return ren_forward(model, resize_bilinear(frame, h, w), resize_bilinear(matched_bg, h, w));
}

Var ren_loss(Tape& tape, const RenHeads& heads, const Tensor& alpha_gt) {
  Var gt = tape.constant(alpha_gt);
  Var total;
  for (Var head : {heads.full, heads.half, heads.quarter}) {
    const auto& s = head.shape();
    Var target = s == alpha_gt.shape() ? gt : nn::resize_bilinear(gt, static_cast<int>(s[2]), static_cast<int>(s[3]));
    Var term = nn::bce_loss(head, target);
    total = total.valid() ? nn::add(total, term) : term;
  }
  return total;
}

double ren_loss(const CoarseAlpha& coarse, const AlphaMatte& alpha_gt) {
  Tape tape(false);
  auto plane = [&](const AlphaMatte& m) {
    Tensor t({1, 1, static_cast<std::size_t>(m.height()), static_cast<std::size_t>(m.width())});
    nn::write_planes(t, 0, 0, m);
    return t;
  };
  if (!coarse.full.same_size(alpha_gt)) throw ShapeError("ren_loss: ground truth differs from full-scale head");
  const RenHeads heads{tape.constant(plane(coarse.full)), tape.constant(plane(coarse.half)),
                       tape.constant(plane(coarse.quarter))};
  return ren_loss(tape, heads, plane(alpha_gt)).value().item();
}

std::vector<RenSample> ren_samples(const RenModel& model, const std::vector<SyntheticClip>& clips) {
  const int h = model.config.height, w = model.config.width;
  std::vector<RenSample> out;
  for (const auto& clip : clips)
    for (const auto& s : clip.samples)
      out.push_back({resize_bilinear(s.frame, h, w), resize_bilinear(s.bgr_gt, h, w), resize_bilinear(s.alpha_gt, h, w)});
  return out;
}

Frame perturb_background(const Frame& bg, const RenTrainConfig& config, nn::Rng& rng) {
  if (rng.uniform() >= config.perturb_prob) return bg;
  const int dy = static_cast<int>(rng.integer(-config.max_shift, config.max_shift));
  const int dx = static_cast<int>(rng.integer(-config.max_shift, config.max_shift));
  const double db = rng.uniform(-config.max_brightness, config.max_brightness);
  return shift_brightness(translate_replicate(bg, dy, dx), db);
}

std::vector<double> train_ren(RenModel& model, const std::vector<SyntheticClip>& clips, const RenTrainConfig& config) {
  const auto samples = ren_samples(model, clips);
  if (samples.empty()) throw InputError("train_ren: no training frames");
  nn::Rng rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t batch = std::min<std::size_t>(std::max(config.batch_size, 1), samples.size());
  nn::AdamConfig adam;
  adam.lr = config.lr;
  const std::size_t h = model.config.height, w = model.config.width;

  std::vector<double> trace;
  trace.reserve(config.steps);
  for (int step = 0; step < config.steps; ++step) {
    std::vector<Frame> backgrounds;
    std::vector<const Frame*> frames, bgs;
    Tensor gt({batch, 1, h, w});
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.integer(0, i - 1)]);
        cursor = 0;
      }
      const RenSample& s = samples[order[cursor++]];
      frames.push_back(&s.frame);
      backgrounds.push_back(perturb_background(s.background, config, rng));
      nn::write_planes(gt, b, 0, s.alpha);
    }
    for (const auto& bg : backgrounds) bgs.push_back(&bg);
    Tape tape;
    Var loss = ren_loss(tape, ren_forward(model, tape, tape.constant(ren_input(frames, bgs))), gt);
    tape.backward(loss);
    nn::adam_step(model.params, tape.parameter_grads(), adam);
    trace.push_back(loss.value().item());
  }
  return trace;
}

nlohmann::json to_json(const RenConfig& c) {
  return {{"height", c.height}, {"width", c.width}, {"channels", c.channels}, {"lateral", c.lateral}};
}

RenConfig ren_config_from_json(const nlohmann::json& j) {
  RenConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "height") c.height = value.get<int>();
    else if (key == "width") c.width = value.get<int>();
    else if (key == "channels") c.channels = value.get<std::vector<int>>();
    else if (key == "lateral") c.lateral = value.get<int>();
    else throw ConfigError("unknown REN config key: " + key);
  }
  return c;
}

}  // namespace abm
