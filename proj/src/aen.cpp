#include "abm/aen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abm/nn/ops.hpp"
#include "abm/nn/raster.hpp"

namespace abm {

using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

// Places a run of length n covering [lo, lo + len) inside [0, dim).
std::pair<int, int> place(int lo, int len, int n, int dim) {
  if (n >= dim) return {0, dim};
  const int start = std::clamp(lo - (n - len) / 2, 0, dim - n);
  return {start, start + n};
}

}  // namespace

CropDecision derive_crop(const AlphaMatte& coarse, double margin, int size, int src_h, int src_w, double threshold) {
  if (margin < 0.0) throw GeometryError("derive_crop: negative margin");
  if (size < 1 || src_h < 1 || src_w < 1) throw GeometryError("derive_crop: empty target or source");
  const AlphaMatte up = coarse.height() == src_h && coarse.width() == src_w ? coarse : resize_bilinear(coarse, src_h, src_w);
  int top = src_h, left = src_w, bottom = 0, right = 0;
  for (int y = 0; y < src_h; ++y)
    for (int x = 0; x < src_w; ++x)
      if (up.at(y, x) > threshold) {
        top = std::min(top, y);
        bottom = std::max(bottom, y + 1);
        left = std::min(left, x);
        right = std::max(right, x + 1);
      }
  CropDecision d;
  d.transform.target_size = size;
  if (bottom == 0) {
    d.fallback = true;
    d.transform.box = {0, 0, src_h, src_w};
    return d;
  }
  const int side = std::max(bottom - top, right - left);
  // The small slack keeps products like 0.1 * 30 from rounding up a pixel.
  const int pad = static_cast<int>(std::ceil(margin * side - 1e-9));
  const int n = side + 2 * pad;
  const auto [y0, y1] = place(top, bottom - top, n, src_h);
  const auto [x0, x1] = place(left, right - left, n, src_w);
  d.transform.box = {y0, x0, y1, x1};
  return d;
}

AenModel make_aen(const AenConfig& config, std::uint64_t seed) {
  const auto positive = [](const std::vector<int>& v) {
    return std::all_of(v.begin(), v.end(), [](int c) { return c > 0; });
  };
  if (config.encoder.size() != 4 || config.decoder.size() != 4 || !positive(config.encoder) ||
      !positive(config.decoder)) {
    throw ConfigError("AEN needs four positive encoder and four positive decoder widths");
  }
  if (config.crop.size < 8 || config.crop.margin < 0.0) throw ConfigError("AEN crop size must be >= 8, margin >= 0");
  AenModel model{config, {}};
  nn::Rng rng(seed);
  std::size_t in = 7;
  for (std::size_t i = 0; i < 4; ++i) {
    nn::add_conv_params(model.params, "aen.enc" + std::to_string(i), in, config.encoder[i], 3, rng);
    in = config.encoder[i];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t skip = i < 3 ? config.encoder[2 - i] : 7;
    nn::add_conv_params(model.params, "aen.dec" + std::to_string(i), in + skip, config.decoder[i], 3, rng);
    in = config.decoder[i];
  }
  nn::add_conv_params(model.params, "aen.head_alpha", in, 1, 3, rng);
  nn::add_conv_params(model.params, "aen.head_fgr", in, 3, 3, rng);
  return model;
}

namespace {

Var conv(const AenModel& m, Tape& tape, const std::string& name, Var x, int stride) {
  return nn::conv2d(x, tape.parameter(name + ".weight", m.params.get(name + ".weight")),
                    tape.parameter(name + ".bias", m.params.get(name + ".bias")), stride, 1);
}

Tensor plane_tensor(const AlphaMatte& m) {
  Tensor t({1, 1, static_cast<std::size_t>(m.height()), static_cast<std::size_t>(m.width())});
  nn::write_planes(t, 0, 0, m);
  return t;
}

Tensor frame_tensor(const Frame& f) {
  Tensor t({1, 3, static_cast<std::size_t>(f.height()), static_cast<std::size_t>(f.width())});
  nn::write_planes(t, 0, 0, f);
  return t;
}

}  // namespace

AenHeads aen_forward(const AenModel& model, Tape& tape, Var input) {
  const auto& s = input.shape();
  if (s.size() != 4 || s[1] != 7) throw ShapeError("AEN input must be [N,7,Z,Z], got " + nn::shape_string(s));
  std::vector<Var> skips = {input};
  Var h = input;
  for (int i = 0; i < 4; ++i) {
    h = nn::leaky_relu(conv(model, tape, "aen.enc" + std::to_string(i), h, 2));
    if (i < 3) skips.push_back(h);
  }
  for (int i = 0; i < 4; ++i) {
    const Var skip = skips[3 - i];
    const auto& k = skip.shape();
    Var up = nn::resize_bilinear(h, static_cast<int>(k[2]), static_cast<int>(k[3]));
    h = nn::leaky_relu(conv(model, tape, "aen.dec" + std::to_string(i), nn::concat_channels({up, skip}), 1));
  }
  return {nn::sigmoid(conv(model, tape, "aen.head_alpha", h, 1)), conv(model, tape, "aen.head_fgr", h, 1)};
}

CropRefinement aen_forward(const AenModel& model, const Frame& crop_frame, const Frame& crop_bg,
                           const AlphaMatte& crop_coarse) {
  const int z = model.config.crop.size;
  if (crop_frame.height() != z || crop_frame.width() != z || !crop_bg.same_size(crop_frame) ||
      !crop_coarse.same_size(crop_frame)) {
    throw ShapeError("aen_forward: inputs must all be " + std::to_string(z) + "x" + std::to_string(z));
  }
  Tensor input({1, 7, static_cast<std::size_t>(z), static_cast<std::size_t>(z)});
  nn::write_planes(input, 0, 0, crop_frame);
  nn::write_planes(input, 0, 3, crop_bg);
  nn::write_planes(input, 0, 6, crop_coarse);
  Tape tape(false);
  const AenHeads heads = aen_forward(model, tape, tape.constant(std::move(input)));
  return {nn::read_planes<1>(heads.alpha.value(), 0, 0), nn::read_planes<3>(heads.residual.value(), 0, 0)};
}

AenLoss aen_loss(Tape& tape, const AenHeads& heads, const Tensor& alpha_gt, const Tensor& fgr_gt, const Tensor& frame) {
  const nn::Shape& a = alpha_gt.shape();
  if (heads.alpha.shape() != a || heads.residual.shape() != fgr_gt.shape() || frame.shape() != fgr_gt.shape()) {
    throw ShapeError("aen_loss: prediction and target shapes differ");
  }
  Tensor mask(fgr_gt.shape()), target(fgr_gt.shape());
  for (std::size_t n = 0; n < a[0]; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < a[2]; ++y)
        for (std::size_t x = 0; x < a[3]; ++x) {
          const double w = alpha_gt.at(n, 0, y, x);
          mask.at(n, c, y, x) = w;
          target.at(n, c, y, x) = fgr_gt.at(n, c, y, x) * w;
        }
  AenLoss loss;
  loss.alpha = nn::l1_loss(heads.alpha, tape.constant(alpha_gt));
  const Var composed = nn::add(heads.residual, tape.constant(frame));
  loss.fgr = nn::l1_loss(nn::mul(composed, tape.constant(std::move(mask))), tape.constant(std::move(target)));
  loss.total = nn::add(loss.alpha, loss.fgr);
  return loss;
}

double aen_loss(const CropRefinement& out, const AlphaMatte& alpha_gt, const Frame& fgr_gt, const Frame& crop_frame) {
  Tape tape(false);
  const AenHeads heads{tape.constant(plane_tensor(out.alpha)), tape.constant(frame_tensor(out.residual))};
  return aen_loss(tape, heads, plane_tensor(alpha_gt), frame_tensor(fgr_gt), frame_tensor(crop_frame)).total.value().item();
}

RefineOutput refine(const AlphaRefiner& refiner, const CropOptions& options, const Frame& frame,
                    const Frame& matched_bg, const CoarseAlpha& coarse) {
  if (!frame.same_size(matched_bg)) throw ShapeError("refine: frame and background sizes differ");
  const int h = frame.height(), w = frame.width();
  const AlphaMatte coarse_src = resize_bilinear(coarse.full, h, w);
  RefineOutput out;
  out.crop = derive_crop(coarse_src, options.margin, options.size, h, w, options.threshold);
  const CropTransform& t = out.crop.transform;
  CropRefinement r =
      refiner.refine_crop(crop_and_zoom(frame, t), crop_and_zoom(matched_bg, t), crop_and_zoom(coarse_src, t));
  out.full_alpha = clamp_unit(paste_back(r.alpha, t, h, w));
  const Frame residual = paste_back(r.residual, t, h, w);
  out.full_fgr = frame;
  for (int y = t.box.top; y < t.box.bottom; ++y)
    for (int x = t.box.left; x < t.box.right; ++x)
      for (int c = 0; c < 3; ++c) out.full_fgr.at(y, x, c) = std::clamp(frame.at(y, x, c) + residual.at(y, x, c), 0.0, 1.0);
  out.alpha = std::move(r.alpha);
  out.fgr_residual = std::move(r.residual);
  return out;
}

RefineOutput refine(const AenModel& model, const Frame& frame, const Frame& matched_bg, const CoarseAlpha& coarse) {
  return refine(AenRefiner(model), model.config.crop, frame, matched_bg, coarse);
}

AenTrace train_aen(AenModel& aen, RenModel& ren, const std::vector<SyntheticClip>& clips, const AenTrainConfig& config) {
  std::vector<const CompositeSample*> samples;
  for (const auto& clip : clips)
    for (const auto& s : clip.samples) samples.push_back(&s);
  if (samples.empty()) throw InputError("train_aen: no training frames");

  const int hr = ren.config.height, wr = ren.config.width, z = aen.config.crop.size;
  const CropOptions& crop = aen.config.crop;
  nn::Rng rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t batch = std::min<std::size_t>(std::max(config.batch_size, 1), samples.size());
  nn::AdamConfig adam;
  adam.lr = config.lr;

  AenTrace trace;
  for (int step = 0; step < config.steps; ++step) {
    Tape tape;
    Var total, alpha_term, fgr_term, ren_term;
    auto accumulate = [](Var& acc, Var v) { acc = acc.valid() ? nn::add(acc, v) : v; };
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.integer(0, i - 1)]);
        cursor = 0;
      }
      const CompositeSample& s = *samples[order[cursor++]];
      const int h = s.frame.height(), w = s.frame.width();
      const Frame bg = perturb_background(s.bgr_gt, config.perturb, rng);
      const Frame frame_low = resize_bilinear(s.frame, hr, wr), bg_low = resize_bilinear(bg, hr, wr);

      AlphaMatte coarse;
      Var coarse_full;
      if (config.cotrain) {
        const RenHeads heads = ren_forward(ren, tape, tape.constant(ren_input({&frame_low}, {&bg_low})));
        accumulate(ren_term, ren_loss(tape, heads, plane_tensor(resize_bilinear(s.alpha_gt, hr, wr))));
        coarse_full = heads.full;
        coarse = nn::read_planes<1>(heads.full.value(), 0, 0);
      } else {
        coarse = ren_forward(ren, frame_low, bg_low).full;
      }
      const AlphaMatte coarse_src = resize_bilinear(coarse, h, w);
      const CropTransform t = derive_crop(coarse_src, crop.margin, z, h, w, crop.threshold).transform;
      const CropBox& box = t.box;

      Var coarse_crop;
      if (config.cotrain) {
        coarse_crop = nn::resize_bilinear(
            nn::crop(nn::resize_bilinear(coarse_full, h, w), box.top, box.left, box.height(), box.width()), z, z);
      } else {
        coarse_crop = tape.constant(plane_tensor(crop_and_zoom(coarse_src, t)));
      }
      const Tensor frame_crop = frame_tensor(crop_and_zoom(s.frame, t));
      const Var input = nn::concat_channels(
          {tape.constant(frame_crop), tape.constant(frame_tensor(crop_and_zoom(bg, t))), coarse_crop});
      const AenLoss l = aen_loss(tape, aen_forward(aen, tape, input), plane_tensor(crop_and_zoom(s.alpha_gt, t)),
                                 frame_tensor(crop_and_zoom(s.fgr_gt, t)), frame_crop);
      accumulate(total, l.total);
      accumulate(alpha_term, l.alpha);
      accumulate(fgr_term, l.fgr);
    }
    if (config.cotrain) accumulate(total, ren_term);
    const double inv = 1.0 / static_cast<double>(batch);
    const Var objective = nn::scale(total, inv);
    tape.backward(objective);
    const nn::GradMap grads = tape.parameter_grads();
    nn::adam_step(aen.params, grads, adam);
    if (config.cotrain) nn::adam_step(ren.params, grads, adam);

    trace.total.push_back(objective.value().item());
    trace.alpha.push_back(alpha_term.value().item() * inv);
    trace.fgr.push_back(fgr_term.value().item() * inv);
    if (config.cotrain) trace.ren.push_back(ren_term.value().item() * inv);
  }
  return trace;
}

nlohmann::json to_json(const AenConfig& c) {
  return {{"size", c.crop.size},
          {"threshold", c.crop.threshold},
          {"margin", c.crop.margin},
          {"encoder", c.encoder},
          {"decoder", c.decoder}};
}

AenConfig aen_config_from_json(const nlohmann::json& j) {
  AenConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "size") c.crop.size = value.get<int>();
    else if (key == "threshold") c.crop.threshold = value.get<double>();
    else if (key == "margin") c.crop.margin = value.get<double>();
    else if (key == "encoder") c.encoder = value.get<std::vector<int>>();
    else if (key == "decoder") c.decoder = value.get<std::vector<int>>();
    else throw ConfigError("unknown AEN config key: " + key);
  }
  return c;
}

}  // namespace abm
