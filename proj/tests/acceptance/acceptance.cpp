// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "abm/errors.hpp"
#include "abm/image_io.hpp"
#include "abm/metrics.hpp"
#include "abm/nn/grad_check.hpp"
#include "abm/nn/ops.hpp"
#include "abm/pipeline.hpp"
#include "metric_oracles.hpp"

using namespace abm;
using Json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("abm_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nn::Tensor random_tensor(nn::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  nn::Rng rng(seed);
  nn::Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

Frame random_frame(int h, int w, std::uint64_t seed) {
  nn::Rng rng(seed);
  Frame f(h, w);
  for (double& v : f.data()) v = rng.uniform();
  return f;
}

// Logistic edge profile.
AlphaMatte soft_disc(int h, int w, double cy, double cx, double r, double softness) {
  AlphaMatte m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.at(y, x) = 1.0 / (1.0 + std::exp((std::hypot(y - cy, x - cx) - r) / softness));
  return m;
}

// Scalar projection with distinct random weights per element.
nn::Var project(nn::Tape& tape, nn::Var v, std::uint64_t seed) {
  const nn::Tensor w = random_tensor(v.shape(), seed);
  return nn::l1_loss(nn::mul(v, tape.constant(w)), tape.constant(nn::Tensor(v.shape(), -100.0)));
}

// ---- 1 ----
void gradient_correctness(Outcome& out) {
  using nn::Tape;
  using nn::Var;
  double worst = 0.0;
  std::size_t checked = 0;
  auto record = [&](const std::string& name, const nn::GradCheckResult& r) {
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    out.check(r.max_rel_error < 1e-4 && r.checked > 0, name);
  };
  const nn::Tensor x = random_tensor({2, 3, 5, 6}, 1);
  const nn::Tensor w = random_tensor({4, 3, 3, 3}, 2), b = random_tensor({4}, 3);
  record("conv2d input", nn::grad_check([&](Tape& t, Var v) {
           return project(t, nn::conv2d(v, t.constant(w), t.constant(b), 2, 1), 10);
         }, x));
  record("conv2d weight", nn::grad_check([&](Tape& t, Var v) {
           return project(t, nn::conv2d(t.constant(x), v, t.constant(b), 1, 1), 11);
         }, w));
  record("conv2d bias", nn::grad_check([&](Tape& t, Var v) {
           return project(t, nn::conv2d(t.constant(x), t.constant(w), v, 1, 0), 12);
         }, b));
  record("relu", nn::grad_check([](Tape& t, Var v) { return project(t, nn::relu(v), 13); }, x));
  record("leaky_relu", nn::grad_check([](Tape& t, Var v) { return project(t, nn::leaky_relu(v), 14); }, x));
  record("sigmoid", nn::grad_check([](Tape& t, Var v) { return project(t, nn::sigmoid(v), 15); }, x));
  const nn::Tensor x2 = random_tensor(x.shape(), 4);
  record("add", nn::grad_check([&](Tape& t, Var v) { return project(t, nn::add(v, t.constant(x2)), 16); }, x));
  record("mul", nn::grad_check([&](Tape& t, Var v) { return project(t, nn::mul(v, t.constant(x2)), 17); }, x));
  record("scale", nn::grad_check([](Tape& t, Var v) { return project(t, nn::scale(v, -1.7), 18); }, x));
  record("resize_bilinear", nn::grad_check([](Tape& t, Var v) { return project(t, nn::resize_bilinear(v, 3, 11), 19); }, x));
  record("bilinear_upsample", nn::grad_check([](Tape& t, Var v) { return project(t, nn::bilinear_upsample(v, 2), 20); }, x));
  record("crop", nn::grad_check([](Tape& t, Var v) { return project(t, nn::crop(v, 1, 2, 3, 3), 21); }, x));
  const nn::Tensor dw = random_tensor({7, 4}, 5), db = random_tensor({4}, 6), dx = random_tensor({3, 7}, 7);
  record("dense", nn::grad_check([&](Tape& t, Var v) { return project(t, nn::dense(v, t.constant(dw), t.constant(db)), 22); }, dx));
  record("dense weight", nn::grad_check([&](Tape& t, Var v) { return project(t, nn::dense(t.constant(dx), v, t.constant(db)), 23); }, dw));
  record("global_avg_pool", nn::grad_check([](Tape& t, Var v) { return project(t, nn::global_avg_pool(v), 24); }, x));
  record("concat/slice", nn::grad_check([&](Tape& t, Var v) {
           const Var c = nn::concat_channels({v, t.constant(x2), v});
           return project(t, nn::slice_channels(c, 2, 5), 25);
         }, x));
  const nn::Tensor target = random_tensor(x.shape(), 8, 0.0, 1.0);
  record("l1_loss", nn::grad_check([&](Tape& t, Var v) { return nn::l1_loss(v, t.constant(target)); }, x));
  record("bce_loss", nn::grad_check([&](Tape& t, Var v) { return nn::bce_loss(v, t.constant(target)); },
                                    random_tensor(x.shape(), 9, 0.05, 0.95)));

  // Composed losses of the three networks, differentiated through their parameters.
  BmnConfig bc;
  bc.height = 8;
  bc.width = 8;
  bc.channels = {4, 6};
  bc.hidden = 5;
  BmnModel bmn = make_bmn(bc, 6);
  const Frame fa = random_frame(8, 8, 7), fb = random_frame(8, 8, 8), fc = random_frame(8, 8, 9);
  const nn::Tensor bin = bmn_input(fa, {&fb, &fc});
  record("bmn loss", nn::grad_check_parameters([&](Tape& t) { return bmn_loss(bmn, t, bin, {1.5, -0.5}); },
                                               bmn.params, 1e-4, 8));

  RenModel ren = make_ren({8, 8, {3, 4, 4, 5}, 3}, 9);
  const nn::Tensor rin = ren_input({&fa}, {&fb}), rgt = random_tensor({1, 1, 8, 8}, 10, 0.0, 1.0);
  record("ren loss", nn::grad_check_parameters(
                         [&](Tape& t) { return ren_loss(t, ren_forward(ren, t, t.constant(rin)), rgt); }, ren.params,
                         1e-5, 6));

  AenConfig ac;
  ac.crop.size = 8;
  ac.encoder = {3, 4, 4, 5};
  ac.decoder = {4, 3, 3, 2};
  AenModel aen = make_aen(ac, 2);
  const nn::Tensor ain = random_tensor({1, 7, 8, 8}, 11, 0.0, 1.0);
  const nn::Tensor agt = random_tensor({1, 1, 8, 8}, 12, 0.0, 1.0), fgt = random_tensor({1, 3, 8, 8}, 13, 0.0, 1.0);
  const nn::Tensor aframe({1, 3, 8, 8}, std::vector<double>(ain.data().begin(), ain.data().begin() + 192));
  record("aen loss", nn::grad_check_parameters(
                         [&](Tape& t) { return aen_loss(t, aen_forward(aen, t, t.constant(ain)), agt, fgt, aframe).total; },
                         aen.params, 1e-5, 6));
  out.detail << "max rel error " << worst << " over " << checked << " coordinates";
}

// ---- 2 ----
double literal_similarity(const Frame& x, const Frame& y, const AlphaMatte& a) {
  double num = 0.0, den = 0.0;
  for (int r = 0; r < x.height(); ++r)
    for (int c = 0; c < x.width(); ++c) {
      double l1 = 0.0;
      for (int ch = 0; ch < 3; ++ch) l1 += std::abs(x.at(r, c, ch) - y.at(r, c, ch));
      num += (1.0 - a.at(r, c)) * l1 / 3.0;
      den += 1.0 - a.at(r, c);
    }
  return 1.0 - num / den;
}

void oracle_equivalence(Outcome& out) {
  int matches = 0;
  for (int i = 0; i < 100; ++i) {
    const int n = 5 + i % 12;
    const SyntheticClip clip = synth_toy_clip(1000 + i, n, 16 + 4 * (i % 3), 24 + 4 * (i % 4));
    const auto& s = clip.samples[i % n];
    const MatchResult m = find_best_background(OracleScorer(s.alpha_gt), s.frame, clip.captured_background, 1);
    std::size_t best = 0;
    double best_s = -1e300;
    for (std::size_t j = 0; j < clip.captured_background.size(); ++j) {
      const double v = literal_similarity(s.frame, clip.captured_background[j], s.alpha_gt);
      if (v > best_s) {
        best_s = v;
        best = j;
      }
    }
    matches += m.best_index == best && m.candidates_evaluated == clip.captured_background.size();
  }
  out.check(matches == 100, "index mismatch");
  out.detail << matches << "/100 exact index matches";
}

// ---- 3 ----
void cost_model(Outcome& out) {
  const double e = estimate_inference_cost(344, 8, 2.83, 34.8);
  out.check(std::abs(e - 156.49) < 1e-9, "estimate != 156.49");
  out.check(std::abs(e - 156.0) <= 1.0, "estimate not within 1 ms of 156");
  out.detail << std::setprecision(10) << "estimate " << e << " ms";
}

// ---- 4 ----
void sampling_fraction(Outcome& out) {
  int bad = 0;
  for (std::size_t n = 1; n <= 400; ++n) {
    const std::size_t expected = (n + 7) / 8;
    if (sampled_indices(n, 8).size() != expected) ++bad;
    if (n % 8 == 0 && static_cast<double>(sampled_indices(n, 8).size()) / n != 0.125) ++bad;
  }
  // The search itself, on a real clip.
  for (int n : {8, 13, 64}) {
    const SyntheticClip clip = synth_toy_clip(5, n, 12, 20);
    const auto& s = clip.samples.front();
    if (find_best_background(OracleScorer(s.alpha_gt), s.frame, clip.captured_background, 8).candidates_evaluated !=
        static_cast<std::size_t>((n + 7) / 8))
      ++bad;
  }
  out.check(bad == 0, std::to_string(bad) + " wrong counts");
  out.detail << "n = 1..400 and three clip searches, " << bad << " mismatches";
}

// ---- 5, 6: shared training run through the pipeline commands ----
struct Trained {
  PipelineConfig config;
  fs::path clip_dir;
  Json ablation;
  double train_seconds = 0.0;
  double ablate_seconds = 0.0;
};

Trained train_toy() {
  Trained t;
  t.config.root = work_dir("trend");
  const auto start = std::chrono::steady_clock::now();
  t.clip_dir = cmd_synth(t.config).front();
  for (Stage s : {Stage::bmn, Stage::ren, Stage::aen, Stage::cotrain}) cmd_train(t.config, s);
  t.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto ab = std::chrono::steady_clock::now();
  t.ablation = cmd_ablate_interval(t.config, t.clip_dir, {1, 2, 4, 8, 16, 32, 64}, t.config.root / "ablation");
  t.ablate_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - ab).count();
  return t;
}

const Json& row_for(const Trained& t, int k) {
  for (const auto& r : t.ablation["rows"])
    if (r["interval"] == k) return r;
  throw InputError("no ablation row for interval " + std::to_string(k));
}

void interval_trend(const Trained& t, Outcome& out) {
  double prev = -1.0;
  out.detail << "bg_difference";
  for (const auto& r : t.ablation["rows"]) {
    const double d = r["bg_difference"].get<double>();
    out.detail << ' ' << r["interval"].get<int>() << ':' << std::setprecision(4) << d;
    out.check(d >= prev, "bg_difference decreases at interval " + std::to_string(r["interval"].get<int>()));
    prev = d;
  }
  const double sad1 = row_for(t, 1)["sad"].get<double>(), sad32 = row_for(t, 32)["sad"].get<double>();
  out.check(sad32 <= 3.0 * sad1, "SAD(32) > 3 SAD(1)");
  out.detail << "; SAD 1:" << sad1 << " 32:" << sad32;
  const double total = t.train_seconds + t.ablate_seconds;
  out.check(total < 600.0, "over 10 minutes");
  out.detail << "; train+ablate " << std::setprecision(3) << total << " s";
}

void overfit_integration(const Trained& t, Outcome& out) {
  const SyntheticClip clip = read_clip_dir(t.clip_dir);
  const int holdout = t.config.bmn.holdout_every;

  // (a) BMN top-1 at interval 1 on frames left out of BMN training.
  const Json report = [&] {
    std::ifstream in(t.config.root / "ablation" / "interval_1" / "match-report.json");
    return Json::parse(in);
  }();
  double worst_gap = 0.0;
  int held = 0;
  for (std::size_t i = 0; i < clip.size(); ++i) {
    if (holdout < 2 || static_cast<int>(i % holdout) != holdout - 1) continue;
    const auto& s = clip.samples[i];
    double best = -1e300;
    for (const auto& bg : clip.captured_background.frames()) best = std::max(best, oracle_similarity(s.frame, bg, s.alpha_gt));
    const std::size_t top1 = report["frames"][i]["matched_index"].get<std::size_t>();
    worst_gap = std::max(worst_gap, best - oracle_similarity(s.frame, clip.captured_background[top1], s.alpha_gt));
    ++held;
  }
  out.check(held > 0 && worst_gap <= 0.05, "BMN gap > 0.05");

  // (b) and (c) at the configured interval.
  const int k = t.config.matching.interval;
  const fs::path dir = t.config.root / "ablation" / ("interval_" + std::to_string(k));
  const auto coarse = read_matte_dir(dir / "coarse");
  double iou_sum = 0.0, iou_min = 1.0;
  for (std::size_t i = 0; i < clip.size(); ++i) {
    const double v = mask_iou(coarse[i], clip.samples[i].alpha_gt);
    iou_sum += v;
    iou_min = std::min(iou_min, v);
  }
  const double iou = iou_sum / clip.size();
  out.check(iou >= 0.9, "REN IoU < 0.9");
  const double sad = row_for(t, k)["sad"].get<double>(), coarse_sad = row_for(t, k)["coarse_sad"].get<double>();
  out.check(sad <= 0.5 * coarse_sad, "refined SAD > 0.5 coarse SAD");

  int max_steps = 0;
  for (const auto& s : {t.config.bmn.train.steps, t.config.ren.train.steps, t.config.aen.steps, t.config.cotrain.steps})
    max_steps = std::max(max_steps, s);
  out.check(max_steps <= 2000, "a stage exceeds 2000 steps");
  out.check(t.train_seconds + t.ablate_seconds <= 600.0, "over 10 minutes");
  out.detail << std::setprecision(4) << "(a) worst gap " << worst_gap << " on " << held << " held-out frames; (b) IoU mean "
             << iou << " min " << iou_min << "; (c) SAD " << sad << " vs coarse " << coarse_sad << " (ratio "
             << sad / coarse_sad << ")";
}

// ---- 7 ----
void metric_suite(Outcome& out) {
  using namespace abm::oracle;
  int bad = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const AlphaMatte m = random_matte(9, 11, s);
    bad += sad(m, m) != 0.0 || mse(m, m) != 0.0 || gradient_error(m, m) != 0.0 || connectivity_error(m, m) != 0.0;
  }
  out.check(bad == 0, "perfect prediction not zero");
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const bool blocky = s % 2;
    const AlphaMatte p = blocky ? blocky_matte(8, 8, 100 + s) : random_matte(8, 8, 100 + s);
    const AlphaMatte g = blocky ? blocky_matte(8, 8, 200 + s) : random_matte(8, 8, 200 + s);
    worst = std::max({worst, std::abs(sad(p, g) - oracle_sad(p, g)), std::abs(mse(p, g) - oracle_mse(p, g)),
                      std::abs(gradient_error(p, g) - oracle_gradient(p, g)),
                      std::abs(connectivity_error(p, g) - oracle_connectivity(p, g))});
  }
  out.check(worst <= 1e-9, "oracle mismatch");
  double asym = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const AlphaMatte p = random_matte(10, 13, 300 + s), g = random_matte(10, 13, 400 + s);
    const AlphaMatte fp = flip_horizontal(p), fg = flip_horizontal(g);
    for (auto metric : {sad, mse, gradient_error, connectivity_error}) {
      asym = std::max({asym, std::abs(metric(p, g) - metric(g, p)), std::abs(metric(fp, fg) - metric(p, g))});
    }
  }
  out.check(asym <= 1e-9, "symmetry or flip invariance");
  out.detail << "max oracle deviation " << worst << ", max symmetry/flip deviation " << asym;
}

// ---- 8 ----
double recomposition_error(const SyntheticClip& clip) {
  double worst = 0.0;
  for (const auto& s : clip.samples) {
    const Frame comp = composite(s.fgr_gt, s.bgr_gt, s.alpha_gt);
    for (std::size_t i = 0; i < comp.data().size(); ++i) worst = std::max(worst, std::abs(comp.data()[i] - s.frame.data()[i]));
  }
  return worst;
}

class EchoRefiner : public AlphaRefiner {
 public:
  CropRefinement refine_crop(const Frame& f, const Frame&, const AlphaMatte& coarse) const override {
    return {coarse, Frame(f.height(), f.width(), 0.0)};
  }
};

std::map<std::string, std::string> png_hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out[fs::relative(e.path(), dir).string()] = sha256_file(e.path());
  return out;
}

std::map<std::string, std::string> synth_to_mat(const fs::path& root) {
  PipelineConfig c;
  c.root = root;
  c.synth = {1, 12, 48, 80};
  c.bmn.train.steps = 20;
  c.bmn.train.batch_size = 4;
  c.ren.model = {24, 40, {8, 8, 16, 16}, 8};
  c.ren.train.steps = 20;
  c.ren.train.batch_size = 2;
  c.aen.model.crop.size = 32;
  c.aen.model.encoder = {8, 8, 16, 16};
  c.aen.model.decoder = {8, 8, 8, 4};
  c.aen.steps = 10;
  c.aen.batch = 1;
  c.cotrain.steps = 5;
  c.cotrain.batch = 1;
  c.matching.interval = 2;
  const fs::path clip = cmd_synth(c).front();
  for (Stage s : {Stage::bmn, Stage::ren, Stage::aen, Stage::cotrain}) cmd_train(c, s);
  const fs::path out = root / "mat";
  cmd_mat(c, clip, "", out);
  auto hashes = png_hashes(out);
  for (const auto& [k, v] : png_hashes(clip)) hashes["clip/" + k] = v;
  return hashes;
}

void compositing_geometry(const Trained& t, Outcome& out) {
  // Recomposition on every synthesized sample, in memory and as written to disk.
  double recompose = recomposition_error(read_clip_dir(t.clip_dir));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const SyntheticClip raw = synth_toy_clip(50 + s, 8, 40, 64);
    recompose = std::max({recompose, recomposition_error(raw), recomposition_error(quantize_clip(raw))});
  }
  out.check(recompose <= 1.0 / 255.0, "recomposition");

  // Box-constant mattes through crop_and_zoom then paste_back, random boxes and zoom sizes.
  double roundtrip = 0.0;
  nn::Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    AlphaMatte src(48, 64);
    for (double& v : src.data()) v = rng.uniform();
    const int top = static_cast<int>(rng.uniform(0, 30)), left = static_cast<int>(rng.uniform(0, 40));
    const CropBox box{top, left, top + 4 + static_cast<int>(rng.uniform(0, 48 - top - 4)),
                      left + 4 + static_cast<int>(rng.uniform(0, 64 - left - 4))};
    const double level = rng.uniform();
    for (int y = box.top; y < box.bottom; ++y)
      for (int x = box.left; x < box.right; ++x) src.at(y, x) = level;
    const CropTransform t{box, 8 + 8 * (trial % 8)};
    const AlphaMatte back = paste_back(crop_and_zoom(src, t), t, 48, 64);
    for (int y = box.top; y < box.bottom; ++y)
      for (int x = box.left; x < box.right; ++x) roundtrip = std::max(roundtrip, std::abs(back.at(y, x) - level));
  }
  // Echo refiner: refine reproduces the pasted coarse matte inside the box, and
  // for smooth edges stays within the same tolerance of the upscaled coarse matte.
  double echo = 0.0, smooth = 0.0;
  const Frame frame = random_frame(96, 160, 1), bg = random_frame(96, 160, 2);
  for (auto [cy, cx] : {std::pair{20.0, 30.0}, {24.0, 60.0}, {30.0, 75.0}, {10.0, 8.0}, {40.0, 76.0}}) {
    const AlphaMatte full = soft_disc(48, 80, cy, cx, 9.0, 2.0);
    const RefineOutput r = refine(EchoRefiner(), CropOptions{}, frame, bg, {full, resize_bilinear(full, 24, 40), resize_bilinear(full, 12, 20)});
    const AlphaMatte up = resize_bilinear(full, 96, 160);
    const AlphaMatte pasted = paste_back(crop_and_zoom(up, r.crop.transform), r.crop.transform, 96, 160);
    const CropBox& box = r.crop.transform.box;
    for (int y = box.top; y < box.bottom; ++y)
      for (int x = box.left; x < box.right; ++x) {
        echo = std::max(echo, std::abs(r.full_alpha.at(y, x) - pasted.at(y, x)));
        smooth = std::max(smooth, std::abs(r.full_alpha.at(y, x) - up.at(y, x)));
      }
  }
  out.check(roundtrip <= 2.0 / 255.0, "box-constant crop/paste round trip");
  out.check(echo <= 2.0 / 255.0, "echo refine vs pasted coarse");
  out.check(smooth <= 2.0 / 255.0, "echo refine vs upscaled smooth coarse");

  const auto a = synth_to_mat(work_dir("determinism_a"));
  const auto b = synth_to_mat(work_dir("determinism_b"));
  out.check(!a.empty() && a == b, "synth->mat outputs differ");
  out.detail << "recomposition " << recompose * 255.0 << "/255, box round trip " << roundtrip * 255.0
             << "/255, echo " << echo * 255.0 << "/255, smooth-edge " << smooth * 255.0 << "/255, "
             << a.size() << " PNGs " << (a == b ? "identical" : "DIFFER") << " across two runs";
}

}  // namespace

int main() {
  bool all = true;
  auto run = [&](int id, const std::string& name, const std::function<void(Outcome&)>& body) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      body(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << out.detail.str()
              << " [" << std::fixed << std::setprecision(1) << s << " s]" << std::defaultfloat << std::endl;
  };

  run(1, "gradient correctness", gradient_correctness);
  run(2, "oracle equivalence", oracle_equivalence);
  run(3, "cost model", cost_model);
  run(4, "sampling fraction", sampling_fraction);

  std::optional<Trained> trained;
  std::string train_error;
  try {
    trained = train_toy();
  } catch (const std::exception& e) {
    train_error = e.what();
  }
  auto with_training = [&](const std::function<void(const Trained&, Outcome&)>& f) {
    return [&, f](Outcome& out) {
      if (!trained) throw std::runtime_error("toy training failed: " + train_error);
      f(*trained, out);
    };
  };
  run(5, "interval trend", with_training(interval_trend));
  run(6, "overfit integration", with_training(overfit_integration));
  run(7, "metric suite", metric_suite);
  run(8, "compositing and geometry", with_training(compositing_geometry));

  fs::remove_all(fs::temp_directory_path() / ("abm_acceptance_" + std::to_string(::getpid())));
  return all ? 0 : 1;
}
