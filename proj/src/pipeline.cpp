#include "abm/pipeline.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "abm/image_io.hpp"
#include "abm/metrics.hpp"
#include "abm/parallel.hpp"

namespace abm {

using Json = nlohmann::json;

namespace {

// ---- config parsing ----

using Setters = std::map<std::string, std::function<void(const Json&)>>;

template <class T>
std::function<void(const Json&)> field(T& target, std::string key) {
  return [&target, key = std::move(key)](const Json& v) {
    try {
      target = v.get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  };
}

std::function<void(const Json&)> path_field(fs::path& target, std::string key) {
  return [&target, key = std::move(key)](const Json& v) {
    if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
    target = v.get<std::string>();
  };
}

void read_section(const Json& j, const std::string& section, const Setters& setters) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key: " + (section.empty() ? key : section + "." + key));
    it->second(value);
  }
}

std::function<void(const Json&)> section(const std::string& name, Setters setters) {
  return [name, setters = std::move(setters)](const Json& v) { read_section(v, name, setters); };
}

Json bmn_config_json(const BmnConfig& c) {
  return {{"height", c.height},
          {"width", c.width},
          {"channels", c.channels},
          {"hidden", c.hidden},
          {"difference_filters", c.difference_filters},
          {"output_bias", c.output_bias}};
}

Setters bmn_model_setters(BmnConfig& c, const std::string& prefix) {
  return {{"height", field(c.height, prefix + "height")},
          {"width", field(c.width, prefix + "width")},
          {"channels", field(c.channels, prefix + "channels")},
          {"hidden", field(c.hidden, prefix + "hidden")},
          {"difference_filters", field(c.difference_filters, prefix + "difference_filters")},
          {"output_bias", field(c.output_bias, prefix + "output_bias")}};
}

// ---- checkpoints ----

fs::path ckpt_path(const PipelineConfig& c, const std::string& stage) { return c.checkpoint_dir() / (stage + ".ckpt"); }
fs::path model_config_path(const PipelineConfig& c, const std::string& stage) {
  return c.checkpoint_dir() / (stage + "-config.json");
}

void write_json(const fs::path& path, const Json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_model(const PipelineConfig& c, const std::string& stage, const nn::ParameterStore& params, Json config,
                std::uint64_t seed) {
  fs::create_directories(c.checkpoint_dir());
  nn::save_checkpoint(ckpt_path(c, stage), params);
  config["seed"] = seed;
  write_json(model_config_path(c, stage), config);
}

// Returns the stored config (seed removed); throws DependencyError when absent.
Json require_model(const PipelineConfig& c, const std::string& stage) {
  if (!fs::exists(ckpt_path(c, stage)) || !fs::exists(model_config_path(c, stage))) {
    throw DependencyError("missing " + stage + " checkpoint in " + c.checkpoint_dir().string() +
                          "; run `train --stage " + stage + "` first");
  }
  Json j = read_json(model_config_path(c, stage));
  j.erase("seed");
  return j;
}

void load_params(const PipelineConfig& c, const std::string& stage, nn::ParameterStore& params) {
  nn::ParameterStore loaded = nn::load_checkpoint(ckpt_path(c, stage));
  if (loaded.names() != params.names()) throw InputError(stage + " checkpoint does not match its config");
  for (const auto& name : params.names()) {
    if (loaded.get(name).shape() != params.get(name).shape()) {
      throw InputError(stage + " checkpoint tensor " + name + " has the wrong shape");
    }
  }
  params = std::move(loaded);
}

BmnModel load_bmn(const PipelineConfig& c) {
  BmnConfig config;
  read_section(require_model(c, "bmn"), "bmn-config", bmn_model_setters(config, ""));
  BmnModel m = make_bmn(config, 0);
  load_params(c, "bmn", m.params);
  return m;
}

RenModel load_ren(const PipelineConfig& c) {
  RenModel m = make_ren(ren_config_from_json(require_model(c, "ren")), 0);
  load_params(c, "ren", m.params);
  return m;
}

AenModel load_aen(const PipelineConfig& c) {
  AenModel m = make_aen(aen_config_from_json(require_model(c, "aen")), 0);
  load_params(c, "aen", m.params);
  return m;
}

std::vector<SyntheticClip> load_clips(const PipelineConfig& c) {
  const fs::path dir = c.clips_dir();
  if (!fs::is_directory(dir)) throw InputError("clips directory " + dir.string() + " does not exist; run `synth`");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw InputError("no clip directories under " + dir.string());
  std::vector<SyntheticClip> clips;
  for (const auto& d : dirs) clips.push_back(read_clip_dir(d));
  return clips;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

Json trace_json(const std::vector<double>& v) { return Json(v); }

void reset_dir(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
}

// Writes alpha/, fgr/, coarse/ and match-report.json; returns the report.
Json write_matting(const fs::path& out_dir, const std::vector<FrameResult>& results, const PipelineConfig& config) {
  for (const char* sub : {"alpha", "fgr", "coarse"}) reset_dir(out_dir / sub);
  Json frames = Json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const FrameResult& r = results[i];
    write_png(out_dir / "alpha" / frame_filename(i), r.refined.full_alpha);
    write_png(out_dir / "fgr" / frame_filename(i), r.refined.full_fgr);
    write_png(out_dir / "coarse" / frame_filename(i), r.coarse);
    const CropBox& b = r.refined.crop.transform.box;
    frames.push_back({{"frame_index", i},
                      {"matched_index", r.match.best_index},
                      {"score", r.match.score},
                      {"candidates_evaluated", r.match.candidates_evaluated},
                      {"crop", {b.top, b.left, b.bottom, b.right}},
                      {"crop_fallback", r.refined.crop.fallback}});
  }
  Json report = {{"interval", config.matching.interval},
                 {"scorer", config.matching.scorer},
                 {"n_frames", results.size()},
                 {"frames", frames}};
  write_json(out_dir / "match-report.json", report);
  return report;
}

std::vector<AlphaMatte> clip_alpha(const SyntheticClip& clip) {
  std::vector<AlphaMatte> a;
  for (const auto& s : clip.samples) a.push_back(s.alpha_gt);
  return a;
}

}  // namespace

PipelineConfig PipelineConfig::full_scale() {
  PipelineConfig c;
  c.bmn.model.height = 192;
  c.bmn.model.width = 320;
  c.ren.model.height = 192;
  c.ren.model.width = 320;
  c.aen.model.crop.size = 640;
  c.matching.interval = 8;
  return c;
}

PipelineConfig parse_config(const Json& j) {
  PipelineConfig c;
  RenConfig& rm = c.ren.model;
  RenTrainConfig& rt = c.ren.train;
  AenConfig& am = c.aen.model;
  Setters bmn = bmn_model_setters(c.bmn.model, "bmn.");
  bmn.insert({{"steps", field(c.bmn.train.steps, "bmn.steps")},
              {"batch", field(c.bmn.train.batch_size, "bmn.batch")},
              {"lr", field(c.bmn.train.lr, "bmn.lr")},
              {"negatives", field(c.bmn.negatives, "bmn.negatives")},
              {"transform", field(c.bmn.transform, "bmn.transform")},
              {"holdout_every", field(c.bmn.holdout_every, "bmn.holdout_every")}});
  const Setters top = {
      {"seed", field(c.seed, "seed")},
      {"threads", field(c.threads, "threads")},
      {"synth", section("synth", {{"clips", field(c.synth.clips, "synth.clips")},
                                  {"frames", field(c.synth.frames, "synth.frames")},
                                  {"height", field(c.synth.height, "synth.height")},
                                  {"width", field(c.synth.width, "synth.width")}})},
      {"bmn", section("bmn", bmn)},
      {"ren", section("ren", {{"height", field(rm.height, "ren.height")},
                              {"width", field(rm.width, "ren.width")},
                              {"channels", field(rm.channels, "ren.channels")},
                              {"lateral", field(rm.lateral, "ren.lateral")},
                              {"steps", field(rt.steps, "ren.steps")},
                              {"batch", field(rt.batch_size, "ren.batch")},
                              {"lr", field(rt.lr, "ren.lr")},
                              {"perturb_prob", field(rt.perturb_prob, "ren.perturb_prob")},
                              {"max_shift", field(rt.max_shift, "ren.max_shift")},
                              {"max_brightness", field(rt.max_brightness, "ren.max_brightness")}})},
      {"aen", section("aen", {{"size", field(am.crop.size, "aen.size")},
                              {"threshold", field(am.crop.threshold, "aen.threshold")},
                              {"margin", field(am.crop.margin, "aen.margin")},
                              {"encoder", field(am.encoder, "aen.encoder")},
                              {"decoder", field(am.decoder, "aen.decoder")},
                              {"steps", field(c.aen.steps, "aen.steps")},
                              {"batch", field(c.aen.batch, "aen.batch")},
                              {"lr", field(c.aen.lr, "aen.lr")}})},
      {"cotrain", section("cotrain", {{"steps", field(c.cotrain.steps, "cotrain.steps")},
                                      {"batch", field(c.cotrain.batch, "cotrain.batch")},
                                      {"lr", field(c.cotrain.lr, "cotrain.lr")}})},
      {"matching", section("matching", {{"interval", field(c.matching.interval, "matching.interval")},
                                        {"scorer", field(c.matching.scorer, "matching.scorer")}})},
      {"paths", section("paths", {{"clips", path_field(c.paths.clips, "paths.clips")},
                                  {"checkpoints", path_field(c.paths.checkpoints, "paths.checkpoints")},
                                  {"outputs", path_field(c.paths.outputs, "paths.outputs")}})},
  };
  read_section(j, "", top);
  validate(c);
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file " + path.string() + " not found");
  return parse_config(read_json(path));
}

Json to_json(const PipelineConfig& c) {
  Json bmn = bmn_config_json(c.bmn.model);
  bmn.update({{"steps", c.bmn.train.steps},
              {"batch", c.bmn.train.batch_size},
              {"lr", c.bmn.train.lr},
              {"negatives", c.bmn.negatives},
              {"transform", c.bmn.transform},
              {"holdout_every", c.bmn.holdout_every}});
  Json ren = to_json(c.ren.model);
  ren.update({{"steps", c.ren.train.steps},
              {"batch", c.ren.train.batch_size},
              {"lr", c.ren.train.lr},
              {"perturb_prob", c.ren.train.perturb_prob},
              {"max_shift", c.ren.train.max_shift},
              {"max_brightness", c.ren.train.max_brightness}});
  Json aen = to_json(c.aen.model);
  aen.update({{"steps", c.aen.steps}, {"batch", c.aen.batch}, {"lr", c.aen.lr}});
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"synth", {{"clips", c.synth.clips}, {"frames", c.synth.frames}, {"height", c.synth.height}, {"width", c.synth.width}}},
          {"bmn", bmn},
          {"ren", ren},
          {"aen", aen},
          {"cotrain", {{"steps", c.cotrain.steps}, {"batch", c.cotrain.batch}, {"lr", c.cotrain.lr}}},
          {"matching", {{"interval", c.matching.interval}, {"scorer", c.matching.scorer}}},
          {"paths", {{"clips", c.paths.clips.string()},
                     {"checkpoints", c.paths.checkpoints.string()},
                     {"outputs", c.paths.outputs.string()}}}};
}

void validate(const PipelineConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(c.synth.clips >= 1 && c.synth.frames >= 1, "synth.clips and synth.frames must be >= 1");
  require(c.synth.height >= 8 && c.synth.width >= 8, "synth size must be at least 8x8");
  require(c.bmn.model.height >= 1 && c.bmn.model.width >= 1, "bmn resolution must be positive");
  require(c.ren.model.height % 8 == 0 && c.ren.model.width % 8 == 0 && c.ren.model.height > 0 && c.ren.model.width > 0,
          "ren.height and ren.width must be positive multiples of 8");
  auto positive = [](const std::vector<int>& v, std::size_t n) {
    return (n == 0 ? !v.empty() : v.size() == n) && std::all_of(v.begin(), v.end(), [](int x) { return x > 0; });
  };
  require(positive(c.bmn.model.channels, 0) && c.bmn.model.hidden > 0, "bmn.channels and bmn.hidden must be positive");
  require(positive(c.ren.model.channels, 4) && c.ren.model.lateral > 0, "ren needs four positive channels and lateral > 0");
  require(positive(c.aen.model.encoder, 4) && positive(c.aen.model.decoder, 4),
          "aen.encoder and aen.decoder need four positive widths");
  require(c.aen.model.crop.size >= 8, "aen.size must be >= 8");
  require(c.aen.model.crop.margin >= 0.0, "aen.margin must be >= 0");
  require(c.aen.model.crop.threshold >= 0.0 && c.aen.model.crop.threshold < 1.0, "aen.threshold must be in [0, 1)");
  require(c.matching.interval >= 1, "matching.interval must be >= 1");
  require(c.matching.scorer == "bmn" || c.matching.scorer == "oracle", "matching.scorer must be bmn or oracle");
  require(c.bmn.train.steps >= 0 && c.ren.train.steps >= 0 && c.aen.steps >= 0 && c.cotrain.steps >= 0,
          "steps must be >= 0");
  require(c.bmn.train.batch_size >= 1 && c.ren.train.batch_size >= 1 && c.aen.batch >= 1 && c.cotrain.batch >= 1,
          "batch sizes must be >= 1");
  require(c.bmn.train.lr >= 0 && c.ren.train.lr >= 0 && c.aen.lr >= 0 && c.cotrain.lr >= 0, "lr must be >= 0");
  require(c.bmn.negatives >= 0 && c.bmn.transform >= 0 && c.bmn.holdout_every >= 0, "bmn pair options must be >= 0");
  require(c.ren.train.perturb_prob >= 0 && c.ren.train.perturb_prob <= 1, "ren.perturb_prob must be in [0, 1]");
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot hash " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

Json to_json(const RunManifest& m) {
  return {{"command", m.command},
          {"config", m.config},
          {"timings_ms", m.timings_ms},
          {"checkpoints", m.checkpoints},
          {"reports", m.reports}};
}

fs::path write_manifest(const PipelineConfig& config, RunManifest manifest) {
  manifest.config = to_json(config);
  for (const char* stage : {"bmn", "ren", "aen"}) {
    const fs::path p = ckpt_path(config, stage);
    if (fs::exists(p)) manifest.checkpoints[stage] = sha256_file(p);
  }
  const fs::path path = config.output_dir() / "manifests" / (manifest.command + ".json");
  write_json(path, to_json(manifest));
  return path;
}

std::vector<fs::path> cmd_synth(const PipelineConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const SynthSettings& s = config.synth;
  std::vector<fs::path> dirs;
  RunManifest manifest{"synth", {}, {}, {}, {}};
  for (int i = 0; i < s.clips; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%03d", i);
    const fs::path dir = config.clips_dir() / name;
    fs::remove_all(dir);
    write_clip_dir(dir, quantize_clip(synth_toy_clip(config.seed + static_cast<std::uint64_t>(i), s.frames, s.height, s.width)));
    dirs.push_back(dir);
    manifest.reports.push_back((dir / "meta.json").string());
  }
  manifest.timings_ms["synth"] = elapsed_ms(start);
  write_manifest(config, manifest);
  return dirs;
}

Stage parse_stage(const std::string& name) {
  if (name == "bmn") return Stage::bmn;
  if (name == "ren") return Stage::ren;
  if (name == "aen") return Stage::aen;
  if (name == "cotrain") return Stage::cotrain;
  throw ConfigError("unknown training stage: " + name);
}

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::bmn: return "bmn";
    case Stage::ren: return "ren";
    case Stage::aen: return "aen";
    case Stage::cotrain: return "cotrain";
  }
  return "";
}

Json cmd_train(const PipelineConfig& config, Stage stage) {
  validate(config);
  const std::string name = stage_name(stage);
  // Check prerequisites before touching any data.
  if (stage == Stage::aen) require_model(config, "ren");
  if (stage == Stage::cotrain) {
    require_model(config, "ren");
    require_model(config, "aen");
  }
  const auto clips = load_clips(config);
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = config.seed;
  Json loss;
  Json report = {{"stage", name}};

  switch (stage) {
    case Stage::bmn: {
      std::vector<BmnPair> pairs;
      for (std::size_t c = 0; c < clips.size(); ++c) {
        BmnPairOptions opt;
        opt.n_negatives = config.bmn.negatives;
        opt.transform_magnitude = config.bmn.transform;
        opt.seed = seed + 11 + c;
        opt.out_height = config.bmn.model.height;
        opt.out_width = config.bmn.model.width;
        const int k = config.bmn.holdout_every;
        for (std::size_t i = 0; i < clips[c].size(); ++i)
          if (k <= 1 || static_cast<int>(i % k) != k - 1) opt.frame_indices.push_back(i);
        auto p = make_bmn_pairs(clips[c], opt);
        pairs.insert(pairs.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
      }
      BmnModel model = make_bmn(config.bmn.model, seed + 1);
      BmnTrainConfig t = config.bmn.train;
      t.seed = seed + 2;
      const auto trace = train_bmn(model, pairs, t);
      save_model(config, "bmn", model.params, bmn_config_json(model.config), seed + 1);
      loss = trace_json(trace);
      report["pairs"] = pairs.size();
      report["final_loss"] = trace.empty() ? 0.0 : trace.back();
      break;
    }
    case Stage::ren: {
      RenModel model = make_ren(config.ren.model, seed + 3);
      RenTrainConfig t = config.ren.train;
      t.seed = seed + 4;
      const auto trace = train_ren(model, clips, t);
      save_model(config, "ren", model.params, to_json(model.config), seed + 3);
      loss = trace_json(trace);
      report["final_loss"] = trace.empty() ? 0.0 : trace.back();
      break;
    }
    case Stage::aen:
    case Stage::cotrain: {
      const bool joint = stage == Stage::cotrain;
      RenModel ren = load_ren(config);
      AenModel aen = joint ? load_aen(config) : make_aen(config.aen.model, seed + 5);
      AenTrainConfig t;
      t.steps = joint ? config.cotrain.steps : config.aen.steps;
      t.batch_size = joint ? config.cotrain.batch : config.aen.batch;
      t.lr = joint ? config.cotrain.lr : config.aen.lr;
      t.seed = seed + (joint ? 7 : 6);
      t.cotrain = joint;
      t.perturb = config.ren.train;
      const AenTrace trace = train_aen(aen, ren, clips, t);
      save_model(config, "aen", aen.params, to_json(aen.config), seed + 5);
      if (joint) save_model(config, "ren", ren.params, to_json(ren.config), seed + 3);
      loss = {{"total", trace.total}, {"alpha", trace.alpha}, {"fgr", trace.fgr}};
      if (joint) loss["ren"] = trace.ren;
      report["final_loss"] = trace.total.empty() ? 0.0 : trace.total.back();
      report["final_alpha_loss"] = trace.alpha.empty() ? 0.0 : trace.alpha.back();
      break;
    }
  }
  const fs::path loss_path = config.checkpoint_dir() / (name + "-loss.json");
  write_json(loss_path, loss);
  const double ms = elapsed_ms(start);
  report["steps"] = loss.is_array() ? loss.size() : loss["total"].size();
  report["loss_path"] = loss_path.string();
  report["seconds"] = ms / 1000.0;
  RunManifest manifest{"train-" + name, {}, {{name, ms}}, {}, {loss_path.string()}};
  write_manifest(config, manifest);
  return report;
}

MattingModels load_models(const PipelineConfig& config) {
  MattingModels m{config.matching.scorer == "bmn" ? load_bmn(config) : make_bmn(config.bmn.model, 0), load_ren(config),
                  load_aen(config)};
  return m;
}

std::vector<FrameResult> matte_video(const MattingModels& models, const PipelineConfig& config,
                                     const VideoSequence& frames, const VideoSequence& backgrounds,
                                     const std::vector<AlphaMatte>* alpha) {
  if (backgrounds.empty()) throw InputError("matting: empty background video");
  if (frames.empty()) throw InputError("matting: no input frames");
  const bool oracle = config.matching.scorer == "oracle";
  if (oracle && (!alpha || alpha->size() != frames.size())) {
    throw ConfigError("the oracle scorer needs ground-truth alpha; pass a clip directory");
  }
  const int h = frames.height(), w = frames.width();
  VideoSequence resized;
  const VideoSequence* bg = &backgrounds;
  if (backgrounds.height() != h || backgrounds.width() != w) {
    for (const auto& f : backgrounds.frames()) resized.push_back(resize_bilinear(f, h, w));
    bg = &resized;
  }
  std::shared_ptr<const BackgroundIndex> index;
  if (!oracle) index = std::make_shared<BackgroundIndex>(*bg, models.bmn.config.height, models.bmn.config.width);
  const BmnScorer bmn_scorer(models.bmn, index);

  std::vector<FrameResult> out(frames.size());
  parallel_for(frames.size(), config.threads, [&](std::size_t i) {
    const MatchResult m = oracle ? find_best_background(OracleScorer((*alpha)[i]), frames[i], *bg, config.matching.interval)
                                 : find_best_background(bmn_scorer, frames[i], *bg, config.matching.interval);
    const Frame& matched = (*bg)[m.best_index];
    const CoarseAlpha coarse = ren_estimate(models.ren, frames[i], matched);
    out[i] = {m, resize_bilinear(coarse.full, h, w), refine(models.aen, frames[i], matched, coarse)};
  });
  return out;
}

Json cmd_mat(const PipelineConfig& config, const fs::path& video_dir, const fs::path& bg_dir, const fs::path& out_dir) {
  validate(config);
  const MattingModels models = load_models(config);
  VideoSequence frames, backgrounds;
  std::vector<AlphaMatte> alpha;
  if (fs::exists(video_dir / "meta.json")) {
    const SyntheticClip clip = read_clip_dir(video_dir);
    frames = clip.frames();
    alpha = clip_alpha(clip);
    backgrounds = clip.captured_background;
  } else {
    frames = read_video_dir(video_dir);
    if (bg_dir.empty()) throw InputError("mat: a background directory is required for plain frame directories");
  }
  if (!bg_dir.empty()) backgrounds = read_video_dir(bg_dir);

  const auto start = std::chrono::steady_clock::now();
  const auto results = matte_video(models, config, frames, backgrounds, alpha.empty() ? nullptr : &alpha);
  const double mat_ms = elapsed_ms(start);
  const auto write_start = std::chrono::steady_clock::now();
  Json report = write_matting(out_dir, results, config);
  RunManifest manifest{"mat", {}, {{"matting", mat_ms}, {"write", elapsed_ms(write_start)}}, {},
                       {(out_dir / "match-report.json").string()}};
  write_manifest(config, manifest);
  report["out_dir"] = out_dir.string();
  return report;
}

Json cmd_eval(const PipelineConfig& config, const fs::path& pred_dir, const fs::path& clip_dir) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path alpha_dir = fs::is_directory(pred_dir / "alpha") ? pred_dir / "alpha" : pred_dir;
  const auto pred = read_matte_dir(alpha_dir);
  const SyntheticClip clip = read_clip_dir(clip_dir);
  Json report = to_json(evaluate_clip(pred, clip, config.threads));
  report["pred_dir"] = alpha_dir.string();
  report["clip_dir"] = clip_dir.string();
  const fs::path path = config.output_dir() / "eval-report.json";
  write_json(path, report);
  write_manifest(config, {"eval", {}, {{"eval", elapsed_ms(start)}}, {}, {path.string()}});
  return report;
}

Json cmd_ablate_interval(const PipelineConfig& config, const fs::path& clip_dir, const std::vector<int>& intervals,
                         const fs::path& out_dir) {
  validate(config);
  if (intervals.empty()) throw InputError("ablate-interval: no intervals given");
  for (int k : intervals)
    if (k < 1) throw InputError("ablate-interval: intervals must be >= 1");
  const MattingModels models = load_models(config);
  const SyntheticClip clip = read_clip_dir(clip_dir);
  const auto alpha = clip_alpha(clip);
  const VideoSequence frames = clip.frames();

  RunManifest manifest{"ablate-interval", {}, {}, {}, {}};
  Json rows = Json::array();
  for (int k : intervals) {
    PipelineConfig run = config;
    run.matching.interval = k;
    const auto start = std::chrono::steady_clock::now();
    const auto results = matte_video(models, run, frames, clip.captured_background, &alpha);
    manifest.timings_ms["interval_" + std::to_string(k)] = elapsed_ms(start);

    const fs::path dir = out_dir / ("interval_" + std::to_string(k));
    write_matting(dir, results, run);
    reset_dir(dir / "diff");
    std::vector<AlphaMatte> pred, coarse;
    double bg_diff = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const Frame& matched = clip.captured_background[results[i].match.best_index];
      const Frame& gt = clip.samples[i].bgr_gt;
      bg_diff += bg_difference(matched, gt);
      write_png(dir / "diff" / frame_filename(i), abs_difference_map(matched, gt));
      // Score what cmd_mat writes: 8-bit PNG values.
      pred.push_back(quantize_u8(results[i].refined.full_alpha));
      coarse.push_back(quantize_u8(results[i].coarse));
    }
    const MetricsReport m = evaluate_mattes(pred, alpha, config.threads);
    const MetricsReport mc = evaluate_mattes(coarse, alpha, config.threads);
    write_json(dir / "eval-report.json", to_json(m));
    rows.push_back({{"interval", k},
                    {"bg_difference", bg_diff / static_cast<double>(results.size())},
                    {"sad", m.sad},
                    {"mse", m.mse},
                    {"gradient", m.gradient},
                    {"connectivity", m.connectivity},
                    {"coarse_sad", mc.sad},
                    {"candidates_per_frame", results.front().match.candidates_evaluated}});
  }
  Json report = {{"clip_dir", clip_dir.string()}, {"scorer", config.matching.scorer}, {"rows", rows}};
  const fs::path path = out_dir / "ablation-report.json";
  write_json(path, report);
  manifest.reports.push_back(path.string());
  write_manifest(config, manifest);
  return report;
}

Json cmd_bench(const PipelineConfig& config, int n_bg, const std::vector<int>& intervals) {
  validate(config);
  if (n_bg < 1) throw InputError("bench: n_bg must be >= 1");
  if (intervals.empty()) throw InputError("bench: no intervals given");
  for (int k : intervals)
    if (k < 1) throw InputError("bench: intervals must be >= 1");

  bool trained = true;
  MattingModels models;
  try {
    models = load_models(config);
  } catch (const DependencyError&) {
    trained = false;  // timing does not depend on the weights
    models = {make_bmn(config.bmn.model, config.seed), make_ren(config.ren.model, config.seed),
              make_aen(config.aen.model, config.seed)};
  }
  const SyntheticClip clip = synth_toy_clip(config.seed, n_bg, config.synth.height, config.synth.width);
  const VideoSequence bg = clip.background_track();
  const Frame& query = clip.samples.front().frame;
  auto best_of = [](int repeats, const std::function<void()>& f) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      f();
      best = std::min(best, elapsed_ms(start));
    }
    return best;
  };

  const auto index_start = std::chrono::steady_clock::now();
  const auto index = std::make_shared<BackgroundIndex>(bg, models.bmn.config.height, models.bmn.config.width);
  const double index_ms = elapsed_ms(index_start);
  const BmnScorer scorer(models.bmn, index);
  const double mat_ms = best_of(3, [&] {
    const CoarseAlpha c = ren_estimate(models.ren, query, bg[0]);
    refine(models.aen, query, bg[0], c);
  });

  Json rows = Json::array();
  std::map<int, double> match_ms;
  for (int k : intervals) {
    std::size_t evaluated = 0;
    const double ms = best_of(3, [&] { evaluated = find_best_background(scorer, query, bg, k).candidates_evaluated; });
    match_ms[k] = ms;
    const std::size_t expected = (static_cast<std::size_t>(n_bg) + k - 1) / k;
    const double per_candidate = ms / static_cast<double>(evaluated);
    rows.push_back({{"interval", k},
                    {"candidates", evaluated},
                    {"candidates_expected", expected},
                    {"candidates_ok", evaluated == expected},
                    {"fraction", static_cast<double>(evaluated) / n_bg},
                    {"match_ms", ms},
                    {"per_candidate_ms", per_candidate},
                    {"mat_ms", mat_ms},
                    {"measured_total_ms", ms + mat_ms},
                    {"estimate_ms", estimate_inference_cost(n_bg, k, per_candidate, mat_ms)}});
  }
  Json report = {{"n_bg", n_bg},
                 {"trained_weights", trained},
                 {"index_ms", index_ms},
                 {"rows", rows},
                 {"reference_estimate",
                  {{"n_bg", 344}, {"interval", 8}, {"t_match_ms", 2.83}, {"t_mat_ms", 34.8},
                   {"estimate_ms", estimate_inference_cost(344, 8, 2.83, 34.8)}}}};
  if (match_ms.count(1) && match_ms.count(8)) report["match_ratio_8_to_1"] = match_ms[8] / match_ms[1];
  const fs::path path = config.output_dir() / "bench-report.json";
  write_json(path, report);
  write_manifest(config, {"bench", {}, {{"index", index_ms}, {"mat", mat_ms}}, {}, {path.string()}});
  return report;
}

}  // namespace abm
