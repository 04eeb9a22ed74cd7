#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "abm/aen.hpp"
#include "abm/dataset.hpp"
#include "abm/matching.hpp"
#include "abm/ren.hpp"

namespace abm {

namespace fs = std::filesystem;

struct SynthSettings {
  int clips = 1;
  int frames = 96;
  int height = 96;
  int width = 160;
};

struct BmnSettings {
  BmnConfig model;
  BmnTrainConfig train{1500, 16, 1e-4, 0};
  int negatives = 7;
  int transform = 4;
  /// Every k-th frame (k-1, 2k-1, ...) is left out of BMN pairs; 0 keeps all.
  int holdout_every = 4;
};

struct RenSettings {
  RenConfig model;
  RenTrainConfig train{800, 4, 1e-3, 0, 0.5, 3, 0.05};
};

struct AenSettings {
  AenConfig model;
  int steps = 1000;
  int batch = 2;
  double lr = 1e-3;
};

struct CotrainSettings {
  int steps = 300;
  int batch = 2;
  double lr = 5e-4;
};

struct MatchingSettings {
  int interval = 8;
  std::string scorer = "bmn";  // or "oracle" (needs ground-truth alpha)
};

struct PathSettings {
  fs::path clips = "clips";
  fs::path checkpoints = "checkpoints";
  fs::path outputs = "outputs";
};

/// Everything a command needs. Relative paths resolve against `root`.
struct PipelineConfig {
  std::uint64_t seed = 7;
  unsigned threads = 0;
  SynthSettings synth;
  BmnSettings bmn;
  RenSettings ren;
  AenSettings aen;
  CotrainSettings cotrain;
  MatchingSettings matching;
  PathSettings paths;
  fs::path root = ".";

  fs::path clips_dir() const { return resolve(paths.clips); }
  fs::path checkpoint_dir() const { return resolve(paths.checkpoints); }
  fs::path output_dir() const { return resolve(paths.outputs); }
  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : root / p; }

  /// Full-scale constants: REN 192x320, crop 640, interval 8.
  static PipelineConfig full_scale();
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const fs::path& path);
nlohmann::json to_json(const PipelineConfig& config);
void validate(const PipelineConfig& config);

std::string sha256_file(const fs::path& path);

/// Hashes of whichever checkpoints exist, stage timings and report paths.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::map<std::string, double> timings_ms;
  std::map<std::string, std::string> checkpoints;
  std::vector<std::string> reports;
};

nlohmann::json to_json(const RunManifest& m);
/// Written to <outputs>/manifests/<command>.json.
fs::path write_manifest(const PipelineConfig& config, RunManifest manifest);

std::vector<fs::path> cmd_synth(const PipelineConfig& config);

enum class Stage { bmn, ren, aen, cotrain };
Stage parse_stage(const std::string& name);
std::string stage_name(Stage stage);

/// Training reads every clip under the clips directory and writes
/// <stage>.ckpt, <stage>-config.json and <stage>-loss.json.
nlohmann::json cmd_train(const PipelineConfig& config, Stage stage);

struct MattingModels {
  BmnModel bmn;
  RenModel ren;
  AenModel aen;
};

/// Throws DependencyError when a needed checkpoint is missing. BMN is
/// needed only by the bmn scorer.
MattingModels load_models(const PipelineConfig& config);

struct FrameResult {
  MatchResult match;
  AlphaMatte coarse;  // REN full-scale head resized to source resolution
  RefineOutput refined;
};

/// Match, estimate, refine every frame. `alpha` is used only by the oracle scorer.
std::vector<FrameResult> matte_video(const MattingModels& models, const PipelineConfig& config,
                                     const VideoSequence& frames, const VideoSequence& backgrounds,
                                     const std::vector<AlphaMatte>* alpha);

/// Input is either a clip directory (meta.json present) or a frame directory.
/// An empty `bg_dir` means the clip's captured_bg track. Writes alpha/, fgr/,
/// coarse/ and match-report.json to `out_dir`.
nlohmann::json cmd_mat(const PipelineConfig& config, const fs::path& video_dir, const fs::path& bg_dir,
                       const fs::path& out_dir);

/// `pred_dir` holds alpha PNGs directly or in an alpha/ subdirectory.
nlohmann::json cmd_eval(const PipelineConfig& config, const fs::path& pred_dir, const fs::path& clip_dir);

/// Rows (interval, bg_difference, sad, mse, gradient, connectivity), plus per-frame
/// |matched - GT| maps under <out_dir>/interval_<k>/diff/.
nlohmann::json cmd_ablate_interval(const PipelineConfig& config, const fs::path& clip_dir,
                                   const std::vector<int>& intervals, const fs::path& out_dir);

nlohmann::json cmd_bench(const PipelineConfig& config, int n_bg, const std::vector<int>& intervals);

}  // namespace abm
