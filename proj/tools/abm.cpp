// Command-line front end for the matting pipeline.
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "abm/errors.hpp"
#include "abm/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string root = ".";
  std::optional<unsigned> threads;
  std::optional<int> interval;
  std::string scorer;
};

abm::PipelineConfig make_config(const Common& c) {
  abm::PipelineConfig cfg = c.config.empty() ? abm::PipelineConfig{} : abm::load_config(c.config);
  cfg.root = c.root;
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (c.interval) cfg.matching.interval = *c.interval;
  if (!c.scorer.empty()) cfg.matching.scorer = c.scorer;
  abm::validate(cfg);
  return cfg;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--seed", c.seed, "Override the config seed");
  app->add_option("--out", c.root, "Root for relative config paths")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads (0 = hardware)");
  app->add_option("--interval", c.interval, "Background sampling interval");
  app->add_option("--scorer", c.scorer, "bmn or oracle");
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Background-matching video matting pipeline"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth", "Generate synthetic clips");
  add_common(synth, common);

  std::string stage;
  auto* train = app.add_subcommand("train", "Train one stage");
  add_common(train, common);
  train->add_option("--stage", stage, "bmn, ren, aen or cotrain")->required();

  std::string video, bg, dest = "outputs/mat", pred, clip;
  auto* mat = app.add_subcommand("mat", "Matte a clip or frame directory");
  add_common(mat, common);
  mat->add_option("--video", video, "Clip directory or frame directory")->required();
  mat->add_option("--bg", bg, "Background frame directory (default: the clip's captured track)");
  mat->add_option("--dest", dest, "Output directory")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Score predicted alpha against a clip");
  add_common(eval, common);
  eval->add_option("--pred", pred, "Directory of predicted alpha PNGs")->required();
  eval->add_option("--clip", clip, "Clip directory with ground truth")->required();

  std::vector<int> intervals = {1, 2, 4, 8, 16, 32, 64};
  auto* ablate = app.add_subcommand("ablate-interval", "Sweep the background sampling interval");
  add_common(ablate, common);
  ablate->add_option("--clip", clip, "Clip directory")->required();
  ablate->add_option("--intervals", intervals, "Intervals to test")->delimiter(',')->capture_default_str();
  ablate->add_option("--dest", dest, "Output directory")->capture_default_str();

  int n_bg = 344;
  std::vector<int> bench_intervals = {1, 8};
  auto* bench = app.add_subcommand("bench", "Time matching and matting");
  add_common(bench, common);
  bench->add_option("--n-bg", n_bg, "Background track length")->capture_default_str();
  bench->add_option("--intervals", bench_intervals, "Intervals to time")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const abm::PipelineConfig cfg = make_config(common);
    if (synth->parsed()) {
      for (const auto& d : abm::cmd_synth(cfg)) std::cout << d.string() << '\n';
    } else if (train->parsed()) {
      print(abm::cmd_train(cfg, abm::parse_stage(stage)));
    } else if (mat->parsed()) {
      const nlohmann::json r = abm::cmd_mat(cfg, video, bg, cfg.resolve(dest));
      std::cout << "matted " << r["n_frames"] << " frames into " << r["out_dir"].get<std::string>() << '\n';
    } else if (eval->parsed()) {
      nlohmann::json r = abm::cmd_eval(cfg, pred, clip);
      r.erase("per_frame");
      print(r);
    } else if (ablate->parsed()) {
      print(abm::cmd_ablate_interval(cfg, clip, intervals, cfg.resolve(dest))["rows"]);
    } else if (bench->parsed()) {
      print(abm::cmd_bench(cfg, n_bg, bench_intervals));
    }
  } catch (const abm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const abm::DependencyError& e) {
    std::cerr << "missing dependency: " << e.what() << '\n';
    return 3;
  } catch (const abm::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 4;
  } catch (const abm::GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << '\n';
    return 4;
  } catch (const abm::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
