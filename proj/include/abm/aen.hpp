#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "abm/dataset.hpp"
#include "abm/imaging.hpp"
#include "abm/nn/params.hpp"
#include "abm/nn/tape.hpp"
#include "abm/ren.hpp"

namespace abm {

struct CropOptions {
  int size = 64;  // Z
  double threshold = 0.1;
  double margin = 0.1;
};

struct CropDecision {
  CropTransform transform;
  bool fallback = false;  // nothing exceeded the threshold; whole image used
};

/// Box around {coarse > threshold} after resizing `coarse` to src_h x src_w.
/// Every edge moves out by ceil(margin * S), S the larger box side; the
/// shorter side then grows to match (extra split floor/ceil, top/left
/// first), the square is shifted back inside the image, and finally
/// clamped where it is larger than the image.
CropDecision derive_crop(const AlphaMatte& coarse, double margin, int size, int src_h, int src_w,
                         double threshold = 0.1);

struct AenConfig {
  CropOptions crop;
  std::vector<int> encoder = {16, 32, 64, 128};
  std::vector<int> decoder = {32, 16, 16, 8};
};

struct AenModel {
  AenConfig config;
  nn::ParameterStore params;
};

AenModel make_aen(const AenConfig& config, std::uint64_t seed);

struct AenHeads {
  nn::Var alpha;     // [N,1,Z,Z], sigmoid
  nn::Var residual;  // [N,3,Z,Z], linear
};

/// Input [N,7,Z,Z]: frame, background, coarse alpha.
AenHeads aen_forward(const AenModel& model, nn::Tape& tape, nn::Var input);

struct CropRefinement {
  AlphaMatte alpha;
  Frame residual;
};

CropRefinement aen_forward(const AenModel& model, const Frame& crop_frame, const Frame& crop_bg,
                           const AlphaMatte& crop_coarse);

/// mean |alpha - alpha_gt| + mean |(residual + frame) a - fgr_gt a|, a = alpha_gt
/// broadcast over channels.
struct AenLoss {
  nn::Var total;
  nn::Var alpha;
  nn::Var fgr;
};
AenLoss aen_loss(nn::Tape& tape, const AenHeads& heads, const nn::Tensor& alpha_gt, const nn::Tensor& fgr_gt,
                 const nn::Tensor& frame);
double aen_loss(const CropRefinement& out, const AlphaMatte& alpha_gt, const Frame& fgr_gt, const Frame& crop_frame);

/// Anything that maps a zoomed crop to refined alpha and a foreground residual.
class AlphaRefiner {
 public:
  virtual ~AlphaRefiner() = default;
  virtual CropRefinement refine_crop(const Frame& crop_frame, const Frame& crop_bg,
                                     const AlphaMatte& crop_coarse) const = 0;
};

class AenRefiner : public AlphaRefiner {
 public:
  explicit AenRefiner(const AenModel& model) : model_(model) {}
  CropRefinement refine_crop(const Frame& crop_frame, const Frame& crop_bg,
                             const AlphaMatte& crop_coarse) const override {
    return aen_forward(model_, crop_frame, crop_bg, crop_coarse);
  }

 private:
  const AenModel& model_;
};

struct RefineOutput {
  AlphaMatte alpha;    // Z x Z
  Frame fgr_residual;  // Z x Z, signed
  AlphaMatte full_alpha;
  Frame full_fgr;
  CropDecision crop;
};

RefineOutput refine(const AlphaRefiner& refiner, const CropOptions& options, const Frame& frame,
                    const Frame& matched_bg, const CoarseAlpha& coarse);
RefineOutput refine(const AenModel& model, const Frame& frame, const Frame& matched_bg, const CoarseAlpha& coarse);

struct AenTrainConfig {
  int steps = 500;
  int batch_size = 2;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  /// Also update REN from ren_loss in the same step.
  bool cotrain = false;
  /// Background perturbation shared with REN training.
  RenTrainConfig perturb;
};

struct AenTrace {
  std::vector<double> total;
  std::vector<double> alpha;
  std::vector<double> fgr;
  std::vector<double> ren;  // filled only when co-training
};

/// Crops come from REN's coarse output on each sample. Without cotrain REN
/// runs inference only and its parameters are untouched.
AenTrace train_aen(AenModel& aen, RenModel& ren, const std::vector<SyntheticClip>& clips,
                   const AenTrainConfig& config);

nlohmann::json to_json(const AenConfig& config);
AenConfig aen_config_from_json(const nlohmann::json& j);

}  // namespace abm
