#pragma once

#include <torch/torch.h>

namespace longvid {

struct AugPolicy {
  // DiffAug categories for the low-res discriminator inputs.
  bool color = true;
  bool cutout = true;
  bool translation = true;
  int64_t max_translate = 32;  // pixels; 16 for widescreen datasets

  // time-stretch exponent a ~ U(stretch_lo, stretch_hi), factor 2^a
  double stretch_lo = -1.0;
  double stretch_hi = 1.0;

  // conditioning corruption strengths
  double noise_std = 0.08;
  double scale_std = 0.08;
  double aniso_std = 0.08;
  double rotate_max = 0.016;  // fraction of a half turn
  double xfrac_std = 0.016;
  double per_transform_prob = 0.5;
};

// Parameters of one sampled DiffAug transform, fixed for a whole clip.
struct DiffAugParams {
  double brightness = 0.0;
  double saturation = 1.0;
  double contrast = 1.0;
  int64_t shift_x = 0;
  int64_t shift_y = 0;
  int64_t cut_x = -1;  // top-left of the cutout square, -1 = none
  int64_t cut_y = -1;
  int64_t cut_size = 0;
};

DiffAugParams sample_diffaug(const AugPolicy& policy, int64_t h, int64_t w,
                             torch::Generator& gen);

// Applies one transform per enabled category, the same one for each frame.
// video: [T, C, H, W]. Differentiable with respect to the input.
torch::Tensor apply_diffaug(const torch::Tensor& video,
                            const DiffAugParams& params);

torch::Tensor diffaug_clip(const torch::Tensor& video, const AugPolicy& policy,
                           torch::Generator& gen);

// Per-clip DiffAug over a batch [N, T, C, H, W] (fresh draw per clip).
torch::Tensor diffaug_batch(const torch::Tensor& videos,
                            const AugPolicy& policy, torch::Generator& gen);

// Fractional time stretching: resample the time axis by 2^a, a ~ U(lo, hi),
// then random-crop or randomly zero-pad back to the original frame count.
torch::Tensor time_stretch(const torch::Tensor& video, const AugPolicy& policy,
                           torch::Generator& gen);

// Deterministic core of time_stretch, exposed for the index-arithmetic
// tests: stretch by `factor`, using `offset` as the crop start (factor > 1)
// or the leading pad (factor < 1).
torch::Tensor time_stretch_with(const torch::Tensor& video, double factor,
                                int64_t offset);

// Corruption of real low-res conditioning during super-res training: noise,
// iso/aniso scaling, rotation and fractional translation, each applied with
// probability 0.5 and with identical parameters for every frame.
// video: [T, C, H, W].
torch::Tensor corrupt_conditioning(const torch::Tensor& video,
                                   const AugPolicy& policy,
                                   torch::Generator& gen);

// Adaptive augmentation probability: integral controller on the sign rate
// of discriminator outputs for real inputs.
class AdaController {
 public:
  AdaController(double gain = 0.01, double target = 0.6, double p_max = 0.85)
      : gain_(gain), target_(target), p_max_(p_max) {}

  double update(double real_sign_rate) {
    p_ = std::clamp(p_ + gain_ * (real_sign_rate - target_), 0.0, p_max_);
    return p_;
  }
  double probability() const { return p_; }

 private:
  double gain_;
  double target_;
  double p_max_;
  double p_ = 0.0;
};

// ADA-style paired augmentation for super-res training: each enabled
// transform fires with probability p and is applied with consistent
// parameters to the low and high resolution segments.
// low: [N, 4, 3, h, w], high: [N, 4, 3, H, W] with H = factor * h.
std::pair<torch::Tensor, torch::Tensor> ada_augment_pair(
    const torch::Tensor& low, const torch::Tensor& high, double p,
    torch::Generator& gen);

}  // namespace longvid
