#pragma once

#include <torch/torch.h>

#include <map>
#include <utility>
#include <vector>

#include "longvid/filterbank.hpp"

namespace longvid {

// Per-frame intermediate latents plus temporally pooled copies per block.
struct LatentSequence {
  torch::Tensor w;                          // [N, T, D]
  std::map<int64_t, torch::Tensor> per_block;  // block index -> [N, T_b, D]
};

struct SynthesisConfig {
  std::vector<int64_t> channels = {512, 512, 512, 512, 256,
                                   256, 128, 128, 64,  64};
  // (temporal, spatial) upsample factor per block; temporal factors must
  // multiply to temporal_divisor, spatial ones to max(out_h,out_w)/base_size.
  std::vector<std::pair<int64_t, int64_t>> scales = {
      {2, 1}, {2, 1}, {2, 1}, {2, 2}, {2, 2},
      {1, 2}, {1, 2}, {1, 1}, {1, 1}, {1, 1}};
  int64_t base_size = 4;
  int64_t temporal_divisor = 32;
  int64_t out_h = 64;
  int64_t out_w = 64;
  int64_t out_channels = 3;
  int64_t w_dim = 512;
  int64_t mapping_hidden = 512;
  int64_t mapping_layers = 2;

  void validate() const;
  int64_t block_count() const { return static_cast<int64_t>(channels.size()); }
  // Temporal length multiplier of block b's output relative to the coarsest
  // stage (cumulative product of temporal factors through block b).
  int64_t cumulative_t(int64_t block) const;
  // Pooling factor mapping full-rate latents to block b's output rate.
  int64_t style_pool_factor(int64_t block) const;
  // Spatial size of block b's output (block_count()-1 gives out_h/out_w).
  std::pair<int64_t, int64_t> block_spatial(int64_t block) const;
  int64_t temporal_kernel(int64_t block) const {
    return scales[block].first > 1 ? 3 : 1;
  }

  // Channel schedule divided by `div` (floored at 1), for desk-scale runs.
  SynthesisConfig scaled_channels(int64_t div) const;
};

// One conv3d whose input channels are scaled by a per-frame style vector,
// followed by frame-wise statistical weight demodulation and leaky ReLU.
class ModulatedConv3dImpl : public torch::nn::Module {
 public:
  ModulatedConv3dImpl(int64_t in_ch, int64_t out_ch, int64_t kt, int64_t w_dim);
  // x: [N, C, T, H, W], styles: [N, T, w_dim] at the same temporal rate.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& styles);
  int64_t temporal_kernel() const { return kt_; }

 private:
  torch::Tensor weight_;
  torch::Tensor bias_;
  torch::nn::Linear affine_{nullptr};
  int64_t kt_;
};
TORCH_MODULE(ModulatedConv3d);

class SynthesisBlockImpl : public torch::nn::Module {
 public:
  SynthesisBlockImpl(int64_t in_ch, int64_t out_ch, int64_t t_scale,
                     std::pair<int64_t, int64_t> spatial, int64_t kt,
                     int64_t w_dim);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& styles);

 private:
  ModulatedConv3d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::Conv3d skip_proj_{nullptr};
  int64_t t_scale_;
  std::pair<int64_t, int64_t> spatial_;
};
TORCH_MODULE(SynthesisBlock);

class LowresGeneratorImpl : public torch::nn::Module {
 public:
  LowresGeneratorImpl(FilterBank bank, SynthesisConfig config);

  const FilterBank& bank() const { return bank_; }
  const SynthesisConfig& config() const { return config_; }

  // Frame-wise mapping network, enriched: [N, T, N_f, C] -> [N, T, D].
  torch::Tensor map_frames(const torch::Tensor& enriched);
  LatentSequence map_latents(const EnrichedNoise& enriched);

  // latents.w: [N, T, D] with T divisible by temporal_divisor.
  // Returns [N, T, out_channels, out_h, out_w].
  torch::Tensor synthesize(const LatentSequence& latents);

  // Batched end-to-end path. noise: [N, T + 2*context, C] where frames
  // [context, context + T) are the target window. Returns [N, T, 3, H, W].
  torch::Tensor forward(const torch::Tensor& noise, int64_t target_frames);

  // Unbatched convenience over NoiseStream (spec-facing generate()).
  torch::Tensor generate(const NoiseStream& z, int64_t target_frames);

  // Pool full-rate latents to every block rate.
  LatentSequence pool_latents(const torch::Tensor& w) const;

 private:
  FilterBank bank_;
  SynthesisConfig config_;
  torch::nn::Sequential mapping_{nullptr};
  std::vector<SynthesisBlock> blocks_;
  torch::Tensor constant_;  // [C0, base_h, base_w]
  torch::nn::Conv3d to_rgb_{nullptr};
};
TORCH_MODULE(LowresGenerator);

// Interval of full-rate latent frames [lo, hi] (relative offsets from an
// output frame) that influence one output frame through the synthesis path.
std::pair<int64_t, int64_t> synthesis_latent_interval(
    const SynthesisConfig& config);

// Largest half-width, in frames, over the bank of the outermost kernel tap
// whose magnitude exceeds 1e-9 of the kernel peak. Sinc zeros can land
// exactly on the outermost designed taps, so the designed support
// overestimates what any signal can actually reach.
int64_t effective_half_support(const FilterBank& bank);

// Full temporal width (hi - lo + 1, in noise frames) influencing one output
// frame: synthesis interval widened by the filters' effective support.
int64_t analytic_receptive_field(const SynthesisConfig& config,
                                 const FilterBank& bank);

// Gradient-probed counterpart of analytic_receptive_field, evaluated on the
// given generator in float64.
int64_t measure_receptive_field(LowresGenerator& gen);

}  // namespace longvid
