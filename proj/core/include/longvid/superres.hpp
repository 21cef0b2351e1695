#pragma once

#include <torch/torch.h>

#include <vector>

namespace longvid {

// 9 consecutive low-res frames, target frame centered, edge-replicated at
// clip boundaries.
struct ConditioningStack {
  torch::Tensor frames;  // [9, 3, h, w]

  static constexpr int64_t kFrames = 9;
  static constexpr int64_t kReach = 4;
};

struct SRConfig {
  int64_t low_h = 64;
  int64_t low_w = 64;
  int64_t factor = 4;
  int64_t latent_dim = 512;
  int64_t w_dim = 512;
  double dropout_p = 0.9;
  // Feature widths for the synthesis stages at 0.5x, 1x, 2x and 4x of the
  // low resolution; the conditioning stack is resized to every stage.
  std::vector<int64_t> stage_channels = {256, 128, 64, 32};
  int64_t disc_base_channels = 64;
  int64_t disc_max_channels = 512;
  int64_t disc_hidden = 512;

  int64_t high_h() const { return low_h * factor; }
  int64_t high_w() const { return low_w * factor; }
  void validate() const;
};

// Per-sample style-modulated conv2d with weight demodulation.
class ModulatedConv2dImpl : public torch::nn::Module {
 public:
  ModulatedConv2dImpl(int64_t in_ch, int64_t out_ch, int64_t w_dim);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w);

 private:
  torch::Tensor weight_;
  torch::Tensor bias_;
  torch::nn::Linear affine_{nullptr};
};
TORCH_MODULE(ModulatedConv2d);

// Conditional frame super-resolution generator: 9 low-res frames in, one
// high-res frame out. The 27-channel conditioning stack is resized (with
// lowpass prefiltering when minified, and untouched at its native
// resolution) and concatenated to the features at every stage. The output
// is a learned residual on top of the bilinear upsample of the center
// conditioning frame.
class SrGeneratorImpl : public torch::nn::Module {
 public:
  explicit SrGeneratorImpl(SRConfig config);

  // stacks: [N, 9, 3, h, w], latents: [N, latent_dim]. Returns [N, 3, H, W].
  torch::Tensor forward(const torch::Tensor& stacks,
                        const torch::Tensor& latents);

  // Single frame (spec-facing sr_generate()).
  torch::Tensor generate(const ConditioningStack& stack,
                         const torch::Tensor& latent);

  // Sliding-window refinement of a whole clip [T, 3, h, w] -> [T, 3, H, W].
  torch::Tensor upsample_video(const torch::Tensor& video_lowres,
                               const torch::Tensor& latent,
                               int64_t chunk = 16);

  const SRConfig& config() const { return config_; }

 private:
  SRConfig config_;
  torch::nn::Sequential mapping_{nullptr};
  torch::Tensor constant_;
  std::vector<ModulatedConv2d> convs_;  // two per stage
  torch::nn::Conv2d to_rgb_{nullptr};
  std::vector<std::pair<int64_t, int64_t>> stage_sizes_;
};
TORCH_MODULE(SrGenerator);

// Conditional discriminator over aligned 4-frame segments. Low-res frames
// are bilinearly upsampled and concatenated with the high-res frames into a
// 24-channel input; no minibatch stddev layer.
class SrDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit SrDiscriminatorImpl(SRConfig config);

  // low4: [N, 4, 3, h, w], high4: [N, 4, 3, H, W]. Returns [N].
  torch::Tensor forward(const torch::Tensor& low4, const torch::Tensor& high4);

  const SRConfig& config() const { return config_; }

 private:
  SRConfig config_;
  torch::nn::Sequential body_{nullptr};
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(SrDiscriminator);

// Builds the 9-frame stack for frame t of a clip [T, 3, h, w], replicating
// edge frames past the clip boundaries.
torch::Tensor conditioning_window(const torch::Tensor& video, int64_t t);

// With probability p replaces the entire 4-frame segment of each sample by
// zeros; never zeroes a partial segment. low4: [N, 4, 3, h, w].
torch::Tensor condition_dropout(const torch::Tensor& low4, double p,
                                torch::Generator& gen);

}  // namespace longvid
