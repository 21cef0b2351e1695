#pragma once

#include <torch/torch.h>

#include <vector>

namespace longvid {

struct DiscConfig {
  int64_t in_channels = 3;
  int64_t base_channels = 128;  // width after the 1x1x1 RGB expansion
  int64_t max_channels = 512;
  int64_t blocks = 4;  // block 1 is spatial-only, the rest are spatiotemporal
  int64_t temporal_convs = 4;
  int64_t temporal_kernel = 5;
  int64_t hidden = 512;
  int64_t in_t = 128;
  int64_t in_h = 64;
  int64_t in_w = 64;

  // Output channels of each block: the first block keeps the stem width,
  // later blocks double until max_channels.
  std::vector<int64_t> channel_trace() const;
  // Temporal extent after the stem and after each block.
  std::vector<int64_t> temporal_trace() const;
};

// Spatiotemporal clip discriminator: 1x1x1 stem, one spatial block, three
// 5x3x3 blocks with temporal+spatial striding, four 1-D temporal convs over
// spatially pooled features, then two linear layers to a scalar logit.
class LowresDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit LowresDiscriminatorImpl(DiscConfig config);

  // video: [B, T, C, H, W] with the configured extents. Returns [B].
  torch::Tensor forward(const torch::Tensor& video);

  const DiscConfig& config() const { return config_; }

 private:
  DiscConfig config_;
  torch::nn::Conv3d stem_{nullptr};
  std::vector<torch::nn::Sequential> blocks_;
  std::vector<torch::nn::Conv1d> temporal_;
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(LowresDiscriminator);

}  // namespace longvid
