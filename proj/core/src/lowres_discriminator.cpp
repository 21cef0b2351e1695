#include "longvid/lowres_discriminator.hpp"

namespace longvid {

std::vector<int64_t> DiscConfig::channel_trace() const {
  std::vector<int64_t> trace;
  int64_t ch = base_channels;
  trace.push_back(ch);  // block 1 keeps the stem width
  for (int64_t b = 1; b < blocks; ++b) {
    ch = std::min(ch * 2, max_channels);
    trace.push_back(ch);
  }
  return trace;
}

std::vector<int64_t> DiscConfig::temporal_trace() const {
  std::vector<int64_t> trace;
  int64_t t = in_t;
  trace.push_back(t);   // after the stem
  trace.push_back(t);   // block 1 is spatial-only
  for (int64_t b = 1; b < blocks; ++b) {
    t /= 2;
    trace.push_back(t);
  }
  return trace;
}

namespace {

// Default libtorch conv init (kaiming_uniform, a = sqrt(5)) shrinks
// activations roughly 3x per layer; through a deep stack the logit becomes
// numerically independent of the input. Rescale every weight to the
// variance-preserving std for leaky_relu(0.2) and zero the biases.
void init_leaky_stack(torch::nn::Module& module) {
  torch::NoGradGuard ng;
  const double gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
  for (auto& p : module.named_parameters()) {
    auto& t = p.value();
    if (t.dim() >= 2) {
      double fan_in = static_cast<double>(t[0].numel());
      t.normal_(0.0, gain / std::sqrt(fan_in));
    } else {
      t.zero_();
    }
  }
}

torch::nn::Sequential make_block(int64_t in_ch, int64_t out_ch, bool temporal,
                                 int64_t kt) {
  namespace nn = torch::nn;
  std::vector<int64_t> kernel = temporal ? std::vector<int64_t>{kt, 3, 3}
                                         : std::vector<int64_t>{1, 3, 3};
  std::vector<int64_t> pad = {temporal ? kt / 2 : 0, 1, 1};
  std::vector<int64_t> stride = {temporal ? 2 : 1, 2, 2};
  nn::Sequential block;
  block->push_back(nn::Conv3d(nn::Conv3dOptions(in_ch, out_ch,
                                                torch::ExpandingArray<3>(kernel))
                                  .padding(torch::ExpandingArray<3>(pad))));
  block->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
  block->push_back(nn::Conv3d(nn::Conv3dOptions(out_ch, out_ch,
                                                torch::ExpandingArray<3>(kernel))
                                  .padding(torch::ExpandingArray<3>(pad))
                                  .stride(torch::ExpandingArray<3>(stride))));
  block->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
  return block;
}
}  // namespace

LowresDiscriminatorImpl::LowresDiscriminatorImpl(DiscConfig config)
    : config_(config) {
  namespace nn = torch::nn;
  stem_ = register_module(
      "stem", nn::Conv3d(nn::Conv3dOptions(config_.in_channels,
                                           config_.base_channels, 1)));
  auto channels = config_.channel_trace();
  int64_t in_ch = config_.base_channels;
  for (int64_t b = 0; b < config_.blocks; ++b) {
    auto block = make_block(in_ch, channels[b], /*temporal=*/b > 0,
                            config_.temporal_kernel);
    blocks_.push_back(
        register_module("block" + std::to_string(b + 1), block));
    in_ch = channels[b];
  }
  for (int64_t i = 0; i < config_.temporal_convs; ++i) {
    auto conv = nn::Conv1d(nn::Conv1dOptions(in_ch, in_ch,
                                             config_.temporal_kernel)
                               .padding(config_.temporal_kernel / 2));
    temporal_.push_back(register_module("tconv" + std::to_string(i), conv));
  }
  int64_t t_final = config_.temporal_trace().back();
  fc1_ = register_module("fc1", nn::Linear(in_ch * t_final, config_.hidden));
  fc2_ = register_module("fc2", nn::Linear(config_.hidden, 1));
  init_leaky_stack(*this);
}

torch::Tensor LowresDiscriminatorImpl::forward(const torch::Tensor& video) {
  TORCH_CHECK(video.dim() == 5, "discriminate: expected [B, T, C, H, W]");
  TORCH_CHECK(video.size(1) == config_.in_t && video.size(3) == config_.in_h &&
                  video.size(4) == config_.in_w,
              "discriminate: input extent does not match the configuration");
  auto x = video.permute({0, 2, 1, 3, 4});  // [B, C, T, H, W]
  x = stem_->forward(x);
  for (auto& block : blocks_) x = block->forward(x);
  x = x.mean({3, 4});  // spatial average pool -> [B, C, T']
  for (auto& conv : temporal_) {
    x = torch::leaky_relu(conv->forward(x), 0.2);
  }
  x = x.flatten(1);
  x = torch::leaky_relu(fc1_->forward(x), 0.2);
  return fc2_->forward(x).squeeze(1);
}

}  // namespace longvid
