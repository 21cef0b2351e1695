#include "longvid/superres.hpp"

#include <cmath>
#include <stdexcept>

#include "longvid/resample.hpp"

namespace longvid {

namespace {
torch::Tensor rms_normalize_sample(const torch::Tensor& x) {
  auto ms = x.square().mean({1, 2, 3}, /*keepdim=*/true);
  return x * torch::rsqrt(ms + 1e-8);
}
constexpr int64_t kCondChannels = ConditioningStack::kFrames * 3;

// Default libtorch conv/linear init shrinks activations every layer; after a
// deep stack the logit barely depends on the input. Rescale weights to the
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
}  // namespace

void SRConfig::validate() const {
  if (factor != 4) {
    throw std::invalid_argument("SRConfig: only 4x super-resolution is supported");
  }
  if (low_h % 2 != 0 || low_w % 2 != 0 || low_h < 4 || low_w < 4) {
    throw std::invalid_argument("SRConfig: low resolution must be even and >= 4");
  }
  if (stage_channels.size() != 4) {
    throw std::invalid_argument("SRConfig: expected 4 stage channel entries");
  }
  if (dropout_p < 0.0 || dropout_p > 1.0) {
    throw std::invalid_argument("SRConfig: dropout probability must be in [0, 1]");
  }
}

ModulatedConv2dImpl::ModulatedConv2dImpl(int64_t in_ch, int64_t out_ch,
                                         int64_t w_dim) {
  double fan_in = static_cast<double>(in_ch * 9);
  weight_ = register_parameter(
      "weight", torch::randn({out_ch, in_ch, 3, 3}) / std::sqrt(fan_in));
  bias_ = register_parameter("bias", torch::zeros({out_ch}));
  affine_ = register_module("affine", torch::nn::Linear(w_dim, in_ch));
  torch::NoGradGuard ng;
  affine_->bias.fill_(1.0);
}

torch::Tensor ModulatedConv2dImpl::forward(const torch::Tensor& x,
                                           const torch::Tensor& w) {
  auto h = rms_normalize_sample(x);
  auto s = affine_->forward(w);  // [N, C_in]
  h = h * s.unsqueeze(-1).unsqueeze(-1);
  auto y = torch::conv2d(h, weight_, {}, 1, 1);
  auto wsq = weight_.square().sum({2, 3});  // [C_out, C_in]
  auto d = torch::rsqrt(torch::matmul(s.square(), wsq.t()) + 1e-8);
  y = y * d.unsqueeze(-1).unsqueeze(-1);
  y = y + bias_.view({1, -1, 1, 1});
  return torch::leaky_relu(y, 0.2) * std::sqrt(2.0);
}

SrGeneratorImpl::SrGeneratorImpl(SRConfig config) : config_(config) {
  config_.validate();
  namespace nn = torch::nn;
  nn::Sequential mapping;
  mapping->push_back(nn::Linear(config_.latent_dim, config_.w_dim));
  mapping->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
  mapping->push_back(nn::Linear(config_.w_dim, config_.w_dim));
  mapping->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
  mapping_ = register_module("mapping", mapping);

  stage_sizes_ = {{config_.low_h / 2, config_.low_w / 2},
                  {config_.low_h, config_.low_w},
                  {config_.low_h * 2, config_.low_w * 2},
                  {config_.high_h(), config_.high_w()}};
  constant_ = register_parameter(
      "constant", torch::randn({config_.stage_channels[0], stage_sizes_[0].first,
                                stage_sizes_[0].second}));

  int64_t prev = config_.stage_channels[0];
  for (size_t st = 0; st < stage_sizes_.size(); ++st) {
    int64_t ch = config_.stage_channels[st];
    auto c1 = ModulatedConv2d(prev + kCondChannels, ch, config_.w_dim);
    auto c2 = ModulatedConv2d(ch + kCondChannels, ch, config_.w_dim);
    convs_.push_back(register_module("stage" + std::to_string(st) + "_conv1", c1));
    convs_.push_back(register_module("stage" + std::to_string(st) + "_conv2", c2));
    prev = ch;
  }
  to_rgb_ = register_module(
      "to_rgb",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(prev, 3, 1)));
  torch::NoGradGuard ng;
  // The output is a residual on top of the bilinear upsample of the center
  // conditioning frame; start close to that baseline.
  to_rgb_->weight.normal_(0.0, 0.01 / std::sqrt(static_cast<double>(prev)));
  to_rgb_->bias.zero_();
}

torch::Tensor SrGeneratorImpl::forward(const torch::Tensor& stacks,
                                       const torch::Tensor& latents) {
  TORCH_CHECK(stacks.dim() == 5 && stacks.size(1) == ConditioningStack::kFrames,
              "SrGenerator: stacks must be [N, 9, 3, h, w]");
  TORCH_CHECK(stacks.size(3) == config_.low_h && stacks.size(4) == config_.low_w,
              "SrGenerator: conditioning resolution mismatch");
  int64_t n = stacks.size(0);
  auto cond = stacks.reshape({n, kCondChannels, config_.low_h, config_.low_w});
  auto w = mapping_->forward(latents);

  auto x = constant_.unsqueeze(0).expand({n, constant_.size(0),
                                          constant_.size(1), constant_.size(2)});
  for (size_t st = 0; st < stage_sizes_.size(); ++st) {
    auto [sh, sw] = stage_sizes_[st];
    if (x.size(2) != sh || x.size(3) != sw) {
      x = bilinear_resize(x, sh, sw);
    }
    auto c = resize_conditioning(cond, sh, sw);
    x = convs_[2 * st]->forward(torch::cat({x, c}, 1), w);
    x = convs_[2 * st + 1]->forward(torch::cat({x, c}, 1), w);
  }
  auto center = stacks.select(1, ConditioningStack::kReach);
  auto base = bilinear_resize(center, config_.high_h(), config_.high_w());
  return base + to_rgb_->forward(x);
}

torch::Tensor SrGeneratorImpl::generate(const ConditioningStack& stack,
                                        const torch::Tensor& latent) {
  return forward(stack.frames.unsqueeze(0), latent.unsqueeze(0)).squeeze(0);
}

torch::Tensor SrGeneratorImpl::upsample_video(const torch::Tensor& video_lowres,
                                              const torch::Tensor& latent,
                                              int64_t chunk) {
  TORCH_CHECK(video_lowres.dim() == 4, "upsample_video: expected [T, 3, h, w]");
  torch::NoGradGuard ng;
  int64_t t_len = video_lowres.size(0);
  std::vector<torch::Tensor> out;
  for (int64_t start = 0; start < t_len; start += chunk) {
    int64_t stop = std::min(start + chunk, t_len);
    std::vector<torch::Tensor> stacks;
    for (int64_t t = start; t < stop; ++t) {
      stacks.push_back(conditioning_window(video_lowres, t));
    }
    auto batch = torch::stack(stacks, 0);
    auto lat = latent.unsqueeze(0).expand({stop - start, latent.size(0)});
    out.push_back(forward(batch, lat));
  }
  return torch::cat(out, 0);
}

SrDiscriminatorImpl::SrDiscriminatorImpl(SRConfig config) : config_(config) {
  config_.validate();
  namespace nn = torch::nn;
  nn::Sequential body;
  int64_t ch = config_.disc_base_channels;
  body->push_back(nn::Conv2d(nn::Conv2dOptions(24, ch, 3).padding(1)));
  body->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
  int64_t h = config_.high_h(), w = config_.high_w();
  while (std::min(h, w) > 4) {
    int64_t next = std::min(ch * 2, config_.disc_max_channels);
    body->push_back(
        nn::Conv2d(nn::Conv2dOptions(ch, next, 3).stride(2).padding(1)));
    body->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    ch = next;
    h = (h - 1) / 2 + 1;
    w = (w - 1) / 2 + 1;
  }
  body_ = register_module("body", body);
  fc1_ = register_module("fc1", nn::Linear(ch * h * w, config_.disc_hidden));
  fc2_ = register_module("fc2", nn::Linear(config_.disc_hidden, 1));
  init_leaky_stack(*this);
}

torch::Tensor SrDiscriminatorImpl::forward(const torch::Tensor& low4,
                                           const torch::Tensor& high4) {
  TORCH_CHECK(low4.dim() == 5 && low4.size(1) == 4 && high4.dim() == 5 &&
                  high4.size(1) == 4,
              "SrDiscriminator: expected 4-frame segments");
  int64_t n = low4.size(0);
  auto low_up = bilinear_resize(low4, config_.high_h(), config_.high_w());
  auto x = torch::cat({low_up.reshape({n, 12, config_.high_h(), config_.high_w()}),
                       high4.reshape({n, 12, config_.high_h(), config_.high_w()})},
                      1);
  x = body_->forward(x);
  x = torch::leaky_relu(fc1_->forward(x.flatten(1)), 0.2);
  return fc2_->forward(x).squeeze(1);
}

torch::Tensor conditioning_window(const torch::Tensor& video, int64_t t) {
  int64_t t_len = video.size(0);
  TORCH_CHECK(t >= 0 && t < t_len, "conditioning_window: frame out of range");
  std::vector<torch::Tensor> frames;
  frames.reserve(ConditioningStack::kFrames);
  for (int64_t d = -ConditioningStack::kReach; d <= ConditioningStack::kReach;
       ++d) {
    int64_t idx = std::clamp<int64_t>(t + d, 0, t_len - 1);
    frames.push_back(video[idx]);
  }
  return torch::stack(frames, 0);
}

torch::Tensor condition_dropout(const torch::Tensor& low4, double p,
                                torch::Generator& gen) {
  TORCH_CHECK(p >= 0.0 && p <= 1.0, "condition_dropout: p must be in [0, 1]");
  int64_t n = low4.size(0);
  auto keep = (torch::rand({n}, gen, low4.options()) >= p).to(low4.dtype());
  return low4 * keep.view({n, 1, 1, 1, 1});
}

}  // namespace longvid
