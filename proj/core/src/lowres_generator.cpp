#include "longvid/lowres_generator.hpp"

#include <cmath>
#include <stdexcept>

namespace longvid {

namespace {

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

torch::Tensor rms_normalize(const torch::Tensor& x,
                            std::vector<int64_t> dims) {
  auto ms = x.square().mean(dims, /*keepdim=*/true);
  return x * torch::rsqrt(ms + 1e-8);
}

}  // namespace

void SynthesisConfig::validate() const {
  if (channels.size() != scales.size() || channels.empty()) {
    throw std::invalid_argument("SynthesisConfig: channel/scale schedule mismatch");
  }
  int64_t t_prod = 1, s_prod = 1;
  for (auto [t, s] : scales) {
    t_prod *= t;
    s_prod *= s;
  }
  if (t_prod != temporal_divisor) {
    throw std::invalid_argument("SynthesisConfig: temporal scales do not multiply to temporal_divisor");
  }
  if (out_w < out_h) {
    throw std::invalid_argument("SynthesisConfig: expected landscape or square output (out_w >= out_h)");
  }
  if (s_prod * base_size != out_w) {
    throw std::invalid_argument("SynthesisConfig: spatial scales do not multiply to out_w / base_size");
  }
}

int64_t SynthesisConfig::cumulative_t(int64_t block) const {
  int64_t p = 1;
  for (int64_t i = 0; i <= block; ++i) p *= scales[i].first;
  return p;
}

int64_t SynthesisConfig::style_pool_factor(int64_t block) const {
  return temporal_divisor / cumulative_t(block);
}

std::pair<int64_t, int64_t> SynthesisConfig::block_spatial(int64_t block) const {
  if (block == block_count() - 1) return {out_h, out_w};
  int64_t w = base_size;
  for (int64_t i = 0; i <= block; ++i) w *= scales[i].second;
  int64_t h = std::max<int64_t>(
      1, std::llround(static_cast<double>(out_h) * static_cast<double>(w) /
                      static_cast<double>(out_w)));
  return {h, w};
}

SynthesisConfig SynthesisConfig::scaled_channels(int64_t div) const {
  SynthesisConfig c = *this;
  for (auto& ch : c.channels) ch = std::max<int64_t>(1, ch / div);
  return c;
}

// ---------------------------------------------------------------------------

ModulatedConv3dImpl::ModulatedConv3dImpl(int64_t in_ch, int64_t out_ch,
                                         int64_t kt, int64_t w_dim)
    : kt_(kt) {
  double fan_in = static_cast<double>(in_ch * kt * 9);
  weight_ = register_parameter(
      "weight", torch::randn({out_ch, in_ch, kt, 3, 3}) / std::sqrt(fan_in));
  bias_ = register_parameter("bias", torch::zeros({out_ch}));
  affine_ = register_module("affine", torch::nn::Linear(w_dim, in_ch));
  torch::NoGradGuard ng;
  affine_->bias.fill_(1.0);
}

torch::Tensor ModulatedConv3dImpl::forward(const torch::Tensor& x,
                                           const torch::Tensor& styles) {
  TORCH_CHECK(x.size(2) == styles.size(1),
              "ModulatedConv3d: style rate must match feature rate");
  auto h = rms_normalize(x, {1, 3, 4});
  auto s = affine_->forward(styles);  // [N, T, C_in]
  h = h * s.permute({0, 2, 1}).unsqueeze(-1).unsqueeze(-1);
  if (kt_ > 1) {
    h = torch::replication_pad3d(h, {0, 0, 0, 0, kt_ / 2, kt_ / 2});
  }
  auto y = torch::conv3d(h, weight_, {}, /*stride=*/1, /*padding=*/{0, 1, 1});
  // frame-wise statistical demodulation: per-sample weight demodulation is
  // not well defined when styles vary within a clip
  auto wsq = weight_.square().sum({2, 3, 4});  // [C_out, C_in]
  auto d = torch::rsqrt(torch::matmul(s.square(), wsq.t()) + 1e-8);
  y = y * d.permute({0, 2, 1}).unsqueeze(-1).unsqueeze(-1);
  y = y + bias_.view({1, -1, 1, 1, 1});
  return torch::leaky_relu(y, 0.2) * std::sqrt(2.0);
}

SynthesisBlockImpl::SynthesisBlockImpl(int64_t in_ch, int64_t out_ch,
                                       int64_t t_scale,
                                       std::pair<int64_t, int64_t> spatial,
                                       int64_t kt, int64_t w_dim)
    : t_scale_(t_scale), spatial_(spatial) {
  conv1_ = register_module("conv1", ModulatedConv3d(in_ch, out_ch, kt, w_dim));
  conv2_ = register_module("conv2", ModulatedConv3d(out_ch, out_ch, kt, w_dim));
  if (in_ch != out_ch) {
    skip_proj_ = register_module(
        "skip",
        torch::nn::Conv3d(
            torch::nn::Conv3dOptions(in_ch, out_ch, 1).bias(false)));
    torch::NoGradGuard ng;
    skip_proj_->weight.normal_(0.0, 1.0 / std::sqrt(static_cast<double>(in_ch)));
  }
}

torch::Tensor SynthesisBlockImpl::forward(const torch::Tensor& x,
                                          const torch::Tensor& styles) {
  auto h = x;
  int64_t t_out = x.size(2) * t_scale_;
  if (t_out != x.size(2) || spatial_.first != x.size(3) ||
      spatial_.second != x.size(4)) {
    h = torch::nn::functional::interpolate(
        h, torch::nn::functional::InterpolateFuncOptions()
               .size(std::vector<int64_t>{t_out, spatial_.first,
                                          spatial_.second})
               .mode(torch::kTrilinear)
               .align_corners(false));
  }
  auto skip = skip_proj_ ? skip_proj_->forward(h) : h;
  auto y = conv2_->forward(conv1_->forward(h, styles), styles);
  return (y + skip) / std::sqrt(2.0);
}

// ---------------------------------------------------------------------------

LowresGeneratorImpl::LowresGeneratorImpl(FilterBank bank,
                                         SynthesisConfig config)
    : bank_(std::move(bank)), config_(std::move(config)) {
  config_.validate();
  int64_t in_dim = bank_.count() * NoiseStream::kChannels;
  torch::nn::Sequential mapping;
  int64_t prev = in_dim;
  for (int64_t i = 0; i < config_.mapping_layers; ++i) {
    mapping->push_back(torch::nn::Linear(prev, config_.mapping_hidden));
    mapping->push_back(torch::nn::LeakyReLU(
        torch::nn::LeakyReLUOptions().negative_slope(0.2)));
    prev = config_.mapping_hidden;
  }
  mapping->push_back(torch::nn::Linear(prev, config_.w_dim));
  mapping_ = register_module("mapping", mapping);

  int64_t base_w = config_.base_size;
  int64_t base_h = std::max<int64_t>(
      1, std::llround(static_cast<double>(config_.out_h) *
                      static_cast<double>(base_w) /
                      static_cast<double>(config_.out_w)));
  constant_ = register_parameter(
      "constant", torch::randn({config_.channels[0], base_h, base_w}));

  int64_t in_ch = config_.channels[0] + config_.w_dim;
  for (int64_t b = 0; b < config_.block_count(); ++b) {
    int64_t out_ch = config_.channels[b];
    auto block = SynthesisBlock(in_ch, out_ch, config_.scales[b].first,
                                config_.block_spatial(b),
                                config_.temporal_kernel(b), config_.w_dim);
    blocks_.push_back(register_module("block" + std::to_string(b), block));
    in_ch = out_ch;
  }
  to_rgb_ = register_module(
      "to_rgb", torch::nn::Conv3d(torch::nn::Conv3dOptions(
                    config_.channels.back(), config_.out_channels, 1)));
  torch::NoGradGuard ng;
  to_rgb_->weight.normal_(
      0.0, 1.0 / std::sqrt(static_cast<double>(config_.channels.back())));
  to_rgb_->bias.zero_();
}

torch::Tensor LowresGeneratorImpl::map_frames(const torch::Tensor& enriched) {
  TORCH_CHECK(enriched.dim() == 4, "map_frames: expected [N, T, N_f, C]");
  TORCH_CHECK(enriched.size(2) == bank_.count() &&
                  enriched.size(3) == NoiseStream::kChannels,
              "map_frames: enriched shape does not match the filter bank");
  auto x = enriched.flatten(2);  // [N, T, N_f*C]
  x = rms_normalize(x, {2});
  return mapping_->forward(x);
}

LatentSequence LowresGeneratorImpl::pool_latents(const torch::Tensor& w) const {
  LatentSequence seq;
  seq.w = w;
  auto wt = w.permute({0, 2, 1});  // [N, D, T]
  for (int64_t b = 0; b < config_.block_count(); ++b) {
    int64_t factor = config_.style_pool_factor(b);
    auto pooled = factor == 1 ? w
                              : torch::avg_pool1d(wt, factor, factor)
                                    .permute({0, 2, 1});
    seq.per_block[b] = pooled;
  }
  return seq;
}

LatentSequence LowresGeneratorImpl::map_latents(const EnrichedNoise& enriched) {
  auto w = map_frames(enriched.values.unsqueeze(0));
  return pool_latents(w);
}

torch::Tensor LowresGeneratorImpl::synthesize(const LatentSequence& latents) {
  auto w = latents.w;
  TORCH_CHECK(w.dim() == 3, "synthesize: latents must be [N, T, D]");
  int64_t t_len = w.size(1);
  TORCH_CHECK(t_len % config_.temporal_divisor == 0 && t_len > 0,
              "synthesize: T must be a positive multiple of ",
              config_.temporal_divisor);
  int64_t n = w.size(0);
  int64_t t0 = t_len / config_.temporal_divisor;

  auto w_coarse = torch::avg_pool1d(w.permute({0, 2, 1}),
                                    config_.temporal_divisor,
                                    config_.temporal_divisor);  // [N, D, T0]
  auto base = constant_.unsqueeze(0).unsqueeze(2).expand(
      {n, constant_.size(0), t0, constant_.size(1), constant_.size(2)});
  auto w_map = w_coarse.unsqueeze(-1).unsqueeze(-1).expand(
      {n, config_.w_dim, t0, constant_.size(1), constant_.size(2)});
  auto x = torch::cat({base, w_map}, 1);

  for (int64_t b = 0; b < config_.block_count(); ++b) {
    auto it = latents.per_block.find(b);
    TORCH_CHECK(it != latents.per_block.end(),
                "synthesize: missing per-block latents for block ", b);
    x = blocks_[b]->forward(x, it->second);
  }
  auto rgb = to_rgb_->forward(x);            // [N, 3, T, H, W]
  return rgb.permute({0, 2, 1, 3, 4});       // [N, T, 3, H, W]
}

torch::Tensor LowresGeneratorImpl::forward(const torch::Tensor& noise,
                                           int64_t target_frames) {
  TORCH_CHECK(noise.dim() == 3, "forward: noise must be [N, T, C]");
  int64_t total = noise.size(1);
  TORCH_CHECK(total >= target_frames,
              "forward: noise shorter than target window");
  auto enriched = enrich_tensor(noise, bank_);
  int64_t lo = (total - target_frames) / 2;
  enriched = enriched.slice(1, lo, lo + target_frames);
  auto w = map_frames(enriched);
  return synthesize(pool_latents(w));
}

torch::Tensor LowresGeneratorImpl::generate(const NoiseStream& z,
                                            int64_t target_frames) {
  return forward(z.values.unsqueeze(0), target_frames).squeeze(0);
}

// ---------------------------------------------------------------------------

std::pair<int64_t, int64_t> synthesis_latent_interval(
    const SynthesisConfig& config) {
  config.validate();
  int64_t lo = 0, hi = 0;
  int64_t style_lo = 0, style_hi = 0;
  for (int64_t b = config.block_count() - 1; b >= 0; --b) {
    int64_t reach = 2 * (config.temporal_kernel(b) / 2);
    lo -= reach;
    hi += reach;
    int64_t factor = config.style_pool_factor(b);
    style_lo = std::min(style_lo, lo * factor);
    style_hi = std::max(style_hi, hi * factor + factor - 1);
    int64_t tf = config.scales[b].first;
    if (tf > 1) {
      lo = floor_div(lo - 1, tf);
      hi = floor_div(hi + 1, tf);
    }
  }
  // constant stage: coarsest features carry latents pooled by the divisor
  int64_t d = config.temporal_divisor;
  style_lo = std::min(style_lo, lo * d);
  style_hi = std::max(style_hi, hi * d + d - 1);
  return {style_lo, style_hi};
}

int64_t effective_half_support(const FilterBank& bank) {
  int64_t best = 0;
  for (const auto& f : bank.filters) {
    auto abs = f.abs();
    double thresh = 1e-9 * abs.max().item<double>();
    auto acc = abs.accessor<double, 1>();
    int64_t taps = f.size(0);
    int64_t center = (taps - 1) / 2;
    for (int64_t m = 0; m < taps; ++m) {
      if (acc[m] > thresh) {
        best = std::max(best, std::abs(m - center));
      }
    }
  }
  return best;
}

int64_t analytic_receptive_field(const SynthesisConfig& config,
                                 const FilterBank& bank) {
  auto [lo, hi] = synthesis_latent_interval(config);
  int64_t half = effective_half_support(bank);
  return (hi + half) - (lo - half) + 1;
}

int64_t measure_receptive_field(LowresGenerator& gen) {
  const auto& cfg = gen->config();
  const auto& bank = gen->bank();
  auto [s_lo, s_hi] = synthesis_latent_interval(cfg);
  int64_t half = effective_half_support(bank);
  // sweep range: analytic bound plus a buffer that would expose any leak
  int64_t range = std::max(-(s_lo - half), s_hi + half) + 16;

  // The target window must contain the whole synthesis-path interval around
  // the probed frame, otherwise the clip boundary (replication padding and
  // the latent pooling edge) truncates the measured field.
  int64_t d = cfg.temporal_divisor;
  int64_t reach = std::max(-s_lo, s_hi) + d + 4;
  int64_t target = 2 * ((reach + d - 1) / d) * d;
  int64_t total = target + 2 * range;
  int64_t t0_out = target / 2;

  gen->to(torch::kFloat64);
  torch::manual_seed(1234);
  auto noise = torch::randn({1, total, NoiseStream::kChannels},
                            torch::kFloat64)
                   .requires_grad_(true);
  auto out = gen->forward(noise, target);
  auto frame = out.index({0, t0_out});
  auto proj = torch::randn_like(frame);
  auto loss = (frame * proj).sum();
  loss.backward();
  auto grad = noise.grad().index({0}).abs().amax(1);  // [total]
  gen->to(torch::kFloat32);

  double thresh = 1e-10 * grad.max().item<double>();
  auto acc = grad.accessor<double, 1>();
  int64_t first = -1, last = -1;
  for (int64_t t = 0; t < total; ++t) {
    if (acc[t] > thresh) {
      if (first < 0) first = t;
      last = t;
    }
  }
  TORCH_CHECK(first >= 0, "measure_receptive_field: no dependency found");
  TORCH_CHECK(first > 0 && last < total - 1,
              "measure_receptive_field: sweep range too small");
  return last - first + 1;
}

}  // namespace longvid
