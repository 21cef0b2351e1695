#include "longvid/augment.hpp"

#include <cmath>

namespace longvid {

namespace {

double uniform(torch::Generator& gen, double lo, double hi) {
  auto u = torch::rand({1}, gen, torch::kFloat64).item<double>();
  return lo + (hi - lo) * u;
}

double normal(torch::Generator& gen, double std) {
  return torch::randn({1}, gen, torch::kFloat64).item<double>() * std;
}

int64_t uniform_int(torch::Generator& gen, int64_t lo, int64_t hi) {
  if (hi <= lo) return lo;
  auto u = torch::randint(lo, hi + 1, {1}, gen, torch::kInt64).item<int64_t>();
  return u;
}

bool coin(torch::Generator& gen, double p) {
  return torch::rand({1}, gen, torch::kFloat64).item<double>() < p;
}

torch::Tensor translate2d(const torch::Tensor& x, int64_t dx, int64_t dy) {
  if (dx == 0 && dy == 0) return x;
  // zero padding; pad order is {left, right, top, bottom}
  auto padded = torch::constant_pad_nd(
      x, {std::max<int64_t>(dx, 0), std::max<int64_t>(-dx, 0),
          std::max<int64_t>(dy, 0), std::max<int64_t>(-dy, 0)},
      0.0);
  int64_t h = x.size(-2), w = x.size(-1);
  int64_t top = std::max<int64_t>(-dy, 0);
  int64_t left = std::max<int64_t>(-dx, 0);
  return padded.slice(-2, top, top + h).slice(-1, left, left + w);
}

}  // namespace

DiffAugParams sample_diffaug(const AugPolicy& policy, int64_t h, int64_t w,
                             torch::Generator& gen) {
  DiffAugParams p;
  if (policy.color) {
    p.brightness = uniform(gen, -0.5, 0.5);
    p.saturation = uniform(gen, 0.0, 2.0);
    p.contrast = uniform(gen, 0.5, 1.5);
  }
  if (policy.translation) {
    int64_t m = policy.max_translate;
    p.shift_x = uniform_int(gen, -m, m);
    p.shift_y = uniform_int(gen, -m, m);
  }
  if (policy.cutout) {
    p.cut_size = std::min(h, w) / 2;
    p.cut_y = uniform_int(gen, 0, h - p.cut_size);
    p.cut_x = uniform_int(gen, 0, w - p.cut_size);
  }
  return p;
}

torch::Tensor apply_diffaug(const torch::Tensor& video,
                            const DiffAugParams& params) {
  auto x = video;
  bool has_color = params.brightness != 0.0 || params.saturation != 1.0 ||
                   params.contrast != 1.0;
  if (has_color) {
    x = x + params.brightness;
    auto chan_mean = x.mean(-3, /*keepdim=*/true);
    x = (x - chan_mean) * params.saturation + chan_mean;
    auto img_mean = x.mean({-3, -2, -1}, /*keepdim=*/true);
    x = (x - img_mean) * params.contrast + img_mean;
    x = x.clamp(-1.0, 1.0);
  }
  if (params.shift_x != 0 || params.shift_y != 0) {
    x = translate2d(x, params.shift_x, params.shift_y);
  }
  if (params.cut_size > 0 && params.cut_x >= 0) {
    auto mask = torch::ones({video.size(-2), video.size(-1)}, video.options());
    mask.slice(0, params.cut_y, params.cut_y + params.cut_size)
        .slice(1, params.cut_x, params.cut_x + params.cut_size)
        .zero_();
    x = x * mask;
  }
  return x;
}

torch::Tensor diffaug_clip(const torch::Tensor& video, const AugPolicy& policy,
                           torch::Generator& gen) {
  auto params = sample_diffaug(policy, video.size(-2), video.size(-1), gen);
  return apply_diffaug(video, params);
}

torch::Tensor diffaug_batch(const torch::Tensor& videos,
                            const AugPolicy& policy, torch::Generator& gen) {
  std::vector<torch::Tensor> out;
  out.reserve(videos.size(0));
  for (int64_t i = 0; i < videos.size(0); ++i) {
    out.push_back(diffaug_clip(videos[i], policy, gen));
  }
  return torch::stack(out, 0);
}

torch::Tensor time_stretch_with(const torch::Tensor& video, double factor,
                                int64_t offset) {
  int64_t t_len = video.size(0);
  int64_t stretched = std::max<int64_t>(1, std::llround(t_len * factor));
  auto flat = video.reshape({t_len, -1}).t().unsqueeze(0);  // [1, D, T]
  auto resized = torch::nn::functional::interpolate(
      flat, torch::nn::functional::InterpolateFuncOptions()
                .size(std::vector<int64_t>{stretched})
                .mode(torch::kLinear)
                .align_corners(false));
  auto seq = resized.squeeze(0).t();  // [stretched, D]
  torch::Tensor out;
  if (stretched >= t_len) {
    out = seq.slice(0, offset, offset + t_len);
  } else {
    out = torch::zeros({t_len, seq.size(1)}, seq.options());
    out.slice(0, offset, offset + stretched).copy_(seq);
  }
  auto sizes = video.sizes().vec();
  return out.reshape(sizes);
}

torch::Tensor time_stretch(const torch::Tensor& video, const AugPolicy& policy,
                           torch::Generator& gen) {
  int64_t t_len = video.size(0);
  double a = uniform(gen, policy.stretch_lo, policy.stretch_hi);
  double factor = std::pow(2.0, a);
  int64_t stretched = std::max<int64_t>(1, std::llround(t_len * factor));
  int64_t offset = stretched >= t_len
                       ? uniform_int(gen, 0, stretched - t_len)
                       : uniform_int(gen, 0, t_len - stretched);
  return time_stretch_with(video, factor, offset);
}

torch::Tensor corrupt_conditioning(const torch::Tensor& video,
                                   const AugPolicy& policy,
                                   torch::Generator& gen) {
  auto x = video;
  const double prob = policy.per_transform_prob;

  double sx = 1.0, sy = 1.0, theta = 0.0, tx = 0.0, ty = 0.0;
  bool geometric = false;
  if (coin(gen, prob)) {  // isotropic scale
    double s = std::pow(2.0, normal(gen, policy.scale_std));
    sx *= s;
    sy *= s;
    geometric = true;
  }
  if (coin(gen, prob)) {  // anisotropic scale
    double r = std::pow(2.0, normal(gen, policy.aniso_std));
    sx *= r;
    sy /= r;
    geometric = true;
  }
  if (coin(gen, prob)) {  // rotation, fraction of a half turn
    theta = uniform(gen, -policy.rotate_max, policy.rotate_max) * M_PI;
    geometric = true;
  }
  if (coin(gen, prob)) {  // fractional translation
    tx = normal(gen, policy.xfrac_std);
    ty = normal(gen, policy.xfrac_std);
    geometric = true;
  }
  if (geometric) {
    auto theta_m = torch::tensor(
        {{std::cos(theta) * sx, -std::sin(theta) * sy, tx},
         {std::sin(theta) * sx, std::cos(theta) * sy, ty}},
        x.options());
    auto grid = torch::nn::functional::affine_grid(
        theta_m.unsqueeze(0), {1, x.size(1), x.size(2), x.size(3)}, false);
    grid = grid.expand({x.size(0), grid.size(1), grid.size(2), grid.size(3)});
    x = torch::nn::functional::grid_sample(
        x, grid,
        torch::nn::functional::GridSampleFuncOptions()
            .mode(torch::kBilinear)
            .padding_mode(torch::kReflection)
            .align_corners(false));
  }
  if (coin(gen, prob)) {  // additive noise, one field shared by all frames
    auto noise = torch::randn({1, x.size(1), x.size(2), x.size(3)}, gen,
                              x.options()) *
                 policy.noise_std;
    x = x + noise;
  }
  return x;
}

std::pair<torch::Tensor, torch::Tensor> ada_augment_pair(
    const torch::Tensor& low, const torch::Tensor& high, double p,
    torch::Generator& gen) {
  auto lo = low;
  auto hi = high;
  int64_t factor = high.size(-1) / low.size(-1);
  if (coin(gen, p)) {  // brightness
    double b = uniform(gen, -0.5, 0.5);
    lo = (lo + b).clamp(-1.0, 1.0);
    hi = (hi + b).clamp(-1.0, 1.0);
  }
  if (coin(gen, p)) {  // contrast
    double c = uniform(gen, 0.5, 1.5);
    auto ml = lo.mean({-3, -2, -1}, true);
    auto mh = hi.mean({-3, -2, -1}, true);
    lo = (lo - ml) * c + ml;
    hi = (hi - mh) * c + mh;
  }
  if (coin(gen, p)) {  // translation, consistent across resolutions
    int64_t max_lo = std::max<int64_t>(1, low.size(-1) / 8);
    int64_t dx = uniform_int(gen, -max_lo, max_lo);
    int64_t dy = uniform_int(gen, -max_lo, max_lo);
    lo = translate2d(lo, dx, dy);
    hi = translate2d(hi, dx * factor, dy * factor);
  }
  return {lo, hi};
}

}  // namespace longvid
