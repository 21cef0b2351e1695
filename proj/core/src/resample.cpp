#include "longvid/resample.hpp"

#include <cmath>
#include <stdexcept>

#include "longvid/filterbank.hpp"

namespace longvid {

namespace {

double lanczos3(double x) {
  if (x == 0.0) return 1.0;
  if (std::abs(x) >= 3.0) return 0.0;
  double px = M_PI * x;
  return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
}

// Row-normalized resampling matrix [out_n, in_n] for one axis.
torch::Tensor lanczos3_matrix(int64_t in_n, int64_t out_n) {
  double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
  double support = 3.0 * std::max(scale, 1.0);
  auto w = torch::zeros({out_n, in_n}, torch::kFloat64);
  auto acc = w.accessor<double, 2>();
  for (int64_t j = 0; j < out_n; ++j) {
    double center = (static_cast<double>(j) + 0.5) * scale - 0.5;
    int64_t lo = static_cast<int64_t>(std::floor(center - support));
    int64_t hi = static_cast<int64_t>(std::ceil(center + support));
    double sum = 0.0;
    for (int64_t i = lo; i <= hi; ++i) {
      double v = lanczos3((static_cast<double>(i) - center) / std::max(scale, 1.0));
      int64_t ic = std::clamp<int64_t>(i, 0, in_n - 1);
      acc[j][ic] += v;
      sum += v;
    }
    for (int64_t i = 0; i < in_n; ++i) acc[j][i] /= sum;
  }
  return w;
}

// Apply a [out_n, in_n] matrix along the given trailing axis (-1 or -2).
torch::Tensor apply_axis(const torch::Tensor& x, const torch::Tensor& w,
                         int axis) {
  auto wt = w.to(x.dtype());
  if (axis == -1) return torch::matmul(x, wt.t());
  return torch::matmul(wt, x);
}

std::pair<torch::Tensor, int64_t> flatten_leading(const torch::Tensor& x) {
  auto sizes = x.sizes().vec();
  int64_t h = sizes[sizes.size() - 2];
  int64_t w = sizes[sizes.size() - 1];
  return {x.reshape({-1, 1, h, w}), 0};
}

torch::Tensor restore_leading(const torch::Tensor& y,
                              const torch::Tensor& original) {
  auto sizes = original.sizes().vec();
  sizes[sizes.size() - 2] = y.size(2);
  sizes[sizes.size() - 1] = y.size(3);
  return y.reshape(sizes);
}

}  // namespace

torch::Tensor lanczos3_resize(const torch::Tensor& x, int64_t out_h,
                              int64_t out_w) {
  TORCH_CHECK(x.dim() >= 2, "lanczos3_resize: need at least 2 dims");
  auto wh = lanczos3_matrix(x.size(-2), out_h);
  auto ww = lanczos3_matrix(x.size(-1), out_w);
  return apply_axis(apply_axis(x, ww, -1), wh, -2);
}

torch::Tensor prefiltered_downsample(const torch::Tensor& x, int64_t factor,
                                     double beta) {
  TORCH_CHECK(factor >= 1, "prefiltered_downsample: factor must be >= 1");
  if (factor == 1) return x;
  int64_t taps = 6 * factor + (factor % 2 == 0 ? 0 : 1);
  auto kernel = kaiser_lowpass(taps, 0.5 / static_cast<double>(factor), beta)
                    .to(x.dtype());
  int64_t pad_total = taps - factor;
  int64_t pad_lo = pad_total / 2;
  int64_t pad_hi = pad_total - pad_lo;

  auto [flat, unused] = flatten_leading(x);
  auto padded = torch::reflection_pad2d(flat, {pad_lo, pad_hi, pad_lo, pad_hi});
  auto wh = kernel.view({1, 1, taps, 1});
  auto ww = kernel.view({1, 1, 1, taps});
  auto y = torch::conv2d(padded, wh, {}, {factor, 1});
  y = torch::conv2d(y, ww, {}, {1, factor});
  return restore_leading(y, x);
}

torch::Tensor naive_downsample(const torch::Tensor& x, int64_t factor) {
  using torch::indexing::Slice;
  int64_t off = factor / 2;
  return x.index({torch::indexing::Ellipsis, Slice(off, torch::indexing::None, factor),
                  Slice(off, torch::indexing::None, factor)});
}

torch::Tensor bilinear_resize(const torch::Tensor& x, int64_t out_h,
                              int64_t out_w) {
  auto [flat, unused] = flatten_leading(x);
  auto y = torch::nn::functional::interpolate(
      flat, torch::nn::functional::InterpolateFuncOptions()
                .size(std::vector<int64_t>{out_h, out_w})
                .mode(torch::kBilinear)
                .align_corners(false));
  return restore_leading(y, x);
}

torch::Tensor resize_conditioning(const torch::Tensor& x, int64_t out_h,
                                  int64_t out_w) {
  int64_t h = x.size(-2);
  int64_t w = x.size(-1);
  if (out_h == h && out_w == w) return x;
  if (out_h < h) {
    TORCH_CHECK(h % out_h == 0 && w % out_w == 0 && h / out_h == w / out_w,
                "resize_conditioning: downsample factor must be integer");
    return prefiltered_downsample(x, h / out_h);
  }
  return bilinear_resize(x, out_h, out_w);
}

}  // namespace longvid
