#pragma once

#include <torch/torch.h>

namespace longvid {

// Separable 3-lobe Lanczos resize of [..., H, W] to [..., out_h, out_w].
// Kernel is widened when minifying so the result is antialiased.
torch::Tensor lanczos3_resize(const torch::Tensor& x, int64_t out_h,
                              int64_t out_w);

// Kaiser-sinc lowpass + stride-`factor` subsampling on the last two dims.
// Reflection padding at the borders; kernel support is 6*factor taps.
torch::Tensor prefiltered_downsample(const torch::Tensor& x, int64_t factor,
                                     double beta = 8.0);

// Plain stride-`factor` subsampling, no prefilter. Alias-prone on purpose,
// used as the comparison point for the prefilter tests.
torch::Tensor naive_downsample(const torch::Tensor& x, int64_t factor);

// Bilinear resize of [..., H, W] (align_corners=false).
torch::Tensor bilinear_resize(const torch::Tensor& x, int64_t out_h,
                              int64_t out_w);

// Resize a conditioning stack [..., H, W] to a layer resolution: identity at
// native resolution, prefiltered downsample below it, bilinear above it.
torch::Tensor resize_conditioning(const torch::Tensor& x, int64_t out_h,
                                  int64_t out_w);

}  // namespace longvid
