#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace longvid {

// Per-frame i.i.d. Gaussian temporal noise. `frame_offset` is the global
// time index of row 0, so windows taken at different offsets from the same
// seed share values on overlapping frames.
struct NoiseStream {
  torch::Tensor values;  // [T, C]
  int64_t frame_offset = 0;

  static constexpr int64_t kChannels = 8;

  int64_t frames() const { return values.size(0); }
  int64_t channels() const { return values.size(1); }
};

// Bank of zero-phase temporal lowpass filters with exponentially spaced
// footprints. Kernels are float64, odd length, unit DC gain.
struct FilterBank {
  std::vector<torch::Tensor> filters;
  std::vector<int64_t> footprints;  // rounded schedule k_i, in frames
  int64_t k_min = 0;
  int64_t k_max = 0;
  double beta = 8.0;

  int64_t count() const { return static_cast<int64_t>(filters.size()); }
  int64_t max_taps() const;
};

// Noise convolved with every filter in the bank: values[t, i, c] = (f_i * z_c)(t).
struct EnrichedNoise {
  torch::Tensor values;  // [T, N_f, C]
  int64_t frame_offset = 0;

  int64_t frames() const { return values.size(0); }
};

// Nearest odd integer, ties toward the larger odd value.
int64_t round_to_odd(double x);

// Kaiser-windowed sinc lowpass with `taps` coefficients, cutoff in
// cycles/frame, normalized to unit DC gain. Returns a float64 tensor.
// Odd taps give a zero-phase kernel centered on a sample; even taps center
// between samples (used by the spatial resamplers).
torch::Tensor kaiser_lowpass(int64_t taps, double cutoff, double beta);

// Exponential footprint schedule k_i = k_min * (k_max/k_min)^(i/(N_f-1)),
// one Kaiser-sinc kernel per footprint with cutoff 1/k_i.
FilterBank design_bank(int64_t n_filters, int64_t k_min, int64_t k_max,
                       double beta = 8.0);

// Zero-phase temporal convolution of every noise channel with every filter.
// Uses zero padding; frames within max_taps()/2 of either end are only
// approximate, callers wanting exact values supply context_padding() extra
// frames per side.
EnrichedNoise enrich(const NoiseStream& z, const FilterBank& bank);

// Batched form: x is [N, T, C], result [N, T, N_f, C]. Differentiable.
torch::Tensor enrich_tensor(const torch::Tensor& x, const FilterBank& bank);

// Extra frames required on each side of a target window so that all frames
// inside the window see full kernel support.
int64_t context_padding(const FilterBank& bank);

// Deterministic standard-normal noise for global frames [t0, t0 + frames).
// Each frame's values depend only on (seed, absolute frame index).
NoiseStream sample_noise_window(uint64_t seed, int64_t t0, int64_t frames,
                                int64_t channels = NoiseStream::kChannels);

}  // namespace longvid
