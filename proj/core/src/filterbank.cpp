#include "longvid/filterbank.hpp"

#include <cmath>
#include <stdexcept>

namespace longvid {

int64_t FilterBank::max_taps() const {
  int64_t m = 0;
  for (const auto& f : filters) m = std::max(m, f.size(0));
  return m;
}

int64_t round_to_odd(double x) {
  int64_t lower = 2 * static_cast<int64_t>(std::floor((x - 1.0) / 2.0)) + 1;
  int64_t upper = lower + 2;
  if (lower < 1) return 1;
  return (x - lower < upper - x) ? lower : upper;
}

torch::Tensor kaiser_lowpass(int64_t taps, double cutoff, double beta) {
  if (taps < 1) {
    throw std::invalid_argument("kaiser_lowpass: taps must be >= 1");
  }
  auto kernel = torch::empty({taps}, torch::kFloat64);
  auto acc = kernel.accessor<double, 1>();
  if (taps == 1) {
    acc[0] = 1.0;
    return kernel;
  }
  const double center = static_cast<double>(taps - 1) / 2.0;
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  for (int64_t m = 0; m < taps; ++m) {
    double x = static_cast<double>(m) - center;
    double t = x / center;
    double window = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - t * t)) / i0_beta;
    double arg = 2.0 * cutoff * x;
    double sinc = (x == 0.0) ? 1.0 : std::sin(M_PI * arg) / (M_PI * arg);
    acc[m] = 2.0 * cutoff * sinc * window;
  }
  kernel /= kernel.sum();
  return kernel;
}

FilterBank design_bank(int64_t n_filters, int64_t k_min, int64_t k_max,
                       double beta) {
  if (n_filters < 2) {
    throw std::invalid_argument("design_bank: need at least 2 filters");
  }
  if (k_min < 2 || k_min > k_max) {
    throw std::invalid_argument("design_bank: require 2 <= k_min <= k_max");
  }
  FilterBank bank;
  bank.k_min = k_min;
  bank.k_max = k_max;
  bank.beta = beta;
  const double ratio = static_cast<double>(k_max) / static_cast<double>(k_min);
  for (int64_t i = 0; i < n_filters; ++i) {
    double k = static_cast<double>(k_min) *
               std::pow(ratio, static_cast<double>(i) /
                                   static_cast<double>(n_filters - 1));
    bank.footprints.push_back(static_cast<int64_t>(std::llround(k)));
    int64_t taps = round_to_odd(k);
    bank.filters.push_back(kaiser_lowpass(taps, 1.0 / k, beta));
  }
  return bank;
}

torch::Tensor enrich_tensor(const torch::Tensor& x, const FilterBank& bank) {
  TORCH_CHECK(x.dim() == 3, "enrich_tensor: expected [N, T, C]");
  const int64_t channels = x.size(2);
  auto xt = x.permute({0, 2, 1});  // [N, C, T]
  std::vector<torch::Tensor> per_filter;
  per_filter.reserve(bank.count());
  for (int64_t i = 0; i < bank.count(); ++i) {
    auto kernel = bank.filters[i].to(x.dtype());
    // symmetric kernels make cross-correlation equal true convolution
    auto weight = kernel.view({1, 1, -1}).expand({channels, 1, kernel.size(0)});
    auto y = torch::conv1d(xt, weight, {}, /*stride=*/1,
                           /*padding=*/kernel.size(0) / 2, /*dilation=*/1,
                           /*groups=*/channels);
    per_filter.push_back(y.permute({0, 2, 1}));  // [N, T, C]
  }
  return torch::stack(per_filter, /*dim=*/2);  // [N, T, N_f, C]
}

EnrichedNoise enrich(const NoiseStream& z, const FilterBank& bank) {
  TORCH_CHECK(z.values.dim() == 2, "enrich: noise must be [T, C]");
  auto out = enrich_tensor(z.values.unsqueeze(0), bank).squeeze(0);
  return {out, z.frame_offset};
}

int64_t context_padding(const FilterBank& bank) {
  return (bank.max_taps() + 1) / 2;
}

namespace {
uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

NoiseStream sample_noise_window(uint64_t seed, int64_t t0, int64_t frames,
                                int64_t channels) {
  auto values = torch::empty({frames, channels}, torch::kFloat32);
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>();
  for (int64_t t = 0; t < frames; ++t) {
    uint64_t frame_seed =
        splitmix64(seed ^ splitmix64(static_cast<uint64_t>(t0 + t)));
    gen.set_current_seed(frame_seed);
    values[t] = torch::randn({channels}, gen, torch::kFloat32);
  }
  return {values, t0};
}

}  // namespace longvid
