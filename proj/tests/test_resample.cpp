#include <cmath>

#include "longvid/resample.hpp"

// doctest last: torch headers define a fatal CHECK macro that must not win
#include "doctest.h"

using namespace longvid;

namespace {

// Mean power of frequencies above `cutoff` (cycles/sample) along width.
double highband_energy(const torch::Tensor& img, double cutoff) {
  auto x = img.to(torch::kFloat64);
  auto spec = torch::fft_rfft(x, c10::nullopt, -1);
  int64_t bins = spec.size(-1);
  int64_t lo = static_cast<int64_t>(std::ceil(cutoff * img.size(-1)));
  if (lo >= bins) return 0.0;
  return spec.slice(-1, lo, bins).abs().pow(2).mean().item<double>();
}

}  // namespace

TEST_CASE("lanczos resize preserves constants") {
  auto x = torch::full({3, 17, 23}, 0.37);
  auto y = lanczos3_resize(x, 9, 13);
  CHECK(y.sizes() == torch::IntArrayRef({3, 9, 13}));
  CHECK((y - 0.37).abs().max().item<double>() < 1e-6);
  auto up = lanczos3_resize(x, 40, 50);
  CHECK((up - 0.37).abs().max().item<double>() < 1e-6);
}

TEST_CASE("lanczos identity resize is exact") {
  torch::manual_seed(3);
  auto x = torch::randn({1, 12, 12});
  auto y = lanczos3_resize(x, 12, 12);
  CHECK((y - x).abs().max().item<double>() < 1e-6);
}

TEST_CASE("prefiltered downsample keeps constants and means") {
  auto x = torch::full({1, 3, 32, 32}, -0.25);
  auto y = prefiltered_downsample(x, 4);
  CHECK(y.sizes() == torch::IntArrayRef({1, 3, 8, 8}));
  CHECK((y + 0.25).abs().max().item<double>() < 1e-6);

  torch::manual_seed(5);
  auto smooth = torch::randn({1, 1, 8, 8});
  smooth = bilinear_resize(smooth, 64, 64);
  auto down = prefiltered_downsample(smooth, 4);
  CHECK(std::abs(down.mean().item<double>() - smooth.mean().item<double>()) <
        0.02);
}

TEST_CASE("prefilter attenuates a pure alias component") {
  // Nyquist-rate checkerboard at full resolution aliases to a constant
  // under naive subsampling but should be almost erased by the prefilter.
  int64_t n = 64;
  auto row = torch::arange(n, torch::kFloat32);
  auto checker = ((row.view({n, 1}) + row.view({1, n})).remainder(2) * 2 - 1)
                     .view({1, 1, n, n});
  auto naive = naive_downsample(checker, 4);
  auto filtered = prefiltered_downsample(checker, 4);
  CHECK(naive.abs().mean().item<double>() ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(filtered.abs().mean().item<double>() < 0.05);
}

TEST_CASE("downsampled noise has less high-band energy with the prefilter") {
  torch::manual_seed(11);
  auto x = torch::randn({1, 1, 128, 128});
  auto a = prefiltered_downsample(x, 4);
  auto b = naive_downsample(x, 4);
  CHECK(highband_energy(a, 0.35) < 0.2 * highband_energy(b, 0.35));
}

TEST_CASE("resize_conditioning picks the right path") {
  torch::manual_seed(2);
  auto x = torch::randn({9 * 3, 16, 16});
  // identity at native resolution
  auto same = resize_conditioning(x, 16, 16);
  CHECK((same - x).abs().max().item<double>() == 0.0);
  // minification matches the prefiltered downsample
  auto down = resize_conditioning(x, 8, 8);
  auto expect = prefiltered_downsample(x.unsqueeze(0), 2).squeeze(0);
  CHECK((down - expect).abs().max().item<double>() < 1e-6);
  // magnification matches bilinear
  auto up = resize_conditioning(x, 32, 32);
  auto expect_up = bilinear_resize(x, 32, 32);
  CHECK((up - expect_up).abs().max().item<double>() < 1e-6);
}

TEST_CASE("bilinear resize aligns sample centers (align_corners=false)") {
  // Upsampling a 2-sample ramp by 2 gives the standard half-sample offsets.
  auto x = torch::tensor({{0.0f, 1.0f}}).view({1, 1, 1, 2});
  auto y = bilinear_resize(x, 1, 4).view({4});
  CHECK(y[0].item<float>() == doctest::Approx(0.0));
  CHECK(y[1].item<float>() == doctest::Approx(0.25));
  CHECK(y[2].item<float>() == doctest::Approx(0.75));
  CHECK(y[3].item<float>() == doctest::Approx(1.0));
}
