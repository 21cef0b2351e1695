#include "longvid/augment.hpp"

// doctest last: torch headers define a fatal CHECK macro that must not win
#include "doctest.h"

using namespace longvid;

TEST_CASE("diffaug parameters stay in their documented ranges") {
  AugPolicy policy;
  policy.max_translate = 4;
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>(1);
  for (int i = 0; i < 200; ++i) {
    auto p = sample_diffaug(policy, 32, 32, gen);
    CHECK(p.brightness >= -0.5);
    CHECK(p.brightness <= 0.5);
    CHECK(p.saturation >= 0.0);
    CHECK(p.saturation <= 2.0);
    CHECK(p.contrast >= 0.5);
    CHECK(p.contrast <= 1.5);
    CHECK(std::abs(p.shift_x) <= 4);
    CHECK(std::abs(p.shift_y) <= 4);
    CHECK(p.cut_size == 16);
    CHECK(p.cut_x >= 0);
    CHECK(p.cut_x + p.cut_size <= 32);
  }
}

TEST_CASE("one transform per category, shared by all frames") {
  AugPolicy policy;
  policy.max_translate = 2;
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>(7);
  auto frame = torch::rand({3, 16, 16}) * 2 - 1;
  auto video = frame.unsqueeze(0).expand({6, 3, 16, 16}).contiguous();
  auto out = diffaug_clip(video, policy, gen);
  for (int64_t t = 1; t < 6; ++t) {
    CHECK((out[t] - out[0]).abs().max().item<double>() == 0.0);
  }
  CHECK(out.max().item<double>() <= 1.0);
  CHECK(out.min().item<double>() >= -1.0);
}

TEST_CASE("translation pads with zeros") {
  DiffAugParams p;
  p.shift_x = 2;
  p.shift_y = 0;
  auto video = torch::ones({1, 3, 8, 8});
  auto out = apply_diffaug(video, p);
  CHECK(out.index({0, 0, 0, 0}).item<float>() == 0.0f);
  CHECK(out.index({0, 0, 0, 1}).item<float>() == 0.0f);
  CHECK(out.index({0, 0, 0, 2}).item<float>() == 1.0f);
}

TEST_CASE("cutout zeroes exactly a half-size square") {
  DiffAugParams p;
  p.cut_size = 4;
  p.cut_x = 1;
  p.cut_y = 2;
  auto video = torch::ones({2, 3, 8, 8});
  auto out = apply_diffaug(video, p);
  CHECK(out.sum().item<double>() ==
        doctest::Approx(2 * 3 * (64 - 16)).epsilon(1e-9));
  CHECK(out.index({0, 0, 2, 1}).item<float>() == 0.0f);
  CHECK(out.index({0, 0, 1, 1}).item<float>() == 1.0f);
}

TEST_CASE("time stretch: identity factor is exact") {
  auto video = torch::randn({10, 3, 4, 4});
  auto out = time_stretch_with(video, 1.0, 0);
  CHECK((out - video).abs().max().item<double>() < 1e-6);
}

TEST_CASE("time stretch: compression pads with zeros at the offset") {
  auto video = torch::ones({12, 1, 2, 2});
  auto out = time_stretch_with(video, 0.5, 3);
  REQUIRE(out.size(0) == 12);
  // frames [3, 9) hold the 6 compressed frames, the rest are zero
  CHECK(out.slice(0, 0, 3).abs().max().item<double>() == 0.0);
  CHECK(out.slice(0, 9, 12).abs().max().item<double>() == 0.0);
  CHECK(out.slice(0, 3, 9).min().item<double>() > 0.5);
}

TEST_CASE("time stretch: expansion crops a window of the stretched clip") {
  // a ramp in time stays a ramp with roughly doubled sample spacing
  int64_t t_len = 16;
  auto ramp = torch::arange(t_len, torch::kFloat32).view({t_len, 1, 1, 1});
  auto out = time_stretch_with(ramp, 2.0, 5).view({t_len});
  auto diffs = out.slice(0, 1, t_len) - out.slice(0, 0, t_len - 1);
  CHECK(diffs.min().item<float>() > 0.0f);
  CHECK(diffs.mean().item<float>() == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("random time stretch keeps the frame count") {
  AugPolicy policy;
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>(3);
  auto video = torch::randn({32, 3, 4, 4});
  for (int i = 0; i < 10; ++i) {
    auto out = time_stretch(video, policy, gen);
    CHECK(out.sizes() == video.sizes());
  }
}

TEST_CASE("conditioning corruption is identity at zero strength") {
  AugPolicy policy;
  policy.noise_std = 0.0;
  policy.scale_std = 0.0;
  policy.aniso_std = 0.0;
  policy.rotate_max = 0.0;
  policy.xfrac_std = 0.0;
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>(5);
  auto video = torch::rand({4, 3, 16, 16});
  auto out = corrupt_conditioning(video, policy, gen);
  CHECK((out - video).abs().max().item<double>() < 1e-5);
}

TEST_CASE("conditioning corruption shares parameters across frames") {
  AugPolicy policy;
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>(6);
  auto frame = torch::rand({3, 16, 16});
  auto video = frame.unsqueeze(0).expand({5, 3, 16, 16}).contiguous();
  for (int i = 0; i < 8; ++i) {
    auto out = corrupt_conditioning(video, policy, gen);
    for (int64_t t = 1; t < 5; ++t) {
      CHECK((out[t] - out[0]).abs().max().item<double>() < 1e-6);
    }
  }
}

TEST_CASE("ada controller integrates toward the target sign rate") {
  AdaController ada(0.01, 0.6, 0.85);
  CHECK(ada.probability() == 0.0);
  ada.update(0.0);  // below target keeps p clamped at zero
  CHECK(ada.probability() == 0.0);
  for (int i = 0; i < 10; ++i) ada.update(1.0);
  CHECK(ada.probability() == doctest::Approx(10 * 0.01 * 0.4).epsilon(1e-12));
  for (int i = 0; i < 10000; ++i) ada.update(1.0);
  CHECK(ada.probability() == 0.85);
}

TEST_CASE("paired augmentation is identity at p = 0 and consistent at p = 1") {
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>(8);
  auto low = torch::zeros({2, 4, 3, 16, 16});
  auto high = torch::zeros({2, 4, 3, 64, 64});
  auto [l0, h0] = ada_augment_pair(low, high, 0.0, gen);
  CHECK((l0 - low).abs().max().item<double>() == 0.0);
  CHECK((h0 - high).abs().max().item<double>() == 0.0);

  // on constant inputs every color transform acts identically at both
  // resolutions, so center pixels must stay equal
  for (int i = 0; i < 20; ++i) {
    auto [l1, h1] = ada_augment_pair(low, high, 1.0, gen);
    CHECK(l1.index({0, 0, 0, 8, 8}).item<float>() ==
          doctest::Approx(h1.index({0, 0, 0, 32, 32}).item<float>())
              .epsilon(1e-6));
  }
}
