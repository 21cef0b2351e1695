// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Heavier end-to-end runs (criterion 10) write their artifacts under
// the system temp directory and later criteria reuse them.

#include <torch/torch.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "longvid/augment.hpp"
#include "longvid/checkpoint.hpp"
#include "longvid/config.hpp"
#include "longvid/data.hpp"
#include "longvid/filterbank.hpp"
#include "longvid/lowres_discriminator.hpp"
#include "longvid/lowres_generator.hpp"
#include "longvid/metrics.hpp"
#include "longvid/resample.hpp"
#include "longvid/superres.hpp"
#include "longvid/training.hpp"

using namespace longvid;
namespace fs = std::filesystem;

namespace {

fs::path g_work;           // scratch root for this run
fs::path g_lowres_ckpt;    // produced by criterion 10, used by 11
fs::path g_lowres_store;   // synthetic dataset for the low-res phase

int64_t env_int(const char* name, int64_t fallback) {
  const char* v = std::getenv(name);
  return v ? std::stoll(v) : fallback;
}

// Desk-scale generator used by criteria 2, 3 and 10: 32x32 output,
// temporal divisor 32, channel schedule at 1/8 width.
SynthesisConfig desk_synthesis() {
  SynthesisConfig c;
  c.channels = {64, 64, 64, 32, 32, 16, 16};
  c.scales = {{2, 1}, {2, 1}, {2, 2}, {2, 2}, {1, 2}, {2, 1}, {1, 1}};
  c.base_size = 4;
  c.temporal_divisor = 32;
  c.out_h = 32;
  c.out_w = 32;
  c.w_dim = 64;
  c.mapping_hidden = 64;
  return c;
}

FilterBank desk_bank() { return design_bank(16, 4, 64); }

double fvd16_of_generator(LowresGenerator& gen, const ClipStore& store,
                          int64_t segments, uint64_t seed) {
  torch::NoGradGuard ng;
  gen->eval();
  const auto& cfg = gen->config();
  int64_t ctx = context_padding(gen->bank());
  auto real_src = store_segment_source(store, /*low=*/true);
  SegmentSource gen_src = [&](int64_t len, torch::Generator& rng) {
    int64_t div = cfg.temporal_divisor;
    int64_t t_gen = ((len + div - 1) / div) * div;
    uint64_t s = static_cast<uint64_t>(
        torch::randint(0, int64_t(1) << 62, {1}, rng).item<int64_t>());
    auto z = sample_noise_window(s, 0, t_gen + 2 * ctx);
    auto clip = gen->forward(z.values.unsqueeze(0), t_gen).squeeze(0);
    int64_t start =
        t_gen == len
            ? 0
            : torch::randint(0, t_gen - len + 1, {1}, rng).item<int64_t>();
    return clip.slice(0, start, start + len);
  };
  auto extractor = make_random_video_extractor(17, 64);
  return fvd(real_src, gen_src, 16, segments, *extractor, seed);
}

bool criterion_1(std::string& detail) {
  auto bank = design_bank(128, 500, 10000);
  for (int64_t i = 0; i < 128; ++i) {
    double k = 500.0 * std::pow(20.0, static_cast<double>(i) / 127.0);
    if (bank.filters[i].size(0) != round_to_odd(k)) {
      detail = "tap count mismatch at filter " + std::to_string(i);
      return false;
    }
    double dc = bank.filters[i].sum().item<double>();
    if (std::abs(dc - 1.0) > 1e-6) {
      detail = "DC gain off at filter " + std::to_string(i);
      return false;
    }
  }
  // naive convolution oracle on a short window, spot-checked filters
  torch::manual_seed(100);
  int64_t t_len = 96;
  NoiseStream z{torch::randn({t_len, 2}, torch::kFloat64), 0};
  auto enriched = enrich(z, bank);
  for (int64_t i : {0L, 63L, 127L}) {
    const auto& f = bank.filters[i];
    int64_t half = f.size(0) / 2;
    auto facc = f.accessor<double, 1>();
    for (int64_t t : {0L, 47L, 95L}) {
      double acc = 0.0;
      for (int64_t j = 0; j < f.size(0); ++j) {
        int64_t src = t + j - half;
        if (src >= 0 && src < t_len) {
          acc += facc[f.size(0) - 1 - j] * z.values[src][0].item<double>();
        }
      }
      double got = enriched.values[t][i][0].item<double>();
      if (std::abs(got - acc) > 1e-5) {
        detail = "conv oracle mismatch, filter " + std::to_string(i);
        return false;
      }
    }
  }
  return true;
}

bool criterion_2(std::string& detail) {
  torch::manual_seed(200);
  // 32x32 output and a k_max=64 bank as in the deep desk generator, but a
  // shallow temporal schedule: the deep schedule's synthesis reach exceeds
  // +-T/2, which leaves no interior frames to compare at a 32-frame shift.
  SynthesisConfig sc;
  sc.channels = {64, 32, 32, 16};
  sc.scales = {{2, 2}, {2, 2}, {1, 2}, {1, 1}};
  sc.base_size = 4;
  sc.temporal_divisor = 4;
  sc.out_h = 32;
  sc.out_w = 32;
  sc.w_dim = 64;
  sc.mapping_hidden = 64;
  auto g = LowresGenerator(desk_bank(), sc);
  g->eval();
  torch::NoGradGuard ng;
  int64_t ctx = context_padding(g->bank());
  const int64_t t_len = 64, shift = 32;
  auto za = sample_noise_window(9001, -ctx, t_len + shift + 2 * ctx);
  auto zb = sample_noise_window(9001, shift - ctx, t_len + 2 * ctx);
  auto a = g->generate(za, t_len + shift);  // frames [0, 96)
  auto b = g->generate(zb, t_len);          // frames [32, 96)
  auto [lo, hi] = synthesis_latent_interval(g->config());
  int64_t margin = std::max(-lo, hi) + 2;
  int64_t first = margin, last = t_len - margin;  // indices into b
  if (first >= last) {
    detail = "margin leaves no interior frames";
    return false;
  }
  auto mid_a = a.slice(0, shift + first, shift + last);
  auto mid_b = b.slice(0, first, last);
  double diff = (mid_a - mid_b).abs().max().item<double>();
  std::ostringstream os;
  os << "max interior diff " << diff;
  detail = os.str();
  return diff <= 1e-4;
}

bool criterion_3(std::string& detail) {
  torch::manual_seed(300);
  auto g = LowresGenerator(desk_bank(), desk_synthesis());
  int64_t analytic = analytic_receptive_field(g->config(), g->bank());
  int64_t measured = measure_receptive_field(g);
  std::ostringstream os;
  os << "analytic " << analytic << ", measured " << measured;
  detail = os.str();
  return analytic == measured;
}

bool criterion_4(std::string& detail) {
  torch::NoGradGuard ng;
  auto bank = design_bank(4, 4, 16);
  int64_t ctx = context_padding(bank);

  SynthesisConfig square;  // full block schedule at 1/8 width
  square = square.scaled_channels(8);
  auto g_sq = LowresGenerator(bank, square);
  g_sq->eval();
  for (int64_t t : {32L, 64L, 128L}) {
    auto z = sample_noise_window(42, -ctx, t + 2 * ctx);
    auto out = g_sq->generate(z, t);
    if (out.sizes() != torch::IntArrayRef({t, 3, 64, 64})) {
      detail = "square output shape wrong at T=" + std::to_string(t);
      return false;
    }
  }

  SynthesisConfig wide = square;
  wide.out_h = 36;
  wide.out_w = 64;
  auto g_wide = LowresGenerator(bank, wide);
  g_wide->eval();
  for (int64_t t : {32L, 64L, 128L}) {
    auto z = sample_noise_window(43, -ctx, t + 2 * ctx);
    auto out = g_wide->generate(z, t);
    if (out.sizes() != torch::IntArrayRef({t, 3, 36, 64})) {
      detail = "widescreen output shape wrong at T=" + std::to_string(t);
      return false;
    }
  }

  SRConfig sr;
  sr.low_h = 8;
  sr.low_w = 8;
  sr.latent_dim = 16;
  sr.w_dim = 16;
  sr.stage_channels = {16, 8, 8, 8};
  auto srg = SrGenerator(sr);
  auto frame = srg->forward(torch::randn({1, 9, 3, 8, 8}),
                            torch::randn({1, 16}));
  if (frame.sizes() != torch::IntArrayRef({1, 3, 32, 32})) {
    detail = "super-res factor is not exactly 4x";
    return false;
  }

  DiscConfig dc;
  auto channels = dc.channel_trace();
  if (channels != std::vector<int64_t>{128, 256, 512, 512}) {
    detail = "discriminator channel trace mismatch";
    return false;
  }
  auto temporal = dc.temporal_trace();
  if (temporal != std::vector<int64_t>{128, 128, 64, 32, 16}) {
    detail = "discriminator temporal trace mismatch";
    return false;
  }
  return true;
}

bool criterion_5(std::string& detail) {
  torch::manual_seed(500);
  // linear critic: penalty must be (gamma/2) |k|^2 exactly
  auto k = torch::randn({12});
  double bias = 0.3, gamma = 4.0;
  auto linear = [&](const torch::Tensor& x) { return x.matmul(k) + bias; };
  double got = r1_penalty(linear, torch::randn({6, 12}), gamma).item<double>();
  double expect = gamma / 2.0 * k.dot(k).item<double>();
  if (std::abs(got - expect) > 1e-4 * std::abs(expect)) {
    detail = "linear critic penalty mismatch";
    return false;
  }

  // 3-layer critic vs central finite differences of the logits
  auto net = torch::nn::Sequential(
      torch::nn::Linear(10, 16),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
      torch::nn::Linear(16, 16),
      torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)),
      torch::nn::Linear(16, 1));
  auto critic = [&](const torch::Tensor& x) {
    return net->forward(x).squeeze(1);
  };
  auto batch = torch::randn({4, 10}, torch::kFloat64);
  net->to(torch::kFloat64);
  double autodiff = r1_penalty(critic, batch, 1.0).item<double>();

  double eps = 1e-5, fd_total = 0.0;
  {
    torch::NoGradGuard ng;
    for (int64_t n = 0; n < 4; ++n) {
      double norm_sq = 0.0;
      for (int64_t i = 0; i < 10; ++i) {
        auto plus = batch.clone();
        auto minus = batch.clone();
        plus[n][i] += eps;
        minus[n][i] -= eps;
        double d = (critic(plus)[n] - critic(minus)[n]).item<double>() /
                   (2 * eps);
        norm_sq += d * d;
      }
      fd_total += norm_sq;
    }
  }
  double fd = 0.5 * fd_total / 4.0;
  std::ostringstream os;
  os << "autodiff " << autodiff << ", finite difference " << fd;
  detail = os.str();
  return std::abs(autodiff - fd) <= 1e-3 * std::abs(fd);
}

bool criterion_6(std::string& detail) {
  struct W : torch::nn::Module {
    torch::Tensor w;
    W() {
      // float64: a thousand float32 lerps accumulate ~1e-6 of rounding,
      // above the 1e-7 tolerance of the closed form
      w = register_parameter("w", torch::zeros({4}, torch::kFloat64));
    }
  };
  W ema, cur;
  {
    torch::NoGradGuard ng;
    cur.w.fill_(1.0);
  }
  double beta = 0.99985;
  int n = 1000;
  for (int i = 0; i < n; ++i) ema_update(ema, cur, beta);
  double expect = 1.0 - std::pow(beta, n);
  double got = ema.w[0].item<double>();
  std::ostringstream os;
  os << "ema " << got << ", closed form " << expect;
  detail = os.str();
  return std::abs(got - expect) <= 1e-7;
}

bool criterion_7(std::string& detail) {
  // exact self-similarity
  auto frame = torch::rand({3, 8, 8}) * 2 - 1;
  auto clip0 = torch::stack({frame, frame}, 0);
  if (std::abs(color_similarity(clip0, 0) - 1.0) > 1e-12 ||
      std::abs(color_similarity(clip0, 1) - 1.0) > 1e-12) {
    detail = "self similarity is not 1";
    return false;
  }

  // brute-force oracle on 100 random 4x4 pairs
  torch::manual_seed(700);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = torch::rand({3, 4, 4}) * 2 - 1;
    auto b = torch::rand({3, 4, 4}) * 2 - 1;
    int64_t n = 20;
    std::vector<double> ha(n * n * n, 0.0), hb(n * n * n, 0.0);
    auto fill = [&](const torch::Tensor& img, std::vector<double>& h) {
      for (int64_t y = 0; y < 4; ++y) {
        for (int64_t x = 0; x < 4; ++x) {
          int64_t idx = 0;
          for (int64_t c = 0; c < 3; ++c) {
            double v = img[c][y][x].item<double>();
            int64_t bin = std::min<int64_t>(
                n - 1,
                static_cast<int64_t>(std::floor((v + 1.0) / 2.0 * n)));
            idx = idx * n + bin;
          }
          h[idx] += 1.0 / 16.0;
        }
      }
    };
    fill(a, ha);
    fill(b, hb);
    double expect = 0.0;
    for (size_t i = 0; i < ha.size(); ++i) expect += std::min(ha[i], hb[i]);
    double got = torch::minimum(color_histogram(a), color_histogram(b))
                     .sum()
                     .item<double>();
    if (std::abs(got - expect) > 1e-9) {
      detail = "histogram oracle mismatch at trial " + std::to_string(trial);
      return false;
    }
  }

  // downward trend on the synthetic scrolling dataset
  SyntheticSceneSpec spec;
  auto curve = similarity_curve(
      [&](int64_t i) {
        return render_synthetic_clip(spec, static_cast<uint64_t>(i), 128, 32,
                                     48);
      },
      8);
  double s1 = curve.mean[1].item<double>();
  double s127 = curve.mean[127].item<double>();
  std::ostringstream os;
  os << "S(.,1) " << s1 << ", S(.,127) " << s127;
  detail = os.str();
  return s1 - s127 > 0.05;
}

bool criterion_8(std::string& detail) {
  auto make = [](double mean, double var) {
    FrechetStats s;
    s.mean = torch::tensor({mean}, torch::kFloat64);
    s.cov = torch::tensor({{var}}, torch::kFloat64);
    return s;
  };
  if (std::abs(frechet_distance(make(0, 4), make(0, 1)) - 1.0) > 1e-8) {
    detail = "1-D closed form failed";
    return false;
  }
  if (std::abs(frechet_distance(make(0.5, 2), make(0.5, 2))) > 1e-8) {
    detail = "self distance not zero";
    return false;
  }

  auto root = g_work / "fidv_store";
  fs::remove_all(root);
  auto store = ClipStore::create(root, 30.0, {4, 4}, {16, 16});
  torch::manual_seed(800);
  for (int i = 0; i < 3; ++i) {
    store.append_clip("c" + std::to_string(i),
                      torch::rand({5, 3, 16, 16}) * 2 - 1);
  }
  auto extractor = make_random_frame_extractor(17, 6);
  auto gen_frames = torch::rand({9, 3, 16, 16}) * 2 - 1;
  auto gen_fn = [&](int64_t i) { return gen_frames[i]; };
  double weighted = fid_v(store, gen_fn, 9, *extractor, false);
  std::vector<torch::Tensor> feats, gfeats;
  for (int64_t c = 0; c < 3; ++c) {
    auto frames = store.load_frames(c, 0, 5, false);
    for (int64_t t = 0; t < 5; ++t) {
      feats.push_back(extractor->extract(frames[t]));
    }
  }
  for (int64_t i = 0; i < 9; ++i) {
    gfeats.push_back(extractor->extract(gen_frames[i]));
  }
  double plain = frechet_distance(fit_stats(torch::stack(feats, 0)),
                                  fit_stats(torch::stack(gfeats, 0)));
  if (std::abs(weighted - plain) > 1e-10 * std::max(1.0, std::abs(plain))) {
    detail = "FID_V differs from unweighted FID on equal-length clips";
    return false;
  }

  // mixed lengths: weights equal a resampled multiset (short frames twice)
  auto root2 = g_work / "fidv_store2";
  fs::remove_all(root2);
  auto store2 = ClipStore::create(root2, 30.0, {4, 4}, {16, 16});
  store2.append_clip("short", torch::rand({3, 3, 16, 16}) * 2 - 1);
  store2.append_clip("long", torch::rand({6, 3, 16, 16}) * 2 - 1);
  double weighted2 = fid_v(store2, gen_fn, 9, *extractor, false);
  std::vector<torch::Tensor> multiset;
  auto s = store2.load_frames(0, 0, 3, false);
  auto l = store2.load_frames(1, 0, 6, false);
  for (int64_t t = 0; t < 3; ++t) {
    auto f = extractor->extract(s[t]);
    multiset.push_back(f);
    multiset.push_back(f);
  }
  for (int64_t t = 0; t < 6; ++t) multiset.push_back(extractor->extract(l[t]));
  double oracle = frechet_distance(fit_stats(torch::stack(multiset, 0)),
                                   fit_stats(torch::stack(gfeats, 0)));
  std::ostringstream os;
  os << "mixed-length weighted " << weighted2 << ", multiset oracle "
     << oracle;
  detail = os.str();
  return std::abs(weighted2 - oracle) <= 1e-8 * std::max(1.0, std::abs(oracle));
}

bool criterion_9(std::string& detail) {
  AugPolicy policy;
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>(900);

  // frame count over 10^4 random draws (1-pixel frames keep this cheap)
  auto video = torch::randn({128, 1, 1, 1});
  for (int i = 0; i < 10000; ++i) {
    if (time_stretch(video, policy, gen).size(0) != 128) {
      detail = "time_stretch changed the frame count";
      return false;
    }
  }

  // impulse position follows the index arithmetic of stretch + crop/pad
  for (double factor : {0.5, 0.8, 1.3, 2.0}) {
    for (int64_t p : {10L, 64L, 100L}) {
      auto imp = torch::zeros({128, 1, 1, 1});
      imp[p] = 1.0;
      int64_t stretched = std::llround(128 * factor);
      int64_t offset = stretched >= 128 ? std::min<int64_t>(20, stretched - 128)
                                        : 20;
      auto out = time_stretch_with(imp, factor, offset).view({128});
      // sample j of the stretched clip reads position (j + 0.5)/factor - 0.5
      double pos = (static_cast<double>(p) + 0.5) * stretched / 128.0 - 0.5;
      int64_t expect = stretched >= 128
                           ? std::llround(pos) - offset
                           : std::llround(pos) + offset;
      int64_t got = out.argmax().item<int64_t>();
      if (expect < 0 || expect >= 128) continue;  // impulse cropped away
      if (std::abs(got - expect) > 1) {
        std::ostringstream os;
        os << "impulse at " << p << " factor " << factor << ": got " << got
           << ", expected " << expect;
        detail = os.str();
        return false;
      }
    }
  }

  // per-clip DiffAug transform identical for every frame, every draw
  auto frame = torch::rand({3, 16, 16}) * 2 - 1;
  auto clip = frame.unsqueeze(0).expand({8, 3, 16, 16}).contiguous();
  for (int i = 0; i < 300; ++i) {
    auto out = diffaug_clip(clip, policy, gen);
    auto diff = (out - out[0].unsqueeze(0)).abs().max().item<double>();
    if (diff != 0.0) {
      detail = "DiffAug transform varies across frames";
      return false;
    }
  }

  // conditioning dropout rate 0.9 +- 0.01 over 10^4 trials
  auto low4 = torch::ones({10000, 4, 3, 2, 2});
  auto dropped = condition_dropout(low4, 0.9, gen);
  double rate = (dropped.reshape({10000, -1}).abs().sum(1) == 0)
                    .to(torch::kFloat64)
                    .mean()
                    .item<double>();
  std::ostringstream os;
  os << "dropout rate " << rate;
  detail = os.str();
  return std::abs(rate - 0.9) <= 0.01;
}

bool criterion_10(std::string& detail) {
  int64_t lowres_steps = env_int("LONGVID_ACCEPT_LOWRES_STEPS", 1500);
  int64_t sr_steps = env_int("LONGVID_ACCEPT_SR_STEPS", 250);
  int64_t segments = env_int("LONGVID_ACCEPT_FVD_SEGMENTS", 24);

  // synthetic dataset at 32x32 low resolution
  g_lowres_store = g_work / "train_store";
  fs::remove_all(g_lowres_store);
  SyntheticSceneSpec spec;
  spec.duration = 128;
  auto store = generate_synthetic(spec, 12, g_lowres_store, {32, 32},
                                  {128, 128});

  ExperimentConfig cfg;
  cfg.data_root = g_lowres_store.string();
  cfg.bank = {16, 4, 64, 8.0};
  cfg.synthesis = desk_synthesis();
  cfg.disc.base_channels = 16;  // 128 / 8
  cfg.disc.max_channels = 64;
  cfg.disc.hidden = 64;
  cfg.augment.max_translate = 4;
  cfg.train_lowres.batch = 8;
  cfg.train_lowres.seq_len = 32;
  cfg.train_lowres.max_steps = lowres_steps;
  cfg.train_lowres.eval_interval = 100;
  cfg.train_lowres.eval_segments = segments;
  cfg.train_lowres.eval_segment_len = 16;
  cfg.train_lowres.seed = 1000;
  // desk-scale stability: the paper-scale EMA horizon (beta = 0.99985,
  // ~6700 steps) would leave the EMA mostly at its init inside this budget,
  // and sparse heavily-compensated R1 spikes destabilize the small model
  cfg.train_lowres.ema_beta = 0.995;
  cfg.train_lowres.r1_gamma = 1.0;
  cfg.train_lowres.r1_interval = 4;
  // paper-scale rates assume batch 64; at batch 8 they oscillate
  cfg.train_lowres.lr_g = 0.001;
  cfg.train_lowres.lr_d = 0.001;
  cfg.train_lowres.logit_drift = 1e-3;

  // FVD_16 of the untrained EMA model (same init seed as the training run)
  torch::manual_seed(cfg.train_lowres.seed);
  auto bank = design_bank(cfg.bank.n_filters, cfg.bank.k_min, cfg.bank.k_max,
                          cfg.bank.beta);
  double fvd_untrained;
  {
    auto g0 = LowresGenerator(bank, cfg.synthesis);
    fvd_untrained = fvd16_of_generator(g0, store, segments, 4242);
  }

  auto run_dir = g_work / "lowres_run";
  fs::remove_all(run_dir);
  auto result = train_lowres(cfg, store, run_dir);
  g_lowres_ckpt = result.best_checkpoint;
  auto ckpt = load_lowres_checkpoint(g_lowres_ckpt);
  double fvd_trained =
      fvd16_of_generator(ckpt.generator_ema, store, segments, 4242);

  std::ostringstream os;
  os << "FVD16 untrained " << fvd_untrained << ", trained " << fvd_trained;

  bool ok_a = fvd_trained * 3.0 <= fvd_untrained;

  // (b) decreasing color-similarity curve of generated videos
  int64_t ctx = context_padding(bank);
  auto& g_ema = ckpt.generator_ema;
  g_ema->eval();
  torch::NoGradGuard ng;
  auto curve = similarity_curve(
      [&](int64_t i) {
        auto z = sample_noise_window(5000 + i, -ctx, 32 + 2 * ctx);
        return g_ema->generate(z, 32);
      },
      8);
  double s1 = curve.mean[1].item<double>();
  double s31 = curve.mean[31].item<double>();
  bool ok_b = s1 - s31 > 0.02;
  os << "; gen S(.,1) " << s1 << ", S(.,31) " << s31;

  // temporal sensitivity of the trained discriminator
  auto data_gen = torch::make_generator<torch::CPUGeneratorImpl>(77);
  double ordered = 0.0, shuffled = 0.0;
  for (int i = 0; i < 8; ++i) {
    auto clip = sample_clip(store, 32, data_gen, true).unsqueeze(0);
    ordered += ckpt.discriminator->forward(clip).item<double>();
    auto perm = torch::randperm(32, data_gen);
    shuffled +=
        ckpt.discriminator->forward(clip.index_select(1, perm)).item<double>();
  }
  bool ok_d = ordered > shuffled;
  os << "; D logit ordered " << ordered / 8 << ", shuffled " << shuffled / 8;

  // (c) super-res with real conditioning beats the bilinear baseline
  bool ok_c;
  {
    auto sr_store_root = g_work / "sr_store";
    fs::remove_all(sr_store_root);
    SyntheticSceneSpec sr_spec;
    sr_spec.duration = 96;
    auto sr_store =
        generate_synthetic(sr_spec, 8, sr_store_root, {16, 16}, {64, 64});

    ExperimentConfig sr_cfg;
    sr_cfg.data_root = sr_store_root.string();
    sr_cfg.superres.low_h = 16;
    sr_cfg.superres.low_w = 16;
    sr_cfg.superres.latent_dim = 64;
    sr_cfg.superres.w_dim = 64;
    sr_cfg.superres.stage_channels = {32, 16, 8, 8};
    sr_cfg.superres.disc_base_channels = 16;
    sr_cfg.superres.disc_max_channels = 64;
    sr_cfg.superres.disc_hidden = 64;
    sr_cfg.train_superres.batch = 4;
    sr_cfg.train_superres.max_steps = sr_steps;
    sr_cfg.train_superres.eval_interval = std::max<int64_t>(50, sr_steps / 5);
    sr_cfg.train_superres.eval_segments = std::min<int64_t>(segments, 16);
    sr_cfg.train_superres.eval_segment_len = 16;
    sr_cfg.train_superres.seed = 1001;
    sr_cfg.train_superres.ema_beta = 0.99;
    sr_cfg.train_superres.r1_interval = 4;
    sr_cfg.train_superres.logit_drift = 1e-3;

    auto sr_run = g_work / "sr_run";
    fs::remove_all(sr_run);
    torch::AutoGradMode enable(true);
    auto sr_result = train_superres(sr_cfg, sr_store, sr_run);
    auto sr_ckpt = load_sr_checkpoint(sr_result.best_checkpoint);
    sr_ckpt.generator_ema->eval();

    auto extractor = make_random_video_extractor(17, 64);
    auto real_src = store_segment_source(sr_store, /*low=*/false);
    auto pick_low = [&](int64_t len, torch::Generator& rng, int64_t& t_out,
                        int64_t& lo_out) {
      int64_t c = torch::randint(
                      0, static_cast<int64_t>(sr_store.clips().size()), {1},
                      rng)
                      .item<int64_t>();
      int64_t clip_len = sr_store.clips()[c].frames;
      int64_t t = torch::randint(0, clip_len - len + 1, {1}, rng)
                      .item<int64_t>();
      int64_t lo = std::max<int64_t>(0, t - ConditioningStack::kReach);
      int64_t hi =
          std::min<int64_t>(clip_len, t + len + ConditioningStack::kReach);
      t_out = t;
      lo_out = lo;
      return sr_store.load_frames(c, lo, hi - lo, /*low=*/true);
    };
    SegmentSource sr_src = [&](int64_t len, torch::Generator& rng) {
      int64_t t, lo;
      auto low_win = pick_low(len, rng, t, lo);
      auto latent = torch::randn({sr_cfg.superres.latent_dim}, rng,
                                 torch::kFloat32);
      auto out = sr_ckpt.generator_ema->upsample_video(low_win, latent);
      return out.slice(0, t - lo, t - lo + len);
    };
    SegmentSource bilinear_src = [&](int64_t len, torch::Generator& rng) {
      int64_t t, lo;
      auto low_win = pick_low(len, rng, t, lo);
      auto up = bilinear_resize(low_win, 64, 64);
      return up.slice(0, t - lo, t - lo + len);
    };
    int64_t n_seg = std::min<int64_t>(segments, 16);
    double fvd_sr = fvd(real_src, sr_src, 16, n_seg, *extractor, 4343);
    double fvd_bilinear =
        fvd(real_src, bilinear_src, 16, n_seg, *extractor, 4343);
    ok_c = fvd_sr < fvd_bilinear;
    os << "; SR FVD16 " << fvd_sr << ", bilinear " << fvd_bilinear;
  }

  detail = os.str();
  return ok_a && ok_b && ok_c && ok_d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool criterion_11(std::string& detail) {
#ifndef LONGVID_CLI_PATH
  detail = "CLI path not configured";
  return false;
#else
  if (g_lowres_ckpt.empty() || !fs::exists(g_lowres_ckpt / "manifest.json")) {
    detail = "no trained checkpoint from criterion 10";
    return false;
  }
  const std::string cli = LONGVID_CLI_PATH;
  auto out1 = g_work / "gen1";
  auto out2 = g_work / "gen2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  auto run = [&](const std::string& cmd) {
    return std::system((cmd + " > /dev/null 2>&1").c_str());
  };
  std::string base = cli + " generate --ckpt " + g_lowres_ckpt.string() +
                     " --frames 8 --offset 16 --seed 5 --out ";
  if (run(base + out1.string()) != 0 || run(base + out2.string()) != 0) {
    detail = "generate command failed";
    return false;
  }
  if (slurp(out1 / "000003.png") != slurp(out2 / "000003.png") ||
      slurp(out1 / "meta.json") != slurp(out2 / "meta.json")) {
    detail = "generate output differs between identical runs";
    return false;
  }

  auto ev1 = g_work / "eval1";
  auto ev2 = g_work / "eval2";
  fs::remove_all(ev1);
  fs::remove_all(ev2);
  std::string eval_base = cli + " evaluate --mode fvd16 --real " +
                          g_lowres_store.string() + " --ckpt " +
                          g_lowres_ckpt.string() +
                          " --seed 7 --segments 6 --out ";
  if (run(eval_base + ev1.string()) != 0 ||
      run(eval_base + ev2.string()) != 0) {
    detail = "evaluate command failed";
    return false;
  }
  if (slurp(ev1 / "result.json") != slurp(ev2 / "result.json")) {
    detail = "evaluate metric JSON differs between identical runs";
    return false;
  }
  detail = "generate and evaluate outputs bit-identical";
  return true;
#endif
}

}  // namespace

int main() {
  torch::set_num_threads(std::max(1u, std::thread::hardware_concurrency()));
  g_work = fs::temp_directory_path() / "longvid_acceptance";
  fs::create_directories(g_work);

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  std::vector<Criterion> criteria = {
      {1, "filter bank schedule, DC gain and convolution oracle", criterion_1},
      {2, "temporal shift equivariance of the generator", criterion_2},
      {3, "measured receptive field equals the analytic value", criterion_3},
      {4, "shape contracts for generators and discriminator traces",
       criterion_4},
      {5, "R1 penalty against finite differences and the linear closed form",
       criterion_5},
      {6, "EMA closed form at n=1000", criterion_6},
      {7, "color similarity oracle and downward trend on synthetic data",
       criterion_7},
      {8, "Frechet distance closed forms and FID_V weighting", criterion_8},
      {9, "augmentation contracts (stretch, DiffAug, dropout rate)",
       criterion_9},
      {10, "end-to-end desk training improves FVD, content drift and SR",
       criterion_10},
      {11, "CLI reproducibility with fixed seeds", criterion_11},
  };

  int failures = 0;
  for (auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << "criterion " << c.id << " (" << c.name
              << "): " << (ok ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << " [" << detail << "]";
    std::cout << std::endl;
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
