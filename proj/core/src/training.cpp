#include "longvid/training.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "longvid/augment.hpp"
#include "longvid/metrics.hpp"
#include "longvid/resample.hpp"

namespace longvid {

namespace fs = std::filesystem;
using nlohmann::json;

torch::Tensor generator_loss(const torch::Tensor& fake_logits) {
  return torch::softplus(-fake_logits).mean();
}

torch::Tensor discriminator_loss(const torch::Tensor& real_logits,
                                 const torch::Tensor& fake_logits) {
  return torch::softplus(-real_logits).mean() +
         torch::softplus(fake_logits).mean();
}

torch::Tensor r1_penalty(
    const std::function<torch::Tensor(const torch::Tensor&)>& discriminator,
    const torch::Tensor& real_batch, double gamma) {
  auto x = real_batch.detach().requires_grad_(true);
  auto logits = discriminator(x);
  auto grad = torch::autograd::grad({logits.sum()}, {x},
                                    /*grad_outputs=*/{},
                                    /*retain_graph=*/true,
                                    /*create_graph=*/true)[0];
  auto per_sample = grad.pow(2).reshape({grad.size(0), -1}).sum(1);
  return per_sample.mean() * (gamma / 2.0);
}

void ema_update(torch::nn::Module& ema, const torch::nn::Module& current,
                double beta) {
  torch::NoGradGuard ng;
  auto e_params = ema.named_parameters();
  auto c_params = current.named_parameters();
  for (const auto& item : c_params) {
    auto* target = e_params.find(item.key());
    TORCH_CHECK(target != nullptr, "EMA parameter mismatch: ", item.key());
    target->mul_(beta).add_(item.value(), 1.0 - beta);
  }
  auto e_bufs = ema.named_buffers();
  for (const auto& item : current.named_buffers()) {
    auto* target = e_bufs.find(item.key());
    if (target != nullptr && target->is_floating_point()) {
      target->mul_(beta).add_(item.value(), 1.0 - beta);
    }
  }
}

namespace {

// Adversarial losses occasionally spike by orders of magnitude; if a spike
// overflows, skipping the update (instead of aborting a long run) lets the
// drift/R1 terms pull the game back on subsequent steps.
bool finite_loss(const torch::Tensor& loss) {
  return std::isfinite(loss.item<double>());
}

void append_metrics(const fs::path& path, const json& row) {
  std::ofstream f(path, std::ios::app);
  f << row.dump() << '\n';
}

uint64_t draw_seed(torch::Generator& gen) {
  return static_cast<uint64_t>(
      torch::randint(0, int64_t(1) << 62, {1}, gen, torch::kInt64)
          .item<int64_t>());
}

}  // namespace

TrainResult train_lowres(const ExperimentConfig& config, const ClipStore& store,
                         const fs::path& out_dir,
                         const std::optional<fs::path>& resume) {
  const TrainConfig& tc = config.train_lowres;
  SynthesisConfig synth = config.synthesis;
  synth.out_h = store.low_res().first;
  synth.out_w = store.low_res().second;
  synth.validate();
  TORCH_CHECK(tc.seq_len % synth.temporal_divisor == 0,
              "seq_len must be divisible by the temporal divisor");

  DiscConfig dc = config.disc;
  dc.in_t = tc.seq_len;
  dc.in_h = synth.out_h;
  dc.in_w = synth.out_w;

  fs::create_directories(out_dir);
  {
    ExperimentConfig resolved = config;
    resolved.synthesis = synth;
    resolved.disc = dc;
    dump_config(resolved, out_dir / "config.json");
  }

  torch::manual_seed(tc.seed);
  auto bank = design_bank(config.bank.n_filters, config.bank.k_min,
                          config.bank.k_max, config.bank.beta);
  LowresGenerator g(bank, synth);
  LowresGenerator g_ema(bank, synth);
  LowresDiscriminator d(dc);
  int64_t start_step = 0;

  if (resume) {
    auto ckpt = load_lowres_checkpoint(*resume);
    g = ckpt.generator;
    g_ema = ckpt.generator_ema;
    TORCH_CHECK(ckpt.discriminator, "resume checkpoint lacks a discriminator");
    d = ckpt.discriminator;
    start_step = ckpt.step;
  }
  {
    torch::NoGradGuard ng;
    if (!resume) {
      // EMA starts as an exact copy.
      auto src = g->named_parameters();
      for (auto& item : g_ema->named_parameters()) {
        item.value().copy_(*src.find(item.key()));
      }
    }
  }
  for (auto& p : g_ema->parameters()) p.set_requires_grad(false);

  torch::optim::Adam opt_g(
      g->parameters(),
      torch::optim::AdamOptions(tc.lr_g).betas({tc.beta1, tc.beta2}));
  torch::optim::Adam opt_d(
      d->parameters(),
      torch::optim::AdamOptions(tc.lr_d).betas({tc.beta1, tc.beta2}));
  auto data_gen = torch::make_generator<torch::CPUGeneratorImpl>(tc.seed + 1);
  if (resume) {
    load_lowres_optimizers(*resume, opt_g, opt_d);
    auto ckpt_rng = load_lowres_checkpoint(*resume);  // states only
    if (ckpt_rng.rng_state.defined()) {
      { auto def = at::detail::getDefaultCPUGenerator(); def.set_state(ckpt_rng.rng_state); }
    }
    if (ckpt_rng.data_rng_state.defined()) {
      data_gen.set_state(ckpt_rng.data_rng_state);
    }
  }

  const int64_t batch = tc.batch;
  const int64_t t_len = tc.seq_len;
  const int64_t ctx = context_padding(bank);
  const int64_t noise_c = NoiseStream::kChannels;
  const AugPolicy& policy = config.augment;

  auto sample_real = [&]() {
    std::vector<torch::Tensor> clips;
    clips.reserve(batch);
    for (int64_t i = 0; i < batch; ++i) {
      auto clip = sample_clip(store, t_len, data_gen, /*low=*/true);
      clips.push_back(time_stretch(clip, policy, data_gen));
    }
    return torch::stack(clips, 0);  // [B, T, 3, H, W]
  };

  auto save_state = [&](const fs::path& dir, int64_t step) {
    LowresCheckpoint ckpt;
    ckpt.step = step;
    ckpt.bank = config.bank;
    ckpt.synthesis = synth;
    ckpt.disc = dc;
    ckpt.train = tc;
    ckpt.generator = g;
    ckpt.generator_ema = g_ema;
    ckpt.discriminator = d;
    ckpt.rng_state = at::detail::getDefaultCPUGenerator().get_state();
    ckpt.data_rng_state = data_gen.get_state();
    save_lowres_checkpoint(dir, ckpt, &opt_g, &opt_d);
  };

  auto extractor = make_random_video_extractor(17, 64);
  auto eval_fvd = [&]() {
    torch::NoGradGuard ng;
    g_ema->eval();
    auto real_src = store_segment_source(store, /*low=*/true);
    SegmentSource gen_src = [&](int64_t len, torch::Generator& rng) {
      int64_t div = synth.temporal_divisor;
      int64_t t_gen = ((len + div - 1) / div) * div;
      auto z = sample_noise_window(draw_seed(rng), 0, t_gen + 2 * ctx,
                                   noise_c);
      auto clip = g_ema->forward(z.values.unsqueeze(0), t_gen).squeeze(0);
      int64_t s = t_gen == len
                      ? 0
                      : torch::randint(0, t_gen - len + 1, {1}, rng)
                            .item<int64_t>();
      return clip.slice(0, s, s + len);
    };
    double v = fvd(real_src, gen_src, tc.eval_segment_len, tc.eval_segments,
                   *extractor, tc.seed + 99);
    g_ema->train();
    return v;
  };

  TrainResult result;
  result.best_metric = std::numeric_limits<double>::infinity();
  g->train();
  d->train();

  for (int64_t step = start_step; step < tc.max_steps; ++step) {
    // discriminator
    auto noise = torch::randn({batch, t_len + 2 * ctx, noise_c}, data_gen,
                              torch::kFloat32);
    torch::Tensor fake;
    {
      torch::NoGradGuard ng;
      fake = g->forward(noise, t_len);
    }
    auto real = sample_real();
    auto real_aug = diffaug_batch(real, policy, data_gen);
    auto fake_aug = diffaug_batch(fake, policy, data_gen);
    auto real_logits = d->forward(real_aug);
    auto fake_logits = d->forward(fake_aug);
    auto loss_d = discriminator_loss(real_logits, fake_logits);
    if (tc.logit_drift > 0.0) {
      loss_d = loss_d + tc.logit_drift * (real_logits.square().mean() +
                                          fake_logits.square().mean());
    }
    double r1_val = 0.0;
    if (step % tc.r1_interval == 0) {
      auto r1 = r1_penalty([&](const torch::Tensor& x) { return d->forward(x); },
                           real_aug, tc.r1_gamma) *
                static_cast<double>(tc.r1_interval);
      r1_val = r1.item<double>();
      loss_d = loss_d + r1;
    }
    double loss_d_val = loss_d.item<double>();
    if (finite_loss(loss_d)) {
      opt_d.zero_grad();
      loss_d.backward();
      opt_d.step();
    }

    // generator
    auto noise_g = torch::randn({batch, t_len + 2 * ctx, noise_c}, data_gen,
                                torch::kFloat32);
    auto fake_g = g->forward(noise_g, t_len);
    auto fake_g_aug = diffaug_batch(fake_g, policy, data_gen);
    auto loss_g = generator_loss(d->forward(fake_g_aug));
    double loss_g_val = loss_g.item<double>();
    if (finite_loss(loss_g)) {
      opt_g.zero_grad();
      loss_g.backward();
      opt_g.step();
      ema_update(*g_ema, *g, tc.ema_beta);
    }

    int64_t done = step + 1;
    bool at_eval = done % tc.eval_interval == 0 || done == tc.max_steps;
    // Non-finite losses are logged as 0.0 so metrics.jsonl stays valid JSON.
    json row = {{"step", done},
                {"loss_g", std::isfinite(loss_g_val) ? loss_g_val : 0.0},
                {"loss_d", std::isfinite(loss_d_val) ? loss_d_val : 0.0},
                {"r1", std::isfinite(r1_val) ? r1_val : 0.0}};
    if (at_eval) {
      double v = eval_fvd();
      row["fvd"] = v;
      auto latest = out_dir / "ckpt_latest";
      save_state(latest, done);
      result.latest_checkpoint = latest;
      if (v < result.best_metric) {
        result.best_metric = v;
        auto best = out_dir / "ckpt_best";
        save_state(best, done);
        result.best_checkpoint = best;
      }
    }
    append_metrics(out_dir / "metrics.jsonl", row);
    result.steps = done;
  }
  if (result.latest_checkpoint.empty()) {
    auto latest = out_dir / "ckpt_latest";
    save_state(latest, result.steps);
    result.latest_checkpoint = latest;
  }
  if (result.best_checkpoint.empty()) {
    result.best_checkpoint = result.latest_checkpoint;
  }
  return result;
}

TrainResult train_superres(const ExperimentConfig& config,
                           const ClipStore& store, const fs::path& out_dir,
                           const std::optional<fs::path>& resume) {
  const TrainConfig& tc = config.train_superres;
  SRConfig sc = config.superres;
  sc.low_h = store.low_res().first;
  sc.low_w = store.low_res().second;
  TORCH_CHECK(sc.high_h() == store.high_res().first &&
                  sc.high_w() == store.high_res().second,
              "store resolutions do not match the super-res factor");
  sc.validate();

  fs::create_directories(out_dir);
  {
    ExperimentConfig resolved = config;
    resolved.superres = sc;
    dump_config(resolved, out_dir / "config.json");
  }

  torch::manual_seed(tc.seed);
  SrGenerator g(sc);
  SrGenerator g_ema(sc);
  SrDiscriminator d(sc);
  AdaController ada;
  int64_t start_step = 0;

  if (resume) {
    auto ckpt = load_sr_checkpoint(*resume);
    g = ckpt.generator;
    g_ema = ckpt.generator_ema;
    TORCH_CHECK(ckpt.discriminator, "resume checkpoint lacks a discriminator");
    d = ckpt.discriminator;
    start_step = ckpt.step;
    while (ada.probability() < ckpt.ada_p - 1e-9) ada.update(1.0);
  } else {
    torch::NoGradGuard ng;
    auto src = g->named_parameters();
    for (auto& item : g_ema->named_parameters()) {
      item.value().copy_(*src.find(item.key()));
    }
  }
  for (auto& p : g_ema->parameters()) p.set_requires_grad(false);

  torch::optim::Adam opt_g(
      g->parameters(),
      torch::optim::AdamOptions(tc.lr_g).betas({tc.beta1, tc.beta2}));
  torch::optim::Adam opt_d(
      d->parameters(),
      torch::optim::AdamOptions(tc.lr_d).betas({tc.beta1, tc.beta2}));
  auto data_gen = torch::make_generator<torch::CPUGeneratorImpl>(tc.seed + 1);
  if (resume) {
    load_sr_optimizers(*resume, opt_g, opt_d);
    auto ckpt = load_sr_checkpoint(*resume);
    if (ckpt.rng_state.defined()) {
      { auto def = at::detail::getDefaultCPUGenerator(); def.set_state(ckpt.rng_state); }
    }
    if (ckpt.data_rng_state.defined()) data_gen.set_state(ckpt.data_rng_state);
  }

  const int64_t batch = tc.batch;
  const int64_t seg = 4;
  const AugPolicy& policy = config.augment;

  struct Batch {
    torch::Tensor stacks;  // [B*4, 9, 3, h, w], corrupted conditioning
    torch::Tensor low4;    // [B, 4, 3, h, w], corrupted conditioning
    torch::Tensor high4;   // [B, 4, 3, H, W] real target frames
    torch::Tensor latents;  // [B, latent_dim]
  };

  auto sample_batch = [&]() {
    std::vector<torch::Tensor> stacks, low4s, high4s;
    for (int64_t i = 0; i < batch; ++i) {
      int64_t n_clips = static_cast<int64_t>(store.clips().size());
      int64_t c = torch::randint(0, n_clips, {1}, data_gen).item<int64_t>();
      int64_t len = store.clips()[c].frames;
      int64_t t = torch::randint(0, len - seg + 1, {1}, data_gen)
                      .item<int64_t>();
      int64_t lo = std::max<int64_t>(0, t - ConditioningStack::kReach);
      int64_t hi = std::min<int64_t>(len, t + seg + ConditioningStack::kReach);
      auto low_win = store.load_frames(c, lo, hi - lo, /*low=*/true);
      auto high4 = store.load_frames(c, t, seg, /*low=*/false);
      low_win = corrupt_conditioning(low_win, policy, data_gen);
      for (int64_t k = 0; k < seg; ++k) {
        stacks.push_back(conditioning_window(low_win, t + k - lo));
      }
      low4s.push_back(low_win.slice(0, t - lo, t - lo + seg));
      high4s.push_back(high4);
    }
    Batch b;
    b.stacks = torch::stack(stacks, 0);
    b.low4 = torch::stack(low4s, 0);
    b.high4 = torch::stack(high4s, 0);
    b.latents = torch::randn({batch, sc.latent_dim}, data_gen,
                             torch::kFloat32);
    return b;
  };

  auto run_gen = [&](const Batch& b) {
    auto latents = b.latents.repeat_interleave(seg, 0);
    auto frames = g->forward(b.stacks, latents);  // [B*4, 3, H, W]
    return frames.view({batch, seg, 3, sc.high_h(), sc.high_w()});
  };

  auto disc_pass = [&](torch::Tensor low4, torch::Tensor high4) {
    double p = ada.probability();
    std::tie(low4, high4) = ada_augment_pair(low4, high4, p, data_gen);
    low4 = condition_dropout(low4, sc.dropout_p, data_gen);
    return d->forward(low4, high4);
  };

  auto save_state = [&](const fs::path& dir, int64_t step) {
    SrCheckpoint ckpt;
    ckpt.step = step;
    ckpt.config = sc;
    ckpt.train = tc;
    ckpt.ada_p = ada.probability();
    ckpt.generator = g;
    ckpt.generator_ema = g_ema;
    ckpt.discriminator = d;
    ckpt.rng_state = at::detail::getDefaultCPUGenerator().get_state();
    ckpt.data_rng_state = data_gen.get_state();
    save_sr_checkpoint(dir, ckpt, &opt_g, &opt_d);
  };

  auto extractor = make_random_video_extractor(17, 64);
  auto eval_fvd = [&]() {
    // Real-conditioned outputs against the real high-res stream.
    torch::NoGradGuard ng;
    g_ema->eval();
    auto real_src = store_segment_source(store, /*low=*/false);
    SegmentSource gen_src = [&](int64_t len, torch::Generator& rng) {
      int64_t n_clips = static_cast<int64_t>(store.clips().size());
      int64_t c = torch::randint(0, n_clips, {1}, rng).item<int64_t>();
      int64_t clip_len = store.clips()[c].frames;
      int64_t t = torch::randint(0, clip_len - len + 1, {1}, rng)
                      .item<int64_t>();
      int64_t lo = std::max<int64_t>(0, t - ConditioningStack::kReach);
      int64_t hi = std::min<int64_t>(clip_len,
                                     t + len + ConditioningStack::kReach);
      auto low_win = store.load_frames(c, lo, hi - lo, /*low=*/true);
      auto latent = torch::randn({sc.latent_dim}, rng, torch::kFloat32);
      auto out = g_ema->upsample_video(low_win, latent);
      return out.slice(0, t - lo, t - lo + len);
    };
    double v = fvd(real_src, gen_src, tc.eval_segment_len, tc.eval_segments,
                   *extractor, tc.seed + 99);
    g_ema->train();
    return v;
  };

  TrainResult result;
  result.best_metric = std::numeric_limits<double>::infinity();
  g->train();
  d->train();

  for (int64_t step = start_step; step < tc.max_steps; ++step) {
    auto b = sample_batch();

    torch::Tensor fake;
    {
      torch::NoGradGuard ng;
      fake = run_gen(b);
    }
    auto real_logits = disc_pass(b.low4, b.high4);
    auto fake_logits = disc_pass(b.low4, fake);
    auto loss_d = discriminator_loss(real_logits, fake_logits);
    if (tc.logit_drift > 0.0) {
      loss_d = loss_d + tc.logit_drift * (real_logits.square().mean() +
                                          fake_logits.square().mean());
    }
    double r1_val = 0.0;
    if (step % tc.r1_interval == 0) {
      auto r1 =
          r1_penalty(
              [&](const torch::Tensor& x) { return d->forward(b.low4, x); },
              b.high4, tc.r1_gamma) *
          static_cast<double>(tc.r1_interval);
      r1_val = r1.item<double>();
      loss_d = loss_d + r1;
    }
    double loss_d_val = loss_d.item<double>();
    if (finite_loss(loss_d)) {
      opt_d.zero_grad();
      loss_d.backward();
      opt_d.step();
      ada.update(real_logits.detach().sign().mean().item<double>());
    }

    auto b2 = sample_batch();
    auto fake_g = run_gen(b2);
    auto loss_g = generator_loss(disc_pass(b2.low4, fake_g));
    double loss_g_val = loss_g.item<double>();
    if (finite_loss(loss_g)) {
      opt_g.zero_grad();
      loss_g.backward();
      opt_g.step();
      ema_update(*g_ema, *g, tc.ema_beta);
    }

    int64_t done = step + 1;
    bool at_eval = done % tc.eval_interval == 0 || done == tc.max_steps;
    // Non-finite losses are logged as 0.0 so metrics.jsonl stays valid JSON.
    json row = {{"step", done},
                {"loss_g", std::isfinite(loss_g_val) ? loss_g_val : 0.0},
                {"loss_d", std::isfinite(loss_d_val) ? loss_d_val : 0.0},
                {"r1", std::isfinite(r1_val) ? r1_val : 0.0},
                {"ada_p", ada.probability()}};
    if (at_eval) {
      double v = eval_fvd();
      row["fvd"] = v;
      auto latest = out_dir / "ckpt_latest";
      save_state(latest, done);
      result.latest_checkpoint = latest;
      if (v < result.best_metric) {
        result.best_metric = v;
        auto best = out_dir / "ckpt_best";
        save_state(best, done);
        result.best_checkpoint = best;
      }
    }
    append_metrics(out_dir / "metrics.jsonl", row);
    result.steps = done;
  }
  if (result.latest_checkpoint.empty()) {
    auto latest = out_dir / "ckpt_latest";
    save_state(latest, result.steps);
    result.latest_checkpoint = latest;
  }
  if (result.best_checkpoint.empty()) {
    result.best_checkpoint = result.latest_checkpoint;
  }
  return result;
}

}  // namespace longvid
