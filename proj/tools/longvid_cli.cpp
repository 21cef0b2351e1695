#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "longvid/checkpoint.hpp"
#include "longvid/config.hpp"
#include "longvid/data.hpp"
#include "longvid/filterbank.hpp"
#include "longvid/metrics.hpp"
#include "longvid/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace longvid;

namespace {

std::string default_data_root() {
  const char* env = std::getenv("LONGVID_DATA_ROOT");
  return env ? env : "";
}

std::pair<int64_t, int64_t> parse_res(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos) {
    throw std::invalid_argument("resolution must be HxW: " + s);
  }
  return {std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1))};
}

ExperimentConfig resolve_config(const std::string& config_path,
                                const std::vector<std::string>& overrides,
                                const std::string& data_root) {
  auto cfg = load_config(config_path, overrides);
  if (!data_root.empty()) cfg.data_root = data_root;
  if (cfg.data_root.empty()) cfg.data_root = default_data_root();
  if (cfg.data_root.empty()) {
    throw std::invalid_argument(
        "no dataset given: pass --data or set LONGVID_DATA_ROOT");
  }
  return cfg;
}

// Generated frames for one window, low-res path plus optional refinement.
torch::Tensor generate_window(LowresCheckpoint& low,
                              std::optional<SrCheckpoint>& sr, int64_t frames,
                              int64_t offset, uint64_t seed) {
  torch::NoGradGuard ng;
  auto& g = low.generator_ema;
  g->eval();
  const auto& bank = g->bank();
  int64_t div = g->config().temporal_divisor;
  int64_t t_gen = ((frames + div - 1) / div) * div;
  int64_t ctx = context_padding(bank);
  auto z = sample_noise_window(seed, offset - ctx, t_gen + 2 * ctx);
  auto clip = g->generate(z, t_gen).slice(0, 0, frames);  // [T, 3, h, w]
  if (!sr) return clip;
  auto& s = sr->generator_ema;
  s->eval();
  auto lat_gen = torch::make_generator<torch::CPUGeneratorImpl>(seed + 1);
  auto latent = torch::randn({s->config().latent_dim}, lat_gen,
                             torch::kFloat32);
  return s->upsample_video(clip, latent);
}

int cmd_train(const std::string& phase, const std::string& config_path,
              const std::vector<std::string>& overrides,
              const std::string& data_root, const std::string& out_dir,
              const std::string& resume) {
  auto cfg = resolve_config(config_path, overrides, data_root);
  auto store = ClipStore::open(cfg.data_root);
  std::optional<fs::path> resume_path;
  if (!resume.empty()) resume_path = resume;
  fs::path out = out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(out_dir);
  TrainResult r = phase == "lowres"
                      ? train_lowres(cfg, store, out, resume_path)
                      : train_superres(cfg, store, out, resume_path);
  json summary = {{"steps", r.steps},
                  {"best_fvd", r.best_metric},
                  {"best_checkpoint", r.best_checkpoint.string()},
                  {"latest_checkpoint", r.latest_checkpoint.string()}};
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

int cmd_generate(const std::string& ckpt, const std::string& sr_ckpt,
                 int64_t frames, int64_t offset, uint64_t seed,
                 const std::string& out_dir) {
  auto low = load_lowres_checkpoint(ckpt);
  std::optional<SrCheckpoint> sr;
  if (!sr_ckpt.empty()) sr = load_sr_checkpoint(sr_ckpt);
  auto clip = generate_window(low, sr, frames, offset, seed);
  fs::create_directories(out_dir);
  for (int64_t t = 0; t < clip.size(0); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld.png",
                  static_cast<long long>(t));
    write_png(fs::path(out_dir) / name, clip[t]);
  }
  json meta = {{"frames", frames},
               {"offset", offset},
               {"seed", seed},
               {"height", clip.size(2)},
               {"width", clip.size(3)},
               {"superres", sr.has_value()}};
  std::ofstream(fs::path(out_dir) / "meta.json") << meta.dump(2) << '\n';
  std::cout << meta.dump(2) << std::endl;
  return 0;
}

int cmd_evaluate(const std::string& mode, const std::string& real_root,
                 const std::string& gen_root, const std::string& ckpt,
                 const std::string& sr_ckpt, uint64_t seed, int64_t segments,
                 int64_t samples, const std::string& out_dir) {
  auto real = ClipStore::open(real_root);
  std::optional<ClipStore> gen_store;
  std::optional<LowresCheckpoint> low;
  std::optional<SrCheckpoint> sr;
  if (!gen_root.empty()) {
    gen_store = ClipStore::open(gen_root);
  } else if (!ckpt.empty()) {
    low = load_lowres_checkpoint(ckpt);
    if (!sr_ckpt.empty()) sr = load_sr_checkpoint(sr_ckpt);
  } else {
    throw std::invalid_argument("evaluate needs --gen or --ckpt");
  }
  const bool high = sr.has_value() || gen_store.has_value();

  // Generated clips by index, deterministic in (seed, index).
  auto gen_clip = [&](int64_t i, int64_t frames) {
    if (gen_store) {
      auto g = torch::make_generator<torch::CPUGeneratorImpl>(seed + i);
      return sample_clip(*gen_store, frames, g, /*low=*/false);
    }
    return generate_window(*low, sr, frames, 0, seed * 7919 + i);
  };
  SegmentSource gen_src = [&](int64_t len, torch::Generator& rng) {
    int64_t i = torch::randint(0, int64_t(1) << 30, {1}, rng).item<int64_t>();
    return gen_clip(i, len);
  };
  auto real_src = store_segment_source(real, /*low=*/!high);

  fs::create_directories(out_dir.empty() ? "." : out_dir);
  json result = {{"mode", mode}, {"seed", seed}};

  if (mode == "fvd128" || mode == "fvd16") {
    int64_t len = mode == "fvd128" ? 128 : 16;
    auto extractor = make_random_video_extractor(17, 128);
    result["value"] =
        fvd(real_src, gen_src, len, segments, *extractor, seed);
  } else if (mode == "fidv") {
    auto extractor = make_random_frame_extractor(17, 128);
    auto frame_fn = [&](int64_t i) { return gen_clip(i, 1)[0]; };
    result["value"] = fid_v(real, frame_fn, samples, *extractor, !high);
  } else if (mode == "colorsim") {
    int64_t frames = 32;
    auto curve = similarity_curve(
        [&](int64_t i) { return gen_clip(i, frames); }, samples);
    if (!out_dir.empty()) {
      write_curve_csv(curve, (fs::path(out_dir) / "colorsim.csv").string());
    }
    result["t1"] = curve.mean[1].item<double>();
    result["t_last"] = curve.mean[frames - 1].item<double>();
  } else if (mode == "featcurve") {
    int64_t frames = 32;
    auto extractor = make_random_frame_extractor(17, 128);
    auto curve = feature_distance_curve(
        [&](int64_t i) { return gen_clip(i, frames); }, samples, *extractor,
        frames);
    if (!out_dir.empty()) {
      std::ofstream f(fs::path(out_dir) / "featcurve.csv");
      f << "t,mean\n";
      for (int64_t t = 0; t < frames; ++t) {
        f << t << ',' << curve[t].item<double>() << '\n';
      }
    }
    result["t_last"] = curve[frames - 1].item<double>();
  } else {
    throw std::invalid_argument("unknown mode: " + mode);
  }
  if (!out_dir.empty()) {
    std::ofstream(fs::path(out_dir) / "result.json") << result.dump(2) << '\n';
  }
  std::cout << result.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long video generation toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_root, out_dir, resume;
  std::vector<std::string> overrides;

  auto add_train_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--data", data_root, "clip store root");
    sub->add_option("--out", out_dir, "run output directory");
    sub->add_option("--resume", resume, "checkpoint directory to resume from");
    sub->add_option("--set", overrides,
                    "config override, e.g. train_lowres.batch=8");
  };
  auto* tl = app.add_subcommand("train-lowres", "train the low-res phase");
  add_train_opts(tl);
  auto* ts = app.add_subcommand("train-superres", "train the super-res phase");
  add_train_opts(ts);

  std::string ckpt, sr_ckpt;
  int64_t frames = 128, offset = 0, segments = 128, samples = 64;
  uint64_t seed = 0;
  auto* gen = app.add_subcommand("generate", "sample a video as PNG frames");
  gen->add_option("--ckpt", ckpt, "low-res checkpoint directory")->required();
  gen->add_option("--sr-ckpt", sr_ckpt, "super-res checkpoint directory");
  gen->add_option("--frames", frames, "number of frames");
  gen->add_option("--offset", offset, "global index of the first frame");
  gen->add_option("--seed", seed, "noise seed");
  gen->add_option("--out", out_dir, "output directory")->required();

  std::string mode, real_root, gen_root;
  auto* ev = app.add_subcommand("evaluate", "compute a metric");
  ev->add_option("--mode", mode, "fvd128|fvd16|fidv|colorsim|featcurve")
      ->required();
  ev->add_option("--real", real_root, "real clip store")->required();
  ev->add_option("--gen", gen_root, "generated clip store");
  ev->add_option("--ckpt", ckpt, "low-res checkpoint directory");
  ev->add_option("--sr-ckpt", sr_ckpt, "super-res checkpoint directory");
  ev->add_option("--seed", seed, "sampling seed");
  ev->add_option("--segments", segments, "FVD segment count");
  ev->add_option("--samples", samples, "frame/clip sample count");
  ev->add_option("--out", out_dir, "directory for result.json and curves");

  std::string source_dir, low_res = "36x64", high_res = "144x256";
  double aspect = 16.0 / 9.0, fps = 30.0;
  int64_t min_frames = 128;
  auto* ing = app.add_subcommand("ingest", "build a clip store from videos");
  ing->add_option("--source-dir", source_dir, "directory of video files")
      ->required();
  ing->add_option("--out", out_dir, "store root")->required();
  ing->add_option("--aspect", aspect, "target width/height");
  ing->add_option("--low-res", low_res, "low resolution HxW");
  ing->add_option("--high-res", high_res, "high resolution HxW");
  ing->add_option("--min-frames", min_frames, "minimum usable clip length");
  ing->add_option("--fps", fps, "nominal frame rate");

  int64_t n_clips = 16, duration = 128;
  std::string s_low = "32x32", s_high = "128x128";
  auto* syn = app.add_subcommand("synth-data", "render a procedural dataset");
  syn->add_option("--out", out_dir, "store root")->required();
  syn->add_option("--clips", n_clips, "number of clips");
  syn->add_option("--frames", duration, "frames per clip");
  syn->add_option("--seed", seed, "scene seed");
  syn->add_option("--low-res", s_low, "low resolution HxW");
  syn->add_option("--high-res", s_high, "high resolution HxW");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (tl->parsed()) {
      return cmd_train("lowres", config_path, overrides, data_root, out_dir,
                       resume);
    }
    if (ts->parsed()) {
      return cmd_train("superres", config_path, overrides, data_root, out_dir,
                       resume);
    }
    if (gen->parsed()) {
      return cmd_generate(ckpt, sr_ckpt, frames, offset, seed, out_dir);
    }
    if (ev->parsed()) {
      return cmd_evaluate(mode, real_root, gen_root, ckpt, sr_ckpt, seed,
                          segments, samples, out_dir);
    }
    if (ing->parsed()) {
      IngestOptions opt;
      opt.aspect = aspect;
      opt.low_res = parse_res(low_res);
      opt.high_res = parse_res(high_res);
      opt.min_frames = min_frames;
      opt.fps = fps;
      auto store = ingest(source_dir, out_dir, opt);
      std::cout << "ingested " << store.clips().size() << " clips into "
                << out_dir << std::endl;
      return 0;
    }
    if (syn->parsed()) {
      SyntheticSceneSpec spec;
      spec.background_seed = seed;
      spec.duration = duration;
      auto store = generate_synthetic(spec, n_clips, out_dir,
                                      parse_res(s_low), parse_res(s_high));
      std::cout << "wrote " << store.clips().size() << " clips to " << out_dir
                << std::endl;
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}
