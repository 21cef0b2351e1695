#include "longvid/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "longvid/filterbank.hpp"

namespace longvid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kVersion = 1;

void save_module(const fs::path& path, const torch::nn::Module& m) {
  torch::serialize::OutputArchive archive;
  m.save(archive);
  archive.save_to(path.string());
}

void load_module(const fs::path& path, torch::nn::Module& m) {
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  m.load(archive);
}

void save_optimizer(const fs::path& path, torch::optim::Adam& opt) {
  torch::serialize::OutputArchive archive;
  opt.save(archive);
  archive.save_to(path.string());
}

void load_optimizer(const fs::path& path, torch::optim::Adam& opt) {
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  opt.load(archive);
}

json read_manifest(const fs::path& dir, const std::string& phase) {
  std::ifstream f(dir / "manifest.json");
  if (!f) {
    throw std::invalid_argument("not a checkpoint: " + dir.string());
  }
  json j;
  f >> j;
  if (j.value("version", 0) != kVersion || j.value("phase", "") != phase) {
    throw std::invalid_argument("incompatible checkpoint: " + dir.string());
  }
  return j;
}

void save_rng(const fs::path& dir, const torch::Tensor& global_state,
              const torch::Tensor& data_state) {
  if (global_state.defined()) torch::save(global_state, (dir / "rng.pt").string());
  if (data_state.defined())
    torch::save(data_state, (dir / "data_rng.pt").string());
}

torch::Tensor load_rng(const fs::path& path) {
  if (!fs::exists(path)) return {};
  torch::Tensor t;
  torch::load(t, path.string());
  return t;
}

}  // namespace

void save_lowres_checkpoint(const fs::path& dir, const LowresCheckpoint& ckpt,
                            torch::optim::Adam* opt_g,
                            torch::optim::Adam* opt_d) {
  fs::create_directories(dir);
  ExperimentConfig shell;
  shell.bank = ckpt.bank;
  shell.synthesis = ckpt.synthesis;
  shell.disc = ckpt.disc;
  shell.train_lowres = ckpt.train;
  auto full = config_to_json(shell);
  json manifest = {{"version", kVersion},
                   {"phase", "lowres"},
                   {"step", ckpt.step},
                   {"bank", full.at("bank")},
                   {"synthesis", full.at("synthesis")},
                   {"disc", full.at("disc")},
                   {"train", full.at("train_lowres")}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  save_module(dir / "generator.pt", *ckpt.generator);
  save_module(dir / "generator_ema.pt", *ckpt.generator_ema);
  if (ckpt.discriminator) {
    save_module(dir / "discriminator.pt", *ckpt.discriminator);
  }
  if (opt_g) save_optimizer(dir / "opt_g.pt", *opt_g);
  if (opt_d) save_optimizer(dir / "opt_d.pt", *opt_d);
  save_rng(dir, ckpt.rng_state, ckpt.data_rng_state);
}

LowresCheckpoint load_lowres_checkpoint(const fs::path& dir) {
  auto manifest = read_manifest(dir, "lowres");
  json shell_json = {{"bank", manifest.at("bank")},
                     {"synthesis", manifest.at("synthesis")},
                     {"disc", manifest.at("disc")},
                     {"train_lowres", manifest.at("train")}};
  auto shell = config_from_json(shell_json);

  LowresCheckpoint ckpt;
  ckpt.step = manifest.at("step").get<int64_t>();
  ckpt.bank = shell.bank;
  ckpt.synthesis = shell.synthesis;
  ckpt.disc = shell.disc;
  ckpt.train = shell.train_lowres;

  auto bank = design_bank(ckpt.bank.n_filters, ckpt.bank.k_min,
                          ckpt.bank.k_max, ckpt.bank.beta);
  ckpt.generator = LowresGenerator(bank, ckpt.synthesis);
  ckpt.generator_ema = LowresGenerator(bank, ckpt.synthesis);
  load_module(dir / "generator.pt", *ckpt.generator);
  load_module(dir / "generator_ema.pt", *ckpt.generator_ema);
  if (fs::exists(dir / "discriminator.pt")) {
    ckpt.discriminator = LowresDiscriminator(ckpt.disc);
    load_module(dir / "discriminator.pt", *ckpt.discriminator);
  }
  ckpt.rng_state = load_rng(dir / "rng.pt");
  ckpt.data_rng_state = load_rng(dir / "data_rng.pt");
  return ckpt;
}

void load_lowres_optimizers(const fs::path& dir, torch::optim::Adam& opt_g,
                            torch::optim::Adam& opt_d) {
  load_optimizer(dir / "opt_g.pt", opt_g);
  load_optimizer(dir / "opt_d.pt", opt_d);
}

void save_sr_checkpoint(const fs::path& dir, const SrCheckpoint& ckpt,
                        torch::optim::Adam* opt_g, torch::optim::Adam* opt_d) {
  fs::create_directories(dir);
  ExperimentConfig shell;
  shell.superres = ckpt.config;
  shell.train_superres = ckpt.train;
  auto full = config_to_json(shell);
  json manifest = {{"version", kVersion},
                   {"phase", "superres"},
                   {"step", ckpt.step},
                   {"superres", full.at("superres")},
                   {"train", full.at("train_superres")},
                   {"ada_p", ckpt.ada_p}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  save_module(dir / "generator.pt", *ckpt.generator);
  save_module(dir / "generator_ema.pt", *ckpt.generator_ema);
  if (ckpt.discriminator) {
    save_module(dir / "discriminator.pt", *ckpt.discriminator);
  }
  if (opt_g) save_optimizer(dir / "opt_g.pt", *opt_g);
  if (opt_d) save_optimizer(dir / "opt_d.pt", *opt_d);
  save_rng(dir, ckpt.rng_state, ckpt.data_rng_state);
}

SrCheckpoint load_sr_checkpoint(const fs::path& dir) {
  auto manifest = read_manifest(dir, "superres");
  json shell_json = {{"superres", manifest.at("superres")},
                     {"train_superres", manifest.at("train")}};
  auto shell = config_from_json(shell_json);

  SrCheckpoint ckpt;
  ckpt.step = manifest.at("step").get<int64_t>();
  ckpt.config = shell.superres;
  ckpt.train = shell.train_superres;
  ckpt.ada_p = manifest.value("ada_p", 0.0);
  ckpt.generator = SrGenerator(ckpt.config);
  ckpt.generator_ema = SrGenerator(ckpt.config);
  load_module(dir / "generator.pt", *ckpt.generator);
  load_module(dir / "generator_ema.pt", *ckpt.generator_ema);
  if (fs::exists(dir / "discriminator.pt")) {
    ckpt.discriminator = SrDiscriminator(ckpt.config);
    load_module(dir / "discriminator.pt", *ckpt.discriminator);
  }
  ckpt.rng_state = load_rng(dir / "rng.pt");
  ckpt.data_rng_state = load_rng(dir / "data_rng.pt");
  return ckpt;
}

void load_sr_optimizers(const fs::path& dir, torch::optim::Adam& opt_g,
                        torch::optim::Adam& opt_d) {
  load_optimizer(dir / "opt_g.pt", opt_g);
  load_optimizer(dir / "opt_d.pt", opt_d);
}

namespace {
bool phase_matches(const fs::path& dir, const std::string& phase) {
  std::ifstream f(dir / "manifest.json");
  if (!f) return false;
  json j = json::parse(f, nullptr, false);
  return !j.is_discarded() && j.value("phase", "") == phase;
}
}  // namespace

bool is_lowres_checkpoint(const fs::path& dir) {
  return phase_matches(dir, "lowres");
}

bool is_sr_checkpoint(const fs::path& dir) {
  return phase_matches(dir, "superres");
}

}  // namespace longvid
