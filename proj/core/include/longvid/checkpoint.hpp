#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>

#include "longvid/config.hpp"
#include "longvid/lowres_discriminator.hpp"
#include "longvid/lowres_generator.hpp"
#include "longvid/superres.hpp"

namespace longvid {

// Checkpoints are directories: manifest.json holds the step and every
// config needed to rebuild the modules, *.pt files hold the parameters and
// optimizer state.

struct LowresCheckpoint {
  int64_t step = 0;
  FilterBankSpec bank;
  SynthesisConfig synthesis;
  DiscConfig disc;
  TrainConfig train;
  LowresGenerator generator{nullptr};
  LowresGenerator generator_ema{nullptr};
  LowresDiscriminator discriminator{nullptr};
  torch::Tensor rng_state;       // global torch RNG
  torch::Tensor data_rng_state;  // data-sampling generator
};

struct SrCheckpoint {
  int64_t step = 0;
  SRConfig config;
  TrainConfig train;
  double ada_p = 0.0;
  SrGenerator generator{nullptr};
  SrGenerator generator_ema{nullptr};
  SrDiscriminator discriminator{nullptr};
  torch::Tensor rng_state;
  torch::Tensor data_rng_state;
};

void save_lowres_checkpoint(const std::filesystem::path& dir,
                            const LowresCheckpoint& ckpt,
                            torch::optim::Adam* opt_g = nullptr,
                            torch::optim::Adam* opt_d = nullptr);

// Rebuilds all modules from the manifest and loads their parameters. When
// optimizers are supplied their state is restored too (they must already
// reference the returned modules' parameters, so construct them after this
// call and then call load_lowres_optimizers).
LowresCheckpoint load_lowres_checkpoint(const std::filesystem::path& dir);
void load_lowres_optimizers(const std::filesystem::path& dir,
                            torch::optim::Adam& opt_g,
                            torch::optim::Adam& opt_d);

void save_sr_checkpoint(const std::filesystem::path& dir,
                        const SrCheckpoint& ckpt,
                        torch::optim::Adam* opt_g = nullptr,
                        torch::optim::Adam* opt_d = nullptr);
SrCheckpoint load_sr_checkpoint(const std::filesystem::path& dir);
void load_sr_optimizers(const std::filesystem::path& dir,
                        torch::optim::Adam& opt_g, torch::optim::Adam& opt_d);

bool is_lowres_checkpoint(const std::filesystem::path& dir);
bool is_sr_checkpoint(const std::filesystem::path& dir);

}  // namespace longvid
