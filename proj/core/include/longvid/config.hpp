#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "longvid/augment.hpp"
#include "longvid/lowres_discriminator.hpp"
#include "longvid/lowres_generator.hpp"
#include "longvid/superres.hpp"

namespace longvid {

struct FilterBankSpec {
  int64_t n_filters = 128;
  int64_t k_min = 500;
  int64_t k_max = 10000;
  double beta = 8.0;
};

struct TrainConfig {
  int64_t batch = 64;
  int64_t seq_len = 128;  // frames per training clip (low-res phase)
  double lr_g = 0.003;
  double lr_d = 0.002;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double ema_beta = 0.99985;
  double r1_gamma = 0.25;
  int64_t r1_interval = 16;
  // epsilon-drift penalty on discriminator logits (coefficient on
  // E[D(real)^2] + E[D(fake)^2]); 0 disables. Keeps logits bounded when
  // small batches make the adversarial game oscillate.
  double logit_drift = 0.0;
  int64_t max_steps = 100000;
  int64_t eval_interval = 1000;
  int64_t eval_segments = 128;
  int64_t eval_segment_len = 16;
  uint64_t seed = 0;

  static TrainConfig lowres_defaults();
  static TrainConfig superres_defaults();
};

struct ExperimentConfig {
  std::string data_root;
  std::string out_dir = "runs/default";
  uint64_t seed = 0;
  FilterBankSpec bank;
  SynthesisConfig synthesis;
  DiscConfig disc;
  SRConfig superres;
  AugPolicy augment;
  TrainConfig train_lowres = TrainConfig::lowres_defaults();
  TrainConfig train_superres = TrainConfig::superres_defaults();
};

nlohmann::json config_to_json(const ExperimentConfig& config);

// Strict parse: any key not in the schema raises std::invalid_argument.
ExperimentConfig config_from_json(const nlohmann::json& j);

// Loads a JSON file (or defaults when path is empty) and applies
// dotted-path overrides of the form "section.key=value".
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

void dump_config(const ExperimentConfig& config,
                 const std::filesystem::path& path);

}  // namespace longvid
