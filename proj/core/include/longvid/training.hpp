#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <optional>

#include "longvid/checkpoint.hpp"
#include "longvid/config.hpp"
#include "longvid/data.hpp"

namespace longvid {

// Non-saturating logistic GAN losses.
torch::Tensor generator_loss(const torch::Tensor& fake_logits);
torch::Tensor discriminator_loss(const torch::Tensor& real_logits,
                                 const torch::Tensor& fake_logits);

// (gamma / 2) * E[ |d D(x) / d x|^2 ] over the real batch. `discriminator`
// is any differentiable map from the batch to per-sample logits.
torch::Tensor r1_penalty(
    const std::function<torch::Tensor(const torch::Tensor&)>& discriminator,
    const torch::Tensor& real_batch, double gamma);

// ema <- beta * ema + (1 - beta) * current, parameters and buffers.
void ema_update(torch::nn::Module& ema, const torch::nn::Module& current,
                double beta);

struct TrainResult {
  int64_t steps = 0;
  double best_metric = 0.0;  // FVD of the best checkpoint
  std::filesystem::path best_checkpoint;
  std::filesystem::path latest_checkpoint;
};

// Low-res phase: trains generator/discriminator on the store's low-res
// stream, keeps an EMA copy, evaluates FVD every eval_interval steps and
// keeps the checkpoint with the best FVD. Writes metrics.jsonl and
// config.json under out_dir. Throws on non-finite losses.
TrainResult train_lowres(const ExperimentConfig& config, const ClipStore& store,
                         const std::filesystem::path& out_dir,
                         const std::optional<std::filesystem::path>& resume =
                             std::nullopt);

// Super-res phase: trains the conditional frame generator on aligned 4-frame
// segments; checkpoint selection uses FVD of real-conditioned outputs.
TrainResult train_superres(const ExperimentConfig& config,
                           const ClipStore& store,
                           const std::filesystem::path& out_dir,
                           const std::optional<std::filesystem::path>& resume =
                               std::nullopt);

}  // namespace longvid
