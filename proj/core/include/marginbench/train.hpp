#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "marginbench/attacks.hpp"
#include "marginbench/dataset.hpp"
#include "marginbench/nnet.hpp"

namespace marginbench {

enum class AdvMode { none, pgd, mm };

const char* to_string(AdvMode mode);
std::optional<AdvMode> adv_mode_from_string(const std::string& name);

struct TrainConfig {
  std::vector<std::size_t> hidden = {16, 16};
  int epochs = 20;
  std::size_t batch_size = 32;
  double lr = 0.1;
  // Step decay: lr is divided by 10 at 60% and again at 90% of the epochs.
  bool lr_decay = true;
  AdvMode adv = AdvMode::none;
  AttackConfig attack;  // used when adv != none
  std::uint64_t seed = 0;
};

struct TrainResult {
  Classifier model;
  std::vector<double> epoch_loss;  // mean CE over the (adversarial) training points
};

// Affine/ReLU stack with Glorot-uniform weights, deterministic in seed.
Classifier init_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                    std::size_t class_count, std::uint64_t seed);

// Minibatch SGD on cross entropy. With adv != none each minibatch is first
// replaced by attack-generated points, then the parameters take one averaged
// gradient step. epochs = 0 returns the initialized model untouched.
TrainResult adversarial_train(const Dataset& data, const TrainConfig& cfg);

}  // namespace marginbench
