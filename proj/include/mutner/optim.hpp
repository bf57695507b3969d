#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"

namespace mutner {

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t epochs = 100;
  std::size_t batch_size = 24;
  double weight_decay = 0.01;
  std::uint64_t seed = 42;
  // Epochs without dev-loss improvement before stopping; ignored without dev data.
  std::size_t patience = 5;
  // Feature dropout on representation entries during training; 0 disables.
  double dropout = 0.0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json to_json(const TrainConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

// Adam with bias correction over one flat parameter block.
class Adam {
 public:
  explicit Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

// Fisher-Yates driven directly by mt19937_64 output so the order is the same
// on every standard library.
void deterministic_shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng);

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace mutner
