#include "mutner/optim.hpp"

#include <cmath>

#include "mutner/mutation_type.hpp"

namespace mutner {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw Error("learning_rate must be positive");
  if (epochs == 0) throw Error("epochs must be positive");
  if (batch_size == 0) throw Error("batch_size must be positive");
  if (weight_decay < 0) throw Error("weight_decay must be non-negative");
  if (patience == 0) throw Error("patience must be positive");
  if (dropout < 0 || dropout >= 1) throw Error("dropout must be in [0, 1)");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},   {"batch_size", c.batch_size},
          {"weight_decay", c.weight_decay},   {"seed", c.seed},       {"patience", c.patience},
          {"dropout", c.dropout}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "epochs") c.epochs = value.get<std::size_t>();
    else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
    else if (key == "weight_decay") c.weight_decay = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "patience") c.patience = value.get<std::size_t>();
    else if (key == "dropout") c.dropout = value.get<double>();
    else throw Error("unknown training config key '" + key + "'");
  }
  c.validate();
  return c;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw Error("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0 && m_[i] == 0.0 && v_[i] == 0.0) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void deterministic_shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace mutner
