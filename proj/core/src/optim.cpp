#include "freqlab/optim.hpp"

#include <cmath>

#include "freqlab/error.hpp"

namespace freqlab {

void TrainConfig::validate() const {
  require(learning_rate >= 0.0, ErrorKind::InvalidInput, "learning rate must be non-negative");
  require(batch_size >= 1, ErrorKind::InvalidInput, "batch size must be at least 1");
  require(max_epochs >= 0, ErrorKind::InvalidInput, "max_epochs must be non-negative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorKind::InvalidInput,
          "Adam betas must lie in [0, 1)");
  require(epsilon > 0.0, ErrorKind::InvalidInput, "Adam epsilon must be positive");
}

Adam::Adam(std::size_t size, const TrainConfig& cfg)
    : lr_(cfg.learning_rate), beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.epsilon), m_(size, 0.0),
      v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  require(params.size() == m_.size() && grads.size() == m_.size(), ErrorKind::ShapeError,
          "Adam state does not match parameter size");
  ++t_;
  bias1_ = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  bias2_ = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    const double m_hat = m_[i] / bias1_;
    const double v_hat = v_[i] / bias2_;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
  }
}

double Adam::effective_rate(std::size_t i) const {
  return lr_ / (std::sqrt(v_[i] / bias2_) + eps_);
}

}  // namespace freqlab
