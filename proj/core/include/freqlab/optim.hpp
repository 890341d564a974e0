#ifndef FREQLAB_OPTIM_HPP
#define FREQLAB_OPTIM_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace freqlab {

/// Optimizer and schedule settings shared by the linear heads and the CNN.
struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  int batch_size = 64;
  int max_epochs = 50;
  /// Evaluations without validation improvement before stopping.
  int early_stop_patience = 10;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Adam with bias correction. Moments have the same length as the
/// parameter vector they were created for.
class Adam {
public:
  Adam(std::size_t size, const TrainConfig& cfg);

  /// One update: params -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(std::span<double> params, std::span<const double> grads);

  /// lr / (sqrt(v_hat_i) + eps) for the last step, i.e. the per-coordinate
  /// step size of the preconditioned update. Valid after step().
  double effective_rate(std::size_t i) const;

  long steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
  double bias1_ = 1.0;
  double bias2_ = 1.0;
};

}  // namespace freqlab

#endif  // FREQLAB_OPTIM_HPP
