#ifndef FREQLAB_CNN_HPP
#define FREQLAB_CNN_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "freqlab/image.hpp"
#include "freqlab/optim.hpp"

namespace freqlab {

/// Vector storage with Eigen's packet alignment. Eigen picks its summation
/// order from the alignment of the data, so a fixed alignment keeps CNN
/// results bitwise reproducible from run to run.
using AlignedBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

/// Architecture of the shallow classifier:
///
///   input  S x S x C
///   conv 3x3 -> 3   (same padding, ReLU)
///   conv 3x3 -> 8   (same padding, ReLU)
///   avgpool 2x2
///   conv 3x3 -> 16  (same padding, ReLU)
///   avgpool 2x2
///   conv 3x3 -> 32  (same padding, ReLU)
///   dense -> num_classes (logits)
///
/// The default S = 128 / 5 classes configuration has 169,961 parameters for
/// C = 3 and 169,907 for C = 1.
struct CnnShape {
  int input_size = 128;
  int in_channels = 1;
  int num_classes = 5;

  void validate() const;
  int flat_features() const;
};

inline constexpr std::array<int, 4> kConvWidths = {3, 8, 16, 32};

/// Offsets of each parameter tensor inside the flat parameter vector.
struct CnnLayout {
  std::array<std::size_t, 4> conv_w{};
  std::array<std::size_t, 4> conv_b{};
  std::array<int, 4> conv_in{};
  std::array<int, 4> conv_out{};
  std::size_t dense_w = 0;
  std::size_t dense_b = 0;
  std::size_t total = 0;

  explicit CnnLayout(const CnnShape& shape);
};

/// Sum of the per-layer (kernel + bias) counts, computed independently of
/// CnnLayout.
std::size_t closed_form_parameter_count(const CnnShape& shape);

class CnnModel {
public:
  explicit CnnModel(const CnnShape& shape);

  /// Fan-in scaled uniform init, U(-sqrt(6/fan_in), sqrt(6/fan_in)) for
  /// weights, zero biases.
  static CnnModel initialized(const CnnShape& shape, std::uint64_t seed);

  const CnnShape& shape() const { return shape_; }
  const CnnLayout& layout() const { return layout_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

private:
  CnnShape shape_;
  CnnLayout layout_;
  AlignedBuffer params_;
};

/// N samples of C x H x W planes, stored sample-major then channel-major.
struct ImageBatch {
  int count = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  AlignedBuffer data;

  ImageBatch() = default;
  ImageBatch(int n, int c, int h, int w) : count(n), channels(c), height(h), width(w),
      data(static_cast<std::size_t>(n) * c * h * w, 0.0) {}

  std::size_t sample_size() const { return static_cast<std::size_t>(channels) * height * width; }
  std::span<double> sample(int i) { return {data.data() + i * sample_size(), sample_size()}; }
  std::span<const double> sample(int i) const { return {data.data() + i * sample_size(), sample_size()}; }
};

ImageBatch gather(const ImageBatch& source, std::span<const int> indices);

/// Logits, one row per sample.
Matrix forward(const CnnModel& model, const ImageBatch& batch);

struct CnnGradients {
  double loss = 0.0;           // mean softmax cross-entropy
  AlignedBuffer grads;   // same layout as CnnModel::params()
};

CnnGradients backward(const CnnModel& model, const ImageBatch& batch, std::span<const int> labels);

/// Mean softmax cross-entropy without the gradient, for finite differences.
double cnn_loss(const CnnModel& model, const ImageBatch& batch, std::span<const int> labels);

std::vector<int> predict(const CnnModel& model, const ImageBatch& batch);

/// 1 where a ReLU input is positive, for every unit of every sample. The
/// loss is smooth in the parameters wherever this pattern stays fixed.
std::vector<std::uint8_t> relu_pattern(const CnnModel& model, const ImageBatch& batch);

struct GradientCheck {
  double worst_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_numeric = 0.0;
  double worst_analytic = 0.0;
  /// Parameters whose +-h step changed the ReLU pattern and were rechecked
  /// with a smaller step.
  std::size_t kink_retries = 0;
};

/// Compares backward() with central differences of cnn_loss() for every
/// parameter. Relative error is |a - n| / max(|a| + |n|, floor). When a
/// +-step moves some ReLU input across zero the difference quotient spans a
/// kink, so the step is divided by 10 (down to 1e-9) until the pattern holds.
GradientCheck check_gradients(const CnnModel& model, const ImageBatch& batch, std::span<const int> labels,
                              double step = 1e-5, double floor = 1e-6);

struct CnnTrainConfig {
  TrainConfig optimizer;
  /// Validation is evaluated every `eval_every` optimizer steps; 0 means once
  /// per epoch.
  int eval_every = 0;
  /// Hard cap on optimizer steps; 0 means bounded only by max_epochs.
  long max_steps = 0;
  /// Accuracy whose first crossing is recorded as steps_to_target.
  double target_accuracy = 0.95;
  /// End training as soon as the target accuracy is reached.
  bool stop_at_target = false;
};

struct HistoryRow {
  long step = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct CnnTrainResult {
  CnnModel model;
  std::vector<HistoryRow> history;
  long best_step = 0;
  double best_val_accuracy = 0.0;
  std::optional<long> steps_to_target;
  long total_steps = 0;
};

/// Mini-batch Adam on mean cross-entropy with early stopping on validation
/// accuracy; the returned model is the best validation snapshot.
CnnTrainResult train_cnn(CnnModel model, const ImageBatch& train_x, std::span<const int> train_y,
                         const ImageBatch& val_x, std::span<const int> val_y, const CnnTrainConfig& cfg);

/// Building blocks, exposed for per-layer gradient checks. All planes are
/// row-major, channel-major.
namespace cnn_ops {

/// out[co] = bias[co] + sum_ci conv(in[ci], w[co][ci]), 3x3, stride 1,
/// zero "same" padding. `col` receives the im2col buffer ((cin*9) x (h*w)).
void conv3x3_forward(std::span<const double> in, int cin, int h, int w, std::span<const double> weights,
                     std::span<const double> bias, int cout, std::span<double> out, Matrix& col);

/// Accumulates into dweights / dbias; writes din when it is non-empty.
void conv3x3_backward(const Matrix& col, std::span<const double> dout, int cin, int h, int w,
                      std::span<const double> weights, int cout, std::span<double> dweights,
                      std::span<double> dbias, std::span<double> din);

void avgpool2_forward(std::span<const double> in, int c, int h, int w, std::span<double> out);
void avgpool2_backward(std::span<const double> dout, int c, int h, int w, std::span<double> din);

void relu_forward(std::span<double> values);
/// Zeroes gradient entries whose activation output is not positive.
void relu_backward(std::span<const double> activation, std::span<double> grad);

void dense_forward(std::span<const double> in, std::span<const double> weights, std::span<const double> bias,
                   std::span<double> out);
void dense_backward(std::span<const double> in, std::span<const double> dout, std::span<const double> weights,
                    std::span<double> dweights, std::span<double> dbias, std::span<double> din);

/// Returns the loss and writes d loss / d logits.
double softmax_cross_entropy(std::span<const double> logits, int label, std::span<double> dlogits);

}  // namespace cnn_ops

}  // namespace freqlab

#endif  // FREQLAB_CNN_HPP
