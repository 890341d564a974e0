#include "freqlab/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "freqlab/error.hpp"
#include "freqlab/parallel.hpp"

namespace freqlab {

using RowMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Matrix>;

void CnnShape::validate() const {
  require(input_size >= 4 && input_size % 4 == 0, ErrorKind::ShapeError,
          "CNN input size must be a positive multiple of 4");
  require(in_channels >= 1, ErrorKind::ShapeError, "CNN needs at least one input channel");
  require(num_classes >= 2, ErrorKind::ShapeError, "CNN needs at least two classes");
}

int CnnShape::flat_features() const {
  const int s = input_size / 4;
  return kConvWidths[3] * s * s;
}

CnnLayout::CnnLayout(const CnnShape& shape) {
  shape.validate();
  std::size_t offset = 0;
  int cin = shape.in_channels;
  for (int l = 0; l < 4; ++l) {
    conv_in[l] = cin;
    conv_out[l] = kConvWidths[l];
    conv_w[l] = offset;
    offset += static_cast<std::size_t>(kConvWidths[l]) * cin * 9;
    conv_b[l] = offset;
    offset += static_cast<std::size_t>(kConvWidths[l]);
    cin = kConvWidths[l];
  }
  dense_w = offset;
  offset += static_cast<std::size_t>(shape.num_classes) * shape.flat_features();
  dense_b = offset;
  offset += static_cast<std::size_t>(shape.num_classes);
  total = offset;
}

std::size_t closed_form_parameter_count(const CnnShape& shape) {
  std::size_t count = 0;
  int cin = shape.in_channels;
  for (int width : kConvWidths) {
    count += static_cast<std::size_t>(3 * 3 * cin + 1) * width;
    cin = width;
  }
  const std::size_t side = static_cast<std::size_t>(shape.input_size) / 4;
  count += (side * side * kConvWidths[3] + 1) * static_cast<std::size_t>(shape.num_classes);
  return count;
}

CnnModel::CnnModel(const CnnShape& shape) : shape_(shape), layout_(shape), params_(layout_.total, 0.0) {}

CnnModel CnnModel::initialized(const CnnShape& shape, std::uint64_t seed) {
  CnnModel model(shape);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t offset, std::size_t count, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < count; ++i) model.params_[offset + i] = dist(rng);
  };
  const CnnLayout& L = model.layout_;
  for (int l = 0; l < 4; ++l)
    fill(L.conv_w[l], static_cast<std::size_t>(L.conv_out[l]) * L.conv_in[l] * 9, L.conv_in[l] * 9);
  fill(L.dense_w, static_cast<std::size_t>(shape.num_classes) * shape.flat_features(), shape.flat_features());
  return model;
}

ImageBatch gather(const ImageBatch& source, std::span<const int> indices) {
  ImageBatch out(static_cast<int>(indices.size()), source.channels, source.height, source.width);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = source.sample(indices[i]);
    std::copy(src.begin(), src.end(), out.sample(static_cast<int>(i)).begin());
  }
  return out;
}

// ---------------------------------------------------------------- layers

namespace cnn_ops {

void conv3x3_forward(std::span<const double> in, int cin, int h, int w, std::span<const double> weights,
                     std::span<const double> bias, int cout, std::span<double> out, Matrix& col) {
  const int hw = h * w;
  col.resize(cin * 9, hw);
  for (int ci = 0; ci < cin; ++ci) {
    const double* plane = in.data() + static_cast<std::size_t>(ci) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col.data() + static_cast<std::size_t>(ci * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          double* row = dst + static_cast<std::size_t>(y) * w;
          const int sy = y + dy;
          if (sy < 0 || sy >= h) {
            std::fill(row, row + w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(sy) * w;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int x = 0; x < x0; ++x) row[x] = 0.0;
          std::copy(src + x0 + dx, src + x1 + dx, row + x0);
          for (int x = x1; x < w; ++x) row[x] = 0.0;
        }
      }
    }
  }
  ConstRowMap kernel(weights.data(), cout, cin * 9);
  RowMap result(out.data(), cout, hw);
  result.noalias() = kernel * col;
  result.colwise() += Eigen::Map<const Vector>(bias.data(), cout);
}

void conv3x3_backward(const Matrix& col, std::span<const double> dout, int cin, int h, int w,
                      std::span<const double> weights, int cout, std::span<double> dweights,
                      std::span<double> dbias, std::span<double> din) {
  const int hw = h * w;
  ConstRowMap grad_out(dout.data(), cout, hw);
  RowMap grad_w(dweights.data(), cout, cin * 9);
  grad_w.noalias() += grad_out * col.transpose();
  Eigen::Map<Vector>(dbias.data(), cout) += grad_out.rowwise().sum();
  if (din.empty()) return;

  ConstRowMap kernel(weights.data(), cout, cin * 9);
  Matrix dcol = kernel.transpose() * grad_out;
  std::fill(din.begin(), din.end(), 0.0);
  for (int ci = 0; ci < cin; ++ci) {
    double* plane = din.data() + static_cast<std::size_t>(ci) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = dcol.data() + static_cast<std::size_t>(ci * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const double* row = src + static_cast<std::size_t>(y) * w;
          double* target = plane + static_cast<std::size_t>(sy) * w;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int x = x0; x < x1; ++x) target[x + dx] += row[x];
        }
      }
    }
  }
}

void avgpool2_forward(std::span<const double> in, int c, int h, int w, std::span<double> out) {
  const int oh = h / 2;
  const int ow = w / 2;
  for (int ch = 0; ch < c; ++ch) {
    const double* src = in.data() + static_cast<std::size_t>(ch) * h * w;
    double* dst = out.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      const double* r0 = src + static_cast<std::size_t>(2 * y) * w;
      const double* r1 = r0 + w;
      for (int x = 0; x < ow; ++x)
        dst[y * ow + x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
    }
  }
}

void avgpool2_backward(std::span<const double> dout, int c, int h, int w, std::span<double> din) {
  const int oh = h / 2;
  const int ow = w / 2;
  for (int ch = 0; ch < c; ++ch) {
    const double* src = dout.data() + static_cast<std::size_t>(ch) * oh * ow;
    double* dst = din.data() + static_cast<std::size_t>(ch) * h * w;
    for (int y = 0; y < oh; ++y) {
      double* r0 = dst + static_cast<std::size_t>(2 * y) * w;
      double* r1 = r0 + w;
      for (int x = 0; x < ow; ++x) {
        const double g = 0.25 * src[y * ow + x];
        r0[2 * x] = g;
        r0[2 * x + 1] = g;
        r1[2 * x] = g;
        r1[2 * x + 1] = g;
      }
    }
  }
}

void relu_forward(std::span<double> values) {
  for (double& v : values) v = v > 0.0 ? v : 0.0;
}

void relu_backward(std::span<const double> activation, std::span<double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(activation[i] > 0.0)) grad[i] = 0.0;
}

void dense_forward(std::span<const double> in, std::span<const double> weights, std::span<const double> bias,
                   std::span<double> out) {
  const auto k = static_cast<Eigen::Index>(out.size());
  const auto f = static_cast<Eigen::Index>(in.size());
  ConstRowMap W(weights.data(), k, f);
  Eigen::Map<Vector>(out.data(), k).noalias() =
      W * Eigen::Map<const Vector>(in.data(), f) + Eigen::Map<const Vector>(bias.data(), k);
}

void dense_backward(std::span<const double> in, std::span<const double> dout, std::span<const double> weights,
                    std::span<double> dweights, std::span<double> dbias, std::span<double> din) {
  const auto k = static_cast<Eigen::Index>(dout.size());
  const auto f = static_cast<Eigen::Index>(in.size());
  Eigen::Map<const Vector> g(dout.data(), k);
  Eigen::Map<const Vector> x(in.data(), f);
  RowMap(dweights.data(), k, f).noalias() += g * x.transpose();
  Eigen::Map<Vector>(dbias.data(), k) += g;
  if (!din.empty()) Eigen::Map<Vector>(din.data(), f).noalias() = ConstRowMap(weights.data(), k, f).transpose() * g;
}

double softmax_cross_entropy(std::span<const double> logits, int label, std::span<double> dlogits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - peak);
  const double log_denom = std::log(denom);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double p = std::exp(logits[k] - peak - log_denom);
    dlogits[k] = p - (static_cast<int>(k) == label ? 1.0 : 0.0);
  }
  return -(logits[static_cast<std::size_t>(label)] - peak - log_denom);
}

}  // namespace cnn_ops

// ---------------------------------------------------------------- network

namespace {

/// Per-sample activations kept for the backward pass.
struct Workspace {
  std::array<Matrix, 4> col;
  AlignedBuffer a1, a2, p2, a3, p3, a4, logits;
  AlignedBuffer g1, g2, gp2, g3, gp3, g4, glogits;

  explicit Workspace(const CnnShape& shape) {
    const std::size_t s = static_cast<std::size_t>(shape.input_size);
    const std::size_t s2 = s / 2;
    const std::size_t s4 = s / 4;
    a1.resize(kConvWidths[0] * s * s);
    a2.resize(kConvWidths[1] * s * s);
    p2.resize(kConvWidths[1] * s2 * s2);
    a3.resize(kConvWidths[2] * s2 * s2);
    p3.resize(kConvWidths[2] * s4 * s4);
    a4.resize(kConvWidths[3] * s4 * s4);
    logits.resize(static_cast<std::size_t>(shape.num_classes));
    g1.resize(a1.size());
    g2.resize(a2.size());
    gp2.resize(p2.size());
    g3.resize(a3.size());
    gp3.resize(p3.size());
    g4.resize(a4.size());
    glogits.resize(logits.size());
  }
};

std::span<const double> slice(std::span<const double> p, std::size_t offset, std::size_t count) {
  return p.subspan(offset, count);
}
std::span<double> slice(std::span<double> p, std::size_t offset, std::size_t count) {
  return p.subspan(offset, count);
}

void check_batch(const CnnModel& model, const ImageBatch& batch) {
  const CnnShape& s = model.shape();
  require(batch.channels == s.in_channels && batch.height == s.input_size && batch.width == s.input_size,
          ErrorKind::ShapeError, "batch shape does not match the CNN input shape");
  require(batch.data.size() == static_cast<std::size_t>(batch.count) * batch.sample_size(), ErrorKind::ShapeError,
          "batch buffer size is inconsistent");
}

void forward_sample(const CnnModel& model, std::span<const double> input, Workspace& ws) {
  using namespace cnn_ops;
  const CnnShape& shape = model.shape();
  const CnnLayout& L = model.layout();
  auto p = model.params();
  const int s = shape.input_size;
  const int s2 = s / 2;
  const int s4 = s / 4;
  auto conv = [&](int l, std::span<const double> in, int size, AlignedBuffer& out) {
    const std::size_t wcount = static_cast<std::size_t>(L.conv_out[l]) * L.conv_in[l] * 9;
    conv3x3_forward(in, L.conv_in[l], size, size, slice(p, L.conv_w[l], wcount),
                    slice(p, L.conv_b[l], static_cast<std::size_t>(L.conv_out[l])), L.conv_out[l], out, ws.col[l]);
    relu_forward(out);
  };
  conv(0, input, s, ws.a1);
  conv(1, ws.a1, s, ws.a2);
  avgpool2_forward(ws.a2, kConvWidths[1], s, s, ws.p2);
  conv(2, ws.p2, s2, ws.a3);
  avgpool2_forward(ws.a3, kConvWidths[2], s2, s2, ws.p3);
  conv(3, ws.p3, s4, ws.a4);
  const std::size_t k = static_cast<std::size_t>(shape.num_classes);
  dense_forward(ws.a4, slice(p, L.dense_w, k * ws.a4.size()), slice(p, L.dense_b, k), ws.logits);
}

/// Backpropagates ws.glogits (already scaled) and accumulates into grads.
void backward_sample(const CnnModel& model, Workspace& ws, std::span<double> grads) {
  using namespace cnn_ops;
  const CnnShape& shape = model.shape();
  const CnnLayout& L = model.layout();
  auto p = model.params();
  const int s = shape.input_size;
  const int s2 = s / 2;
  const int s4 = s / 4;
  const std::size_t k = static_cast<std::size_t>(shape.num_classes);
  dense_backward(ws.a4, ws.glogits, slice(p, L.dense_w, k * ws.a4.size()), slice(grads, L.dense_w, k * ws.a4.size()),
                 slice(grads, L.dense_b, k), ws.g4);
  auto conv_back = [&](int l, AlignedBuffer& act, AlignedBuffer& grad_out, int size,
                       std::span<double> grad_in) {
    relu_backward(act, grad_out);
    const std::size_t wcount = static_cast<std::size_t>(L.conv_out[l]) * L.conv_in[l] * 9;
    conv3x3_backward(ws.col[l], grad_out, L.conv_in[l], size, size, slice(p, L.conv_w[l], wcount), L.conv_out[l],
                     slice(grads, L.conv_w[l], wcount),
                     slice(grads, L.conv_b[l], static_cast<std::size_t>(L.conv_out[l])), grad_in);
  };
  conv_back(3, ws.a4, ws.g4, s4, ws.gp3);
  avgpool2_backward(ws.gp3, kConvWidths[2], s2, s2, ws.g3);
  conv_back(2, ws.a3, ws.g3, s2, ws.gp2);
  avgpool2_backward(ws.gp2, kConvWidths[1], s, s, ws.g2);
  conv_back(1, ws.a2, ws.g2, s, ws.g1);
  conv_back(0, ws.a1, ws.g1, s, {});
}

/// Samples are split into a fixed number of contiguous chunks independent
/// of the thread count, so reductions happen in the same order however many
/// workers run.
constexpr int kChunks = 8;

}  // namespace

Matrix forward(const CnnModel& model, const ImageBatch& batch) {
  check_batch(model, batch);
  Matrix logits(batch.count, model.shape().num_classes);
  const int chunks = std::min(kChunks, std::max(1, batch.count));
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Workspace ws(model.shape());
    const int begin = static_cast<int>(c) * batch.count / chunks;
    const int end = (static_cast<int>(c) + 1) * batch.count / chunks;
    for (int i = begin; i < end; ++i) {
      forward_sample(model, batch.sample(i), ws);
      for (int k = 0; k < model.shape().num_classes; ++k) logits(i, k) = ws.logits[static_cast<std::size_t>(k)];
    }
  });
  return logits;
}

CnnGradients backward(const CnnModel& model, const ImageBatch& batch, std::span<const int> labels) {
  check_batch(model, batch);
  require(labels.size() == static_cast<std::size_t>(batch.count), ErrorKind::ShapeError,
          "label count does not match batch size");
  require(batch.count >= 1, ErrorKind::InvalidInput, "empty batch");
  for (int y : labels)
    require(y >= 0 && y < model.shape().num_classes, ErrorKind::InvalidInput, "label out of range");

  const int chunks = std::min(kChunks, batch.count);
  std::vector<AlignedBuffer> partial(static_cast<std::size_t>(chunks));
  std::vector<double> partial_loss(static_cast<std::size_t>(chunks), 0.0);
  const double scale = 1.0 / batch.count;
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Workspace ws(model.shape());
    auto& grads = partial[c];
    grads.assign(model.parameter_count(), 0.0);
    const int begin = static_cast<int>(c) * batch.count / chunks;
    const int end = (static_cast<int>(c) + 1) * batch.count / chunks;
    for (int i = begin; i < end; ++i) {
      forward_sample(model, batch.sample(i), ws);
      partial_loss[c] += cnn_ops::softmax_cross_entropy(ws.logits, labels[static_cast<std::size_t>(i)], ws.glogits);
      for (double& g : ws.glogits) g *= scale;
      backward_sample(model, ws, grads);
    }
  });
  CnnGradients out;
  out.grads = std::move(partial[0]);
  out.loss = partial_loss[0];
  for (int c = 1; c < chunks; ++c) {
    const auto& g = partial[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < g.size(); ++i) out.grads[i] += g[i];
    out.loss += partial_loss[static_cast<std::size_t>(c)];
  }
  out.loss *= scale;
  return out;
}

double cnn_loss(const CnnModel& model, const ImageBatch& batch, std::span<const int> labels) {
  Matrix logits = forward(model, batch);
  std::vector<double> scratch(static_cast<std::size_t>(logits.cols()));
  double total = 0.0;
  for (int i = 0; i < batch.count; ++i) {
    std::vector<double> row(logits.row(i).data(), logits.row(i).data() + logits.cols());
    total += cnn_ops::softmax_cross_entropy(row, labels[static_cast<std::size_t>(i)], scratch);
  }
  return total / batch.count;
}

std::vector<int> predict(const CnnModel& model, const ImageBatch& batch) {
  std::vector<int> out(static_cast<std::size_t>(batch.count));
  constexpr int kEvalBlock = 256;
  for (int start = 0; start < batch.count; start += kEvalBlock) {
    const int n = std::min(kEvalBlock, batch.count - start);
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), start);
    Matrix logits = forward(model, gather(batch, idx));
    for (int i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      out[static_cast<std::size_t>(start + i)] = static_cast<int>(arg);
    }
  }
  return out;
}

std::vector<std::uint8_t> relu_pattern(const CnnModel& model, const ImageBatch& batch) {
  check_batch(model, batch);
  Workspace ws(model.shape());
  std::vector<std::uint8_t> out;
  for (int i = 0; i < batch.count; ++i) {
    forward_sample(model, batch.sample(i), ws);
    for (const AlignedBuffer* a : {&ws.a1, &ws.a2, &ws.a3, &ws.a4})
      for (double v : *a) out.push_back(v > 0.0 ? 1 : 0);
  }
  return out;
}

GradientCheck check_gradients(const CnnModel& model, const ImageBatch& batch, std::span<const int> labels,
                              double step, double floor) {
  require(step > 0.0 && floor > 0.0, ErrorKind::InvalidInput, "step and floor must be positive");
  const CnnGradients g = backward(model, batch, labels);
  const std::vector<std::uint8_t> base = relu_pattern(model, batch);
  CnnModel probe = model;
  GradientCheck result;
  for (std::size_t i = 0; i < probe.parameter_count(); ++i) {
    const double keep = probe.params()[i];
    double h = step;
    double numeric = 0.0;
    for (;;) {
      probe.params()[i] = keep + h;
      const double up = cnn_loss(probe, batch, labels);
      const bool up_same = relu_pattern(probe, batch) == base;
      probe.params()[i] = keep - h;
      const double down = cnn_loss(probe, batch, labels);
      const bool down_same = relu_pattern(probe, batch) == base;
      numeric = (up - down) / (2 * h);
      if ((up_same && down_same) || h <= 1e-9) break;
      if (h == step) ++result.kink_retries;
      h /= 10;
    }
    probe.params()[i] = keep;
    const double err = std::abs(numeric - g.grads[i]) / std::max(std::abs(numeric) + std::abs(g.grads[i]), floor);
    if (err > result.worst_relative_error) {
      result.worst_relative_error = err;
      result.worst_index = i;
      result.worst_numeric = numeric;
      result.worst_analytic = g.grads[i];
    }
  }
  return result;
}

CnnTrainResult train_cnn(CnnModel model, const ImageBatch& train_x, std::span<const int> train_y,
                         const ImageBatch& val_x, std::span<const int> val_y, const CnnTrainConfig& cfg) {
  cfg.optimizer.validate();
  check_batch(model, train_x);
  check_batch(model, val_x);
  require(train_y.size() == static_cast<std::size_t>(train_x.count) &&
              val_y.size() == static_cast<std::size_t>(val_x.count),
          ErrorKind::ShapeError, "label count does not match sample count");
  require(train_x.count >= 1 && val_x.count >= 1, ErrorKind::InsufficientData, "empty training or validation set");

  std::mt19937_64 rng(cfg.optimizer.rng_seed);
  Adam adam(model.parameter_count(), cfg.optimizer);
  std::vector<int> order(static_cast<std::size_t>(train_x.count));
  std::iota(order.begin(), order.end(), 0);

  CnnTrainResult result{model, {}, 0, -1.0, std::nullopt, 0};
  std::vector<double> best(model.params().begin(), model.params().end());
  long step = 0;
  int stale = 0;
  double loss_sum = 0.0;
  long loss_count = 0;
  bool stop = false;

  auto evaluate = [&] {
    auto pred = predict(model, val_x);
    long correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == val_y[i];
    const double acc = static_cast<double>(correct) / static_cast<double>(pred.size());
    const double loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count)
                                       : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back({step, loss, acc});
    loss_sum = 0.0;
    loss_count = 0;
    if (acc > result.best_val_accuracy) {
      result.best_val_accuracy = acc;
      result.best_step = step;
      std::copy(model.params().begin(), model.params().end(), best.begin());
      stale = 0;
    } else {
      ++stale;
    }
    if (!result.steps_to_target && acc >= cfg.target_accuracy) {
      result.steps_to_target = step;
      if (cfg.stop_at_target) stop = true;
    }
    if (stale >= cfg.optimizer.early_stop_patience) stop = true;
  };

  const int bs = cfg.optimizer.batch_size;
  for (int epoch = 0; epoch < cfg.optimizer.max_epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    bool evaluated_now = false;
    for (int start = 0; start < train_x.count && !stop; start += bs) {
      const int n = std::min(bs, train_x.count - start);
      std::span<const int> idx(order.data() + start, static_cast<std::size_t>(n));
      ImageBatch batch = gather(train_x, idx);
      std::vector<int> labels(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = train_y[static_cast<std::size_t>(idx[i])];
      CnnGradients g = backward(model, batch, labels);
      adam.step(model.params(), g.grads);
      ++step;
      loss_sum += g.loss;
      ++loss_count;
      evaluated_now = false;
      if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
        evaluate();
        evaluated_now = true;
      }
      if (cfg.max_steps > 0 && step >= cfg.max_steps) {
        if (!evaluated_now) evaluate();
        stop = true;
      }
    }
    if (cfg.eval_every == 0 && !stop) evaluate();
  }
  if (result.history.empty()) evaluate();

  std::copy(best.begin(), best.end(), model.params().begin());
  result.model = std::move(model);
  result.total_steps = step;
  return result;
}

}  // namespace freqlab
