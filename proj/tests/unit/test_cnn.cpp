#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "freqlab/cnn.hpp"
#include "freqlab/error.hpp"
#include "helpers.hpp"

using namespace freqlab;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

ImageBatch random_batch(int n, int c, int size, std::uint64_t seed) {
  ImageBatch b(n, c, size, size);
  const auto values = random_vector(b.data.size(), seed);
  b.data.assign(values.begin(), values.end());
  return b;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b)); }

// Straightforward loop implementation of the network, independent of the
// im2col kernels used by the library.
struct NaiveCnn {
  const CnnModel& model;

  std::vector<double> conv(const std::vector<double>& in, int cin, int s, int layer) const {
    const auto& L = model.layout();
    const auto p = model.params();
    const int cout = L.conv_out[static_cast<std::size_t>(layer)];
    std::vector<double> out(static_cast<std::size_t>(cout) * s * s);
    for (int co = 0; co < cout; ++co)
      for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
          double acc = p[L.conv_b[static_cast<std::size_t>(layer)] + static_cast<std::size_t>(co)];
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = y + ky - 1, sx = x + kx - 1;
                if (sy < 0 || sy >= s || sx < 0 || sx >= s) continue;
                const double w = p[L.conv_w[static_cast<std::size_t>(layer)] +
                                   static_cast<std::size_t>(((co * cin + ci) * 3 + ky) * 3 + kx)];
                acc += w * in[static_cast<std::size_t>((ci * s + sy) * s + sx)];
              }
          out[static_cast<std::size_t>((co * s + y) * s + x)] = std::max(0.0, acc);
        }
    return out;
  }

  static std::vector<double> pool(const std::vector<double>& in, int c, int s) {
    const int h = s / 2;
    std::vector<double> out(static_cast<std::size_t>(c) * h * h);
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < h; ++x) {
          double acc = 0.0;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) acc += in[static_cast<std::size_t>((ch * s + 2 * y + dy) * s + 2 * x + dx)];
          out[static_cast<std::size_t>((ch * h + y) * h + x)] = acc / 4.0;
        }
    return out;
  }

  std::vector<double> logits(std::span<const double> input) const {
    const int s = model.shape().input_size;
    std::vector<double> a(input.begin(), input.end());
    a = conv(a, model.shape().in_channels, s, 0);
    a = conv(a, 3, s, 1);
    a = pool(a, 8, s);
    a = conv(a, 8, s / 2, 2);
    a = pool(a, 16, s / 2);
    a = conv(a, 16, s / 4, 3);
    const auto& L = model.layout();
    const auto p = model.params();
    std::vector<double> out(static_cast<std::size_t>(model.shape().num_classes));
    for (std::size_t k = 0; k < out.size(); ++k) {
      double acc = p[L.dense_b + k];
      for (std::size_t j = 0; j < a.size(); ++j) acc += p[L.dense_w + k * a.size() + j] * a[j];
      out[k] = acc;
    }
    return out;
  }
};

}  // namespace

TEST(CnnShape, ParameterCountNearDocumentedSize) {
  const CnnShape shape{128, 1, 5};
  // Kernels (3*3*cin + 1 bias) * cout per conv, then 32*32*32 features * 5 + 5.
  const std::size_t expected = (9 * 1 + 1) * 3 + (9 * 3 + 1) * 8 + (9 * 8 + 1) * 16 + (9 * 16 + 1) * 32 +
                               32 * 32 * 32 * 5 + 5;
  EXPECT_EQ(expected, 169907u);
  EXPECT_EQ(CnnModel(shape).parameter_count(), expected);
  EXPECT_EQ(closed_form_parameter_count(shape), expected);
  EXPECT_LE(std::abs(static_cast<double>(expected) - 170000.0), 0.05 * 170000.0);
  EXPECT_EQ(CnnModel(CnnShape{128, 3, 5}).parameter_count(), 169961u);
}

TEST(CnnForward, ZeroModelGivesUniformSoftmax) {
  const CnnModel model(CnnShape{16, 1, 5});
  const Matrix logits = forward(model, random_batch(3, 1, 16, 1));
  EXPECT_EQ(logits.cwiseAbs().maxCoeff(), 0.0);
  std::vector<double> grad(5);
  std::vector<double> row(5, 0.0);
  EXPECT_NEAR(cnn_ops::softmax_cross_entropy(row, 2, grad), std::log(5.0), 1e-15);
  EXPECT_NEAR(grad[0], 0.2, 1e-15);
}

TEST(CnnForward, IdenticalInputsGiveIdenticalRows) {
  const CnnModel model = CnnModel::initialized(CnnShape{16, 1, 5}, 2);
  ImageBatch b(4, 1, 16, 16);
  const auto one = random_vector(256, 3);
  for (int i = 0; i < 4; ++i) std::copy(one.begin(), one.end(), b.sample(i).begin());
  const Matrix logits = forward(model, b);
  for (int i = 1; i < 4; ++i) EXPECT_EQ(logits.row(i), logits.row(0));
}

TEST(CnnForward, MatchesNaiveOracle) {
  for (int c : {1, 3}) {
    const CnnModel model = CnnModel::initialized(CnnShape{16, c, 5}, 4 + static_cast<std::uint64_t>(c));
    const ImageBatch batch = random_batch(3, c, 16, 5);
    const Matrix logits = forward(model, batch);
    const NaiveCnn naive{model};
    for (int i = 0; i < 3; ++i) {
      const auto ref = naive.logits(batch.sample(i));
      for (int k = 0; k < 5; ++k) EXPECT_NEAR(logits(i, k), ref[static_cast<std::size_t>(k)], 1e-10);
    }
  }
}

TEST(CnnForward, BatchOrderEquivariant) {
  const CnnModel model = CnnModel::initialized(CnnShape{16, 1, 3}, 6);
  const ImageBatch batch = random_batch(5, 1, 16, 7);
  const std::vector<int> perm = {3, 0, 4, 1, 2};
  const Matrix a = forward(model, batch);
  const Matrix b = forward(model, gather(batch, perm));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(b.row(i), a.row(perm[static_cast<std::size_t>(i)]));
}

TEST(CnnForward, ShapeMismatchRejected) {
  const CnnModel model(CnnShape{16, 1, 5});
  try {
    forward(model, random_batch(1, 1, 20, 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeError);
  }
}

TEST(CnnBackward, FullNetworkMatchesFiniteDifferences) {
  const CnnModel base = CnnModel::initialized(CnnShape{32, 1, 5}, 9);
  const ImageBatch batch = random_batch(4, 1, 32, 10);
  const std::vector<int> labels = {0, 3, 1, 4};
  const CnnGradients g = backward(base, batch, labels);
  EXPECT_NEAR(g.loss, cnn_loss(base, batch, labels), 1e-12);
  const std::vector<std::uint8_t> pattern = relu_pattern(base, batch);
  ASSERT_EQ(pattern.size(), 4u * (3 * 1024 + 8 * 1024 + 16 * 256 + 32 * 64));

  // Central differences are only a derivative oracle where the ReLU pattern
  // is the same at both ends of the step; elsewhere the step shrinks.
  CnnModel model = base;
  std::size_t worst_index = 0;
  double worst = 0.0;
  double worst_fd = 0.0;
  int retries = 0;
  for (std::size_t i = 0; i < model.parameter_count(); ++i) {
    const double keep = model.params()[i];
    double h = 1e-5;
    double fd = 0.0;
    for (;;) {
      model.params()[i] = keep + h;
      const double up = cnn_loss(model, batch, labels);
      const bool same_up = relu_pattern(model, batch) == pattern;
      model.params()[i] = keep - h;
      const double down = cnn_loss(model, batch, labels);
      const bool same_down = relu_pattern(model, batch) == pattern;
      fd = (up - down) / (2 * h);
      if ((same_up && same_down) || h < 1e-8) break;
      if (h == 1e-5) ++retries;
      h /= 10;
    }
    model.params()[i] = keep;
    const double err = std::abs(fd - g.grads[i]) / std::max(std::abs(fd) + std::abs(g.grads[i]), 1e-6);
    if (err > worst) {
      worst = err;
      worst_index = i;
      worst_fd = fd;
    }
  }
  EXPECT_LT(worst, 1e-4) << "parameter " << worst_index << " numeric " << worst_fd << " analytic "
                         << g.grads[worst_index];
  EXPECT_LT(retries, 1000);

  const GradientCheck lib = check_gradients(base, batch, labels);
  EXPECT_EQ(lib.worst_relative_error, worst);
  EXPECT_EQ(static_cast<int>(lib.kink_retries), retries);
}

TEST(CnnBackward, DuplicatedSampleKeepsMeanGradient) {
  const CnnModel model = CnnModel::initialized(CnnShape{16, 1, 5}, 11);
  const ImageBatch one = random_batch(1, 1, 16, 12);
  const std::vector<int> idx = {0, 0};
  const std::vector<int> l1 = {2};
  const std::vector<int> l2 = {2, 2};
  const auto a = backward(model, one, l1);
  const auto b = backward(model, gather(one, idx), l2);
  for (std::size_t i = 0; i < a.grads.size(); ++i) EXPECT_NEAR(a.grads[i], b.grads[i], 1e-12);
}

TEST(CnnBackward, SaturatedCorrectPredictionHasVanishingGradient) {
  std::vector<double> logits = {60.0, 0.0, -5.0, 1.0, 2.0};
  std::vector<double> grad(5);
  const double loss = cnn_ops::softmax_cross_entropy(logits, 0, grad);
  EXPECT_LT(loss, 1e-20);
  double norm = 0.0;
  for (double g : grad) norm += g * g;
  EXPECT_LT(std::sqrt(norm), 1e-20);
}

TEST(CnnBackward, InvalidLabelRejected) {
  const CnnModel model(CnnShape{16, 1, 5});
  const std::vector<int> bad = {5};
  try {
    backward(model, random_batch(1, 1, 16, 13), bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(CnnLayers, ConvGradientsMatchFiniteDifferences) {
  const int cin = 2, cout = 3, h = 5, w = 6;
  auto in = random_vector(static_cast<std::size_t>(cin * h * w), 14);
  auto weights = random_vector(static_cast<std::size_t>(cout * cin * 9), 15);
  auto bias = random_vector(static_cast<std::size_t>(cout), 16);
  const auto r = random_vector(static_cast<std::size_t>(cout * h * w), 17);
  std::vector<double> out(r.size());
  Matrix col;
  auto loss = [&] {
    Matrix c;
    cnn_ops::conv3x3_forward(in, cin, h, w, weights, bias, cout, out, c);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * r[i];
    return s;
  };
  cnn_ops::conv3x3_forward(in, cin, h, w, weights, bias, cout, out, col);
  std::vector<double> dw(weights.size(), 0.0), db(bias.size(), 0.0), din(in.size(), 0.0);
  cnn_ops::conv3x3_backward(col, r, cin, h, w, weights, cout, dw, db, din);
  const double eps = 1e-6;
  auto check = [&](std::vector<double>& v, const std::vector<double>& analytic, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + eps;
      const double up = loss();
      v[i] = keep - eps;
      const double down = loss();
      v[i] = keep;
      EXPECT_LT(relative_error((up - down) / (2 * eps), analytic[i]), 1e-6) << what << " " << i;
    }
  };
  check(weights, dw, "weight");
  check(bias, db, "bias");
  check(in, din, "input");
}

TEST(CnnLayers, PoolReluDenseGradients) {
  const int c = 2, h = 4, w = 6;
  auto in = random_vector(static_cast<std::size_t>(c * h * w), 18);
  const auto r = random_vector(static_cast<std::size_t>(c * h * w / 4), 19);
  std::vector<double> pooled(r.size());
  cnn_ops::avgpool2_forward(in, c, h, w, pooled);
  double in_sum = 0.0, out_sum = 0.0;
  for (double v : in) in_sum += v;
  for (double v : pooled) out_sum += v;
  EXPECT_NEAR(4.0 * out_sum, in_sum, 1e-12);
  std::vector<double> din(in.size());
  cnn_ops::avgpool2_backward(r, c, h, w, din);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        EXPECT_DOUBLE_EQ(din[static_cast<std::size_t>((ch * h + y) * w + x)],
                         r[static_cast<std::size_t>((ch * (h / 2) + y / 2) * (w / 2) + x / 2)] / 4.0);

  std::vector<double> act = {-1.0, 0.5, 0.0, 2.0};
  cnn_ops::relu_forward(act);
  EXPECT_EQ(act, (std::vector<double>{0.0, 0.5, 0.0, 2.0}));
  std::vector<double> grad = {1.0, 1.0, 1.0, 1.0};
  cnn_ops::relu_backward(act, grad);
  EXPECT_EQ(grad, (std::vector<double>{0.0, 1.0, 0.0, 1.0}));

  auto x = random_vector(7, 20);
  auto wts = random_vector(21, 21);
  auto b = random_vector(3, 22);
  const auto rr = random_vector(3, 23);
  std::vector<double> y(3);
  auto loss = [&] {
    cnn_ops::dense_forward(x, wts, b, y);
    return y[0] * rr[0] + y[1] * rr[1] + y[2] * rr[2];
  };
  std::vector<double> dw(21, 0.0), db(3, 0.0), dx(7, 0.0);
  cnn_ops::dense_backward(x, rr, wts, dw, db, dx);
  const double eps = 1e-6;
  for (auto* pair : {&wts, &x}) {
    const auto& analytic = pair == &wts ? dw : dx;
    for (std::size_t i = 0; i < pair->size(); ++i) {
      const double keep = (*pair)[i];
      (*pair)[i] = keep + eps;
      const double up = loss();
      (*pair)[i] = keep - eps;
      const double down = loss();
      (*pair)[i] = keep;
      EXPECT_LT(relative_error((up - down) / (2 * eps), analytic[i]), 1e-6);
    }
  }
  for (std::size_t k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(db[k], rr[k]);

  auto logits = random_vector(5, 24, -3, 3);
  std::vector<double> dl(5);
  cnn_ops::softmax_cross_entropy(logits, 1, dl);
  std::vector<double> scratch(5);
  for (std::size_t i = 0; i < 5; ++i) {
    const double keep = logits[i];
    logits[i] = keep + eps;
    const double up = cnn_ops::softmax_cross_entropy(logits, 1, scratch);
    logits[i] = keep - eps;
    const double down = cnn_ops::softmax_cross_entropy(logits, 1, scratch);
    logits[i] = keep;
    EXPECT_LT(relative_error((up - down) / (2 * eps), dl[i]), 1e-6);
  }
}

TEST(CnnTrain, ZeroLearningRateLeavesParameters) {
  const CnnModel model = CnnModel::initialized(CnnShape{16, 1, 2}, 25);
  const ImageBatch x = random_batch(8, 1, 16, 26);
  const std::vector<int> y = {0, 1, 0, 1, 0, 1, 0, 1};
  CnnTrainConfig cfg;
  cfg.optimizer.learning_rate = 0.0;
  cfg.optimizer.batch_size = 4;
  cfg.optimizer.max_epochs = 3;
  const CnnTrainResult r = train_cnn(model, x, y, x, y, cfg);
  EXPECT_TRUE(std::equal(r.model.params().begin(), r.model.params().end(), model.params().begin()));
  EXPECT_EQ(r.total_steps, 6);
}

TEST(CnnTrain, MemorizesTenSamples) {
  const ImageBatch x = random_batch(10, 1, 16, 27);
  const std::vector<int> y = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  CnnTrainConfig cfg;
  cfg.optimizer.learning_rate = 3e-3;
  cfg.optimizer.batch_size = 10;
  cfg.optimizer.max_epochs = 400;
  cfg.optimizer.early_stop_patience = 400;
  cfg.stop_at_target = true;
  cfg.target_accuracy = 1.0;
  const CnnTrainResult r = train_cnn(CnnModel::initialized(CnnShape{16, 1, 5}, 28), x, y, x, y, cfg);
  EXPECT_EQ(r.best_val_accuracy, 1.0);
  const auto pred = predict(r.model, x);
  EXPECT_EQ(pred, y);
}

TEST(CnnTrain, FixedSeedGivesBitwiseIdenticalHistory) {
  const ImageBatch x = random_batch(24, 1, 16, 29);
  std::vector<int> y;
  for (int i = 0; i < 24; ++i) y.push_back(i % 3);
  CnnTrainConfig cfg;
  cfg.optimizer.batch_size = 8;
  cfg.optimizer.max_epochs = 4;
  cfg.optimizer.rng_seed = 30;
  const CnnModel init = CnnModel::initialized(CnnShape{16, 1, 3}, 31);
  const auto a = train_cnn(init, x, y, x, y, cfg);
  const auto b = train_cnn(init, x, y, x, y, cfg);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_accuracy, b.history[i].val_accuracy);
  }
  EXPECT_TRUE(std::equal(a.model.params().begin(), a.model.params().end(), b.model.params().begin()));
}
