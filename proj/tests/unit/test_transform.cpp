#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "freqlab/error.hpp"
#include "freqlab/transform.hpp"
#include "helpers.hpp"

using namespace freqlab;
using freqlab::testing::random_matrix;

namespace {

// Direct evaluation of the orthonormal DCT-II double sum, written without
// reference to the library's basis matrices.
Matrix reference_dct(const Matrix& x) {
  const int n1 = static_cast<int>(x.rows());
  const int n2 = static_cast<int>(x.cols());
  Matrix out(n1, n2);
  for (int k1 = 0; k1 < n1; ++k1) {
    for (int k2 = 0; k2 < n2; ++k2) {
      double acc = 0.0;
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
          acc += x(i, j) * std::cos(std::numbers::pi * (2 * i + 1) * k1 / (2.0 * n1)) *
                 std::cos(std::numbers::pi * (2 * j + 1) * k2 / (2.0 * n2));
      const double w1 = k1 == 0 ? std::sqrt(1.0 / n1) : std::sqrt(2.0 / n1);
      const double w2 = k2 == 0 ? std::sqrt(1.0 / n2) : std::sqrt(2.0 / n2);
      out(k1, k2) = w1 * w2 * acc;
    }
  }
  return out;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Dct, ConstantImageHasOnlyDc) {
  const double c = 37.5;
  const Spectrum s = dct2(GrayImage(Matrix::Constant(8, 8, c)));
  EXPECT_NEAR(s.coeffs(0, 0), 8.0 * c, 1e-12);
  Matrix rest = s.coeffs;
  rest(0, 0) = 0.0;
  EXPECT_LT(max_abs(rest), 1e-12);
}

TEST(Dct, ZeroImage) {
  EXPECT_EQ(max_abs(dct2(GrayImage(Matrix::Zero(12, 7))).coeffs), 0.0);
}

TEST(Dct, MatchesReferenceOnRandomSizes) {
  for (int trial = 0; trial < 40; ++trial) {
    const int n1 = 1 + trial % 17;
    const int n2 = 1 + (trial * 7) % 23;
    const Matrix x = random_matrix(n1, n2, 100 + trial, -5.0, 5.0);
    const Matrix ref = reference_dct(x);
    EXPECT_LT(max_abs(dct2(GrayImage(x)).coeffs - ref), 1e-9) << n1 << "x" << n2;
    EXPECT_LT(max_abs(dct2_naive(GrayImage(x)).coeffs - ref), 1e-9) << n1 << "x" << n2;
  }
}

TEST(Dct, NonSquareAgreesWithNaive) {
  const Matrix x = random_matrix(8, 16, 3);
  EXPECT_LT(max_abs(dct2(GrayImage(x)).coeffs - dct2_naive(GrayImage(x)).coeffs), 1e-9);
}

TEST(Dct, RoundTrip128) {
  const Matrix x = random_matrix(128, 128, 4);
  const GrayImage back = idct2(dct2(GrayImage(x)));
  EXPECT_LT(max_abs(back.pixels - x), 1e-9);
}

TEST(Dct, Parseval) {
  for (int seed = 0; seed < 5; ++seed) {
    const Matrix x = random_matrix(64, 48, 10 + seed, -1.0, 1.0);
    const double e = x.squaredNorm();
    EXPECT_LT(std::abs(dct2(GrayImage(x)).coeffs.squaredNorm() - e), 1e-6 * e);
  }
}

TEST(Dct, Linearity) {
  const Matrix x = random_matrix(20, 20, 5);
  const Matrix y = random_matrix(20, 20, 6);
  const double a = 1.7;
  const double b = -0.3;
  const Matrix lhs = dct2(GrayImage(Matrix(a * x + b * y))).coeffs;
  const Matrix rhs = a * dct2(GrayImage(x)).coeffs + b * dct2(GrayImage(y)).coeffs;
  EXPECT_LT(max_abs(lhs - rhs), 1e-9);
}

TEST(Dct, InverseOfDcIsConstant) {
  Matrix c = Matrix::Zero(8, 8);
  c(0, 0) = 8.0 * 3.25;
  const GrayImage img = idct2(Spectrum(c));
  EXPECT_LT(max_abs(img.pixels.array() - 3.25), 1e-12);
}

TEST(Dct, InverseOfUnitCoefficientIsSampledCosine) {
  Matrix c = Matrix::Zero(8, 8);
  c(0, 1) = 1.0;
  const GrayImage img = idct2(Spectrum(c));
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      const double expected = std::sqrt(1.0 / 8) * std::sqrt(2.0 / 8) * std::cos(std::numbers::pi * (2 * y + 1) / 16.0);
      EXPECT_NEAR(img.pixels(x, y), expected, 1e-12);
    }
}

TEST(Dct, NaiveSmallExamples) {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_NEAR(dct2_naive(GrayImage(m)).coeffs(0, 0), 5.0, 1e-12);
  const Spectrum ones = dct2_naive(GrayImage(Matrix::Ones(4, 4)));
  EXPECT_NEAR(ones.coeffs(0, 0), 4.0, 1e-12);
  Matrix rest = ones.coeffs;
  rest(0, 0) = 0.0;
  EXPECT_LT(max_abs(rest), 1e-12);
}

TEST(Dct, Errors) {
  Matrix bad = Matrix::Zero(4, 4);
  bad(1, 2) = std::numeric_limits<double>::quiet_NaN();
  try {
    dct2(GrayImage(bad));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
  try {
    idct2(Spectrum(bad));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
  try {
    dct2_naive(GrayImage(Matrix::Zero(65, 64)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OracleSizeExceeded);
  }
}

TEST(LogScale, Definition) {
  Matrix c(1, 3);
  c << 0.0, -std::numbers::e, 2.0;
  const Spectrum s = log_scale(Spectrum(c), 1e-12);
  EXPECT_NEAR(s.coeffs(0, 0), std::log(1e-12), 1e-9);
  EXPECT_NEAR(s.coeffs(0, 0), -27.631, 1e-3);
  EXPECT_NEAR(s.coeffs(0, 1), 1.0, 1e-9);
  EXPECT_NEAR(s.coeffs(0, 2), std::log(2.0), 1e-9);
  EXPECT_THROW(log_scale(Spectrum(c), 0.0), Error);
  EXPECT_THROW(log_scale(Spectrum(c), -1.0), Error);
}

TEST(FeatureStats, TwoSamples) {
  std::vector<Spectrum> s = {Spectrum(Matrix::Constant(2, 2, 0.0)), Spectrum(Matrix::Constant(2, 2, 2.0))};
  const FeatureStats st = fit_feature_stats(s);
  EXPECT_NEAR(st.mean(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(st.std(1, 1), 1.0, 1e-15);
}

TEST(FeatureStats, IdenticalSamplesAreFloored) {
  std::vector<Spectrum> s(3, Spectrum(Matrix::Constant(3, 3, 4.0)));
  const FeatureStats st = fit_feature_stats(s);
  EXPECT_EQ(st.std.minCoeff(), kStdFloor);
  const Vector z = standardize(s[0], st);
  EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FeatureStats, SelfStandardizationHasZeroMeanUnitStd) {
  std::vector<Spectrum> s;
  for (int i = 0; i < 50; ++i) s.emplace_back(random_matrix(6, 5, 200 + i, -3.0, 8.0));
  const FeatureStats st = fit_feature_stats(s);
  Matrix z(50, 30);
  for (int i = 0; i < 50; ++i) z.row(i) = standardize(s[static_cast<std::size_t>(i)], st).transpose();
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::RowVectorXd var = (z.rowwise() - mean).array().square().colwise().mean();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((var.array().sqrt() - 1.0).abs().maxCoeff(), 1e-6);
}

TEST(FeatureStats, MatrixOverloadMatchesSpectrumOverload) {
  std::vector<Spectrum> s;
  Matrix rows(10, 12);
  for (int i = 0; i < 10; ++i) {
    s.emplace_back(random_matrix(3, 4, 300 + i));
    rows.row(i) = Eigen::Map<const Eigen::RowVectorXd>(s.back().coeffs.data(), 12);
  }
  const FeatureStats a = fit_feature_stats(s);
  const FeatureStats b = fit_feature_stats(rows, 3, 4);
  EXPECT_LT(max_abs(a.mean - b.mean), 1e-12);
  EXPECT_LT(max_abs(a.std - b.std), 1e-12);
  Matrix z = rows;
  standardize_rows(z, a);
  for (int i = 0; i < 10; ++i)
    EXPECT_LT((z.row(i).transpose() - standardize(s[static_cast<std::size_t>(i)], a)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FeatureStats, Errors) {
  std::vector<Spectrum> one = {Spectrum(Matrix::Zero(2, 2))};
  try {
    fit_feature_stats(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
  std::vector<Spectrum> mixed = {Spectrum(Matrix::Zero(2, 2)), Spectrum(Matrix::Zero(2, 3))};
  try {
    fit_feature_stats(mixed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeError);
  }
  FeatureStats st{Matrix::Zero(2, 2), Matrix::Ones(2, 2)};
  try {
    standardize(Spectrum(Matrix::Zero(3, 2)), st);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeError);
  }
}

TEST(Standardize, MeanAndStdOffsets) {
  FeatureStats st{Matrix::Constant(2, 2, 3.0), Matrix::Constant(2, 2, 0.5)};
  Matrix v = Matrix::Constant(2, 2, 3.0);
  v(0, 1) = 3.5;
  const Vector z = standardize(Spectrum(v), st);
  EXPECT_EQ(z[0], 0.0);
  EXPECT_EQ(z[1], 1.0);
}

TEST(Standardize, InvertibleAndRowMajor) {
  std::vector<Spectrum> s;
  for (int i = 0; i < 5; ++i) s.emplace_back(random_matrix(4, 6, 400 + i, -20.0, 5.0));
  const FeatureStats st = fit_feature_stats(s);
  const Vector z = standardize(s[2], st);
  EXPECT_NEAR(z[1 * 6 + 4], (s[2].coeffs(1, 4) - st.mean(1, 4)) / st.std(1, 4), 1e-15);
  EXPECT_LT(max_abs(destandardize(z, st).coeffs - s[2].coeffs), 1e-12);
}

TEST(Standardize, HeldOutBatchIsFinite) {
  std::vector<Spectrum> train;
  for (int i = 0; i < 200; ++i) train.push_back(log_scale(dct2(GrayImage(random_matrix(16, 16, 500 + i)))));
  const FeatureStats st = fit_feature_stats(train);
  for (int i = 0; i < 1000; ++i) {
    const Vector z = standardize(log_scale(dct2(GrayImage(random_matrix(16, 16, 9000 + i)))), st);
    ASSERT_TRUE(z.allFinite());
  }
}

TEST(PixelFeatures, AffineMap) {
  RasterImage img(1, 4, 1);
  img.pixels = {0, 255, 128, 64};
  const Vector v = pixel_features(img);
  EXPECT_DOUBLE_EQ(v[0], -1.0);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
  EXPECT_NEAR(v[2], 128.0 / 127.5 - 1.0, 1e-15);
  EXPECT_NEAR(v[2], 0.00392, 1e-5);
}

TEST(PixelFeatures, PerChannelConcatenatesPlanes) {
  const RasterImage img = freqlab::testing::random_raster(3, 2, 3, 9);
  const Vector v = pixel_features(img, PixelMode::PerChannel);
  ASSERT_EQ(v.size(), 18);
  EXPECT_NEAR(v[6 + 2 * 2 + 1], img.at(2, 1, 1) / 127.5 - 1.0, 1e-15);
  EXPECT_EQ(pixel_features(img).size(), 6);
}
