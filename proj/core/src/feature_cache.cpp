#include "freqlab/feature_cache.hpp"

#include "freqlab/bytes.hpp"
#include "freqlab/codec.hpp"
#include "freqlab/error.hpp"

namespace freqlab {

std::vector<std::uint8_t> encode_feature_cache(const FeatureSet& set) {
  require(set.features.cols() == static_cast<Eigen::Index>(set.n1) * set.n2 || set.count() == 0,
          ErrorKind::ShapeError, "feature width does not match n1 * n2");
  require(set.labels.size() == static_cast<std::size_t>(set.count()), ErrorKind::ShapeError,
          "label count does not match feature count");
  ByteWriter w;
  w.put_bytes("FQL1");
  w.put_u32(static_cast<std::uint32_t>(set.count()));
  w.put_u32(static_cast<std::uint32_t>(set.n1));
  w.put_u32(static_cast<std::uint32_t>(set.n2));
  w.put_u8(static_cast<std::uint8_t>(set.kind));
  for (Eigen::Index i = 0; i < set.features.rows(); ++i)
    for (Eigen::Index j = 0; j < set.features.cols(); ++j) w.put_f64(set.features(i, j));
  for (std::uint8_t label : set.labels) w.put_u8(label);
  return w.take();
}

FeatureSet decode_feature_cache(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.str(4) != "FQL1") fail(ErrorKind::IoError, "not an FQL1 feature cache");
  FeatureSet set;
  const std::uint32_t count = r.u32();
  set.n1 = static_cast<int>(r.u32());
  set.n2 = static_cast<int>(r.u32());
  const std::uint8_t kind = r.u8();
  if (kind > 1) fail(ErrorKind::IoError, "unknown feature kind tag");
  set.kind = static_cast<FeatureKind>(kind);
  const std::size_t dims = static_cast<std::size_t>(set.n1) * set.n2;
  if (r.remaining() != count * dims * 8 + count) fail(ErrorKind::IoError, "feature cache size mismatch");
  set.features.resize(count, static_cast<Eigen::Index>(dims));
  for (std::uint32_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < dims; ++j) set.features(i, static_cast<Eigen::Index>(j)) = r.f64();
  set.labels.resize(count);
  for (auto& label : set.labels) label = r.u8();
  return set;
}

void write_feature_cache(const FeatureSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, encode_feature_cache(set));
}

FeatureSet read_feature_cache(const std::filesystem::path& path) {
  return decode_feature_cache(read_file(path));
}

std::vector<std::uint8_t> encode_feature_stats(const FeatureStats& stats) {
  ByteWriter w;
  w.put_bytes("FQST");
  w.put_u32(static_cast<std::uint32_t>(stats.rows()));
  w.put_u32(static_cast<std::uint32_t>(stats.cols()));
  w.put_f64(stats.epsilon_std);
  for (Eigen::Index i = 0; i < stats.mean.size(); ++i) w.put_f64(stats.mean.data()[i]);
  for (Eigen::Index i = 0; i < stats.std.size(); ++i) w.put_f64(stats.std.data()[i]);
  return w.take();
}

FeatureStats decode_feature_stats(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.str(4) != "FQST") fail(ErrorKind::IoError, "not an FQST statistics file");
  const int rows = static_cast<int>(r.u32());
  const int cols = static_cast<int>(r.u32());
  FeatureStats stats;
  stats.epsilon_std = r.f64();
  stats.mean.resize(rows, cols);
  stats.std.resize(rows, cols);
  for (Eigen::Index i = 0; i < stats.mean.size(); ++i) stats.mean.data()[i] = r.f64();
  for (Eigen::Index i = 0; i < stats.std.size(); ++i) stats.std.data()[i] = r.f64();
  return stats;
}

}  // namespace freqlab
