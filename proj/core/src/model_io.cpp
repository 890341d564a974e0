#include "freqlab/model_io.hpp"

#include <algorithm>

#include <json.hpp>

#include "freqlab/bytes.hpp"
#include "freqlab/codec.hpp"
#include "freqlab/error.hpp"

namespace freqlab {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::Svm: return "svm";
    case ModelKind::Cnn: return "cnn";
    case ModelKind::Eigenfaces: return "eigenfaces";
  }
  return "unknown";
}

namespace {

constexpr char kMagic[] = "FQLM";

json parse_object(std::string_view text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    fail(ErrorKind::InvalidInput, std::string(what) + " is not valid JSON: " + ex.what());
  }
  require(j.is_object(), ErrorKind::InvalidInput, std::string(what) + " must be a JSON object");
  return j;
}

// nlohmann::json keeps object keys sorted, so dump() is canonical.
std::string make_metadata(json shape, std::string_view info_json) {
  shape["info"] = parse_object(info_json, "model info");
  shape["tool_version"] = FREQLAB_VERSION;
  return shape.dump();
}

json read_metadata(const ModelFile& file) {
  try {
    return json::parse(file.metadata);
  } catch (const json::exception& ex) {
    fail(ErrorKind::IoError, std::string("corrupt model metadata: ") + ex.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::IoError, std::string("model metadata lacks '") + key + "'");
  }
}

void append(std::vector<double>& out, const double* data, Eigen::Index n) { out.insert(out.end(), data, data + n); }

class Cursor {
public:
  explicit Cursor(const std::vector<double>& v) : v_(v) {}
  const double* take(std::size_t n) {
    require(pos_ + n <= v_.size(), ErrorKind::IoError, "model parameter block is too short");
    const double* p = v_.data() + pos_;
    pos_ += n;
    return p;
  }
  void finish() const { require(pos_ == v_.size(), ErrorKind::IoError, "model parameter block has trailing values"); }

private:
  const std::vector<double>& v_;
  std::size_t pos_ = 0;
};

json linear_shape(const LinearModel& m) {
  json s;
  s["linear_kind"] = m.kind == LinearKind::Logistic ? "logistic" : "svm";
  s["rows"] = m.weights.rows();
  s["dims"] = m.weights.cols();
  s["reg_kind"] = m.reg_kind == RegKind::L1 ? "l1" : "l2";
  s["reg_lambda"] = m.reg_lambda;
  s["feature_kind"] = m.feature_kind == FeatureKind::Pixel ? "pixel" : "dct";
  s["num_classes"] = m.num_classes;
  return s;
}

void append_linear(std::vector<double>& out, const LinearModel& m) {
  append(out, m.weights.data(), m.weights.size());
  append(out, m.bias.data(), m.bias.size());
}

LinearModel read_linear(const json& s, Cursor& cur) {
  LinearModel m;
  m.kind = field<std::string>(s, "linear_kind") == "svm" ? LinearKind::Svm : LinearKind::Logistic;
  const auto rows = field<Eigen::Index>(s, "rows");
  const auto dims = field<Eigen::Index>(s, "dims");
  require(rows >= 1 && dims >= 1, ErrorKind::IoError, "model metadata has empty shapes");
  m.reg_kind = field<std::string>(s, "reg_kind") == "l1" ? RegKind::L1 : RegKind::L2;
  m.reg_lambda = field<double>(s, "reg_lambda");
  m.feature_kind = field<std::string>(s, "feature_kind") == "pixel" ? FeatureKind::Pixel : FeatureKind::DctLogStd;
  m.num_classes = field<int>(s, "num_classes");
  m.weights = Eigen::Map<const Matrix>(cur.take(static_cast<std::size_t>(rows * dims)), rows, dims);
  m.bias = Eigen::Map<const Vector>(cur.take(static_cast<std::size_t>(rows)), rows);
  return m;
}

}  // namespace

std::string ModelFile::info() const {
  const json j = read_metadata(*this);
  return j.contains("info") ? j["info"].dump() : "{}";
}

std::vector<std::uint8_t> encode_model_file(const ModelFile& file) {
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put_u8(static_cast<std::uint8_t>(file.kind));
  w.put_u32(static_cast<std::uint32_t>(file.params.size()));
  for (double v : file.params) w.put_f64(v);
  w.put_u32(static_cast<std::uint32_t>(file.metadata.size()));
  w.put_bytes(file.metadata);
  return w.take();
}

ModelFile decode_model_file(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  require(r.str(4) == std::string_view(kMagic, 4), ErrorKind::IoError, "not a model file (bad magic)");
  ModelFile f;
  const auto kind = r.u8();
  require(kind <= 3, ErrorKind::IoError, "unknown model kind " + std::to_string(kind));
  f.kind = static_cast<ModelKind>(kind);
  const auto count = r.u32();
  require(r.remaining() >= static_cast<std::size_t>(count) * 8, ErrorKind::IoError, "model file is truncated");
  f.params.resize(count);
  for (auto& v : f.params) v = r.f64();
  f.metadata = r.str(r.u32());
  require(r.remaining() == 0, ErrorKind::IoError, "model file has trailing bytes");
  return f;
}

void save_model_file(const ModelFile& file, const std::filesystem::path& path) {
  write_file_atomic(path, encode_model_file(file));
}

ModelFile load_model_file(const std::filesystem::path& path) { return decode_model_file(read_file(path)); }

ModelFile pack_model(const LinearModel& model, std::string_view info_json) {
  ModelFile f;
  f.kind = model.kind == LinearKind::Logistic ? ModelKind::Logistic : ModelKind::Svm;
  append_linear(f.params, model);
  f.metadata = make_metadata(linear_shape(model), info_json);
  return f;
}

ModelFile pack_model(const CnnModel& model, std::string_view info_json) {
  ModelFile f;
  f.kind = ModelKind::Cnn;
  f.params.assign(model.params().begin(), model.params().end());
  json s;
  s["input_size"] = model.shape().input_size;
  s["in_channels"] = model.shape().in_channels;
  s["num_classes"] = model.shape().num_classes;
  f.metadata = make_metadata(std::move(s), info_json);
  return f;
}

ModelFile pack_model(const EigenfacesModel& model, std::string_view info_json) {
  ModelFile f;
  f.kind = ModelKind::Eigenfaces;
  const PcaBasis& b = model.basis;
  append(f.params, b.mean.data(), b.mean.size());
  append(f.params, b.components.data(), b.components.size());
  append(f.params, b.explained.data(), b.explained.size());
  append_linear(f.params, model.svm);
  json s;
  s["pca_dims"] = b.dims();
  s["pca_rank"] = b.rank();
  s["variance_threshold"] = b.variance_threshold;
  s["retained_fraction"] = b.retained_fraction;
  s["total_variance"] = b.total_variance;
  s["svm"] = linear_shape(model.svm);
  f.metadata = make_metadata(std::move(s), info_json);
  return f;
}

LinearModel unpack_linear(const ModelFile& file) {
  require(file.kind == ModelKind::Logistic || file.kind == ModelKind::Svm, ErrorKind::InvalidInput,
          "model file does not hold a linear model");
  Cursor cur(file.params);
  LinearModel m = read_linear(read_metadata(file), cur);
  cur.finish();
  return m;
}

CnnModel unpack_cnn(const ModelFile& file) {
  require(file.kind == ModelKind::Cnn, ErrorKind::InvalidInput, "model file does not hold a CNN");
  const json s = read_metadata(file);
  CnnShape shape;
  shape.input_size = field<int>(s, "input_size");
  shape.in_channels = field<int>(s, "in_channels");
  shape.num_classes = field<int>(s, "num_classes");
  shape.validate();
  CnnModel model(shape);
  require(model.parameter_count() == file.params.size(), ErrorKind::IoError, "CNN parameter count mismatch");
  std::copy(file.params.begin(), file.params.end(), model.params().begin());
  return model;
}

EigenfacesModel unpack_eigenfaces(const ModelFile& file) {
  require(file.kind == ModelKind::Eigenfaces, ErrorKind::InvalidInput, "model file does not hold an eigenfaces model");
  const json s = read_metadata(file);
  const auto d = field<Eigen::Index>(s, "pca_dims");
  const auto m = field<Eigen::Index>(s, "pca_rank");
  Cursor cur(file.params);
  EigenfacesModel out;
  out.basis.mean = Eigen::Map<const Vector>(cur.take(static_cast<std::size_t>(d)), d);
  out.basis.components = Eigen::Map<const Matrix>(cur.take(static_cast<std::size_t>(d * m)), d, m);
  out.basis.explained = Eigen::Map<const Vector>(cur.take(static_cast<std::size_t>(m)), m);
  out.basis.variance_threshold = field<double>(s, "variance_threshold");
  out.basis.retained_fraction = field<double>(s, "retained_fraction");
  out.basis.total_variance = field<double>(s, "total_variance");
  out.svm = read_linear(s.at("svm"), cur);
  cur.finish();
  return out;
}

}  // namespace freqlab
