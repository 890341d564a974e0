#ifndef FREQLAB_MODEL_IO_HPP
#define FREQLAB_MODEL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freqlab/cnn.hpp"
#include "freqlab/linear.hpp"

namespace freqlab {

enum class ModelKind : std::uint8_t { Logistic = 0, Svm = 1, Cnn = 2, Eigenfaces = 3 };

std::string_view to_string(ModelKind kind);

/// On-disk model (little-endian):
///   "FQLM" | u8 kind | u32 param count | param count * f64 |
///   u32 metadata length | metadata (compact JSON)
/// The metadata carries the shapes needed to rebuild the model plus an
/// "info" object supplied by the caller (seed, lambda, input digests, ...).
struct ModelFile {
  ModelKind kind = ModelKind::Logistic;
  std::vector<double> params;
  std::string metadata;

  /// The caller-supplied "info" object as JSON text ("{}" when absent).
  std::string info() const;
};

std::vector<std::uint8_t> encode_model_file(const ModelFile& file);
ModelFile decode_model_file(std::span<const std::uint8_t> bytes);
void save_model_file(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model_file(const std::filesystem::path& path);

/// `info_json` must be a JSON object; it is embedded verbatim (re-serialized
/// with sorted keys).
ModelFile pack_model(const LinearModel& model, std::string_view info_json = "{}");
ModelFile pack_model(const CnnModel& model, std::string_view info_json = "{}");
ModelFile pack_model(const EigenfacesModel& model, std::string_view info_json = "{}");

LinearModel unpack_linear(const ModelFile& file);
CnnModel unpack_cnn(const ModelFile& file);
EigenfacesModel unpack_eigenfaces(const ModelFile& file);

}  // namespace freqlab

#endif  // FREQLAB_MODEL_IO_HPP
