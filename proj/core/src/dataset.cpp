#include "freqlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "freqlab/codec.hpp"
#include "freqlab/digest.hpp"
#include "freqlab/error.hpp"
#include "freqlab/parallel.hpp"

namespace fs = std::filesystem;

namespace freqlab {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Unassigned: return "unassigned";
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unassigned";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "unassigned") return Split::Unassigned;
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  return std::nullopt;
}

std::vector<const ManifestEntry*> DatasetManifest::select(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

std::vector<long> DatasetManifest::class_counts(Split split) const {
  std::vector<long> counts(class_names.size(), 0);
  for (const auto& e : entries)
    if (e.split == split) ++counts[static_cast<std::size_t>(e.label)];
  return counts;
}

namespace {

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& item : fs::recursive_directory_iterator(dir))
    if (item.is_regular_file() && is_image_file(item.path())) files.push_back(item.path());
  std::sort(files.begin(), files.end(),
            [&](const fs::path& a, const fs::path& b) {
              return fs::relative(a, dir).generic_string() < fs::relative(b, dir).generic_string();
            });
  return files;
}

}  // namespace

IngestReport ingest(const fs::path& dir, const LabelRule& rule) {
  require(fs::is_directory(dir), ErrorKind::IoError, "not a directory: " + dir.string());
  std::vector<fs::path> files = list_images(dir);

  LabelRule::Mode mode = rule.mode;
  if (mode == LabelRule::Mode::Auto) {
    const bool nested = std::any_of(files.begin(), files.end(), [&](const fs::path& p) {
      return fs::relative(p, dir).has_parent_path();
    });
    mode = nested ? LabelRule::Mode::Subdirectories : LabelRule::Mode::Single;
  }

  std::vector<std::string> rel(files.size());
  std::vector<std::string> class_of(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    const fs::path r = fs::relative(files[i], dir);
    rel[i] = r.generic_string();
    if (mode == LabelRule::Mode::Subdirectories) {
      if (!r.has_parent_path()) continue;
      class_of[i] = r.begin()->generic_string();
    } else {
      class_of[i] = rule.single_class;
    }
  }

  std::vector<std::uint8_t> ok(files.size(), 0);
  std::vector<std::string> digests(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    if (class_of[i].empty()) return;
    auto bytes = read_file(files[i]);
    digests[i] = sha256_hex(bytes);
    try {
      decode_image(bytes);
      ok[i] = 1;
    } catch (const Error&) {
    }
  });

  IngestReport report;
  std::set<std::string> names;
  for (std::size_t i = 0; i < files.size(); ++i)
    if (ok[i]) names.insert(class_of[i]);
  report.manifest.class_names.assign(names.begin(), names.end());
  std::map<std::string, int> label_of;
  for (std::size_t c = 0; c < report.manifest.class_names.size(); ++c)
    label_of[report.manifest.class_names[c]] = static_cast<int>(c);

  for (std::size_t i = 0; i < files.size(); ++i) {
    if (class_of[i].empty()) continue;
    if (!ok[i]) {
      report.skipped.push_back(rel[i]);
      continue;
    }
    report.manifest.entries.push_back({rel[i], label_of[class_of[i]], Split::Unassigned, digests[i]});
  }
  require(!report.manifest.entries.empty(), ErrorKind::InsufficientData,
          "no decodable images found in " + dir.string());
  return report;
}

std::array<long, 3> split_counts(long n, const std::array<double, 3>& ratios) {
  std::array<long, 3> counts{};
  std::array<double, 3> frac{};
  long assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = static_cast<double>(n) * ratios[static_cast<std::size_t>(s)];
    const double whole = std::floor(exact + 1e-9);
    counts[static_cast<std::size_t>(s)] = static_cast<long>(whole);
    frac[static_cast<std::size_t>(s)] = std::max(0.0, exact - whole);
    assigned += counts[static_cast<std::size_t>(s)];
  }
  std::vector<int> order;
  for (int s = 0; s < 3; ++s)
    if (ratios[static_cast<std::size_t>(s)] > 0.0) order.push_back(s);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double fa = frac[static_cast<std::size_t>(a)], fb = frac[static_cast<std::size_t>(b)];
    if (std::abs(fa - fb) > 1e-9) return fa > fb;
    return a > b;
  });
  for (long r = n - assigned, i = 0; r > 0 && !order.empty(); --r, ++i)
    ++counts[static_cast<std::size_t>(order[static_cast<std::size_t>(i) % order.size()])];
  return counts;
}

DatasetManifest split(const DatasetManifest& manifest, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    require(r >= 0.0 && std::isfinite(r), ErrorKind::InvalidInput, "split ratios must be non-negative");
    sum += r;
  }
  require(std::abs(sum - 1.0) < 1e-9, ErrorKind::InvalidInput, "split ratios must sum to 1");

  DatasetManifest out = manifest;
  out.split_ratios = ratios;
  out.rng_seed = seed;
  std::mt19937_64 rng(seed);
  constexpr Split kSplits[3] = {Split::Train, Split::Val, Split::Test};
  for (int c = 0; c < manifest.num_classes(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < out.entries.size(); ++i)
      if (out.entries[i].label == c) members.push_back(i);
    const auto counts = split_counts(static_cast<long>(members.size()), ratios);
    for (int s = 0; s < 3; ++s)
      require(ratios[static_cast<std::size_t>(s)] == 0.0 || counts[static_cast<std::size_t>(s)] > 0,
              ErrorKind::InsufficientData,
              "class '" + manifest.class_names[static_cast<std::size_t>(c)] + "' has too few samples (" +
                  std::to_string(members.size()) + ") for a non-empty " +
                  std::string(to_string(kSplits[s])) + " split");
    std::shuffle(members.begin(), members.end(), rng);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s)
      for (long k = 0; k < counts[static_cast<std::size_t>(s)]; ++k) out.entries[members[pos++]].split = kSplits[s];
  }
  return out;
}

DatasetManifest subsample(const DatasetManifest& manifest, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::InvalidInput, "fraction must lie in (0, 1]");
  std::vector<std::uint8_t> keep(manifest.entries.size(), 0);
  for (int c = 0; c < manifest.num_classes(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
      if (manifest.entries[i].label == c) members.push_back(i);
    if (members.empty()) continue;
    std::mt19937_64 rng(seed ^ stable_hash64("subsample:" + std::to_string(c)));
    std::shuffle(members.begin(), members.end(), rng);
    const long n = static_cast<long>(members.size());
    const long take = std::clamp(static_cast<long>(std::llround(fraction * static_cast<double>(n))), 1L, n);
    for (long k = 0; k < take; ++k) keep[members[static_cast<std::size_t>(k)]] = 1;
  }
  DatasetManifest out = manifest;
  out.entries.clear();
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    if (keep[i]) out.entries.push_back(manifest.entries[i]);
  return out;
}

std::string manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json doc;
  doc["tool_version"] = FREQLAB_VERSION;
  doc["rng_seed"] = m.rng_seed;
  doc["class_names"] = m.class_names;
  doc["split_ratios"] = {m.split_ratios[0], m.split_ratios[1], m.split_ratios[2]};
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json j;
    j["path"] = e.path;
    j["label"] = e.label;
    j["split"] = std::string(to_string(e.split));
    j["digest"] = e.digest;
    entries.push_back(std::move(j));
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  DatasetManifest m;
  try {
    const auto doc = nlohmann::json::parse(text);
    m.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    m.class_names = doc.at("class_names").get<std::vector<std::string>>();
    const auto ratios = doc.at("split_ratios").get<std::vector<double>>();
    require(ratios.size() == 3, ErrorKind::ConfigError, "split_ratios must have three entries");
    std::copy(ratios.begin(), ratios.end(), m.split_ratios.begin());
    for (const auto& j : doc.at("entries")) {
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.label = j.at("label").get<int>();
      const auto s = parse_split(j.at("split").get<std::string>());
      require(s.has_value(), ErrorKind::ConfigError, "unknown split in manifest entry " + e.path);
      e.split = *s;
      e.digest = j.at("digest").get<std::string>();
      require(e.label >= 0 && e.label < m.num_classes(), ErrorKind::ConfigError,
              "label out of range in manifest entry " + e.path);
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::ConfigError, std::string("malformed manifest: ") + ex.what());
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const std::string text = manifest_to_json(manifest);
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

DatasetManifest load_manifest(const fs::path& path) {
  require(fs::exists(path), ErrorKind::ConfigError, "manifest not found: " + path.string());
  const auto bytes = read_file(path);
  return manifest_from_json({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

std::vector<std::string> verify_digests(const DatasetManifest& manifest, const fs::path& base_dir) {
  std::vector<std::uint8_t> bad(manifest.entries.size(), 0);
  parallel_for(manifest.entries.size(), [&](std::size_t i) {
    const fs::path p = base_dir / manifest.entries[i].path;
    bad[i] = !fs::exists(p) || file_sha256_hex(p) != manifest.entries[i].digest;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < bad.size(); ++i)
    if (bad[i]) out.push_back(manifest.entries[i].path);
  return out;
}

std::vector<RasterImage> load_split_images(const DatasetManifest& manifest, const fs::path& base_dir, Split split) {
  const auto chosen = manifest.select(split);
  std::vector<RasterImage> images(chosen.size());
  parallel_for(chosen.size(), [&](std::size_t i) { images[i] = load_image(base_dir / chosen[i]->path); });
  return images;
}

std::vector<Spectrum> split_spectra(const DatasetManifest& manifest, const fs::path& base_dir, Split split) {
  const auto chosen = manifest.select(split);
  std::vector<Spectrum> out(chosen.size());
  parallel_for(chosen.size(), [&](std::size_t i) { out[i] = log_dct(load_image(base_dir / chosen[i]->path)); });
  return out;
}

FeatureSet build_features(const DatasetManifest& manifest, const fs::path& base_dir, Split split, FeatureKind kind,
                          const FeatureStats* stats, PixelMode pixel_mode) {
  require(kind != FeatureKind::DctLogStd || stats != nullptr, ErrorKind::InvalidInput,
          "DCT features need fitted statistics");
  const auto chosen = manifest.select(split);
  FeatureSet set;
  set.kind = kind;
  set.labels.resize(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) set.labels[i] = static_cast<std::uint8_t>(chosen[i]->label);
  if (chosen.empty()) {
    if (stats) {
      set.n1 = stats->rows();
      set.n2 = stats->cols();
    }
    set.features.resize(0, static_cast<Eigen::Index>(set.n1) * set.n2);
    return set;
  }
  std::vector<Vector> rows(chosen.size());
  std::vector<std::array<int, 2>> dims(chosen.size());
  parallel_for(chosen.size(), [&](std::size_t i) {
    const RasterImage img = load_image(base_dir / chosen[i]->path);
    if (kind == FeatureKind::DctLogStd) {
      rows[i] = standardize(log_dct(img), *stats);
      dims[i] = {stats->rows(), stats->cols()};
    } else {
      rows[i] = pixel_features(img, pixel_mode);
      const int planes = pixel_mode == PixelMode::PerChannel ? img.channels : 1;
      dims[i] = {img.height * planes, img.width};
    }
  });
  for (std::size_t i = 1; i < dims.size(); ++i)
    require(dims[i] == dims[0], ErrorKind::ShapeError, "image size differs: " + chosen[i]->path);
  set.n1 = dims[0][0];
  set.n2 = dims[0][1];
  set.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(set.n1) * set.n2);
  for (std::size_t i = 0; i < rows.size(); ++i) set.features.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return set;
}

std::string build_feature_cache(const DatasetManifest& manifest, const fs::path& base_dir, Split split,
                                FeatureKind kind, const FeatureStats* stats, const fs::path& path) {
  const auto bytes = encode_feature_cache(build_features(manifest, base_dir, split, kind, stats));
  const std::string digest = sha256_hex(bytes);
  if (fs::exists(path) && file_sha256_hex(path) == digest) return digest;
  write_file_atomic(path, bytes);
  return digest;
}

}  // namespace freqlab
