#ifndef FREQLAB_CODEC_HPP
#define FREQLAB_CODEC_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freqlab/image.hpp"

namespace freqlab {

/// Decodes PNG or JPEG (sniffed from the leading bytes). Gray+alpha and RGBA
/// inputs have their alpha dropped; 16-bit PNGs are reduced to 8 bits.
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage load_image(const std::filesystem::path& path);

/// tEXt key/value pairs written ahead of the image data.
using PngText = std::vector<std::pair<std::string, std::string>>;

std::vector<std::uint8_t> encode_png(const RasterImage& img, const PngText& text = {});
void save_png(const RasterImage& img, const std::filesystem::path& path, const PngText& text = {});

/// Baseline JPEG with the integer slow DCT so the output is reproducible for a
/// fixed libjpeg build.
std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality);

bool is_image_file(const std::filesystem::path& path);

/// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace freqlab

#endif  // FREQLAB_CODEC_HPP
