#include "freqlab/digest.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <vector>

#include <openssl/sha.h>

#include "freqlab/error.hpp"

namespace freqlab {
namespace {

std::array<std::uint8_t, SHA256_DIGEST_LENGTH> raw_sha256(const void* data, std::size_t size) {
  std::array<std::uint8_t, SHA256_DIGEST_LENGTH> out{};
  SHA256(static_cast<const unsigned char*>(data), size, out.data());
  return out;
}

std::string to_hex(std::span<const std::uint8_t> raw) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(raw.size() * 2);
  for (std::uint8_t b : raw) {
    hex.push_back(kDigits[b >> 4]);
    hex.push_back(kDigits[b & 0xF]);
  }
  return hex;
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  auto raw = raw_sha256(bytes.data(), bytes.size());
  return to_hex(raw);
}

std::string sha256_hex(std::string_view text) {
  auto raw = raw_sha256(text.data(), text.size());
  return to_hex(raw);
}

std::string file_sha256_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

std::uint64_t stable_hash64(std::string_view text) {
  auto raw = raw_sha256(text.data(), text.size());
  std::uint64_t value = 0;
  for (int i = 7; i >= 0; --i) value = (value << 8) | raw[static_cast<std::size_t>(i)];
  return value;
}

}  // namespace freqlab
