#ifndef FREQLAB_DIGEST_HPP
#define FREQLAB_DIGEST_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace freqlab {

/// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string file_sha256_hex(const std::filesystem::path& path);

/// First eight bytes of the SHA-256 of `text`, read little-endian. Stable
/// across platforms and runs, used to derive per-file random streams.
std::uint64_t stable_hash64(std::string_view text);

}  // namespace freqlab

#endif  // FREQLAB_DIGEST_HPP
