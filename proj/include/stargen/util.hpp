#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace stargen {

/// Trims both ends and collapses every internal run of whitespace into a
/// single space. Case is preserved.
std::string normalize_whitespace(std::string_view text);

std::string sha256_hex(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> bytes);
inline std::string base64_encode(std::string_view bytes) {
  return base64_encode(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

using Timestamp = std::chrono::sys_seconds;

/// RFC 3339 UTC, second precision: "2025-02-03T09:01:00Z".
std::string format_rfc3339(Timestamp t);
/// Accepts "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)"; throws
/// std::invalid_argument on anything else.
Timestamp parse_rfc3339(std::string_view text);
Timestamp utc_now();

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file, fsyncs, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Percentage with one decimal, rounded half-up: (3, 5) -> "60.0%".
/// Requires total > 0.
std::string format_percent(std::uint64_t successes, std::uint64_t total);

}  // namespace stargen
