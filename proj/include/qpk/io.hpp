#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qpk::io {

/// Formats a double with 17 significant digits (enough to round-trip exactly),
/// locale independent. All CSV artifacts use this.
std::string fmt17(double v);

/// Shorter formatting for file names and report labels (up to 12 digits).
std::string fmtg(double v);

/// Locale-independent parse; throws qpk::ParameterError on garbage.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view content);

/// FNV-1a 64 over a byte string, as a 16-char lowercase hex string. Used for
/// config and artifact provenance hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
std::string content_hash(std::string_view bytes);

} // namespace qpk::io
