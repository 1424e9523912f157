// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mcdok {

/// Whole file as bytes. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Appends one line (plus '\n') to `path`, creating it if needed.
void append_line(const std::filesystem::path& path, std::string_view line);

/// Hex murmur3-128 of the raw file bytes.
std::string file_digest(const std::filesystem::path& path);

/// Minimal RFC 4180 CSV: quoted fields, doubled quotes, CRLF tolerated.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

/// Shortest round-tripping decimal form of a double.
std::string format_double(double x);

}  // namespace mcdok
