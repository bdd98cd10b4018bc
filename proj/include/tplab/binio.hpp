#pragma once

// Shared layout of every artifact file written by tplab:
//
//   <magic>\n
//   <one-line JSON header>\n
//   <raw little-endian payload>
//
// Doubles are stored as their exact IEEE-754 bytes so round trips are bitwise.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string_view>

#include <json.hpp>

namespace tplab::binio {

static_assert(std::endian::native == std::endian::little,
              "artifact payloads assume a little-endian host");

void write_header(std::ostream& out, std::string_view magic, const nlohmann::json& header);

/// Reads and validates the magic line, then parses the JSON header line.
nlohmann::json read_header(std::istream& in, std::string_view magic,
                           const std::filesystem::path& origin);

void write_doubles(std::ostream& out, std::span<const double> values);
void read_doubles(std::istream& in, std::span<double> values, const std::filesystem::path& origin);

void write_i64(std::ostream& out, std::span<const std::int64_t> values);
void read_i64(std::istream& in, std::span<std::int64_t> values, const std::filesystem::path& origin);

std::ofstream open_out(const std::filesystem::path& path);
std::ifstream open_in(const std::filesystem::path& path);

/// Throws if trailing bytes remain after the expected payload.
void expect_eof(std::istream& in, const std::filesystem::path& origin);

/// Checksum of a whole file's bytes.
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace tplab::binio
