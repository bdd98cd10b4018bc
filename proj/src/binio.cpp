#include "tplab/binio.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tplab/common.hpp"

namespace tplab {

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace binio {

void write_header(std::ostream& out, std::string_view magic, const nlohmann::json& header)
{
    out << magic << '\n' << header.dump() << '\n';
}

nlohmann::json read_header(std::istream& in, std::string_view magic,
                           const std::filesystem::path& origin)
{
    std::string line;
    if (!std::getline(in, line) || line != magic) {
        throw data_error(origin.string() + ": not a " + std::string(magic) + " file");
    }
    if (!std::getline(in, line)) {
        throw data_error(origin.string() + ": truncated header");
    }
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(origin.string() + ": corrupt header: " + e.what());
    }
}

void write_doubles(std::ostream& out, std::span<const double> values)
{
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
}

void read_doubles(std::istream& in, std::span<double> values, const std::filesystem::path& origin)
{
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (static_cast<std::size_t>(in.gcount()) != values.size_bytes()) {
        throw data_error(origin.string() + ": truncated payload");
    }
}

void write_i64(std::ostream& out, std::span<const std::int64_t> values)
{
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
}

void read_i64(std::istream& in, std::span<std::int64_t> values, const std::filesystem::path& origin)
{
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (static_cast<std::size_t>(in.gcount()) != values.size_bytes()) {
        throw data_error(origin.string() + ": truncated payload");
    }
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error(path.string() + ": cannot open for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(path.string() + ": cannot open for reading");
    return in;
}

void expect_eof(std::istream& in, const std::filesystem::path& origin)
{
    if (in.peek() != std::char_traits<char>::eof()) {
        throw data_error(origin.string() + ": unexpected trailing bytes");
    }
}

std::uint64_t file_checksum(const std::filesystem::path& path)
{
    auto in = open_in(path);
    Fnv1a h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.digest();
}

}  // namespace binio
}  // namespace tplab
