#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tplab {

/// Failure categories. Each maps onto one CLI exit code.
enum class ErrorKind {
    Config,    // bad usage, missing column, unresolvable path
    Data,      // malformed input, I/O, corrupt files
    Contract,  // violated precondition or internal invariant
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind)
    { }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }
inline Error data_error(const std::string& what) { return {ErrorKind::Data, what}; }
inline Error contract_error(const std::string& what) { return {ErrorKind::Contract, what}; }

constexpr double kFeetToMeters = 0.3048;
constexpr int kFrameRateHz = 10;

/// A planar point: x lateral, y longitudinal. Units depend on context (meters
/// unless a name says otherwise).
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// splitmix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) noexcept
{
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// 64-bit FNV-1a, used for file checksums and provenance hashes.
class Fnv1a {
public:
    void update(const void* data, std::size_t n) noexcept
    {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001B3ull;
        }
    }
    void update(const std::string& s) noexcept { update(s.data(), s.size()); }
    std::uint64_t digest() const noexcept { return h_; }

private:
    std::uint64_t h_ = 0xCBF29CE484222325ull;
};

std::string hex64(std::uint64_t v);

}  // namespace tplab
