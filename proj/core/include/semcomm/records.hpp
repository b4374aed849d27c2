#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace semcomm::io {

/// Binary container shared by checkpoints and exported datasets:
///   "SEMCKPT1" | u32 version | records... | u32 CRC32 of all preceding bytes
/// Each record is u32 name length, name bytes, u32 rank, u32 extents[rank],
/// then prod(extents) little-endian f32 values.
inline constexpr char kMagic[8] = {'S', 'E', 'M', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;

struct Record {
    std::string name;
    std::vector<std::uint32_t> extents;
    std::vector<float> payload;

    std::size_t count() const;
};

std::vector<std::uint8_t> encode(std::span<const Record> records, std::uint32_t version = kFormatVersion);
/// Throws LoadError on a bad magic, truncation, trailing bytes or CRC
/// mismatch, VersionError when the version differs from `expected_version`.
std::vector<Record> decode(std::span<const std::uint8_t> bytes, std::uint32_t expected_version = kFormatVersion);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// A 64-bit value split into four 16-bit pieces, each exact in f32.
Record u64_record(const std::string& name, std::uint64_t value);
std::uint64_t u64_from(const Record& r);

}  // namespace semcomm::io
