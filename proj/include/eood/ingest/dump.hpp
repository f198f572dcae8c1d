#pragma once

// Raw tensor dump format, version 1. All integers little-endian.
//
//   offset  size        field
//   0       4           magic "EOOD" (45 4F 4F 44)
//   4       2           version = 1 (u16)
//   6       2           ndim (u16)
//   8       4 * ndim    dims (u32 each, outermost first)
//   ...     4 * prod    payload, IEEE-754 binary32, row-major
//
// Feature maps and images are (channels, height, width); logits are (K).

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "eood/core_types.hpp"
#include "eood/errors.hpp"

namespace eood {

inline constexpr std::array<std::uint8_t, 4> kDumpMagic = {0x45, 0x4F, 0x4F, 0x44};
inline constexpr std::uint16_t kDumpVersion = 1;
inline constexpr std::uint64_t kDefaultDumpByteCap = std::uint64_t{1} << 30;

struct DumpTensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    friend bool operator==(const DumpTensor&, const DumpTensor&) = default;
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xFF));
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint32_t checked_dim(std::size_t d) {
    if (d == 0 || d > std::numeric_limits<std::uint32_t>::max()) throw DomainError("dump dimension out of range");
    return static_cast<std::uint32_t>(d);
}

/// Writes `bytes` to `path` through a sibling temp file and a rename.
inline void atomic_write(const std::filesystem::path& path, const void* bytes, std::size_t size) {
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(size));
        out.flush();
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move dump into place at " + path.string());
    }
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_dump(std::span<const std::uint32_t> dims, std::span<const float> data) {
    if (dims.empty() || dims.size() > std::numeric_limits<std::uint16_t>::max())
        throw DomainError("dump rank out of range");
    std::uint64_t volume = 1;
    for (auto d : dims) {
        if (d == 0) throw DomainError("dump dimension must be >= 1");
        volume *= d;
    }
    if (volume != data.size()) throw DomainError("dump payload does not match its dimensions");

    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 * dims.size() + 4 * data.size());
    out.insert(out.end(), kDumpMagic.begin(), kDumpMagic.end());
    detail::put_u16(out, kDumpVersion);
    detail::put_u16(out, static_cast<std::uint16_t>(dims.size()));
    for (auto d : dims) detail::put_u32(out, d);
    for (float v : data) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

/// Validates and decodes a dump image. Sizes are checked against the byte
/// cap before anything proportional to them is allocated.
inline DumpTensor decode_dump(std::span<const std::uint8_t> bytes, std::uint64_t byte_cap = kDefaultDumpByteCap) {
    if (bytes.size() < 8) throw CorruptionError("dump is shorter than its fixed header");
    if (!std::equal(kDumpMagic.begin(), kDumpMagic.end(), bytes.begin()))
        throw FormatError("dump magic is not EOOD");
    if (detail::get_u16(bytes.data() + 4) != kDumpVersion) throw FormatError("unsupported dump version");
    const std::size_t ndim = detail::get_u16(bytes.data() + 6);
    if (ndim == 0) throw FormatError("dump has rank 0");
    const std::size_t header = 8 + 4 * ndim;
    if (bytes.size() < header) throw CorruptionError("dump header is truncated");

    DumpTensor t;
    t.dims.resize(ndim);
    std::uint64_t volume = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        t.dims[i] = detail::get_u32(bytes.data() + 8 + 4 * i);
        if (t.dims[i] == 0) throw FormatError("dump has a zero-length dimension");
        volume *= t.dims[i];
        if (volume > byte_cap / 4) throw FormatError("dump payload exceeds the size cap");
    }
    const std::uint64_t payload = volume * 4;
    if (bytes.size() - header < payload) throw CorruptionError("dump payload is truncated");
    if (bytes.size() - header > payload) throw CorruptionError("dump has trailing bytes");

    t.data.resize(static_cast<std::size_t>(volume));
    const std::uint8_t* p = bytes.data() + header;
    for (std::size_t i = 0; i < t.data.size(); ++i, p += 4) {
        const float v = std::bit_cast<float>(detail::get_u32(p));
        if (!std::isfinite(v)) throw DomainError("dump payload contains a non-finite value");
        t.data[i] = v;
    }
    return t;
}

inline void write_dump(std::span<const std::uint32_t> dims, std::span<const float> data,
                       const std::filesystem::path& path) {
    const auto bytes = encode_dump(dims, data);
    detail::atomic_write(path, bytes.data(), bytes.size());
}

inline void write_dump(const Tensor3& tensor, const std::filesystem::path& path) {
    const std::array<std::uint32_t, 3> dims = {detail::checked_dim(tensor.channels()),
                                               detail::checked_dim(tensor.height()),
                                               detail::checked_dim(tensor.width())};
    write_dump(dims, tensor.data(), path);
}

inline void write_dump(const LogitsVector& logits, const std::filesystem::path& path) {
    const std::array<std::uint32_t, 1> dims = {detail::checked_dim(logits.size())};
    write_dump(dims, logits.values(), path);
}

inline DumpTensor read_dump(const std::filesystem::path& path, std::uint64_t byte_cap = kDefaultDumpByteCap) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat dump " + path.string());
    if (size > byte_cap + 8 + 4 * 65535ULL) throw FormatError("dump file exceeds the size cap: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dump " + path.string());
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw IoError("failed reading dump " + path.string());
    try {
        return decode_dump(bytes, byte_cap);
    } catch (const Error& e) {
        // Keep the category, add the file name.
        if (e.kind() == "format") throw FormatError(path.string() + ": " + e.what());
        if (e.kind() == "corruption") throw CorruptionError(path.string() + ": " + e.what());
        throw DomainError(path.string() + ": " + e.what());
    }
}

inline Tensor3 to_tensor3(DumpTensor dump, const std::string& what) {
    if (dump.dims.size() != 3) throw FormatError(what + " dump must have rank 3");
    return Tensor3(dump.dims[0], dump.dims[1], dump.dims[2], std::move(dump.data));
}

inline FeatureMap read_feature_map(const std::filesystem::path& path, int block_index) {
    return FeatureMap(block_index, to_tensor3(read_dump(path), path.string()));
}

inline Image read_image(const std::filesystem::path& path) {
    return Image(to_tensor3(read_dump(path), path.string()));
}

inline LogitsVector read_logits(const std::filesystem::path& path) {
    DumpTensor dump = read_dump(path);
    if (dump.dims.size() != 1) throw FormatError(path.string() + ": logits dump must have rank 1");
    return LogitsVector(std::move(dump.data));
}

}  // namespace eood
