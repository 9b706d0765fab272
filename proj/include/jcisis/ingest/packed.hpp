#pragma once

// Packed 2-bit genotype file, little-endian:
//
//   offset  size  field
//   0       4     magic "JCG1"
//   4       2     version (u16) = 1
//   6       2     flags (u16); bit 0: missing codes allowed, other bits zero
//   8       8     n (u64)
//   16      8     p (u64)
//   24      ...   p metadata records: chromosome (u8), id length (u16), id bytes
//   ...     ...   payload, column-major, ceil(n/4) bytes per column; sample i of a
//                 column sits in bits 2*(i%4)..2*(i%4)+1 of byte i/4.
//                 00 = code 1, 01 = code 2, 10 = code 3, 11 = missing.
//                 Padding bits are zero.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "jcisis/error.hpp"
#include "jcisis/ingest/genotype.hpp"

namespace jcisis {

inline constexpr std::array<char, 4> kPackedMagic{'J', 'C', 'G', '1'};
inline constexpr std::uint16_t kPackedVersion = 1;
inline constexpr std::uint16_t kPackedFlagMissingAllowed = 0x1;
inline constexpr std::uint8_t kPackedMissing = 0x3;
inline constexpr std::uint64_t kPackedFixedHeaderBytes = 24;

inline std::uint64_t packed_column_bytes(std::uint64_t n) { return (n + 3) / 4; }
inline std::uint64_t packed_payload_bytes(std::uint64_t n, std::uint64_t p) { return p * packed_column_bytes(n); }

inline std::uint64_t packed_metadata_bytes(std::span<const SnpMeta> meta) {
    std::uint64_t total = 0;
    for (const SnpMeta& m : meta) total += 3 + m.id.size();
    return total;
}

inline std::uint64_t packed_file_bytes(std::uint64_t n, std::span<const SnpMeta> meta) {
    return kPackedFixedHeaderBytes + packed_metadata_bytes(meta) + packed_payload_bytes(n, meta.size());
}

namespace detail {

template <class T>
void put_le(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes{};
    for (std::size_t b = 0; b < sizeof(T); ++b) bytes[b] = static_cast<char>((value >> (8 * b)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

class ByteReader {
public:
    ByteReader(std::istream& in, std::uint64_t offset) : in_(in), offset_(offset) {}

    /// Reads exactly `count` bytes or throws TruncatedFile.
    void read(void* dst, std::uint64_t count) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
        const auto got = static_cast<std::uint64_t>(in_.gcount());
        offset_ += got;
        if (got != count) throw TruncatedFile(offset_ - got + count, offset_);
    }

    template <class T>
    T get_le() {
        std::array<unsigned char, sizeof(T)> bytes{};
        read(bytes.data(), bytes.size());
        T value = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b) value |= static_cast<T>(bytes[b]) << (8 * b);
        return value;
    }

    std::uint64_t offset() const noexcept { return offset_; }

    /// Bytes left in a seekable stream, or nullopt when the stream cannot seek.
    std::optional<std::uint64_t> remaining() {
        const auto here = in_.tellg();
        if (here < 0) return std::nullopt;
        in_.seekg(0, std::ios::end);
        const auto end = in_.tellg();
        in_.seekg(here);
        if (end < 0 || !in_) {
            in_.clear();
            return std::nullopt;
        }
        return static_cast<std::uint64_t>(end - here);
    }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    std::istream& in_;
    std::uint64_t offset_ = 0;
};

inline void write_packed_header(std::ostream& out, std::uint64_t n, std::span<const SnpMeta> meta,
                                std::uint16_t flags) {
    out.write(kPackedMagic.data(), kPackedMagic.size());
    put_le<std::uint16_t>(out, kPackedVersion);
    put_le<std::uint16_t>(out, flags);
    put_le<std::uint64_t>(out, n);
    put_le<std::uint64_t>(out, meta.size());
    for (const SnpMeta& m : meta) {
        if (m.id.size() > 0xFFFF) throw Error(ErrorCode::FormatError, "SNP id longer than 65535 bytes");
        put_le<std::uint8_t>(out, m.chromosome);
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.id.size()));
        out.write(m.id.data(), static_cast<std::streamsize>(m.id.size()));
    }
}

}  // namespace detail

/// Writes raw 2-bit values (0..3, 3 = missing) in column-major order. Missing
/// values require kPackedFlagMissingAllowed in `flags`.
inline void write_packed_codes(std::ostream& out, std::uint64_t n, std::span<const SnpMeta> meta,
                               std::span<const std::uint8_t> two_bit, std::uint16_t flags = 0) {
    if (n == 0 || meta.empty()) throw Error(ErrorCode::FormatError, "packed matrix must have n > 0 and p > 0");
    if (two_bit.size() != n * meta.size()) throw Error(ErrorCode::DimensionMismatch, "code count differs from n*p");
    detail::write_packed_header(out, n, meta, flags);
    std::vector<char> column(packed_column_bytes(n));
    for (std::size_t j = 0; j < meta.size(); ++j) {
        std::fill(column.begin(), column.end(), 0);
        for (std::uint64_t i = 0; i < n; ++i) {
            const std::uint8_t v = two_bit[j * n + i];
            if (v > 3 || (v == kPackedMissing && !(flags & kPackedFlagMissingAllowed))) {
                throw Error(ErrorCode::FormatError, "invalid 2-bit code at column " + std::to_string(j));
            }
            column[i / 4] = static_cast<char>(static_cast<unsigned char>(column[i / 4]) | (v << (2 * (i % 4))));
        }
        out.write(column.data(), static_cast<std::streamsize>(column.size()));
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing packed genotype file");
}

inline void write_packed(const GenotypeMatrix& g, std::ostream& out) {
    std::vector<std::uint8_t> two_bit(g.rows() * g.cols());
    for (std::size_t j = 0; j < g.cols(); ++j) {
        const auto col = g.column(j);
        for (std::size_t i = 0; i < g.rows(); ++i) two_bit[j * g.rows() + i] = static_cast<std::uint8_t>(col[i] - 1);
    }
    write_packed_codes(out, g.rows(), g.meta(), two_bit, 0);
}

/// True when the next four bytes of `in` are the packed magic. Does not consume input.
inline bool looks_packed(std::istream& in) {
    std::array<char, 4> head{};
    const auto start = in.tellg();
    in.read(head.data(), head.size());
    const bool match = in.gcount() == 4 && head == kPackedMagic;
    in.clear();
    in.seekg(start);
    return match;
}

inline GenotypeMatrix parse_packed(std::istream& in, MissingPolicy missing = MissingPolicy::Reject) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4 || magic != kPackedMagic) {
        throw Error(ErrorCode::NotPackedFile, "not a packed genotype file (bad magic)");
    }
    detail::ByteReader body(in, kPackedMagic.size());
    const auto version = body.get_le<std::uint16_t>();
    if (version != kPackedVersion) {
        throw Error(ErrorCode::FormatError, "unsupported packed format version " + std::to_string(version));
    }
    const auto flags = body.get_le<std::uint16_t>();
    if (flags & ~kPackedFlagMissingAllowed) throw Error(ErrorCode::FormatError, "reserved flag bits set");
    const auto n = body.get_le<std::uint64_t>();
    const auto p = body.get_le<std::uint64_t>();
    if (n == 0 || p == 0) throw Error(ErrorCode::FormatError, "packed file declares n = 0 or p = 0");

    const auto offset = [&] { return body.offset(); };
    std::vector<SnpMeta> meta;
    meta.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(p, 1 << 20)));
    for (std::uint64_t j = 0; j < p; ++j) {
        SnpMeta m;
        m.chromosome = body.get_le<std::uint8_t>();
        const auto len = body.get_le<std::uint16_t>();
        m.id.resize(len);
        body.read(m.id.data(), len);
        meta.push_back(std::move(m));
    }

    const std::uint64_t column_bytes = packed_column_bytes(n);
    const std::uint64_t expected_total = offset() + p * column_bytes;
    if (auto left = body.remaining(); left && *left < p * column_bytes) {
        throw TruncatedFile(expected_total, offset() + *left);
    }

    std::vector<std::uint8_t> codes(n * p);
    std::vector<unsigned char> column(column_bytes);
    for (std::uint64_t j = 0; j < p; ++j) {
        in.read(reinterpret_cast<char*>(column.data()), static_cast<std::streamsize>(column_bytes));
        if (static_cast<std::uint64_t>(in.gcount()) != column_bytes) {
            throw TruncatedFile(expected_total, offset() + j * column_bytes + static_cast<std::uint64_t>(in.gcount()));
        }
        std::array<std::size_t, 3> counts{};
        std::vector<std::uint64_t> gaps;
        std::uint8_t* out = codes.data() + j * n;
        for (std::uint64_t i = 0; i < n; ++i) {
            const std::uint8_t v = (column[i / 4] >> (2 * (i % 4))) & 0x3;
            if (v == kPackedMissing) {
                if (!(flags & kPackedFlagMissingAllowed)) {
                    throw Error(ErrorCode::FormatError, "missing code at column " + std::to_string(j) + ", row " +
                                                            std::to_string(i) + " but missing flag is clear");
                }
                if (missing == MissingPolicy::Reject) throw MissingGenotype(j, i);
                gaps.push_back(i);
                continue;
            }
            out[i] = static_cast<std::uint8_t>(v + 1);
            ++counts[v];
        }
        if (!gaps.empty()) {
            if (counts[0] + counts[1] + counts[2] == 0) throw MissingGenotype(j, gaps.front());
            // Modal code; ties go to the lower code.
            const auto mode = static_cast<std::uint8_t>(std::max_element(counts.begin(), counts.end()) - counts.begin() + 1);
            for (std::uint64_t i : gaps) out[i] = mode;
        }
    }
    if (!body.at_end()) throw Error(ErrorCode::FormatError, "trailing bytes after genotype payload");
    return GenotypeMatrix(n, p, std::move(codes), std::move(meta));
}

}  // namespace jcisis
