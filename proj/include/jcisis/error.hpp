#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace jcisis {

enum class ErrorCode {
    DegenerateSample,
    InvalidValue,
    ZeroVarianceColumn,
    DimensionMismatch,
    TooFewColumns,
    InvalidPair,
    InvalidConfig,
    EmptyRange,
    EmptyReport,
    FormatError,
    ParseError,
    MissingResponse,
    NotPackedFile,
    TruncatedFile,
    MissingGenotype,
    IoError,
};

/// Column index used when the response column is the offending one.
inline constexpr std::size_t kResponseIndex = std::numeric_limits<std::size_t>::max();

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class ZeroVarianceColumn : public Error {
public:
    explicit ZeroVarianceColumn(std::size_t index)
        : Error(ErrorCode::ZeroVarianceColumn,
                index == kResponseIndex ? std::string("response has zero variance")
                                        : "column " + std::to_string(index) + " has zero variance"),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }
    bool is_response() const noexcept { return index_ == kResponseIndex; }

private:
    std::size_t index_;
};

/// Bad cell in a text input. `row` is the 1-based data row (header excluded),
/// `column` the 0-based field position.
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, std::string column_name, const std::string& reason)
        : Error(ErrorCode::ParseError, "row " + std::to_string(row) + ", column '" + column_name +
                                           "': " + reason),
          row_(row),
          column_(column),
          column_name_(std::move(column_name)) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& column_name() const noexcept { return column_name_; }

private:
    std::size_t row_;
    std::size_t column_;
    std::string column_name_;
};

class TruncatedFile : public Error {
public:
    TruncatedFile(std::uint64_t expected, std::uint64_t got)
        : Error(ErrorCode::TruncatedFile, "truncated file: expected " + std::to_string(expected) +
                                              " bytes, got " + std::to_string(got)),
          expected_(expected),
          got_(got) {}

    std::uint64_t expected() const noexcept { return expected_; }
    std::uint64_t got() const noexcept { return got_; }

private:
    std::uint64_t expected_;
    std::uint64_t got_;
};

/// 0-based column and row of a missing genotype.
class MissingGenotype : public Error {
public:
    MissingGenotype(std::size_t column, std::size_t row)
        : Error(ErrorCode::MissingGenotype, "missing genotype at column " + std::to_string(column) +
                                                ", row " + std::to_string(row)),
          column_(column),
          row_(row) {}

    std::size_t column() const noexcept { return column_; }
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t column_;
    std::size_t row_;
};

}  // namespace jcisis
