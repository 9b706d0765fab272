#pragma once

// Numeric CSV: one header row, RFC 4180 quoting, decimal-point reals.
// Values are written with 17 significant digits so doubles round-trip exactly.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jcisis/error.hpp"
#include "jcisis/ingest/genotype.hpp"
#include "jcisis/matrix.hpp"

namespace jcisis {

/// Splits a stream into RFC 4180 records. Quoted fields may hold commas,
/// doubled quotes and line breaks; CRLF and LF both end a record.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {
        // UTF-8 byte order mark.
        if (in_.peek() == 0xEF) {
            std::array<char, 3> bom{};
            in_.read(bom.data(), 3);
            if (in_.gcount() != 3 || bom[1] != char(0xBB) || bom[2] != char(0xBF)) {
                throw Error(ErrorCode::FormatError, "unexpected bytes at start of CSV");
            }
        }
    }

    /// Reads the next record; false at end of input. `record_number()` is 1-based.
    bool next(std::vector<std::string>& fields) {
        fields.clear();
        std::string field;
        bool in_quotes = false;
        bool any = false;
        bool was_quoted = false;
        std::streambuf* buf = in_.rdbuf();
        for (;;) {
            const int c = buf->sbumpc();
            if (c == std::char_traits<char>::eof()) {
                if (in_quotes) throw Error(ErrorCode::FormatError, "unterminated quoted field in record " +
                                                                        std::to_string(record_ + 1));
                if (!any) return false;
                fields.push_back(std::move(field));
                ++record_;
                return true;
            }
            any = true;
            const char ch = static_cast<char>(c);
            if (in_quotes) {
                if (ch == '"') {
                    if (buf->sgetc() == '"') {
                        buf->sbumpc();
                        field.push_back('"');
                    } else {
                        in_quotes = false;
                    }
                } else {
                    field.push_back(ch);
                }
                continue;
            }
            if (ch == '"' && field.empty() && !was_quoted) {
                in_quotes = true;
                was_quoted = true;
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
            } else if (ch == '\n' || ch == '\r') {
                if (ch == '\r' && buf->sgetc() == '\n') buf->sbumpc();
                fields.push_back(std::move(field));
                ++record_;
                return true;
            } else {
                field.push_back(ch);
            }
        }
    }

    std::size_t record_number() const noexcept { return record_; }

private:
    std::istream& in_;
    std::size_t record_ = 0;
};

inline std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string format_real(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto* ws = " \t";
    const std::size_t b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "." || s == "?";
}

/// Parses a finite decimal real; nullopt if the text is not a complete number.
inline std::optional<double> parse_real(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline bool is_blank_record(const std::vector<std::string>& fields) {
    return fields.size() == 1 && trim(fields[0]).empty();
}

}  // namespace detail

struct CsvOptions {
    /// Response column; nullopt reads every column as a predictor.
    std::optional<std::string> response_column = std::string("y");
    /// For predictors: Reject raises ParseError, Impute fills the column mean of
    /// observed values. Missing responses are always rejected.
    MissingPolicy missing = MissingPolicy::Reject;
};

struct CsvData {
    NumericMatrix x;
    std::vector<double> y;            ///< empty when no response column was requested
    std::string response_name;
    std::vector<std::string> names;   ///< predictor header cells, file order
    std::vector<SnpMeta> meta;        ///< parsed from the header cells
};

inline CsvData parse_csv(std::istream& in, const CsvOptions& options = {}) {
    CsvReader reader(in);
    std::vector<std::string> header;
    do {
        if (!reader.next(header)) throw Error(ErrorCode::FormatError, "missing header row");
    } while (detail::is_blank_record(header));

    std::optional<std::size_t> response_at;
    if (options.response_column) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (detail::trim(header[c]) == *options.response_column) {
                response_at = c;
                break;
            }
        }
        if (!response_at) throw Error(ErrorCode::MissingResponse,
                                      "response column '" + *options.response_column + "' not in header");
    }

    CsvData data;
    std::vector<std::size_t> predictor_fields;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (response_at && c == *response_at) continue;
        predictor_fields.push_back(c);
        std::string name(detail::trim(header[c]));
        SnpMeta meta = parse_snp_label(name);
        if (name.empty()) meta.id = std::to_string(predictor_fields.size());
        data.names.push_back(std::move(name));
        data.meta.push_back(std::move(meta));
    }
    if (response_at) data.response_name = std::string(detail::trim(header[*response_at]));

    std::vector<std::vector<double>> columns(predictor_fields.size());
    std::vector<std::vector<std::size_t>> missing(predictor_fields.size());
    std::vector<std::string> fields;
    std::size_t row = 0;
    while (reader.next(fields)) {
        if (detail::is_blank_record(fields)) continue;
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::FormatError, "record " + std::to_string(reader.record_number()) + " has " +
                                                    std::to_string(fields.size()) + " fields, header has " +
                                                    std::to_string(header.size()));
        }
        ++row;
        auto read_cell = [&](std::size_t field, bool allow_missing) -> std::optional<double> {
            const std::string_view cell = detail::trim(fields[field]);
            const std::string column_name(detail::trim(header[field]));
            if (detail::is_missing_token(cell)) {
                if (!allow_missing) {
                    throw ParseError(row, field, column_name, "missing value '" + std::string(cell) + "'");
                }
                return std::nullopt;
            }
            const std::optional<double> v = detail::parse_real(cell);
            if (!v) throw ParseError(row, field, column_name, "not a number: '" + std::string(cell) + "'");
            if (!std::isfinite(*v)) throw ParseError(row, field, column_name, "non-finite value");
            return v;
        };
        for (std::size_t k = 0; k < predictor_fields.size(); ++k) {
            const std::optional<double> v = read_cell(predictor_fields[k], options.missing == MissingPolicy::Impute);
            if (!v) missing[k].push_back(columns[k].size());
            columns[k].push_back(v.value_or(0.0));
        }
        if (response_at) data.y.push_back(*read_cell(*response_at, false));
    }
    if (row == 0) throw Error(ErrorCode::FormatError, "no data rows");

    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (missing[k].empty()) continue;
        const std::size_t observed = row - missing[k].size();
        if (observed == 0) {
            throw ParseError(missing[k].front() + 1, predictor_fields[k], data.names[k],
                             "column has no observed values to impute from");
        }
        double total = 0.0;
        for (double v : columns[k]) total += v;  // missing slots hold 0
        const double mean = total / static_cast<double>(observed);
        for (std::size_t i : missing[k]) columns[k][i] = mean;
    }

    std::vector<double> storage;
    storage.reserve(row * columns.size());
    for (const auto& col : columns) storage.insert(storage.end(), col.begin(), col.end());
    data.x = NumericMatrix(row, columns.size(), std::move(storage));
    return data;
}

/// Writes predictors (and optionally a trailing response column).
inline void write_csv(std::ostream& out, const NumericMatrix& x, std::span<const std::string> names,
                      const std::optional<std::pair<std::string, std::span<const double>>>& response = std::nullopt) {
    if (names.size() != x.cols()) throw Error(ErrorCode::DimensionMismatch, "header length differs from p");
    if (response && response->second.size() != x.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "response length differs from n");
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j) out << ',';
        out << csv_escape(names[j]);
    }
    if (response) out << (names.empty() ? "" : ",") << csv_escape(response->first);
    out << '\n';
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (j) out << ',';
            out << format_real(x(i, j));
        }
        if (response) out << (x.cols() ? "," : "") << format_real(response->second[i]);
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing CSV");
}

/// Phenotype file: a CSV with a header. Uses `column` when given and present,
/// otherwise the only column of a single-column file.
inline std::vector<double> read_phenotype(std::istream& in, const std::optional<std::string>& column) {
    CsvReader reader(in);
    std::vector<std::string> header;
    do {
        if (!reader.next(header)) throw Error(ErrorCode::FormatError, "phenotype file has no header");
    } while (detail::is_blank_record(header));
    std::optional<std::size_t> at;
    if (column) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (detail::trim(header[c]) == *column) at = c;
        }
    }
    if (!at && header.size() == 1) at = 0;
    if (!at) {
        throw Error(ErrorCode::MissingResponse,
                    "phenotype column '" + column.value_or("") + "' not found in phenotype file");
    }
    std::vector<std::string> fields;
    std::vector<double> values;
    std::size_t row = 0;
    while (reader.next(fields)) {
        if (detail::is_blank_record(fields)) continue;
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::FormatError, "phenotype record " + std::to_string(reader.record_number()) +
                                                    " has the wrong number of fields");
        }
        ++row;
        const std::string_view cell = detail::trim(fields[*at]);
        const std::optional<double> v = detail::is_missing_token(cell) ? std::nullopt : detail::parse_real(cell);
        if (!v || !std::isfinite(*v)) {
            throw ParseError(row, *at, std::string(detail::trim(header[*at])), "bad phenotype value '" +
                                                                                   std::string(cell) + "'");
        }
        values.push_back(*v);
    }
    if (values.empty()) throw Error(ErrorCode::FormatError, "phenotype file has no data rows");
    return values;
}

}  // namespace jcisis
