#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jcisis/error.hpp"
#include "jcisis/matrix.hpp"
#include "jcisis/scanner.hpp"

namespace jcisis {

enum class MissingPolicy { Reject, Impute };

/// Column metadata. chromosome 0 means unknown; 1-22 autosomes, 23 = X.
struct SnpMeta {
    std::uint8_t chromosome = 0;
    std::string id;

    friend bool operator==(const SnpMeta&, const SnpMeta&) = default;
};

/// "ch<chrom>:<id>" when the chromosome is known, otherwise the bare id.
inline std::string snp_label(const SnpMeta& meta) {
    if (meta.chromosome == 0) return meta.id;
    return "ch" + std::to_string(meta.chromosome) + ":" + meta.id;
}

/// Inverse of snp_label. Accepts "ch<1-255>:<id>" and "chX:<id>"; anything else
/// becomes an id with unknown chromosome.
inline SnpMeta parse_snp_label(std::string_view label) {
    if (label.size() > 3 && label.substr(0, 2) == "ch") {
        const std::size_t colon = label.find(':');
        if (colon != std::string_view::npos && colon > 2) {
            const std::string_view chrom = label.substr(2, colon - 2);
            if (chrom == "X") return {23, std::string(label.substr(colon + 1))};
            unsigned value = 0;
            auto [ptr, ec] = std::from_chars(chrom.data(), chrom.data() + chrom.size(), value);
            if (ec == std::errc{} && ptr == chrom.data() + chrom.size() && value >= 1 && value <= 255) {
                return {static_cast<std::uint8_t>(value), std::string(label.substr(colon + 1))};
            }
        }
    }
    return {0, std::string(label)};
}

/// n x p genotype codes in {1, 2, 3} (AA, AB/BA, BB), column-major.
class GenotypeMatrix {
public:
    GenotypeMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> codes, std::vector<SnpMeta> meta)
        : rows_(rows), cols_(cols), codes_(std::move(codes)), meta_(std::move(meta)) {
        if (rows_ == 0 || cols_ == 0) throw Error(ErrorCode::FormatError, "genotype matrix must be non-empty");
        if (codes_.size() != rows_ * cols_) {
            throw Error(ErrorCode::DimensionMismatch, "genotype storage does not match rows*cols");
        }
        if (meta_.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "metadata length differs from p");
        for (std::size_t k = 0; k < codes_.size(); ++k) {
            if (codes_[k] < 1 || codes_[k] > 3) {
                throw Error(ErrorCode::FormatError, "genotype code " + std::to_string(codes_[k]) + " at column " +
                                                        std::to_string(k / rows_) + ", row " +
                                                        std::to_string(k % rows_) + " is not 1, 2 or 3");
            }
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::uint8_t operator()(std::size_t i, std::size_t j) const { return codes_[j * rows_ + i]; }
    std::span<const std::uint8_t> column(std::size_t j) const { return {codes_.data() + j * rows_, rows_}; }
    const std::vector<SnpMeta>& meta() const noexcept { return meta_; }

    NumericMatrix to_numeric() const {
        std::vector<double> values(codes_.begin(), codes_.end());
        return NumericMatrix(rows_, cols_, std::move(values));
    }

    /// Requires every value to be exactly 1, 2 or 3. Errors name the 1-based
    /// data row and the column label.
    static GenotypeMatrix from_numeric(const NumericMatrix& x, std::vector<SnpMeta> meta) {
        if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::FormatError, "no genotype data");
        if (meta.size() != x.cols()) throw Error(ErrorCode::DimensionMismatch, "metadata length differs from p");
        std::vector<std::uint8_t> codes(x.rows() * x.cols());
        for (std::size_t j = 0; j < x.cols(); ++j) {
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const double v = x(i, j);
                if (!(v == 1.0 || v == 2.0 || v == 3.0)) {
                    throw ParseError(i + 1, j, snp_label(meta[j]), "value is not a genotype code (1, 2 or 3)");
                }
                codes[j * x.rows() + i] = static_cast<std::uint8_t>(v);
            }
        }
        return GenotypeMatrix(x.rows(), x.cols(), std::move(codes), std::move(meta));
    }

    friend bool operator==(const GenotypeMatrix&, const GenotypeMatrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint8_t> codes_;
    std::vector<SnpMeta> meta_;
};

/// Genotype codes are screened as the reals 1, 2, 3.
inline Workspace precompute(const GenotypeMatrix& g, std::span<const double> response,
                            double eps = kDefaultVarianceEps) {
    return precompute(g.to_numeric(), response, eps);
}

}  // namespace jcisis
