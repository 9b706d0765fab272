#pragma once

// Sample cumulants and the normalized three-way joint-cumulant screening score.
//
// Conventions:
//   * k2 and k3 use the 1/n divisor. The screening score itself does not
//     depend on the divisor.
//   * Sums run sequentially in sample order. Defining JCISIS_KAHAN_SUMMATION
//     switches every accumulation to compensated summation; results remain
//     deterministic and the stated tolerances are unchanged.
//   * The per-sample product is always formed as y * (x1 * x2), so swapping
//     the two predictors is bit-neutral.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jcisis/error.hpp"

namespace jcisis {

struct CenteredColumn {
    std::size_t index = 0;
    double mean = 0.0;
    std::vector<double> centered;
    double css = 0.0;  ///< sum of squared centered values

    std::size_t size() const noexcept { return centered.size(); }
};

struct PairStatistic {
    std::size_t j1 = 0;
    std::size_t j2 = 0;
    double tau_hat = 0.0;
    double r_hat = 0.0;

    friend bool operator==(const PairStatistic&, const PairStatistic&) = default;
};

inline constexpr double kDefaultVarianceEps = 1e-12;

namespace detail {

class Accumulator {
public:
    void add(double v) noexcept {
#ifdef JCISIS_KAHAN_SUMMATION
        const double y = v - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
#else
        sum_ += v;
#endif
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
#ifdef JCISIS_KAHAN_SUMMATION
    double comp_ = 0.0;
#endif
};

/// Counts calls to center(); read by tests that check per-column work is hoisted.
inline std::atomic<std::uint64_t>& centering_pass_counter() {
    static std::atomic<std::uint64_t> counter{0};
    return counter;
}

/// Σ_i y_i·(a_i·b_i) in sample order. All spans must have equal length.
inline double triple_product_sum(std::span<const double> a, std::span<const double> b,
                                 std::span<const double> y) noexcept {
    Accumulator acc;
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        acc.add(y[i] * (a[i] * b[i]));
    }
    return acc.value();
}

/// √n·|sum| / √(css1·css2·cssY). Shared by every code path that produces a score.
inline double normalized_score(double sum, double sqrt_n, double css1, double css2,
                               double css_y) noexcept {
    return sqrt_n * std::fabs(sum) / std::sqrt(css1 * css2 * css_y);
}

}  // namespace detail

/// Two-pass centering: mean first, then deviations and their sum of squares.
inline CenteredColumn center(std::span<const double> values, std::size_t index) {
    const std::size_t n = values.size();
    if (n < 2) {
        throw Error(ErrorCode::DegenerateSample,
                    "column " + std::to_string(index) + ": need at least 2 samples, got " +
                        std::to_string(n));
    }
    detail::Accumulator total;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(values[i])) {
            throw Error(ErrorCode::InvalidValue, "column " + std::to_string(index) +
                                                     ": non-finite value at row " + std::to_string(i));
        }
        total.add(values[i]);
    }
    detail::centering_pass_counter().fetch_add(1, std::memory_order_relaxed);

    CenteredColumn col;
    col.index = index;
    col.mean = total.value() / static_cast<double>(n);
    col.centered.resize(n);
    detail::Accumulator squares;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = values[i] - col.mean;
        col.centered[i] = d;
        squares.add(d * d);
    }
    col.css = squares.value();
    return col;
}

/// Sample variance with the 1/n divisor.
inline double sample_k2(const CenteredColumn& col) noexcept {
    return col.css / static_cast<double>(col.size());
}

/// Lower bound on the variance: rejects constant (or numerically constant) columns.
inline void validate_c1(const CenteredColumn& col, double eps = kDefaultVarianceEps) {
    if (!(sample_k2(col) > eps)) {
        throw ZeroVarianceColumn(col.index);
    }
}

/// Sample three-way joint cumulant (1/n)·Σ c1·c2·cy.
inline double sample_k3(const CenteredColumn& c1, const CenteredColumn& c2, const CenteredColumn& cy) {
    if (c1.size() != cy.size() || c2.size() != cy.size()) {
        throw Error(ErrorCode::DimensionMismatch, "sample_k3: column lengths differ");
    }
    return detail::triple_product_sum(c1.centered, c2.centered, cy.centered) /
           static_cast<double>(cy.size());
}

namespace detail {

inline void require_scorable(const CenteredColumn& c1, const CenteredColumn& c2,
                             const CenteredColumn& cy) {
    if (c1.size() != cy.size() || c2.size() != cy.size()) {
        throw Error(ErrorCode::DimensionMismatch, "r_hat: column lengths differ");
    }
    if (c1.index == c2.index) {
        throw Error(ErrorCode::InvalidPair, "r_hat: both predictors are column " + std::to_string(c1.index));
    }
    for (const CenteredColumn* c : {&c1, &c2, &cy}) {
        if (!(c->css > 0.0)) {
            throw ZeroVarianceColumn(c->index);
        }
    }
}

inline PairStatistic make_pair_statistic(std::size_t a, std::size_t b, double tau, double r) {
    return a < b ? PairStatistic{a, b, tau, r} : PairStatistic{b, a, tau, r};
}

}  // namespace detail

/// Normalized screening score from the centered sums:
/// √n·|Σ c1·c2·cy| / √(css1·css2·cssY).
inline PairStatistic r_hat(const CenteredColumn& c1, const CenteredColumn& c2, const CenteredColumn& cy) {
    detail::require_scorable(c1, c2, cy);
    const double n = static_cast<double>(cy.size());
    const double sum = detail::triple_product_sum(c1.centered, c2.centered, cy.centered);
    const double r = detail::normalized_score(sum, std::sqrt(n), c1.css, c2.css, cy.css);
    return detail::make_pair_statistic(c1.index, c2.index, sum / n, r);
}

/// Same score through the cumulant route |k3| / (√k2_1·√k2_2·√k2_Y).
inline PairStatistic r_hat_from_cumulants(const CenteredColumn& c1, const CenteredColumn& c2,
                                          const CenteredColumn& cy) {
    detail::require_scorable(c1, c2, cy);
    const double tau = sample_k3(c1, c2, cy);
    const double r =
        std::fabs(tau) / (std::sqrt(sample_k2(c1)) * std::sqrt(sample_k2(c2)) * std::sqrt(sample_k2(cy)));
    return detail::make_pair_statistic(c1.index, c2.index, tau, r);
}

}  // namespace jcisis
