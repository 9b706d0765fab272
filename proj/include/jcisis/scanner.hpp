#pragma once

// All-pairs sweep of the screening score.
//
// Pairs (j1 < j2) are enumerated in canonical row-major order: index 0 is
// (0, 1), then (0, 2), ..., (0, p-1), (1, 2), ... The sweep itself walks
// (block_a, block_b) tiles of the upper triangle. Each tile packs block_b
// row-major so the innermost loop runs across predictors while every pair's
// own sum still advances in sample order; the value of a pair is therefore
// independent of block size, worker count and tile schedule.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "jcisis/core_stat.hpp"
#include "jcisis/error.hpp"
#include "jcisis/matrix.hpp"

namespace jcisis {

struct PairRange {
    std::uint64_t start = 0;
    std::uint64_t end = 0;  ///< exclusive

    friend bool operator==(const PairRange&, const PairRange&) = default;
};

inline std::uint64_t pair_count(std::uint64_t p) {
    if (p < 2) {
        throw Error(ErrorCode::TooFewColumns, "need at least 2 predictors, got " + std::to_string(p));
    }
    if (p > (std::uint64_t{1} << 32)) {
        throw Error(ErrorCode::InvalidConfig, "predictor count too large for 64-bit pair indices");
    }
    return p % 2 == 0 ? (p / 2) * (p - 1) : p * ((p - 1) / 2);
}

namespace detail {

/// Canonical index of (j1, j1 + 1).
inline std::uint64_t row_start(std::uint64_t j1, std::uint64_t p) noexcept {
    return j1 * p - j1 * (j1 + 1) / 2;
}

}  // namespace detail

inline std::uint64_t canonical_pair_index(std::uint64_t j1, std::uint64_t j2, std::uint64_t p) {
    if (!(j1 < j2 && j2 < p)) {
        throw Error(ErrorCode::InvalidPair, "invalid pair (" + std::to_string(j1) + ", " + std::to_string(j2) +
                                                ") for p = " + std::to_string(p));
    }
    return detail::row_start(j1, p) + (j2 - j1 - 1);
}

inline std::pair<std::uint64_t, std::uint64_t> pair_from_index(std::uint64_t index, std::uint64_t p) {
    const std::uint64_t total = pair_count(p);
    if (index >= total) {
        throw Error(ErrorCode::InvalidPair,
                    "pair index " + std::to_string(index) + " out of range for p = " + std::to_string(p));
    }
    // Largest j1 with row_start(j1) <= index; closed-form estimate, then exact correction.
    const long double b = 2.0L * static_cast<long double>(p) - 1.0L;
    const long double disc = b * b - 8.0L * static_cast<long double>(index);
    auto j1 = static_cast<std::uint64_t>(std::max(0.0L, std::floor((b - std::sqrt(std::max(0.0L, disc))) / 2.0L)));
    j1 = std::min(j1, p - 2);
    while (j1 > 0 && detail::row_start(j1, p) > index) --j1;
    while (j1 + 1 < p - 1 && detail::row_start(j1 + 1, p) <= index) ++j1;
    return {j1, j1 + 1 + (index - detail::row_start(j1, p))};
}

/// Ordering of screening output: larger score first, ties by (j1, j2) ascending.
inline bool ranks_before(const PairStatistic& a, const PairStatistic& b) noexcept {
    if (a.r_hat != b.r_hat) return a.r_hat > b.r_hat;
    if (a.j1 != b.j1) return a.j1 < b.j1;
    return a.j2 < b.j2;
}

struct ScanConfig {
    std::optional<std::size_t> top_k;
    std::optional<double> threshold;
    std::size_t block_size = 256;
    std::size_t worker_count = 1;
    std::optional<PairRange> pair_range;

    /// Resolves the effective range against `total_pairs` and checks every field.
    PairRange resolve(std::uint64_t total_pairs) const {
        if (!top_k && !threshold) {
            throw Error(ErrorCode::InvalidConfig, "set top_k, threshold or both");
        }
        if (top_k && *top_k < 1) throw Error(ErrorCode::InvalidConfig, "top_k must be >= 1");
        if (threshold && !(*threshold >= 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold must be >= 0");
        if (block_size < 1) throw Error(ErrorCode::InvalidConfig, "block_size must be >= 1");
        if (worker_count < 1) throw Error(ErrorCode::InvalidConfig, "worker_count must be >= 1");
        return resolve_range(pair_range, total_pairs);
    }

    static PairRange resolve_range(const std::optional<PairRange>& range, std::uint64_t total_pairs) {
        if (!range) return {0, total_pairs};
        if (range->start >= range->end) {
            throw Error(ErrorCode::EmptyRange, "pair range [" + std::to_string(range->start) + ", " +
                                                   std::to_string(range->end) + ") is empty");
        }
        if (range->end > total_pairs) {
            throw Error(ErrorCode::InvalidConfig, "pair range end " + std::to_string(range->end) +
                                                      " exceeds pair count " + std::to_string(total_pairs));
        }
        return *range;
    }
};

struct ScanResult {
    std::vector<PairStatistic> top_pairs;  ///< sorted by ranks_before, length <= top_k
    std::vector<PairStatistic> selected;   ///< r_hat > threshold, sorted by ranks_before
    std::uint64_t pairs_scanned = 0;
    double elapsed_seconds = 0.0;
};

/// Equality of everything except timing.
inline bool same_outcome(const ScanResult& a, const ScanResult& b) {
    return a.top_pairs == b.top_pairs && a.selected == b.selected && a.pairs_scanned == b.pairs_scanned;
}

/// Centered predictors and response, computed once and shared read-only by all workers.
class Workspace {
public:
    Workspace(std::vector<CenteredColumn> columns, CenteredColumn response)
        : columns_(std::move(columns)), response_(std::move(response)),
          sqrt_n_(std::sqrt(static_cast<double>(response_.size()))) {}

    std::size_t samples() const noexcept { return response_.size(); }
    std::size_t predictors() const noexcept { return columns_.size(); }
    const CenteredColumn& column(std::size_t j) const { return columns_.at(j); }
    const CenteredColumn& response() const noexcept { return response_; }
    double sqrt_n() const noexcept { return sqrt_n_; }

    /// Score of one pair through the same arithmetic as the sweep.
    PairStatistic score(std::size_t j1, std::size_t j2) const {
        if (j1 > j2) std::swap(j1, j2);
        canonical_pair_index(j1, j2, predictors());
        const CenteredColumn& a = columns_[j1];
        const CenteredColumn& b = columns_[j2];
        const double sum = detail::triple_product_sum(a.centered, b.centered, response_.centered);
        return {j1, j2, sum / static_cast<double>(samples()),
                detail::normalized_score(sum, sqrt_n_, a.css, b.css, response_.css)};
    }

private:
    std::vector<CenteredColumn> columns_;
    CenteredColumn response_;
    double sqrt_n_;
};

/// Centers every predictor and the response once. Predictor j keeps index j;
/// the response carries kResponseIndex.
inline Workspace precompute(const NumericMatrix& x, std::span<const double> response,
                            double eps = kDefaultVarianceEps) {
    const std::size_t n = x.rows();
    if (response.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "response has " + std::to_string(response.size()) +
                                                      " values, matrix has " + std::to_string(n) + " rows");
    }
    if (n < 3) {
        throw Error(ErrorCode::DegenerateSample, "need at least 3 samples for a pair scan, got " + std::to_string(n));
    }
    pair_count(x.cols());
    std::vector<CenteredColumn> columns;
    columns.reserve(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        columns.push_back(center(x.column(j), j));
        validate_c1(columns.back(), eps);
    }
    CenteredColumn y = center(response, kResponseIndex);
    validate_c1(y, eps);
    return Workspace(std::move(columns), std::move(y));
}

// ---------------------------------------------------------------------------
// Collectors. Each worker owns one; they are merged after the sweep.
// ---------------------------------------------------------------------------

/// Bounded min-heap on the output ordering: front() is the weakest retained pair.
class TopKCollector {
public:
    explicit TopKCollector(std::size_t k) : k_(k) { heap_.reserve(std::min<std::size_t>(k, 1 << 16)); }

    void operator()(const PairStatistic& s) {
        if (heap_.size() < k_) {
            heap_.push_back(s);
            std::push_heap(heap_.begin(), heap_.end(), ranks_before);
        } else if (ranks_before(s, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
            heap_.back() = s;
            std::push_heap(heap_.begin(), heap_.end(), ranks_before);
        }
    }

    void merge(const TopKCollector& other) {
        for (const PairStatistic& s : other.heap_) (*this)(s);
    }

    std::vector<PairStatistic> sorted() const {
        std::vector<PairStatistic> out = heap_;
        std::sort(out.begin(), out.end(), ranks_before);
        return out;
    }

private:
    std::size_t k_;
    std::vector<PairStatistic> heap_;
};

class ThresholdCollector {
public:
    explicit ThresholdCollector(double c) : c_(c) {}

    void operator()(const PairStatistic& s) {
        if (s.r_hat > c_) hits_.push_back(s);
    }
    void merge(const ThresholdCollector& other) { hits_.insert(hits_.end(), other.hits_.begin(), other.hits_.end()); }

    std::vector<PairStatistic> sorted() const {
        std::vector<PairStatistic> out = hits_;
        std::sort(out.begin(), out.end(), ranks_before);
        return out;
    }

private:
    double c_;
    std::vector<PairStatistic> hits_;
};

/// Counts, for each target, how many visited pairs precede it in the output ordering.
class RankCounter {
public:
    explicit RankCounter(std::vector<PairStatistic> targets)
        : targets_(std::move(targets)), ahead_(targets_.size(), 0) {}

    void operator()(const PairStatistic& s) {
        for (std::size_t t = 0; t < targets_.size(); ++t) {
            if (ranks_before(s, targets_[t])) ++ahead_[t];
        }
    }
    void merge(const RankCounter& other) {
        for (std::size_t t = 0; t < ahead_.size(); ++t) ahead_[t] += other.ahead_[t];
    }

    /// 1-based ranks.
    std::vector<std::uint64_t> ranks() const {
        std::vector<std::uint64_t> out(ahead_.size());
        for (std::size_t t = 0; t < ahead_.size(); ++t) out[t] = ahead_[t] + 1;
        return out;
    }

private:
    std::vector<PairStatistic> targets_;
    std::vector<std::uint64_t> ahead_;
};

namespace detail {

struct Tile {
    std::size_t a0, a1, b0, b1;
};

/// Runs `visit(PairStatistic)` on every pair in `range`. One visitor per worker,
/// created by `make_visitor()`; the visitors are returned in worker order.
template <class MakeVisitor>
auto sweep(const Workspace& ws, PairRange range, std::size_t block_size, std::size_t worker_count,
           MakeVisitor make_visitor) {
    using Visitor = decltype(make_visitor());
    const std::size_t n = ws.samples();
    const std::size_t p = ws.predictors();
    const std::size_t width = std::max<std::size_t>(1, std::min(block_size, p));
    const std::size_t blocks = (p + width - 1) / width;
    const double sqrt_n = ws.sqrt_n();
    const std::span<const double> y = ws.response().centered;
    const double css_y = ws.response().css;

    // Tiles whose pairs may intersect the range, in canonical order of their first row.
    std::vector<Tile> tiles;
    for (std::size_t a = 0; a < blocks; ++a) {
        const std::size_t a0 = a * width, a1 = std::min(p, a0 + width);
        if (detail::row_start(a0, p) >= range.end) break;
        if (detail::row_start(a1, p) <= range.start) continue;
        for (std::size_t b = a; b < blocks; ++b) {
            const std::size_t b0 = b * width, b1 = std::min(p, b0 + width);
            tiles.push_back({a0, a1, b0, b1});
        }
    }

    std::atomic<std::size_t> next_tile{0};
    auto work = [&](Visitor& visit) {
        std::vector<double> packed(n * width);
        std::vector<double> acc(width);
#ifdef JCISIS_KAHAN_SUMMATION
        std::vector<double> comp(width);
#endif
        std::size_t packed_block = std::numeric_limits<std::size_t>::max();
        for (std::size_t t = next_tile.fetch_add(1, std::memory_order_relaxed); t < tiles.size();
             t = next_tile.fetch_add(1, std::memory_order_relaxed)) {
            const Tile& tile = tiles[t];
            const std::size_t w = tile.b1 - tile.b0;
            bool packed_ready = packed_block == tile.b0;
            for (std::size_t j1 = tile.a0; j1 < tile.a1 && j1 + 1 < tile.b1; ++j1) {
                // Columns j2 of this tile that lie in the range for row j1.
                const std::uint64_t rs = detail::row_start(j1, p);
                const std::uint64_t row_len = p - j1 - 1;
                if (rs >= range.end || rs + row_len <= range.start) continue;
                const std::uint64_t lo_off = range.start > rs ? range.start - rs : 0;
                const std::uint64_t hi_off = std::min<std::uint64_t>(row_len, range.end - rs);
                const std::size_t j2_lo = std::max<std::size_t>(tile.b0, j1 + 1 + lo_off);
                const std::size_t j2_hi = std::min<std::size_t>(tile.b1, j1 + 1 + hi_off);
                if (j2_lo >= j2_hi) continue;

                if (!packed_ready) {
                    for (std::size_t k = 0; k < w; ++k) {
                        const std::vector<double>& col = ws.column(tile.b0 + k).centered;
                        for (std::size_t i = 0; i < n; ++i) packed[i * w + k] = col[i];
                    }
                    packed_block = tile.b0;
                    packed_ready = true;
                }

                const std::size_t klo = j2_lo - tile.b0, khi = j2_hi - tile.b0;
                const double* x1 = ws.column(j1).centered.data();
                std::fill(acc.begin() + klo, acc.begin() + khi, 0.0);
#ifdef JCISIS_KAHAN_SUMMATION
                std::fill(comp.begin() + klo, comp.begin() + khi, 0.0);
#endif
                double* accp = acc.data();
                for (std::size_t i = 0; i < n; ++i) {
                    const double xi = x1[i];
                    const double yi = y[i];
                    const double* row = packed.data() + i * w;
                    for (std::size_t k = klo; k < khi; ++k) {
#ifdef JCISIS_KAHAN_SUMMATION
                        const double v = yi * (xi * row[k]) - comp[k];
                        const double s = accp[k] + v;
                        comp[k] = (s - accp[k]) - v;
                        accp[k] = s;
#else
                        accp[k] += yi * (xi * row[k]);
#endif
                    }
                }
                const double css1 = ws.column(j1).css;
                for (std::size_t k = klo; k < khi; ++k) {
                    const std::size_t j2 = tile.b0 + k;
                    const double sum = accp[k];
                    visit(PairStatistic{j1, j2, sum / static_cast<double>(n),
                                        detail::normalized_score(sum, sqrt_n, css1, ws.column(j2).css, css_y)});
                }
            }
        }
    };

    std::vector<Visitor> visitors;
    visitors.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) visitors.push_back(make_visitor());

    if (worker_count == 1) {
        work(visitors[0]);
    } else {
        std::vector<std::exception_ptr> errors(worker_count);
        std::vector<std::thread> threads;
        threads.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) {
            threads.emplace_back([&, w] {
                try {
                    work(visitors[w]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (std::thread& t : threads) t.join();
        for (const std::exception_ptr& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return visitors;
}

struct ScanVisitor {
    std::optional<TopKCollector> top;
    std::optional<ThresholdCollector> above;
    std::optional<RankCounter> ranks;
    std::uint64_t visited = 0;

    void operator()(const PairStatistic& s) {
        ++visited;
        if (top) (*top)(s);
        if (above) (*above)(s);
        if (ranks) (*ranks)(s);
    }

    void merge(const ScanVisitor& other) {
        visited += other.visited;
        if (top) top->merge(*other.top);
        if (above) above->merge(*other.above);
        if (ranks) ranks->merge(*other.ranks);
    }
};

inline std::vector<PairStatistic> score_targets(const Workspace& ws,
                                                std::span<const std::pair<std::size_t, std::size_t>> targets) {
    std::vector<PairStatistic> out;
    out.reserve(targets.size());
    for (const auto& [a, b] : targets) out.push_back(ws.score(a, b));
    return out;
}

inline std::pair<ScanResult, std::vector<std::uint64_t>> run_scan(
    const Workspace& ws, const ScanConfig& config,
    std::optional<std::span<const std::pair<std::size_t, std::size_t>>> targets) {
    const auto started = std::chrono::steady_clock::now();
    const PairRange range = config.resolve(pair_count(ws.predictors()));
    std::vector<PairStatistic> scored_targets;
    if (targets) scored_targets = score_targets(ws, *targets);

    auto visitors = sweep(ws, range, config.block_size, config.worker_count, [&] {
        ScanVisitor v;
        if (config.top_k) v.top.emplace(*config.top_k);
        if (config.threshold) v.above.emplace(*config.threshold);
        if (targets) v.ranks.emplace(scored_targets);
        return v;
    });
    ScanVisitor& merged = visitors.front();
    for (std::size_t w = 1; w < visitors.size(); ++w) merged.merge(visitors[w]);

    ScanResult result;
    if (merged.top) result.top_pairs = merged.top->sorted();
    if (merged.above) result.selected = merged.above->sorted();
    result.pairs_scanned = merged.visited;
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::vector<std::uint64_t> ranks;
    if (merged.ranks) ranks = merged.ranks->ranks();
    return {std::move(result), std::move(ranks)};
}

}  // namespace detail

inline ScanResult scan(const Workspace& ws, const ScanConfig& config) {
    return detail::run_scan(ws, config, std::nullopt).first;
}

/// Scan plus the 1-based rank of each target pair within the scanned pairs
/// (position in the full output ordering, same tie rule).
inline std::pair<ScanResult, std::vector<std::uint64_t>> scan_and_rank(
    const Workspace& ws, const ScanConfig& config, std::span<const std::pair<std::size_t, std::size_t>> targets) {
    return detail::run_scan(ws, config, targets);
}

/// Pairs with r_hat strictly above c, in output order.
inline std::vector<PairStatistic> select_by_threshold(std::span<const PairStatistic> scores, double c) {
    if (!(c >= 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold must be >= 0");
    ThresholdCollector collector(c);
    for (const PairStatistic& s : scores) collector(s);
    return collector.sorted();
}

/// Combines results of disjoint shards into the result the unsharded scan produces.
inline ScanResult merge_results(std::span<const ScanResult> shards, std::optional<std::size_t> top_k) {
    ScanResult out;
    for (const ScanResult& s : shards) {
        out.top_pairs.insert(out.top_pairs.end(), s.top_pairs.begin(), s.top_pairs.end());
        out.selected.insert(out.selected.end(), s.selected.begin(), s.selected.end());
        out.pairs_scanned += s.pairs_scanned;
        out.elapsed_seconds += s.elapsed_seconds;
    }
    std::sort(out.top_pairs.begin(), out.top_pairs.end(), ranks_before);
    if (top_k && out.top_pairs.size() > *top_k) out.top_pairs.resize(*top_k);
    std::sort(out.selected.begin(), out.selected.end(), ranks_before);
    return out;
}

/// Streams every pair of `range` to `sink` in canonical order. Chunks of
/// consecutive pairs are scored in parallel and emitted in order.
inline void for_each_pair_ordered(const Workspace& ws, std::optional<PairRange> range, std::size_t worker_count,
                                  const std::function<void(const PairStatistic&)>& sink,
                                  std::uint64_t chunk_pairs = std::uint64_t{1} << 15) {
    if (worker_count < 1) throw Error(ErrorCode::InvalidConfig, "worker_count must be >= 1");
    const std::uint64_t p = ws.predictors();
    const PairRange r = ScanConfig::resolve_range(range, pair_count(p));
    chunk_pairs = std::max<std::uint64_t>(1, chunk_pairs);

    auto fill = [&](std::uint64_t first, std::uint64_t last, std::vector<PairStatistic>& out) {
        out.clear();
        auto [j1, j2] = pair_from_index(first, p);
        for (std::uint64_t idx = first; idx < last; ++idx) {
            out.push_back(ws.score(j1, j2));
            if (++j2 == p) {
                ++j1;
                j2 = j1 + 1;
            }
        }
    };

    std::vector<std::vector<PairStatistic>> buffers(worker_count);
    for (std::uint64_t round = r.start; round < r.end; round += chunk_pairs * worker_count) {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) {
            const std::uint64_t first = round + w * chunk_pairs;
            const std::uint64_t last = std::min(r.end, first + chunk_pairs);
            if (first >= last) {
                buffers[w].clear();
                continue;
            }
            if (worker_count == 1) {
                fill(first, last, buffers[w]);
            } else {
                threads.emplace_back([&, w, first, last] {
                    try {
                        fill(first, last, buffers[w]);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (std::thread& t : threads) t.join();
        for (const std::exception_ptr& e : errors) {
            if (e) std::rethrow_exception(e);
        }
        for (const auto& buffer : buffers) {
            for (const PairStatistic& s : buffer) sink(s);
        }
    }
}

}  // namespace jcisis
