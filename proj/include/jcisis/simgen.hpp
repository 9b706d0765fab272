#pragma once

// The five simulation designs and the replicated rank/top-5 evaluation.
//
// Column indices are 0-based here; X1 is column 0. Every generator is a pure
// function of (n, p, seed): stream 0 of the seed drives the response or the
// latent class, stream j + 1 drives column j (see rng.hpp).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jcisis/error.hpp"
#include "jcisis/matrix.hpp"
#include "jcisis/rng.hpp"
#include "jcisis/scanner.hpp"

namespace jcisis::sim {

using IndexPair = std::pair<std::size_t, std::size_t>;

struct Dataset {
    NumericMatrix x;
    std::vector<double> y;
    std::vector<IndexPair> true_pairs;
};

struct SimStudySpec {
    int study_id = 1;
    std::size_t n = 200;
    std::size_t p = 1000;
    std::vector<IndexPair> true_pairs;
    std::uint64_t seed = 1;
    std::size_t replications = 100;

    void validate() const {
        if (study_id < 1 || study_id > 5) {
            throw Error(ErrorCode::InvalidConfig, "study id must be 1..5, got " + std::to_string(study_id));
        }
        if (n < 3) throw Error(ErrorCode::InvalidConfig, "n must be >= 3");
        if (replications < 1) throw Error(ErrorCode::InvalidConfig, "replications must be >= 1");
        if (true_pairs.empty()) throw Error(ErrorCode::InvalidConfig, "true pair set is empty");
        for (const auto& [a, b] : true_pairs) {
            if (!(a < b && b < p)) {
                throw Error(ErrorCode::InvalidConfig, "study " + std::to_string(study_id) + " needs p > " +
                                                          std::to_string(b) + ", got p = " + std::to_string(p));
            }
        }
    }
};

/// Probability that X_{2m-1} = 1 given Y = k; rows k = 0, 1, columns m = 1..4.
inline constexpr std::array<std::array<double, 4>, 2> kStudy3Theta{{
    {0.3, 0.4, 0.5, 0.3},
    {0.95, 0.9, 0.9, 0.95},
}};

inline constexpr double kStudy4Rho = 0.1;
inline constexpr std::array<double, 3> kStudy5Rho{0.1, 0.3, 0.5};

inline std::vector<IndexPair> study_true_pairs(int study_id) {
    switch (study_id) {
        case 1: return {{0, 1}};
        case 2: return {{0, 1}, {2, 3}};
        case 3: return {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
        case 4: return {{0, 2}, {5, 9}};
        case 5: return {{0, 1}, {2, 3}, {4, 5}};
        default: throw Error(ErrorCode::InvalidConfig, "study id must be 1..5, got " + std::to_string(study_id));
    }
}

/// Table defaults: n = 200, p = 1000 for studies 1-3; n = 100, p = 500 for 4-5.
inline SimStudySpec make_study_spec(int study_id, std::uint64_t seed = 1, std::size_t replications = 100) {
    SimStudySpec spec;
    spec.study_id = study_id;
    spec.true_pairs = study_true_pairs(study_id);
    spec.seed = seed;
    spec.replications = replications;
    if (study_id >= 4) {
        spec.n = 100;
        spec.p = 500;
    }
    return spec;
}

namespace detail {

inline Xoshiro256 column_stream(std::uint64_t seed, std::size_t j) { return Xoshiro256(child_seed(seed, j + 1)); }
inline Xoshiro256 response_stream(std::uint64_t seed) { return Xoshiro256(child_seed(seed, 0)); }

inline void fill_bernoulli(std::span<double> col, Xoshiro256& rng, double prob) {
    for (double& v : col) v = rng.bernoulli(prob) ? 1.0 : 0.0;
}

inline void fill_normal(std::span<double> col, Xoshiro256& rng, double sd) {
    for (double& v : col) v = rng.normal(0.0, sd);
}

inline void require_shape(std::size_t n, std::size_t p, std::size_t min_p) {
    if (n < 3) throw Error(ErrorCode::InvalidConfig, "n must be >= 3");
    if (p < min_p) throw Error(ErrorCode::InvalidConfig, "p must be >= " + std::to_string(min_p));
}

}  // namespace detail

/// Fair Bernoulli {0,1} predictors, Y = X1·X2.
inline Dataset gen_study1(std::size_t n, std::size_t p, std::uint64_t seed) {
    detail::require_shape(n, p, 2);
    Dataset d{NumericMatrix(n, p), std::vector<double>(n), study_true_pairs(1)};
    for (std::size_t j = 0; j < p; ++j) {
        auto rng = detail::column_stream(seed, j);
        detail::fill_bernoulli(d.x.column(j), rng, 0.5);
    }
    for (std::size_t i = 0; i < n; ++i) d.y[i] = d.x(i, 0) * d.x(i, 1);
    return d;
}

/// X_j ~ N(0, sd = 2), Y = X1·X2 + X3·X4.
inline Dataset gen_study2(std::size_t n, std::size_t p, std::uint64_t seed) {
    detail::require_shape(n, p, 4);
    Dataset d{NumericMatrix(n, p), std::vector<double>(n), study_true_pairs(2)};
    for (std::size_t j = 0; j < p; ++j) {
        auto rng = detail::column_stream(seed, j);
        detail::fill_normal(d.x.column(j), rng, 2.0);
    }
    for (std::size_t i = 0; i < n; ++i) d.y[i] = d.x(i, 0) * d.x(i, 1) + d.x(i, 2) * d.x(i, 3);
    return d;
}

/// Binary response with P(Y = 1) = 0.75; X1, X3, X5, X7 depend on Y through
/// kStudy3Theta, each even partner depends on (Y, its odd predecessor), the rest
/// are fair Bernoulli.
inline Dataset gen_study3(std::size_t n, std::size_t p, std::uint64_t seed) {
    detail::require_shape(n, p, 8);
    Dataset d{NumericMatrix(n, p), std::vector<double>(n), study_true_pairs(3)};
    auto yrng = detail::response_stream(seed);
    detail::fill_bernoulli(d.y, yrng, 0.75);

    for (std::size_t m = 0; m < 4; ++m) {
        const std::size_t lead = 2 * m, partner = 2 * m + 1;
        auto lead_rng = detail::column_stream(seed, lead);
        auto partner_rng = detail::column_stream(seed, partner);
        for (std::size_t i = 0; i < n; ++i) {
            const double theta = kStudy3Theta[d.y[i] > 0.5 ? 1 : 0][m];
            const double x_lead = lead_rng.bernoulli(theta) ? 1.0 : 0.0;
            const bool high = theta > 0.5;
            const double prob = x_lead == 0.0 ? (high ? 0.6 : 0.4) : (high ? 0.95 : 0.05);
            d.x(i, lead) = x_lead;
            d.x(i, partner) = partner_rng.bernoulli(prob) ? 1.0 : 0.0;
        }
    }
    for (std::size_t j = 8; j < p; ++j) {
        auto rng = detail::column_stream(seed, j);
        detail::fill_bernoulli(d.x.column(j), rng, 0.5);
    }
    return d;
}

/// Zero-mean normal predictors with cov(X_a, X_b) = 0.1^|a-b|, built as an AR(1)
/// chain; Y = X1 + X3 + X6 + X10 + 3·X1·X3 + 3·X6·X10.
inline Dataset gen_study4(std::size_t n, std::size_t p, std::uint64_t seed) {
    detail::require_shape(n, p, 10);
    Dataset d{NumericMatrix(n, p), std::vector<double>(n), study_true_pairs(4)};
    const double innovation = std::sqrt(1.0 - kStudy4Rho * kStudy4Rho);
    {
        auto rng = detail::column_stream(seed, 0);
        detail::fill_normal(d.x.column(0), rng, 1.0);
    }
    for (std::size_t j = 1; j < p; ++j) {
        auto rng = detail::column_stream(seed, j);
        for (std::size_t i = 0; i < n; ++i) {
            d.x(i, j) = kStudy4Rho * d.x(i, j - 1) + innovation * rng.normal();
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = d.x(i, 0), x3 = d.x(i, 2), x6 = d.x(i, 5), x10 = d.x(i, 9);
        d.y[i] = x1 + x3 + x6 + x10 + 3.0 * x1 * x3 + 3.0 * x6 * x10;
    }
    return d;
}

/// Standard normal predictors; (X1,X2), (X3,X4), (X5,X6) correlated at 0.1, 0.3,
/// 0.5; everything else independent. Y = X1·X2 + X3·X4 + X5·X6.
inline Dataset gen_study5(std::size_t n, std::size_t p, std::uint64_t seed) {
    detail::require_shape(n, p, 6);
    Dataset d{NumericMatrix(n, p), std::vector<double>(n), study_true_pairs(5)};
    for (std::size_t j = 0; j < p; ++j) {
        auto rng = detail::column_stream(seed, j);
        if (j < 6 && j % 2 == 1) {
            const double rho = kStudy5Rho[j / 2];
            const double innovation = std::sqrt(1.0 - rho * rho);
            for (std::size_t i = 0; i < n; ++i) {
                d.x(i, j) = rho * d.x(i, j - 1) + innovation * rng.normal();
            }
        } else {
            detail::fill_normal(d.x.column(j), rng, 1.0);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        d.y[i] = d.x(i, 0) * d.x(i, 1) + d.x(i, 2) * d.x(i, 3) + d.x(i, 4) * d.x(i, 5);
    }
    return d;
}

inline Dataset generate(int study_id, std::size_t n, std::size_t p, std::uint64_t seed) {
    switch (study_id) {
        case 1: return gen_study1(n, p, seed);
        case 2: return gen_study2(n, p, seed);
        case 3: return gen_study3(n, p, seed);
        case 4: return gen_study4(n, p, seed);
        case 5: return gen_study5(n, p, seed);
        default: throw Error(ErrorCode::InvalidConfig, "study id must be 1..5, got " + std::to_string(study_id));
    }
}

// ---------------------------------------------------------------------------
// Replication and summaries
// ---------------------------------------------------------------------------

inline constexpr std::size_t kTopFive = 5;

struct ReplicateReport {
    std::size_t replicate = 0;  ///< 0-based
    std::uint64_t seed = 0;     ///< child seed the replicate was generated from
    std::vector<IndexPair> true_pairs;
    std::vector<std::uint64_t> ranks;  ///< 1-based rank of each true pair
    std::vector<bool> in_top5;
    ScanResult scan;  ///< top-5 pairs of this replicate

    bool all_in_top5() const { return std::all_of(in_top5.begin(), in_top5.end(), [](bool b) { return b; }); }
};

struct RunOptions {
    std::size_t worker_count = 1;
    std::size_t block_size = 256;
};

/// Scans one generated dataset and ranks the given true pairs.
inline ReplicateReport evaluate_replicate(const Dataset& data, std::size_t replicate, std::uint64_t seed,
                                          const RunOptions& options = {}) {
    const Workspace ws = precompute(data.x, data.y);
    ScanConfig config;
    config.top_k = kTopFive;
    config.block_size = options.block_size;
    config.worker_count = options.worker_count;
    auto [result, ranks] = scan_and_rank(ws, config, data.true_pairs);

    ReplicateReport report;
    report.replicate = replicate;
    report.seed = seed;
    report.true_pairs = data.true_pairs;
    report.in_top5.reserve(ranks.size());
    for (std::uint64_t r : ranks) report.in_top5.push_back(r <= kTopFive);
    report.ranks = std::move(ranks);
    report.scan = std::move(result);
    return report;
}

/// Replicate r is generated from child_seed(spec.seed, r).
inline std::vector<ReplicateReport> run_replications(const SimStudySpec& spec, const RunOptions& options = {}) {
    spec.validate();
    std::vector<ReplicateReport> reports;
    reports.reserve(spec.replications);
    for (std::size_t r = 0; r < spec.replications; ++r) {
        const std::uint64_t seed = child_seed(spec.seed, r);
        Dataset data = generate(spec.study_id, spec.n, spec.p, seed);
        data.true_pairs = spec.true_pairs;
        reports.push_back(evaluate_replicate(data, r, seed, options));
    }
    return reports;
}

struct PairSummary {
    IndexPair pair;
    double mean_rank = 0.0;
    std::uint64_t median_rank = 0;  ///< lower median for even counts
    double top5_pct = 0.0;
};

struct RankSummary {
    std::vector<PairSummary> per_pair;
    double all_pairs_top5_pct = 0.0;  ///< replicates with every true pair in the top five
    std::size_t replications = 0;
};

/// Lower median: element (m - 1) / 2 of the sorted values.
inline std::uint64_t lower_median(std::vector<std::uint64_t> values) {
    if (values.empty()) throw Error(ErrorCode::EmptyReport, "median of an empty set");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

inline RankSummary summarize(std::span<const ReplicateReport> reports) {
    if (reports.empty()) throw Error(ErrorCode::EmptyReport, "no replicate reports to summarize");
    std::vector<const ReplicateReport*> ordered;
    for (const ReplicateReport& r : reports) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const ReplicateReport* a, const ReplicateReport* b) { return a->replicate < b->replicate; });

    const std::vector<IndexPair>& pairs = ordered.front()->true_pairs;
    for (const ReplicateReport* r : ordered) {
        if (r->true_pairs != pairs || r->ranks.size() != pairs.size() || r->in_top5.size() != pairs.size()) {
            throw Error(ErrorCode::DimensionMismatch, "replicate reports disagree on the true pair set");
        }
    }

    const double m = static_cast<double>(ordered.size());
    RankSummary summary;
    summary.replications = ordered.size();
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        std::vector<std::uint64_t> ranks;
        double total = 0.0;
        std::size_t hits = 0;
        for (const ReplicateReport* r : ordered) {
            ranks.push_back(r->ranks[t]);
            total += static_cast<double>(r->ranks[t]);
            hits += r->in_top5[t] ? 1 : 0;
        }
        summary.per_pair.push_back({pairs[t], total / m, lower_median(std::move(ranks)),
                                    100.0 * static_cast<double>(hits) / m});
    }
    std::size_t joint = 0;
    for (const ReplicateReport* r : ordered) joint += r->all_in_top5() ? 1 : 0;
    summary.all_pairs_top5_pct = 100.0 * static_cast<double>(joint) / m;
    return summary;
}

/// "X1:X2" style label, 1-based.
inline std::string pair_label(const IndexPair& pair) {
    return "X" + std::to_string(pair.first + 1) + ":X" + std::to_string(pair.second + 1);
}

}  // namespace jcisis::sim
