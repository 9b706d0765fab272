#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "jcisis/scanner.hpp"
#include "test_support.hpp"

using namespace jcisis;
using jcisis::testing::naive_all_pairs;
using jcisis::testing::random_matrix;
using jcisis::testing::random_vector;
using jcisis::testing::relative_error;

namespace {

struct Instance {
    NumericMatrix x;
    std::vector<double> y;
};

Instance make_instance(std::size_t n, std::size_t p, std::uint64_t seed, bool binary = false) {
    Instance in{random_matrix(n, p, seed, binary), random_vector(n, seed + 1000, binary)};
    jcisis::testing::ensure_variation(in.x, in.y);
    return in;
}

ScanConfig top(std::size_t k, std::size_t workers = 1, std::size_t block = 256) {
    ScanConfig c;
    c.top_k = k;
    c.worker_count = workers;
    c.block_size = block;
    return c;
}

void expect_matches_oracle(const std::vector<PairStatistic>& got, const std::vector<PairStatistic>& oracle) {
    ASSERT_LE(got.size(), oracle.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].j1, oracle[i].j1) << "position " << i;
        EXPECT_EQ(got[i].j2, oracle[i].j2) << "position " << i;
        EXPECT_LE(relative_error(got[i].r_hat, oracle[i].r_hat), 1e-12);
    }
}

}  // namespace

TEST(PairCount, Values) {
    EXPECT_EQ(pair_count(3), 3u);
    EXPECT_EQ(pair_count(2), 1u);
    EXPECT_EQ(pair_count(1000), 499500u);
    EXPECT_EQ(pair_count(500), 124750u);
    EXPECT_EQ(pair_count(234754), 27554602881ULL);
    try {
        pair_count(1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewColumns);
    }
}

TEST(CanonicalIndex, KnownValues) {
    EXPECT_EQ(canonical_pair_index(0, 1, 4), 0u);
    EXPECT_EQ(canonical_pair_index(0, 3, 4), 2u);
    EXPECT_EQ(canonical_pair_index(1, 2, 4), 3u);
    EXPECT_EQ(canonical_pair_index(2, 3, 4), 5u);
    EXPECT_EQ(canonical_pair_index(234752, 234753, 234754), 27554602880ULL);
    EXPECT_EQ(pair_from_index(27554602880ULL, 234754), (std::pair<std::uint64_t, std::uint64_t>{234752, 234753}));
}

TEST(CanonicalIndex, ExhaustiveRoundTrip) {
    // Oracle: a running counter over the nested loop.
    for (std::uint64_t p : {2u, 3u, 7u, 100u}) {
        std::uint64_t k = 0;
        for (std::uint64_t a = 0; a < p; ++a) {
            for (std::uint64_t b = a + 1; b < p; ++b, ++k) {
                ASSERT_EQ(canonical_pair_index(a, b, p), k);
                ASSERT_EQ(pair_from_index(k, p), (std::pair<std::uint64_t, std::uint64_t>{a, b}));
            }
        }
        EXPECT_EQ(k, pair_count(p));
    }
}

TEST(CanonicalIndex, LargePRowBoundaries) {
    const std::uint64_t p = 234754;
    for (std::uint64_t a : {0ULL, 1ULL, 1000ULL, 117376ULL, 234751ULL, 234752ULL}) {
        for (std::uint64_t b : {a + 1, (a + p) / 2 + 1, p - 1}) {
            if (b <= a || b >= p) continue;
            const std::uint64_t k = canonical_pair_index(a, b, p);
            EXPECT_EQ(pair_from_index(k, p), (std::pair<std::uint64_t, std::uint64_t>{a, b}));
        }
    }
}

TEST(CanonicalIndex, Errors) {
    for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 1}, {2, 1}, {0, 4}}) {
        try {
            canonical_pair_index(a, b, 4);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidPair);
        }
    }
    EXPECT_THROW(pair_from_index(6, 4), Error);
}

TEST(Precompute, CentersEachColumnOnce) {
    const Instance in = make_instance(20, 3, 1);
    detail::centering_pass_counter() = 0;
    const Workspace ws = precompute(in.x, in.y);
    EXPECT_EQ(detail::centering_pass_counter().load(), 4u);
    scan(ws, top(3));
    EXPECT_EQ(detail::centering_pass_counter().load(), 4u);
    EXPECT_EQ(ws.predictors(), 3u);
    EXPECT_EQ(ws.samples(), 20u);
    EXPECT_EQ(ws.response().index, kResponseIndex);
}

TEST(Precompute, NamesConstantColumn) {
    Instance in = make_instance(30, 12, 2);
    for (double& v : in.x.column(7)) v = 2.0;
    try {
        precompute(in.x, in.y);
        FAIL();
    } catch (const ZeroVarianceColumn& e) {
        EXPECT_EQ(e.index(), 7u);
        EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
    }
    std::vector<double> flat(30, 1.0);
    Instance ok = make_instance(30, 4, 3);
    try {
        precompute(ok.x, flat);
        FAIL();
    } catch (const ZeroVarianceColumn& e) {
        EXPECT_TRUE(e.is_response());
    }
}

TEST(Precompute, Errors) {
    const Instance in = make_instance(20, 3, 4);
    try {
        precompute(in.x, std::vector<double>(19, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
    NumericMatrix tiny(2, 3);
    tiny(0, 0) = tiny(0, 1) = tiny(0, 2) = 1;
    try {
        precompute(tiny, std::vector<double>{0, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateSample);
    }
    try {
        precompute(random_matrix(10, 1, 5), random_vector(10, 6));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewColumns);
    }
}

TEST(Precompute, HoistedScoresEqualPerPairRecomputation) {
    const Instance in = make_instance(60, 100, 9);
    const Workspace ws = precompute(in.x, in.y);
    ScanConfig config = top(pair_count(100));
    config.block_size = 16;
    const ScanResult result = scan(ws, config);
    ASSERT_EQ(result.top_pairs.size(), 4950u);
    for (const PairStatistic& s : result.top_pairs) {
        const PairStatistic fresh =
            r_hat(center(in.x.column(s.j1), s.j1), center(in.x.column(s.j2), s.j2), center(in.y, kResponseIndex));
        ASSERT_EQ(s.r_hat, fresh.r_hat);
        ASSERT_EQ(s.tau_hat, fresh.tau_hat);
    }
}

TEST(Scan, TopTenMatchesNaiveReference) {
    const Instance in = make_instance(50, 30, 12);
    const ScanResult result = scan(precompute(in.x, in.y), top(10));
    ASSERT_EQ(result.top_pairs.size(), 10u);
    expect_matches_oracle(result.top_pairs, naive_all_pairs(in.x, in.y));
    EXPECT_EQ(result.pairs_scanned, 435u);
}

TEST(Scan, OracleEquivalenceOnRandomInstances) {
    Xoshiro256 rng(31337);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform() * 98);
        const std::size_t p = 2 + static_cast<std::size_t>(rng.uniform() * 49);
        const bool binary = trial % 2 == 1;
        const Instance in = make_instance(n, p, 500 + trial, binary);
        const auto oracle = naive_all_pairs(in.x, in.y);
        const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(oracle.size()));
        const ScanResult result = scan(precompute(in.x, in.y), top(k, 1 + trial % 3, 1 + trial % 9));
        ASSERT_EQ(result.top_pairs.size(), k);
        expect_matches_oracle(result.top_pairs, oracle);
    }
}

TEST(Scan, DeterministicAcrossWorkersAndBlocks) {
    const Instance in = make_instance(80, 70, 21);
    const Workspace ws = precompute(in.x, in.y);
    ScanConfig base = top(25);
    base.threshold = 0.2;
    const ScanResult reference = scan(ws, base);
    for (std::size_t block : {1u, 7u, 64u, 256u}) {
        for (std::size_t workers : {1u, 2u, 4u, 8u, 9u}) {
            ScanConfig c = base;
            c.block_size = block;
            c.worker_count = workers;
            EXPECT_TRUE(same_outcome(scan(ws, c), reference)) << "block " << block << " workers " << workers;
        }
    }
}

TEST(Scan, ResultInvariants) {
    const Instance in = make_instance(40, 25, 44, true);
    ScanConfig c = top(17);
    c.threshold = 0.3;
    const ScanResult r = scan(precompute(in.x, in.y), c);
    EXPECT_LE(r.top_pairs.size(), 17u);
    EXPECT_TRUE(std::is_sorted(r.top_pairs.begin(), r.top_pairs.end(), ranks_before));
    EXPECT_TRUE(std::is_sorted(r.selected.begin(), r.selected.end(), ranks_before));
    for (const PairStatistic& s : r.selected) EXPECT_GT(s.r_hat, 0.3);
    for (const PairStatistic& s : r.top_pairs) {
        EXPECT_LT(s.j1, s.j2);
        EXPECT_GE(s.r_hat, 0.0);
    }
    EXPECT_EQ(r.pairs_scanned, pair_count(25));
    EXPECT_GE(r.elapsed_seconds, 0.0);
}

TEST(Scan, TiesBreakLexicographically) {
    // Four identical predictors: every pair scores the same.
    NumericMatrix x(6, 4);
    const std::vector<double> col{0, 1, 1, 0, 1, 0};
    for (std::size_t j = 0; j < 4; ++j) std::copy(col.begin(), col.end(), x.column(j).begin());
    const std::vector<double> y{1, 0, 1, 0, 0, 1};
    const ScanResult r = scan(precompute(x, y), top(6));
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (const auto& s : r.top_pairs) order.emplace_back(s.j1, s.j2);
    EXPECT_EQ(order, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
}

TEST(Scan, ShardCompleteness) {
    const Instance in = make_instance(50, 45, 77);
    const Workspace ws = precompute(in.x, in.y);
    ScanConfig whole = top(30);
    whole.threshold = 0.25;
    const ScanResult reference = scan(ws, whole);
    const std::uint64_t total = pair_count(45);

    Xoshiro256 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<ScanResult> shards;
        std::uint64_t start = 0;
        while (start < total) {
            const std::uint64_t len = 1 + static_cast<std::uint64_t>(rng.uniform() * 300);
            ScanConfig c = whole;
            c.pair_range = PairRange{start, std::min(total, start + len)};
            c.block_size = 1 + trial * 5;
            shards.push_back(scan(ws, c));
            EXPECT_EQ(shards.back().pairs_scanned, c.pair_range->end - c.pair_range->start);
            start = c.pair_range->end;
        }
        EXPECT_TRUE(same_outcome(merge_results(shards, whole.top_k), reference)) << "trial " << trial;
    }
}

TEST(Scan, PairRangeRestrictsToCanonicalIndices) {
    const Instance in = make_instance(30, 20, 90);
    const Workspace ws = precompute(in.x, in.y);
    ScanConfig c = top(1000);
    c.pair_range = PairRange{37, 101};
    c.block_size = 3;
    const ScanResult r = scan(ws, c);
    ASSERT_EQ(r.top_pairs.size(), 64u);
    for (const auto& s : r.top_pairs) {
        const std::uint64_t k = canonical_pair_index(s.j1, s.j2, 20);
        EXPECT_GE(k, 37u);
        EXPECT_LT(k, 101u);
    }
}

TEST(Scan, TopKMonotonicity) {
    const Instance in = make_instance(70, 40, 3);
    const Workspace ws = precompute(in.x, in.y);
    std::vector<PairStatistic> previous;
    for (std::size_t k : {1u, 2u, 5u, 13u, 50u, 400u, 780u, 5000u}) {
        const ScanResult r = scan(ws, top(k));
        EXPECT_EQ(r.top_pairs.size(), std::min<std::size_t>(k, 780));
        ASSERT_GE(r.top_pairs.size(), previous.size());
        EXPECT_TRUE(std::equal(previous.begin(), previous.end(), r.top_pairs.begin()));
        previous = r.top_pairs;
    }
}

TEST(Scan, ConfigErrors) {
    const Instance in = make_instance(20, 6, 5);
    const Workspace ws = precompute(in.x, in.y);
    auto code_of = [&](const ScanConfig& c) {
        try {
            scan(ws, c);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;  // sentinel: no error
    };
    EXPECT_EQ(code_of(ScanConfig{}), ErrorCode::InvalidConfig);
    ScanConfig c = top(3);
    c.pair_range = PairRange{4, 4};
    EXPECT_EQ(code_of(c), ErrorCode::EmptyRange);
    c.pair_range = PairRange{0, 16};
    EXPECT_EQ(code_of(c), ErrorCode::InvalidConfig);
    c = top(0);
    EXPECT_EQ(code_of(c), ErrorCode::InvalidConfig);
    c = top(2, 0);
    EXPECT_EQ(code_of(c), ErrorCode::InvalidConfig);
    c = top(2, 1, 0);
    EXPECT_EQ(code_of(c), ErrorCode::InvalidConfig);
    c = ScanConfig{};
    c.threshold = -1.0;
    EXPECT_EQ(code_of(c), ErrorCode::InvalidConfig);
}

TEST(Threshold, FilterOracle) {
    // Small n gives a wide spread of scores, many above 0.74.
    const Instance in = make_instance(8, 40, 123, true);
    const auto oracle = naive_all_pairs(in.x, in.y);
    ScanConfig c;
    c.threshold = 0.74;
    c.block_size = 5;
    const ScanResult r = scan(precompute(in.x, in.y), c);
    std::vector<PairStatistic> expected;
    for (const auto& s : oracle) {
        if (s.r_hat > 0.74) expected.push_back(s);
    }
    ASSERT_FALSE(expected.empty());
    ASSERT_LT(expected.size(), oracle.size());
    expect_matches_oracle(r.selected, expected);
    EXPECT_EQ(r.selected.size(), expected.size());
    EXPECT_TRUE(r.top_pairs.empty());
}

TEST(Threshold, ExtremesAndStrictness) {
    const Instance in = make_instance(50, 20, 8);
    const Workspace ws = precompute(in.x, in.y);
    const ScanResult all = scan(ws, top(pair_count(20)));
    const auto zero = select_by_threshold(all.top_pairs, 0.0);
    EXPECT_EQ(zero.size(), pair_count(20));
    EXPECT_EQ(zero, all.top_pairs);
    EXPECT_TRUE(select_by_threshold(all.top_pairs, all.top_pairs.front().r_hat * 2).empty());
    // Strict inequality: the maximum itself is excluded.
    EXPECT_TRUE(select_by_threshold(all.top_pairs, all.top_pairs.front().r_hat).empty());
    EXPECT_EQ(select_by_threshold(all.top_pairs, all.top_pairs[3].r_hat).size(), 3u);
    EXPECT_THROW(select_by_threshold(all.top_pairs, -0.5), Error);
}

TEST(ScanAndRank, RanksAgreeWithOrdering) {
    const Instance in = make_instance(40, 30, 61, true);
    const Workspace ws = precompute(in.x, in.y);
    const ScanResult full = scan(ws, top(pair_count(30)));
    std::vector<std::pair<std::size_t, std::size_t>> targets;
    for (std::size_t pos : {0u, 1u, 4u, 17u, 200u, 434u}) {
        targets.emplace_back(full.top_pairs[pos].j2, full.top_pairs[pos].j1);  // reversed on purpose
    }
    ScanConfig c = top(5, 3, 4);
    const auto [result, ranks] = scan_and_rank(ws, c, targets);
    EXPECT_EQ(ranks, (std::vector<std::uint64_t>{1, 2, 5, 18, 201, 435}));
    EXPECT_EQ(result.top_pairs, std::vector<PairStatistic>(full.top_pairs.begin(), full.top_pairs.begin() + 5));
}

TEST(OrderedStream, CanonicalOrderAndValues) {
    const Instance in = make_instance(25, 15, 66);
    const Workspace ws = precompute(in.x, in.y);
    std::vector<PairStatistic> sequential, parallel;
    for_each_pair_ordered(ws, std::nullopt, 1, [&](const PairStatistic& s) { sequential.push_back(s); });
    for_each_pair_ordered(ws, std::nullopt, 3, [&](const PairStatistic& s) { parallel.push_back(s); }, 7);
    ASSERT_EQ(sequential.size(), pair_count(15));
    EXPECT_EQ(sequential, parallel);
    for (std::size_t k = 0; k < sequential.size(); ++k) {
        EXPECT_EQ(canonical_pair_index(sequential[k].j1, sequential[k].j2, 15), k);
    }
    const ScanResult scanned = scan(ws, top(pair_count(15)));
    std::vector<PairStatistic> sorted = sequential;
    std::sort(sorted.begin(), sorted.end(), ranks_before);
    EXPECT_EQ(sorted, scanned.top_pairs);

    std::vector<PairStatistic> part;
    for_each_pair_ordered(ws, PairRange{10, 20}, 2, [&](const PairStatistic& s) { part.push_back(s); }, 3);
    EXPECT_EQ(part, std::vector<PairStatistic>(sequential.begin() + 10, sequential.begin() + 20));
}
