// Runs a short replication of one simulation design and prints the rank summary.

#include <cstdio>
#include <cstdlib>

#include "jcisis/simgen.hpp"

int main(int argc, char** argv) {
    const int study = argc > 1 ? std::atoi(argv[1]) : 2;
    const std::size_t reps = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 10;

    const auto spec = jcisis::sim::make_study_spec(study, 2024, reps);
    const auto reports = jcisis::sim::run_replications(spec);
    const auto summary = jcisis::sim::summarize(reports);

    std::printf("study %d, n=%zu, p=%zu, %zu replicates\n", study, spec.n, spec.p, summary.replications);
    for (const auto& row : summary.per_pair) {
        std::printf("%-8s mean rank %8.2f  median %4llu  top-5 %5.1f%%\n", jcisis::sim::pair_label(row.pair).c_str(),
                    row.mean_rank, static_cast<unsigned long long>(row.median_rank), row.top5_pct);
    }
    std::printf("all pairs in top 5: %.1f%%\n", summary.all_pairs_top5_pct);
    return 0;
}
