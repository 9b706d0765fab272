// Scores every pair of a small synthetic data set and prints the ten best.

#include <cstdio>
#include <vector>

#include "jcisis/jcisis.hpp"

int main() {
    const std::size_t n = 300, p = 200;
    jcisis::Xoshiro256 rng(17);
    jcisis::NumericMatrix x(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) x(i, j) = rng.normal();
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x(i, 4) * x(i, 9) + 0.5 * rng.normal();

    const jcisis::Workspace ws = jcisis::precompute(x, y);
    jcisis::ScanConfig config;
    config.top_k = 10;
    config.threshold = 0.3;
    const jcisis::ScanResult result = jcisis::scan(ws, config);

    std::printf("%llu pairs in %.3f s\n", static_cast<unsigned long long>(result.pairs_scanned),
                result.elapsed_seconds);
    for (const auto& s : result.top_pairs) {
        std::printf("X%zu * X%zu  r_hat = %.4f\n", s.j1 + 1, s.j2 + 1, s.r_hat);
    }
    std::printf("%zu pairs above 0.3\n", result.selected.size());
    return 0;
}
