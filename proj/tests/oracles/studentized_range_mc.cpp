// Monte Carlo reference for upper studentized range quantiles. Run once;
// the resulting table is frozen into frozen_values.hpp.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

int main(int argc, char** argv) {
    const long samples = argc > 1 ? std::atol(argv[1]) : 10000000L;
    const double alpha = 0.05;
    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> normal;
    std::printf("// k, df, q(0.95), samples=%ld\n", samples);
    for (int df : {10, 16, 20}) {
        std::chi_squared_distribution<double> chi2(df);
        for (int k = 2; k <= 6; ++k) {
            std::vector<double> q(static_cast<std::size_t>(samples));
            for (auto& v : q) {
                double lo = normal(rng);
                double hi = lo;
                for (int i = 1; i < k; ++i) {
                    const double z = normal(rng);
                    lo = std::min(lo, z);
                    hi = std::max(hi, z);
                }
                v = (hi - lo) / std::sqrt(chi2(rng) / df);
            }
            const auto idx = static_cast<std::size_t>((1.0 - alpha) * static_cast<double>(samples));
            std::nth_element(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(idx), q.end());
            std::printf("    {%d, %d, %.4f},\n", k, df, q[idx]);
            std::fflush(stdout);
        }
    }
    return 0;
}
