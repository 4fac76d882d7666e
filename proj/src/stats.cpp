#include "alphalogics/stats.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace alphalogics::stats {

std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        // positions i..j (0-based) share rank mean((i+1)..(j+1))
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double quantile(std::span<const double> x, double q) {
    if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return s[lo];
    return s[lo] + frac * (s[hi] - s[lo]);
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n < 2 || b.size() != n) return std::numeric_limits<double>::quiet_NaN();
    const MeanVar ma = mean_pvar(a), mb = mean_pvar(b);
    if (!(ma.var > 0) || !(mb.var > 0)) return std::numeric_limits<double>::quiet_NaN();
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (a[i] - ma.mean) * (b[i] - mb.mean);
    cov /= static_cast<double>(n);
    const double r = cov / std::sqrt(ma.var * mb.var);
    return std::clamp(r, -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

} // namespace alphalogics::stats
