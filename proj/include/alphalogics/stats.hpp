#pragma once

// Small numeric kernels shared by the evaluator, the score model and the
// backtest engine. All inputs are assumed free of missing values.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace alphalogics::stats {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // population variance
};

/// Two-pass population mean/variance, summing in input order.
inline MeanVar mean_pvar(std::span<const double> x) {
    MeanVar mv;
    if (x.empty()) return mv;
    double s = 0.0;
    for (double v : x) s += v;
    mv.mean = s / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) {
        const double d = v - mv.mean;
        ss += d * d;
    }
    mv.var = ss / static_cast<double>(x.size());
    return mv;
}

/// True when a population std is zero up to rounding relative to the mean,
/// e.g. for a constant series whose mean picked up summation error.
inline bool negligible_spread(double mean, double sd) {
    return !(sd > 1e-12 * std::fabs(mean)) || sd == 0.0;
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

/// Quantile with linear interpolation between order statistics, q in [0, 1].
/// `x` is copied and sorted.
double quantile(std::span<const double> x, double q);

/// Pearson correlation; NaN when either side has zero variance or size < 2.
double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation (Pearson of average ranks).
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace alphalogics::stats
