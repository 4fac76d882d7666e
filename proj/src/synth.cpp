#include "alphalogics/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "alphalogics/error.hpp"

namespace alphalogics::synth {

namespace {

std::vector<Date> weekdays(Date start, std::size_t n) {
    std::vector<Date> out;
    out.reserve(n);
    for (std::int32_t d = start.days(); out.size() < n; ++d) {
        // 1970-01-01 was a Thursday
        const int dow = ((d % 7) + 7 + 3) % 7;  // 0 = Monday
        if (dow < 5) out.emplace_back(d);
    }
    return out;
}

void zscore_row(std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(x.size()));
    for (double& v : x) v = sd > 0.0 ? (v - mean) / sd : 0.0;
}

} // namespace

Panel planted_panel(const PlantedOptions& o) {
    if (o.dates < 3 || o.instruments < 2) throw PreconditionError("planted panel needs >= 3 dates and >= 2 instruments");
    const std::size_t T = o.dates, N = o.instruments;
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Matrix open(T, N), high(T, N), low(T, N), close(T, N), volume(T, N);
    std::vector<double> ret(N, 0.0), dlv(N, 0.0), logvol(N);
    for (std::size_t i = 0; i < N; ++i) {
        close(0, i) = 20.0 + 80.0 * unif(rng);
        logvol[i] = std::log(1e5) + 2.0 * unif(rng);
        volume(0, i) = std::round(std::exp(logvol[i]));
    }
    for (std::size_t i = 0; i < N; ++i) {
        ret[i] = o.noise * gauss(rng);
        dlv[i] = o.volume_noise * gauss(rng);
    }
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) {
            std::vector<double> zr = ret, zv = dlv;
            zscore_row(zr);
            zscore_row(zv);
            for (std::size_t i = 0; i < N; ++i) {
                const double r = -o.strength * (zr[i] - zv[i]) + o.noise * gauss(rng);
                close(t, i) = close(t - 1, i) * (1.0 + r);
                ret[i] = r;
                dlv[i] = o.volume_noise * gauss(rng);
                logvol[i] += dlv[i] - 0.05 * (logvol[i] - std::log(3e5));
                volume(t, i) = std::round(std::exp(logvol[i]));
            }
        }
        for (std::size_t i = 0; i < N; ++i) {
            const double c = close(t, i);
            const double prev = t > 0 ? close(t - 1, i) : c;
            open(t, i) = prev * (1.0 + 0.005 * gauss(rng));
            const double top = std::max(open(t, i), c), bottom = std::min(open(t, i), c);
            high(t, i) = top * (1.0 + 0.01 * unif(rng));
            low(t, i) = bottom * (1.0 - 0.01 * unif(rng));
        }
    }

    std::vector<std::string> names;
    for (std::size_t i = 0; i < N; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "SYN%03zu", i + 1);
        names.emplace_back(buf);
    }
    return Panel::make(weekdays(Date::parse(o.start), T), std::move(names), std::move(open), std::move(high),
                       std::move(low), std::move(close), std::move(volume));
}

} // namespace alphalogics::synth
