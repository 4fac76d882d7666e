#pragma once

// Panel builders shared by the test binaries.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "alphalogics/panel.hpp"

namespace testing_support {

using alphalogics::Date;
using alphalogics::Matrix;
using alphalogics::Panel;

inline std::vector<Date> consecutive_dates(std::size_t n, const char* start = "2020-01-01") {
    std::vector<Date> d;
    const Date s = Date::parse(start);
    for (std::size_t i = 0; i < n; ++i) d.emplace_back(s.days() + static_cast<std::int32_t>(i));
    return d;
}

inline std::vector<std::string> tickers(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "S%03zu", i);
        out.emplace_back(buf);
    }
    return out;
}

/// Panel whose OHLC all equal `close` (rows = dates) and volume = 1000.
inline Panel panel_from_closes(const std::vector<std::vector<double>>& close_rows) {
    const std::size_t t = close_rows.size(), n = close_rows.front().size();
    Matrix c(t, n);
    for (std::size_t r = 0; r < t; ++r)
        for (std::size_t j = 0; j < n; ++j) c(r, j) = close_rows[r][j];
    Matrix v(t, n, 1000.0);
    return Panel::make(consecutive_dates(t), tickers(n), c, c, c, c, v);
}

/// Random-walk OHLCV panel. `missing_rate` blanks whole (date, instrument) cells.
inline Panel random_panel(std::mt19937_64& rng, std::size_t t, std::size_t n,
                          double missing_rate = 0.0) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix o(t, n), h(t, n), l(t, n), c(t, n), v(t, n);
    for (std::size_t j = 0; j < n; ++j) {
        double px = 20.0 + 80.0 * u(rng);
        double vol = 1e5 * (0.5 + u(rng));
        for (std::size_t r = 0; r < t; ++r) {
            const double open = px * (1.0 + 0.01 * z(rng));
            px *= std::exp(0.02 * z(rng));
            vol *= std::exp(0.2 * z(rng));
            const double hi = std::max(open, px) * (1.0 + 0.01 * u(rng));
            const double lo = std::min(open, px) * (1.0 - 0.01 * u(rng));
            // occasional exact ties exercise ranking conventions
            const bool tie = u(rng) < 0.05;
            o(r, j) = open;
            h(r, j) = hi;
            l(r, j) = lo;
            c(r, j) = tie ? 50.0 : px;
            v(r, j) = tie ? 1e5 : std::floor(vol);
        }
    }
    for (std::size_t r = 0; r < t; ++r)
        for (std::size_t j = 0; j < n; ++j)
            if (r > 0 && u(rng) < missing_rate) {
                o(r, j) = h(r, j) = l(r, j) = c(r, j) = v(r, j) = alphalogics::kMissing;
            }
    return Panel::make(consecutive_dates(t), tickers(n), o, h, l, c, v);
}

} // namespace testing_support
