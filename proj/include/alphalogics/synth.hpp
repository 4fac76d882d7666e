#pragma once

#include <cstdint>

#include "alphalogics/panel.hpp"

namespace alphalogics::synth {

/// Synthetic OHLCV panel whose next-day return carries a planted
/// price-up/volume-down divergence signal:
///   r(t+1) = -strength * (z(ret(t)) - z(dlogvol(t))) + noise
/// with z the cross-sectional z-score. Dates are consecutive weekdays
/// starting at `start`.
struct PlantedOptions {
    std::size_t dates = 200;
    std::size_t instruments = 60;
    std::uint64_t seed = 7;
    double strength = 0.004;
    double noise = 0.02;
    double volume_noise = 0.25;
    const char* start = "2020-01-01";
};

Panel planted_panel(const PlantedOptions& opts = {});

} // namespace alphalogics::synth
