#pragma once

#include "dualfocus/core.hpp"

#include <vector>

namespace dualfocus {

/// Row-averaged circular autocorrelation along x, normalized to 1 at zero lag.
///
/// values[i] holds lag i - length/2, so lags run over [-length/2, length/2).
struct AutocorrProfile {
    int length = 0;
    std::vector<double> values;

    int min_lag() const noexcept { return -length / 2; }
    int max_lag() const noexcept { return length / 2 - 1; }
    double at(int lag) const { return values.at(static_cast<std::size_t>(lag + length / 2)); }
};

/// Closed interval of candidate separations (px).
struct LagWindow {
    double min_px = 0.0;
    double max_px = 0.0;
    friend bool operator==(const LagWindow&, const LagWindow&) = default;
};

struct ShiftEstimate {
    double separation_px = 0.0;
    /// Detrended peak height over the robust spread of the background lags.
    double quality = 0.0;
    bool accepted = false;
    /// Peak sat on the window boundary; never accepted.
    bool edge_peak = false;
    LagWindow lag_window;
};

struct EstimatorOptions {
    double quality_threshold = 3.0;
    /// Sliding-median background length in lags (odd).
    int median_window = 31;
};

AutocorrProfile autocorrelate_1d(const Image& img);
inline AutocorrProfile autocorrelate_1d(const Frame& frame) { return autocorrelate_1d(frame.pixels); }

/// Locate the first-order peak inside `window`.
///
/// The profile is detrended by a sliding median, the detrended maximum is
/// taken (smaller lag wins ties), then the nearest raw local maximum is
/// refined with a 3-point parabola. Quality is the mean detrended height of
/// the three parabola points over 1.4826 * MAD of the raw background
/// (window lags further than half a median window from the peak).
ShiftEstimate find_separation(const AutocorrProfile& profile, LagWindow window, const EstimatorOptions& opts = {});

ShiftEstimate estimate_shift(const Image& img, LagWindow window, const EstimatorOptions& opts = {});
inline ShiftEstimate estimate_shift(const Frame& frame, LagWindow window, const EstimatorOptions& opts = {}) {
    return estimate_shift(frame.pixels, window, opts);
}

/// Vertex offset in (-1, 1) of the parabola through (-1, ym), (0, y0), (1, yp).
double parabolic_vertex(double ym, double y0, double yp) noexcept;

} // namespace dualfocus
