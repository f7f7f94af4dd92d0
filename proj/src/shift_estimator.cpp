#include "dualfocus/shift_estimator.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/fft.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dualfocus {

namespace {

constexpr double kMadToSigma = 1.4826;
constexpr double kQualityCap = 1.0e9;

double median_of(std::vector<double>& v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) {
        const double lower = *std::max_element(v.begin(), mid);
        m = 0.5 * (m + lower);
    }
    return m;
}

} // namespace

double parabolic_vertex(double ym, double y0, double yp) noexcept {
    const double denom = ym - 2.0 * y0 + yp;
    if (denom >= 0.0) return 0.0;
    return std::clamp(0.5 * (ym - yp) / denom, -1.0, 1.0);
}

AutocorrProfile autocorrelate_1d(const Image& img) {
    const int rows = img.height();
    const int n = img.width();
    if (rows < 2) throw ArgumentError("autocorrelation needs at least 2 rows");
    if (n < 128) throw ArgumentError("autocorrelation needs at least 128 columns");
    if (n % 2 != 0) throw ArgumentError("autocorrelation needs an even column count");

    fft::AlignedBuffer<double> centred(static_cast<std::size_t>(rows) * n);
    double raw_power = 0.0;
    for (int y = 0; y < rows; ++y) {
        auto row = img.row(y);
        double m = 0.0;
        for (double v : row) m += v;
        m /= n;
        for (int x = 0; x < n; ++x) {
            centred[static_cast<std::size_t>(y) * n + x] = row[static_cast<std::size_t>(x)] - m;
            raw_power += row[static_cast<std::size_t>(x)] * row[static_cast<std::size_t>(x)];
        }
    }

    const int half = n / 2 + 1;
    fft::AlignedBuffer<fft::Complex> spectra(static_cast<std::size_t>(rows) * half);
    fft::forward_rows(centred, spectra, rows, n);

    // Averaging per-row autocorrelations == one inverse of the summed power spectra.
    fft::AlignedBuffer<fft::Complex> power(static_cast<std::size_t>(half));
    for (int y = 0; y < rows; ++y)
        for (int k = 0; k < half; ++k) power[static_cast<std::size_t>(k)] += std::norm(spectra[static_cast<std::size_t>(y) * half + k]);

    fft::AlignedBuffer<double> acf(static_cast<std::size_t>(n));
    fft::inverse_1d(power, acf, n);
    const double zero_lag = acf[0];
    if (!(zero_lag > 1e-24 * std::max(raw_power, 1e-300) * n))
        throw DegenerateInputError("frame rows have zero variance; no autocorrelation profile");

    AutocorrProfile profile;
    profile.length = n;
    profile.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int lag = i - n / 2;
        profile.values[static_cast<std::size_t>(i)] = acf[static_cast<std::size_t>((lag + n) % n)] / zero_lag;
    }
    return profile;
}

ShiftEstimate find_separation(const AutocorrProfile& profile, LagWindow window, const EstimatorOptions& opts) {
    if (opts.median_window < 3 || opts.median_window % 2 == 0)
        throw ArgumentError("median window must be odd and >= 3");
    const int max_lag = profile.max_lag();
    const int lo = static_cast<int>(std::ceil(window.min_px));
    const int hi = static_cast<int>(std::floor(window.max_px));
    if (!(window.min_px > 0.0) || lo > hi || hi >= max_lag)
        throw ArgumentError("lag window [" + std::to_string(window.min_px) + ", " + std::to_string(window.max_px) +
                            "] is empty or outside the profile");

    // Detrend over [lo-1, hi+1] so the parabola support is always available.
    const int half_med = opts.median_window / 2;
    const int first = lo - 1;
    const int last = hi + 1;
    std::vector<double> detrended(static_cast<std::size_t>(last - first + 1));
    std::vector<double> scratch;
    for (int lag = first; lag <= last; ++lag) {
        scratch.clear();
        for (int j = std::max(0, lag - half_med); j <= std::min(max_lag, lag + half_med); ++j)
            scratch.push_back(profile.at(j));
        detrended[static_cast<std::size_t>(lag - first)] = profile.at(lag) - median_of(scratch);
    }
    auto dt = [&](int lag) { return detrended[static_cast<std::size_t>(lag - first)]; };

    int peak = lo;
    for (int lag = lo + 1; lag <= hi; ++lag)
        if (dt(lag) > dt(peak)) peak = lag;

    ShiftEstimate est;
    est.lag_window = window;

    // Climb to the nearest raw local maximum; the parabola is fitted on the raw profile.
    int top = peak;
    for (int step = 0; step < 3; ++step) {
        if (top + 1 <= hi && profile.at(top + 1) > profile.at(top))
            ++top;
        else if (top - 1 >= lo && profile.at(top - 1) > profile.at(top))
            --top;
        else
            break;
    }
    est.edge_peak = (top <= lo || top >= hi);
    const double offset = est.edge_peak ? 0.0 : parabolic_vertex(profile.at(top - 1), profile.at(top), profile.at(top + 1));
    est.separation_px = top + offset;

    const int qc = std::clamp(top, lo, hi);
    const double height = (dt(qc - 1) + dt(qc) + dt(qc + 1)) / 3.0;
    std::vector<double> background;
    for (int lag = lo; lag <= hi; ++lag)
        if (std::abs(lag - qc) > half_med) background.push_back(profile.at(lag));
    if (background.size() < 5) {
        background.clear();
        for (int lag = lo; lag <= hi; ++lag) background.push_back(profile.at(lag));
    }
    const double centre = median_of(background);
    for (double& v : background) v = std::abs(v - centre);
    const double spread = kMadToSigma * median_of(background);

    if (height <= 0.0)
        est.quality = 0.0;
    else if (spread <= height / kQualityCap)
        est.quality = kQualityCap;
    else
        est.quality = height / spread;

    est.accepted = !est.edge_peak && est.quality >= opts.quality_threshold && est.separation_px >= window.min_px &&
                   est.separation_px <= window.max_px;
    return est;
}

ShiftEstimate estimate_shift(const Image& img, LagWindow window, const EstimatorOptions& opts) {
    return find_separation(autocorrelate_1d(img), window, opts);
}

} // namespace dualfocus
