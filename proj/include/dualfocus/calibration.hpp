#pragma once

#include "dualfocus/core.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/optics.hpp"
#include "dualfocus/shift_estimator.hpp"
#include "dualfocus/slide.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dualfocus {

enum class FitModel { linear, piecewise_linear };

std::string_view to_string(FitModel m);
FitModel fit_model_from_string(std::string_view s);

struct CalibrationPoint {
    double d_um = 0.0;
    double separation_px = 0.0;
    double quality = 0.0;
    bool accepted = false;
    friend bool operator==(const CalibrationPoint&, const CalibrationPoint&) = default;
};

struct Breakpoint {
    double d_um = 0.0;
    double separation_px = 0.0;
    friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// Fitted defocus -> separation map plus the range it is trusted over.
struct CalibrationCurve {
    double slope_px_per_um = 0.0;
    double intercept_px = 0.0;
    double valid_d_min_um = 30.0;
    double valid_d_max_um = 90.0;
    LagWindow valid_lag_window;
    double rms_residual_px = 0.0;
    std::vector<CalibrationPoint> sample_points;
    FitModel fit_model = FitModel::linear;
    /// Mean accepted separation per distinct d; used by the piecewise model.
    std::vector<Breakpoint> breakpoints;
    /// Slack (um) on valid_d_range before a survey measurement is flagged out of range.
    double range_tolerance_um = 0.5;
    /// Extra defocus (um) each side of valid_d_range searched for peaks.
    double search_margin_um = 3.0;

    /// Separation predicted for defocus d (px).
    double predict(double d_um) const;
    /// Inverse of predict().
    double invert(double separation_px) const;
    /// Lag window used when surveying: valid range padded by search_margin_um.
    LagWindow search_window() const;
    /// Stable content hash (hex) used to tie focus maps to their calibration.
    std::string id() const;

    friend bool operator==(const CalibrationCurve&, const CalibrationCurve&) = default;
};

struct CalibrationOptions {
    std::vector<double> d_values{30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90};
    double noise_sigma = 0.01;
    EstimatorOptions estimator;
    /// Peak search window while calibrating; {0, 0} means [16, tile_px/2 - 16].
    LagWindow search_window{0.0, 0.0};
    FitModel fit_model = FitModel::linear;
    double min_accept_fraction = 0.8;
    double max_rms_residual_px = 1.0;
    double range_tolerance_um = 0.5;
    double search_margin_um = 3.0;
};

/// Calibration could not produce a usable curve; carries per-point diagnostics.
class CalibrationFailed : public Error {
public:
    CalibrationFailed(const std::string& what, std::vector<CalibrationPoint> points)
        : Error(what), points_(std::move(points)) {}
    const std::vector<CalibrationPoint>& points() const noexcept { return points_; }

private:
    std::vector<CalibrationPoint> points_;
};

/// Fit a curve to already measured points (accepted ones only).
CalibrationCurve fit_calibration(std::vector<CalibrationPoint> points, const DefocusGeometry& geom,
                                 const CalibrationOptions& opts);

/// Render a static dual-LED frame per d on a flat target, estimate, and fit.
CalibrationCurve run_calibration(const SlideModel& flat_target, const DefocusGeometry& geom,
                                 const OpticsParams& optics, const CalibrationOptions& opts, std::uint64_t seed);

struct DefocusEstimate {
    double d_um = 0.0;
    /// False when d falls outside valid_d_range (+- range_tolerance_um). d is never clamped.
    bool in_range = false;
};

DefocusEstimate defocus_from_separation(const CalibrationCurve& curve, double separation_px);

/// Stage position of best focus, given the stage sits on the positive-defocus side.
inline double focus_from_defocus(double d_est_um, double z_stage_um) { return z_stage_um - d_est_um; }

} // namespace dualfocus
