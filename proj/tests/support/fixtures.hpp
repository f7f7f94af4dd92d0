#pragma once

#include "dualfocus/bench.hpp"
#include "dualfocus/calibration.hpp"

namespace fixture {

/// Default-geometry calibration on the standard flat target, computed once.
inline const dualfocus::CalibrationCurve& default_curve() {
    static const dualfocus::CalibrationCurve curve = [] {
        const auto target = dualfocus::calibration_target(dualfocus::SlideSpec{}, 11);
        return dualfocus::run_calibration(target, dualfocus::DefocusGeometry{}, dualfocus::OpticsParams{},
                                          dualfocus::CalibrationOptions{}, 12);
    }();
    return curve;
}

/// Noiseless counterpart of default_curve().
inline const dualfocus::CalibrationCurve& noiseless_curve() {
    static const dualfocus::CalibrationCurve curve = [] {
        dualfocus::CalibrationOptions opts;
        opts.noise_sigma = 0.0;
        const auto target = dualfocus::calibration_target(dualfocus::SlideSpec{}, 11);
        return dualfocus::run_calibration(target, dualfocus::DefocusGeometry{}, dualfocus::OpticsParams{}, opts, 12);
    }();
    return curve;
}

} // namespace fixture
