#include "dualfocus/bench.hpp"
#include "dualfocus/calibration.hpp"
#include "dualfocus/serialization.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace dualfocus;

namespace {

SlideModel target() {
    SlideSpec s;
    s.rows = 1;
    s.cols = 4;
    return oracle::flat_slide(s, 99);
}

CalibrationCurve line(double slope, double intercept) {
    CalibrationCurve c;
    c.slope_px_per_um = slope;
    c.intercept_px = intercept;
    c.valid_lag_window = {c.predict(30.0), c.predict(90.0)};
    return c;
}

} // namespace

TEST_CASE("noiseless pure two-copy calibration recovers the analytic line") {
    DefocusGeometry geom;
    geom.led_half_angle_rad = std::atan(0.275);
    geom.coherence_alpha = 0.0;
    geom.defocus_beta = 0.0;
    CalibrationOptions opts;
    opts.d_values = {30, 45, 60, 75, 90};
    opts.noise_sigma = 0.0;
    const auto curve = run_calibration(target(), geom, OpticsParams{}, opts, 1);
    CHECK(std::abs(curve.slope_px_per_um / geom.separation_slope() - 1.0) <= 0.01);
    CHECK(std::abs(curve.intercept_px) <= 0.5);
    CHECK(curve.sample_points.size() == 5);
}

TEST_CASE("default-noise calibration stays under 0.5 px rms") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto curve = run_calibration(target(), DefocusGeometry{}, OpticsParams{}, CalibrationOptions{}, seed);
        CHECK(curve.rms_residual_px <= 0.5);
    }
}

TEST_CASE("all-equal defocus values fail as rank deficient") {
    CalibrationOptions opts;
    opts.d_values = std::vector<double>(8, 60.0);
    CHECK_THROWS_AS(run_calibration(target(), DefocusGeometry{}, OpticsParams{}, opts, 1), CalibrationFailed);
}

TEST_CASE("calibration values must span the detection range") {
    CalibrationOptions opts;
    opts.d_values = {40, 45, 50, 55, 60};
    CHECK_THROWS_AS(run_calibration(target(), DefocusGeometry{}, OpticsParams{}, opts, 1), ArgumentError);
}

TEST_CASE("calibration target must be flat") {
    SlideSpec s;
    s.rows = 2;
    s.cols = 2;
    CHECK_THROWS_AS(run_calibration(generate_slide(s, 1), DefocusGeometry{}, OpticsParams{}, CalibrationOptions{}, 1),
                    ConfigError);
}

TEST_CASE("too few accepted points fail with per-point diagnostics") {
    std::vector<CalibrationPoint> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({30.0 + 6.0 * i, 1.8 * (30.0 + 6.0 * i), 10.0, i < 7});
    try {
        fit_calibration(pts, DefocusGeometry{}, CalibrationOptions{});
        FAIL("expected CalibrationFailed");
    } catch (const CalibrationFailed& e) {
        CHECK(e.points().size() == 10);
    }
    pts[7].accepted = true;
    CHECK_NOTHROW(fit_calibration(pts, DefocusGeometry{}, CalibrationOptions{}));
}

TEST_CASE("large residuals fail the fit") {
    std::vector<CalibrationPoint> pts;
    for (int i = 0; i < 7; ++i) pts.push_back({30.0 + 10.0 * i, 1.8 * (30.0 + 10.0 * i) + (i % 2 ? 3.0 : -3.0), 10.0, true});
    CHECK_THROWS_AS(fit_calibration(pts, DefocusGeometry{}, CalibrationOptions{}), CalibrationFailed);
}

TEST_CASE("estimated separation increases with defocus on noiseless renders") {
    CalibrationOptions opts;
    opts.noise_sigma = 0.0;
    const auto curve = run_calibration(target(), DefocusGeometry{}, OpticsParams{}, opts, 3);
    auto pts = curve.sample_points;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.d_um < b.d_um; });
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].separation_px > pts[i - 1].separation_px);
}

TEST_CASE("no sample point deviates more than 3 rms from the fit") {
    for (std::uint64_t seed : {4, 5, 6}) {
        const auto curve = run_calibration(target(), DefocusGeometry{}, OpticsParams{}, CalibrationOptions{}, seed);
        for (const auto& p : curve.sample_points)
            if (p.accepted) CHECK(std::abs(curve.predict(p.d_um) - p.separation_px) <= 3.0 * curve.rms_residual_px);
    }
}

TEST_CASE("inversion is exact on the fitted line") {
    const auto c = line(1.8123, 0.37);
    for (double d = 30.0; d <= 90.0; d += 0.7) {
        const auto est = defocus_from_separation(c, c.predict(d));
        CHECK(std::abs(est.d_um - d) <= 1e-9);
        CHECK(est.in_range);
    }
    CHECK(defocus_from_separation(c, c.slope_px_per_um * 60.0 + c.intercept_px).d_um == doctest::Approx(60.0));
}

TEST_CASE("separations outside the window are flagged, not clamped") {
    const auto c = line(1.8, 0.0);
    const auto below = defocus_from_separation(c, 10.0);
    CHECK_FALSE(below.in_range);
    CHECK(below.d_um == doctest::Approx(10.0 / 1.8));
    CHECK_FALSE(defocus_from_separation(c, c.predict(91.0)).in_range);
    CHECK(defocus_from_separation(c, c.predict(90.4)).in_range);
}

TEST_CASE("lag windows follow the fit") {
    const auto c = line(2.0, 1.0);
    CHECK(c.valid_lag_window.min_px == doctest::Approx(61.0));
    CHECK(c.valid_lag_window.max_px == doctest::Approx(181.0));
    CHECK(c.search_window().min_px == doctest::Approx(55.0));
    CHECK(c.search_window().max_px == doctest::Approx(187.0));
}

TEST_CASE("focus from defocus") {
    CHECK(focus_from_defocus(60.0, 60.0) == 0.0);
    CHECK(focus_from_defocus(90.0, 60.0) == -30.0);
    CHECK(focus_from_defocus(60.0, 67.3) == doctest::Approx(7.3));
}

TEST_CASE("round trip through render and estimate recovers defocus within 0.1 um") {
    CalibrationOptions opts;
    opts.noise_sigma = 0.0;
    const auto model = target();
    const auto curve = run_calibration(model, DefocusGeometry{}, OpticsParams{}, opts, 8);
    for (double d : {35.0, 60.0, 85.0}) {
        CaptureRequest r;
        r.tile = {0, 3};
        r.z_stage_um = d;
        r.noise_sigma = 0.0;
        const auto est = estimate_shift(render_dual_led(model, DefocusGeometry{}, OpticsParams{}, r), curve.search_window());
        CHECK(est.accepted);
        CHECK(std::abs(defocus_from_separation(curve, est.separation_px).d_um - d) <= 0.1);
    }
}

TEST_CASE("piecewise model interpolates between breakpoints") {
    std::vector<CalibrationPoint> pts;
    const double ds[] = {30, 45, 60, 75, 90};
    const double ss[] = {55, 80, 110, 135, 165};
    for (int i = 0; i < 5; ++i) pts.push_back({ds[i], ss[i], 10.0, true});
    CalibrationOptions opts;
    opts.fit_model = FitModel::piecewise_linear;
    opts.max_rms_residual_px = 10.0;
    const auto c = fit_calibration(pts, DefocusGeometry{}, opts);
    CHECK(c.predict(45.0) == doctest::Approx(80.0));
    CHECK(c.predict(52.5) == doctest::Approx(95.0));
    CHECK(c.invert(95.0) == doctest::Approx(52.5));
    CHECK(c.rms_residual_px == doctest::Approx(0.0).scale(1.0));
    CHECK(c.predict(95.0) == doctest::Approx(175.0));
}

TEST_CASE("curve JSON round trip and stable id") {
    const auto curve = run_calibration(target(), DefocusGeometry{}, OpticsParams{}, CalibrationOptions{}, 2);
    const json j = curve;
    CHECK(j.at("units").at("slope_px_per_um") == "px/um");
    const auto back = json::parse(j.dump()).get<CalibrationCurve>();
    CHECK(back == curve);
    CHECK(back.id() == curve.id());
    CHECK(curve.id().size() == 16);
    auto other = curve;
    other.intercept_px += 1e-6;
    CHECK(other.id() != curve.id());
}
