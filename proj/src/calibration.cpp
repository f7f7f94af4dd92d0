#include "dualfocus/calibration.hpp"
#include "dualfocus/seed.hpp"
#include "dualfocus/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace dualfocus {

std::string_view to_string(FitModel m) { return m == FitModel::linear ? "linear" : "piecewise_linear"; }

FitModel fit_model_from_string(std::string_view s) {
    if (s == "linear") return FitModel::linear;
    if (s == "piecewise_linear") return FitModel::piecewise_linear;
    throw ConfigError("unknown fit model '" + std::string(s) + "'");
}

double CalibrationCurve::predict(double d_um) const {
    if (fit_model == FitModel::linear || breakpoints.size() < 2) return slope_px_per_um * d_um + intercept_px;
    // Locate the segment; the end segments extrapolate.
    std::size_t i = 1;
    while (i + 1 < breakpoints.size() && d_um > breakpoints[i].d_um) ++i;
    const auto& a = breakpoints[i - 1];
    const auto& b = breakpoints[i];
    return a.separation_px + (d_um - a.d_um) * (b.separation_px - a.separation_px) / (b.d_um - a.d_um);
}

double CalibrationCurve::invert(double separation_px) const {
    if (fit_model == FitModel::linear || breakpoints.size() < 2) return (separation_px - intercept_px) / slope_px_per_um;
    std::size_t i = 1;
    while (i + 1 < breakpoints.size() && separation_px > breakpoints[i].separation_px) ++i;
    const auto& a = breakpoints[i - 1];
    const auto& b = breakpoints[i];
    return a.d_um + (separation_px - a.separation_px) * (b.d_um - a.d_um) / (b.separation_px - a.separation_px);
}

LagWindow CalibrationCurve::search_window() const {
    return {predict(valid_d_min_um - search_margin_um), predict(valid_d_max_um + search_margin_um)};
}

std::string CalibrationCurve::id() const {
    // FNV-1a over the canonical JSON form.
    const std::string text = json(*this).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CalibrationCurve fit_calibration(std::vector<CalibrationPoint> points, const DefocusGeometry& geom,
                                 const CalibrationOptions& opts) {
    std::vector<double> distinct;
    for (const auto& p : points) distinct.push_back(p.d_um);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 5)
        throw CalibrationFailed("calibration needs at least 5 distinct defocus values (rank-deficient fit)", points);

    std::size_t n_acc = 0;
    double sx = 0, sy = 0;
    for (const auto& p : points)
        if (p.accepted) {
            ++n_acc;
            sx += p.d_um;
            sy += p.separation_px;
        }
    const double frac = static_cast<double>(n_acc) / static_cast<double>(points.size());
    if (frac < opts.min_accept_fraction) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "only %zu of %zu calibration points accepted", n_acc, points.size());
        throw CalibrationFailed(msg, points);
    }
    const double mx = sx / n_acc;
    const double my = sy / n_acc;
    double sxx = 0, sxy = 0;
    for (const auto& p : points)
        if (p.accepted) {
            sxx += (p.d_um - mx) * (p.d_um - mx);
            sxy += (p.d_um - mx) * (p.separation_px - my);
        }
    if (!(sxx > 0.0)) throw CalibrationFailed("accepted calibration points share one defocus value", points);

    CalibrationCurve curve;
    curve.slope_px_per_um = sxy / sxx;
    curve.intercept_px = my - curve.slope_px_per_um * mx;
    if (!(curve.slope_px_per_um > 0.0)) throw CalibrationFailed("fitted slope is not positive", points);
    curve.valid_d_min_um = geom.detection_z_min_um;
    curve.valid_d_max_um = geom.detection_z_max_um;
    curve.fit_model = opts.fit_model;
    curve.range_tolerance_um = opts.range_tolerance_um;
    curve.search_margin_um = opts.search_margin_um;

    std::map<double, std::pair<double, int>> per_d;
    for (const auto& p : points)
        if (p.accepted) {
            auto& acc = per_d[p.d_um];
            acc.first += p.separation_px;
            acc.second += 1;
        }
    for (const auto& [d, acc] : per_d) curve.breakpoints.push_back({d, acc.first / acc.second});
    if (curve.fit_model == FitModel::piecewise_linear) {
        if (curve.breakpoints.size() < 2) throw CalibrationFailed("piecewise fit needs two breakpoints", points);
        for (std::size_t i = 1; i < curve.breakpoints.size(); ++i)
            if (!(curve.breakpoints[i].separation_px > curve.breakpoints[i - 1].separation_px))
                throw CalibrationFailed("measured separations are not strictly increasing", points);
    }

    double ss = 0.0;
    for (const auto& p : points)
        if (p.accepted) {
            const double r = p.separation_px - curve.predict(p.d_um);
            ss += r * r;
        }
    curve.rms_residual_px = std::sqrt(ss / n_acc);
    curve.sample_points = std::move(points);
    if (curve.rms_residual_px > opts.max_rms_residual_px) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "calibration rms residual %.3f px exceeds %.3f px", curve.rms_residual_px,
                      opts.max_rms_residual_px);
        throw CalibrationFailed(msg, curve.sample_points);
    }
    curve.valid_lag_window = {curve.predict(curve.valid_d_min_um), curve.predict(curve.valid_d_max_um)};
    return curve;
}

CalibrationCurve run_calibration(const SlideModel& flat_target, const DefocusGeometry& geom,
                                 const OpticsParams& optics, const CalibrationOptions& opts, std::uint64_t seed) {
    geom.validate();
    optics.validate();
    if (flat_target.max_abs_height() != 0.0) throw ConfigError("calibration target must be flat (topo_amplitude = 0)");
    std::vector<double> distinct = opts.d_values;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 5)
        throw CalibrationFailed("calibration needs at least 5 distinct defocus values (rank-deficient fit)", {});

    const auto [dmin, dmax] = std::minmax_element(opts.d_values.begin(), opts.d_values.end());
    if (*dmin > geom.detection_z_min_um + 1e-9 || *dmax < geom.detection_z_max_um - 1e-9)
        throw ArgumentError("calibration defocus values must span the detection range");

    LagWindow window = opts.search_window;
    if (window.min_px == 0.0 && window.max_px == 0.0)
        window = {16.0, flat_target.spec().tile_px / 2.0 - 16.0};

    const int tiles = flat_target.spec().tile_count();
    std::vector<CalibrationPoint> points;
    points.reserve(opts.d_values.size());
    for (std::size_t i = 0; i < opts.d_values.size(); ++i) {
        const double d = opts.d_values[i];
        const TileIndex tile{static_cast<int>(i % tiles) / flat_target.spec().cols,
                             static_cast<int>(i % tiles) % flat_target.spec().cols};
        CaptureRequest req;
        req.tile = tile;
        req.z_stage_um = flat_target.z_true(tile) + d;
        req.noise_sigma = opts.noise_sigma;
        req.seed = derive_seed(seed, {stream::calibration, i});
        const auto est = estimate_shift(render_dual_led(flat_target, geom, optics, req), window, opts.estimator);
        points.push_back({d, est.separation_px, est.quality, est.accepted});
    }
    return fit_calibration(std::move(points), geom, opts);
}

DefocusEstimate defocus_from_separation(const CalibrationCurve& curve, double separation_px) {
    DefocusEstimate out;
    out.d_um = curve.invert(separation_px);
    out.in_range = out.d_um >= curve.valid_d_min_um - curve.range_tolerance_um &&
                   out.d_um <= curve.valid_d_max_um + curve.range_tolerance_um;
    return out;
}

} // namespace dualfocus
