#include "dualfocus/survey.hpp"
#include "dualfocus/brenner.hpp"
#include "dualfocus/parallel.hpp"
#include "dualfocus/seed.hpp"
#include "dualfocus/shift_estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace dualfocus {

void SurveyConfig::validate() const {
    if (!(z_offset_um > 0.0)) throw ConfigError("z_offset must be positive");
    if (!(blur_px >= 0.0)) throw ConfigError("blur_px must be non-negative");
    if (!(quality_threshold >= 0.0)) throw ConfigError("quality_threshold must be non-negative");
    if (median_window < 3 || median_window % 2 == 0) throw ConfigError("median_window must be odd and >= 3");
    if (skip_every < 1) throw ConfigError("skip_every must be >= 1");
    if (frames_per_tile < 1) throw ConfigError("frames_per_tile must be >= 1");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
    if (!(max_reject_fraction >= 0.0 && max_reject_fraction <= 1.0))
        throw ConfigError("max_reject_fraction must lie in [0, 1]");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (scan_axis == ScanAxis::x && blur_px > 0.0 && !allow_degraded)
        throw ConfigError("scanning along x blurs along the two-copy axis; pass allow_degraded to force it");
}

std::string_view to_string(FocusSource s) {
    switch (s) {
    case FocusSource::measured: return "measured";
    case FocusSource::interpolated: return "interpolated";
    case FocusSource::missing: return "missing";
    }
    return "missing";
}

bool FocusMap::complete() const {
    return std::none_of(entries.begin(), entries.end(),
                        [](const FocusEntry& e) { return e.source == FocusSource::missing; });
}

std::size_t StageLog::axial_moves() const {
    return static_cast<std::size_t>(std::count_if(moves.begin(), moves.end(), [](const StageMove& m) {
        return m.kind == StageMove::Kind::axial;
    }));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct TileOutcome {
    FocusEntry entry;
    bool rejected = false;
    double render_s = 0.0;
    double estimate_s = 0.0;
};

} // namespace

SurveyRun run_survey(const SlideModel& model, const DefocusGeometry& geom, const OpticsParams& optics,
                     const CalibrationCurve& curve, const SurveyConfig& cfg) {
    cfg.validate();
    geom.validate();
    optics.validate();
    if (std::abs(model.spec().pixel_pitch_um - geom.pixel_pitch_um) > 1e-12)
        throw ConfigError("slide and geometry disagree on pixel pitch");
    if (!(curve.slope_px_per_um > 0.0)) throw ConfigError("calibration curve is not valid");

    const auto t_start = Clock::now();
    SurveyRun run;
    run.map.rows = model.spec().rows;
    run.map.cols = model.spec().cols;
    run.map.entries.assign(static_cast<std::size_t>(model.spec().tile_count()), FocusEntry{});
    run.map.config = cfg;
    run.map.calibration_id = curve.id();

    // Step 1: one axial move to the offset plane (nominal focal plane is 0).
    const double z_stage = 0.0 + cfg.z_offset_um;
    run.stage_log.moves.push_back({StageMove::Kind::axial, {}, z_stage});
    // Step 2: white LED off, two green LEDs on.
    run.stage_log.moves.push_back({StageMove::Kind::illumination, {}, z_stage});

    // Steps 3-4: serpentine rows at constant velocity, one capture per tile.
    const auto order = serpentine_order(run.map.rows, run.map.cols);
    for (const auto& t : order) run.stage_log.moves.push_back({StageMove::Kind::lateral, t, z_stage});

    const LagWindow window = curve.search_window();
    EstimatorOptions est_opts;
    est_opts.quality_threshold = cfg.quality_threshold;
    est_opts.median_window = cfg.median_window;

    std::vector<TileOutcome> outcomes(order.size());
    parallel_for(order.size(), cfg.workers, [&](std::size_t i) {
        TileOutcome& out = outcomes[i];
        if (i % static_cast<std::size_t>(cfg.skip_every) != 0) return;
        const TileIndex tile = order[i];

        auto t0 = Clock::now();
        const auto texture = model.texture(tile);
        Image pixels;
        for (int f = 0; f < cfg.frames_per_tile; ++f) {
            CaptureRequest req;
            req.tile = tile;
            req.z_stage_um = z_stage;
            req.blur_px = cfg.blur_px;
            req.scan_axis = cfg.scan_axis;
            req.noise_sigma = cfg.noise_sigma;
            req.seed = derive_seed(cfg.seed, {stream::survey, static_cast<std::uint64_t>(tile.row),
                                              static_cast<std::uint64_t>(tile.col), static_cast<std::uint64_t>(f)});
            Frame frame = render_dual_led(model, texture, geom, optics, req);
            if (f == 0) {
                pixels = std::move(frame.pixels);
            } else {
                auto dst = pixels.pixels();
                auto src = frame.pixels.pixels();
                for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
            }
        }
        if (cfg.frames_per_tile > 1)
            for (double& v : pixels.pixels()) v /= cfg.frames_per_tile;
        out.render_s = seconds_since(t0);

        t0 = Clock::now();
        ShiftEstimate est;
        try {
            est = estimate_shift(pixels, window, est_opts);
        } catch (const DegenerateInputError&) {
            est.accepted = false;
        }
        out.entry.quality = est.quality;
        if (!est.accepted) {
            out.rejected = true;
        } else {
            const auto d = defocus_from_separation(curve, est.separation_px);
            if (d.in_range) {
                out.entry.z_focus_um = focus_from_defocus(d.d_um, z_stage);
                out.entry.source = FocusSource::measured;
            } else {
                out.entry.out_of_range = true;
            }
        }
        out.estimate_s = seconds_since(t0);
    });

    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& out = outcomes[i];
        run.map.at(order[i]) = out.entry;
        run.timings.render_seconds += out.render_s;
        run.timings.estimate_seconds += out.estimate_s;
        if (i % static_cast<std::size_t>(cfg.skip_every) != 0)
            ++run.skipped;
        else if (out.rejected)
            ++run.rejected;
        else if (out.entry.out_of_range)
            ++run.out_of_range;
    }

    const std::size_t surveyed = order.size() - static_cast<std::size_t>(run.skipped);
    const double failed = static_cast<double>(run.rejected + run.out_of_range);
    if (failed > cfg.max_reject_fraction * static_cast<double>(surveyed)) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "survey failed: %d rejected and %d out-of-range of %zu surveyed tiles",
                      run.rejected, run.out_of_range, surveyed);
        throw SurveyFailed(msg, run.map);
    }

    run.map = fill_missing(std::move(run.map));
    run.timings.total_seconds = seconds_since(t_start);
    return run;
}

FocusMap fill_missing(FocusMap map) {
    struct Known {
        int row, col;
        double z, quality;
    };
    std::vector<Known> known;
    for (int r = 0; r < map.rows; ++r)
        for (int c = 0; c < map.cols; ++c) {
            const auto& e = map.at({r, c});
            if (e.source == FocusSource::measured) known.push_back({r, c, e.z_focus_um, e.quality});
        }
    if (map.complete()) return map;
    if (known.empty()) throw CannotFill("no measured tiles to interpolate from");

    FocusMap out = map;
    std::vector<std::pair<double, std::size_t>> by_distance;
    for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
            auto& e = out.at({r, c});
            if (e.source != FocusSource::missing) continue;

            by_distance.clear();
            for (std::size_t k = 0; k < known.size(); ++k) {
                const double dr = known[k].row - r;
                const double dc = known[k].col - c;
                by_distance.emplace_back(dr * dr + dc * dc, k);
            }
            const std::size_t take = std::min<std::size_t>(4, by_distance.size());
            // Stable on ties: nearer first, then row-major order of the measured tile.
            std::partial_sort(by_distance.begin(), by_distance.begin() + static_cast<std::ptrdiff_t>(take),
                              by_distance.end());

            double wsum = 0.0;
            double acc = 0.0;
            for (std::size_t j = 0; j < take; ++j) {
                const auto& nb = known[by_distance[j].second];
                const double w = std::max(nb.quality, 0.0) / by_distance[j].first;
                wsum += w;
                acc += w * nb.z;
            }
            if (!(wsum > 0.0)) {
                wsum = 0.0;
                acc = 0.0;
                for (std::size_t j = 0; j < take; ++j) {
                    const double w = 1.0 / by_distance[j].first;
                    wsum += w;
                    acc += w * known[by_distance[j].second].z;
                }
            }
            e.z_focus_um = acc / wsum;
            e.quality = 0.0;
            e.source = FocusSource::interpolated;
        }
    }
    return out;
}

SurveyReport verify_acquisition(const SlideModel& model, const FocusMap& map, const VerifyOptions& opts,
                                const std::vector<BrennerResult>* oracle) {
    if (!map.complete()) throw ArgumentError("focus map has tiles without a focus value; fill it first");
    SurveyReport rep;
    rep.slide_label = model.spec().label;
    rep.dof_um = opts.dof_um;
    rep.tight_um = opts.tight_um;
    rep.blur_px = map.config.blur_px;
    rep.exposure_ms = opts.exposure_ms;
    rep.derived_speed_mm_s = map.config.blur_px * opts.pixel_pitch_um / opts.exposure_ms;

    double sum = 0.0;
    std::size_t in_dof = 0;
    std::size_t in_tight = 0;
    for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
            const auto& e = map.at({r, c});
            TileResidual t;
            t.tile = {r, c};
            t.z_focus_um = e.z_focus_um;
            t.z_true_um = model.z_true({r, c});
            t.residual_um = std::abs(e.z_focus_um - t.z_true_um);
            t.source = e.source;
            if (e.source == FocusSource::measured) ++rep.n_measured;
            if (e.source == FocusSource::interpolated) ++rep.n_interpolated;
            sum += t.residual_um;
            if (t.residual_um <= opts.dof_um / 2.0) ++in_dof;
            if (t.residual_um <= opts.tight_um) ++in_tight;
            rep.max_error_um = std::max(rep.max_error_um, t.residual_um);
            rep.tiles.push_back(t);
        }
    }
    rep.n_tiles = rep.tiles.size();
    if (rep.n_tiles > 0) {
        rep.mean_error_um = sum / static_cast<double>(rep.n_tiles);
        double ss = 0.0;
        for (const auto& t : rep.tiles) ss += (t.residual_um - rep.mean_error_um) * (t.residual_um - rep.mean_error_um);
        rep.std_error_um = rep.n_tiles > 1 ? std::sqrt(ss / static_cast<double>(rep.n_tiles - 1)) : 0.0;
        rep.fraction_within_dof = static_cast<double>(in_dof) / static_cast<double>(rep.n_tiles);
        rep.fraction_within_tight = static_cast<double>(in_tight) / static_cast<double>(rep.n_tiles);
    }

    if (oracle) {
        OracleComparison cmp;
        cmp.tolerance_um = opts.oracle_tolerance_um;
        std::size_t agree = 0;
        double diff_sum = 0.0;
        for (const auto& res : *oracle) {
            if (res.tile.row < 0 || res.tile.row >= map.rows || res.tile.col < 0 || res.tile.col >= map.cols) continue;
            const double diff = std::abs(map.at(res.tile).z_focus_um - res.z_best_refined_um);
            diff_sum += diff;
            if (diff <= cmp.tolerance_um) ++agree;
            ++cmp.n_tiles;
        }
        if (cmp.n_tiles > 0) {
            cmp.agreement_fraction = static_cast<double>(agree) / static_cast<double>(cmp.n_tiles);
            cmp.mean_abs_difference_um = diff_sum / static_cast<double>(cmp.n_tiles);
        }
        rep.oracle = cmp;
    }
    return rep;
}

} // namespace dualfocus
