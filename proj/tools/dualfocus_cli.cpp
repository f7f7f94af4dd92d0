// Command-line front end: calibrate, survey, oracle, bench, dump-frame, dump-profile.
//
// Exit status: 0 success, 1 pipeline error, 2 usage or configuration error.

#include "dualfocus/bench.hpp"
#include "dualfocus/brenner.hpp"
#include "dualfocus/calibration.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/optics.hpp"
#include "dualfocus/pgm.hpp"
#include "dualfocus/seed.hpp"
#include "dualfocus/serialization.hpp"
#include "dualfocus/shift_estimator.hpp"
#include "dualfocus/slide.hpp"
#include "dualfocus/survey.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace df = dualfocus;

namespace {

constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

struct UsageError : df::Error {
    using Error::Error;
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> workers;
};

// Everything a subcommand may need, loaded from --config then overridden by flags.
struct Setup {
    df::SlideSpec slide;
    df::DefocusGeometry geometry;
    df::OpticsParams optics;
    df::SurveyConfig survey;
    df::CalibrationOptions calibration;
    df::BrennerOptions oracle;
    df::json bench = df::json::object();
    std::uint64_t seed = 1;
    int workers = 1;
};

Setup load_setup(const Globals& g) {
    Setup s;
    if (!g.config_path.empty()) {
        if (!std::filesystem::exists(g.config_path)) throw UsageError("config file not found: " + g.config_path);
        df::json j;
        try {
            j = df::read_json_file(g.config_path);
        } catch (const df::IoError& e) {
            throw UsageError(e.what());
        }
        try {
            if (j.contains("slide")) s.slide = j.at("slide").get<df::SlideSpec>();
            if (j.contains("geometry")) s.geometry = j.at("geometry").get<df::DefocusGeometry>();
            if (j.contains("optics")) s.optics = j.at("optics").get<df::OpticsParams>();
            if (j.contains("survey")) s.survey = j.at("survey").get<df::SurveyConfig>();
            if (j.contains("calibration")) {
                const auto& c = j.at("calibration");
                s.calibration.d_values = c.value("d_values", s.calibration.d_values);
                s.calibration.noise_sigma = c.value("noise_sigma", s.calibration.noise_sigma);
                s.calibration.fit_model =
                    df::fit_model_from_string(c.value("fit_model", std::string(df::to_string(s.calibration.fit_model))));
            }
            if (j.contains("oracle")) {
                const auto& o = j.at("oracle");
                s.oracle.n = o.value("n", s.oracle.n);
                s.oracle.step_um = o.value("step", s.oracle.step_um);
                s.oracle.noise_sigma = o.value("noise_sigma", s.oracle.noise_sigma);
                s.oracle.refine = o.value("refine", s.oracle.refine);
            }
            if (j.contains("bench")) s.bench = j.at("bench");
            s.seed = j.value("seed", s.seed);
            s.workers = j.value("workers", s.workers);
        } catch (const df::json::exception& e) {
            throw UsageError("invalid config '" + g.config_path + "': " + e.what());
        }
    }
    if (g.seed) s.seed = *g.seed;
    if (g.workers) s.workers = *g.workers;
    if (s.workers < 1) throw UsageError("--workers must be >= 1");
    s.survey.seed = df::derive_seed(s.seed, {df::stream::survey});
    s.survey.workers = s.workers;
    s.slide.pixel_pitch_um = s.geometry.pixel_pitch_um;
    return s;
}

df::SlideModel make_slide(const Setup& s) {
    return df::generate_slide(s.slide, df::derive_seed(s.seed, {df::stream::slide}));
}

df::CalibrationCurve calibrate(const Setup& s) {
    df::SlideSpec like = s.slide;
    like.contrast_mode = df::ContrastMode::stained;
    const auto target = df::calibration_target(like, df::derive_seed(s.seed, {df::stream::calibration, 0}));
    return df::run_calibration(target, s.geometry, s.optics, s.calibration,
                               df::derive_seed(s.seed, {df::stream::calibration, 1}));
}

df::CalibrationCurve load_or_calibrate(const Setup& s, const std::string& calib_path) {
    if (calib_path.empty()) return calibrate(s);
    return df::read_json_file(calib_path).get<df::CalibrationCurve>();
}

// Writes through a temporary string so "-" can mean standard output.
void emit(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw df::IoError("cannot write '" + path + "'");
    out << text;
}

df::TileIndex parse_tile(const std::string& text) {
    int r = 0;
    int c = 0;
    char comma = 0;
    std::istringstream in(text);
    if (!(in >> r >> comma >> c) || comma != ',' || !in.eof()) throw UsageError("--tile expects ROW,COL, got '" + text + "'");
    return {r, c};
}

std::string out_or(const Globals& g, const char* fallback) { return g.out.empty() ? fallback : g.out; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-LED focus-map surveying on a synthetic whole-slide simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--seed", g.seed, "Top-level random seed");
    app.add_option("--out", g.out, "Primary output path ('-' for stdout)");
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Fit the separation-vs-defocus curve on a flat target");
    std::string fit_model;
    cal->add_option("--fit-model", fit_model, "linear or piecewise_linear");

    // survey
    auto* sur = app.add_subcommand("survey", "Survey a synthetic slide into a focus map");
    std::string calib_path;
    std::optional<double> blur;
    std::string scan_axis;
    bool allow_degraded = false;
    std::optional<double> z_offset;
    std::optional<int> skip_every;
    std::string map_json;
    std::string report_json;
    sur->add_option("--calib", calib_path, "Calibration JSON (default: calibrate first)");
    sur->add_option("--blur", blur, "Motion blur per frame (px)");
    sur->add_option("--scan-axis", scan_axis, "x or y");
    sur->add_flag("--allow-degraded", allow_degraded, "Permit blur along the two-copy axis");
    sur->add_option("--z-offset", z_offset, "Stage offset before surveying (um)");
    sur->add_option("--skip-every", skip_every, "Measure every Nth tile");
    sur->add_option("--map-json", map_json, "Also write the focus map as JSON");
    sur->add_option("--report", report_json, "Write the verification report JSON");

    // oracle
    auto* ora = app.add_subcommand("oracle", "Brenner-gradient z-stack focus per tile");
    std::string oracle_map;
    std::string oracle_tile;
    ora->add_option("--map-json", oracle_map, "Centre each stack on this focus map (default: true focus)");
    ora->add_option("--tile", oracle_tile, "Only this tile, as ROW,COL");

    // bench
    auto* ben = app.add_subcommand("bench", "Error statistics across slides and blur levels");
    std::string bench_json;
    std::string bench_timings;
    bool no_oracle = false;
    ben->add_option("--calib", calib_path, "Calibration JSON (default: calibrate first)");
    ben->add_option("--json", bench_json, "Write the full report as JSON");
    ben->add_option("--timings", bench_timings, "Write wall-clock timings CSV (default: stderr)");
    ben->add_flag("--no-oracle", no_oracle, "Skip the Brenner oracle");

    // dump-frame
    auto* dfr = app.add_subcommand("dump-frame", "Render one frame to a 16-bit PGM");
    std::string frame_tile = "0,0";
    double frame_z = 60.0;
    double frame_blur = 0.0;
    std::string frame_axis = "y";
    std::string frame_light = "dual_led";
    double frame_noise = 0.01;
    dfr->add_option("--tile", frame_tile, "Tile as ROW,COL")->capture_default_str();
    dfr->add_option("--z", frame_z, "Stage position (um)")->capture_default_str();
    dfr->add_option("--blur", frame_blur, "Motion blur (px)")->capture_default_str();
    dfr->add_option("--scan-axis", frame_axis, "x or y")->capture_default_str();
    dfr->add_option("--illumination", frame_light, "dual_led or kohler")->capture_default_str();
    dfr->add_option("--noise", frame_noise, "Gaussian noise sigma")->capture_default_str();

    // dump-profile
    auto* dpr = app.add_subcommand("dump-profile", "Autocorrelation profile of a PGM frame as CSV");
    std::string profile_frame;
    std::vector<double> profile_window;
    dpr->add_option("--frame", profile_frame, "Input PGM")->required();
    dpr->add_option("--window", profile_window, "Peak search window MIN MAX (px)")->expected(2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        Setup s = load_setup(g);

        if (*cal) {
            if (!fit_model.empty()) s.calibration.fit_model = df::fit_model_from_string(fit_model);
            const auto curve = calibrate(s);
            emit(out_or(g, "calibration.json"), df::json(curve).dump(2) + "\n");
            std::fprintf(stderr, "slope %.6f px/um, intercept %.4f px, rms %.4f px\n", curve.slope_px_per_um,
                         curve.intercept_px, curve.rms_residual_px);
        } else if (*sur) {
            if (blur) s.survey.blur_px = *blur;
            if (!scan_axis.empty()) s.survey.scan_axis = df::scan_axis_from_string(scan_axis);
            if (allow_degraded) s.survey.allow_degraded = true;
            if (z_offset) s.survey.z_offset_um = *z_offset;
            if (skip_every) s.survey.skip_every = *skip_every;
            s.survey.validate();
            const auto curve = load_or_calibrate(s, calib_path);
            const auto model = make_slide(s);
            const auto run = df::run_survey(model, s.geometry, s.optics, curve, s.survey);
            std::ostringstream csv;
            df::write_focus_map_csv(csv, run.map);
            emit(out_or(g, "focus_map.csv"), csv.str());
            if (!map_json.empty()) emit(map_json, df::json(run.map).dump(2) + "\n");
            if (!report_json.empty())
                emit(report_json, df::json(df::verify_acquisition(model, run.map)).dump(2) + "\n");
            std::fprintf(stderr, "%d tiles, %d rejected, %d out of range; estimate %.3f s, total %.3f s\n",
                         model.spec().tile_count(), run.rejected, run.out_of_range, run.timings.estimate_seconds,
                         run.timings.total_seconds);
        } else if (*ora) {
            const auto model = make_slide(s);
            std::optional<df::FocusMap> centre;
            if (!oracle_map.empty()) centre = df::read_json_file(oracle_map).get<df::FocusMap>();
            std::vector<df::TileIndex> tiles;
            if (!oracle_tile.empty()) {
                tiles.push_back(parse_tile(oracle_tile));
                if (!model.contains(tiles.back())) throw UsageError("--tile outside the slide");
            } else {
                for (int r = 0; r < model.spec().rows; ++r)
                    for (int c = 0; c < model.spec().cols; ++c) tiles.push_back({r, c});
            }
            std::vector<df::BrennerResult> results;
            for (const auto& t : tiles) {
                const double z0 = centre ? centre->at(t).z_focus_um : model.z_true(t);
                results.push_back(df::find_focus_brenner(
                    model, s.optics, t, z0, s.oracle,
                    df::derive_seed(s.seed, {df::stream::kohler, static_cast<std::uint64_t>(t.row),
                                             static_cast<std::uint64_t>(t.col)})));
            }
            std::ostringstream csv;
            df::write_oracle_csv(csv, results);
            emit(out_or(g, "oracle.csv"), csv.str());
        } else if (*ben) {
            df::BenchPlan plan = s.bench.get<df::BenchPlan>();
            if (!s.bench.contains("seed") || g.seed) plan.seed = s.seed;
            if (!s.bench.contains("workers") || g.workers) plan.workers = s.workers;
            if (no_oracle) plan.run_oracle = false;
            std::optional<df::CalibrationCurve> curve;
            if (!calib_path.empty()) curve = df::read_json_file(calib_path).get<df::CalibrationCurve>();
            auto write_all = [&](const df::BenchReport& rep) {
                std::ostringstream csv;
                df::write_bench_csv(csv, rep);
                emit(out_or(g, "bench.csv"), csv.str());
                if (!bench_json.empty()) emit(bench_json, df::json(rep).dump(2) + "\n");
                std::ostringstream timings;
                df::write_bench_timings(timings, rep);
                if (bench_timings.empty())
                    std::cerr << timings.str();
                else
                    emit(bench_timings, timings.str());
            };
            try {
                write_all(df::run_bench(plan, curve));
            } catch (const df::BenchFailed& e) {
                write_all(e.partial_report());
                throw;
            }
        } else if (*dfr) {
            const auto model = make_slide(s);
            const auto tile = parse_tile(frame_tile);
            if (!model.contains(tile)) throw UsageError("--tile outside the slide");
            const auto light = df::illumination_from_string(frame_light);
            const auto seed = df::derive_seed(s.seed, {df::stream::capture});
            df::Frame frame;
            if (light == df::Illumination::kohler) {
                frame = df::render_kohler(model, model.texture(tile), s.optics, tile, frame_z, frame_noise, seed);
            } else {
                df::CaptureRequest req;
                req.tile = tile;
                req.z_stage_um = frame_z;
                req.blur_px = frame_blur;
                req.scan_axis = df::scan_axis_from_string(frame_axis);
                req.noise_sigma = frame_noise;
                req.seed = seed;
                frame = df::render_dual_led(model, s.geometry, s.optics, req);
            }
            df::write_pgm(out_or(g, "frame.pgm"), frame.pixels);
        } else if (*dpr) {
            const auto img = df::read_pgm(profile_frame);
            const auto profile = df::autocorrelate_1d(img);
            std::ostringstream csv;
            csv << "lag,value\n";
            for (int lag = profile.min_lag(); lag <= profile.max_lag(); ++lag)
                csv << lag << ',' << df::format_number(profile.at(lag), 9) << '\n';
            emit(out_or(g, "profile.csv"), csv.str());
            df::LagWindow window{16.0, img.width() / 2.0 - 16.0};
            if (profile_window.size() == 2) window = {profile_window[0], profile_window[1]};
            const auto est = df::find_separation(profile, window);
            std::printf("separation_px %.4f quality %.3f accepted %s\n", est.separation_px, est.quality,
                        est.accepted ? "true" : "false");
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const df::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitPipeline;
    }
    return 0;
}
