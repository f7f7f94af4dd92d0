#include "dualfocus/serialization.hpp"
#include "dualfocus/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

namespace dualfocus {

namespace {

double number_or_nan(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.at(key).get<double>();
}

} // namespace

void to_json(json& j, const TileIndex& t) { j = json{{"row", t.row}, {"col", t.col}}; }

void from_json(const json& j, TileIndex& t) {
    t.row = j.at("row").get<int>();
    t.col = j.at("col").get<int>();
}

void to_json(json& j, const LagWindow& w) { j = json{{"min_px", w.min_px}, {"max_px", w.max_px}}; }

void from_json(const json& j, LagWindow& w) {
    w.min_px = j.at("min_px").get<double>();
    w.max_px = j.at("max_px").get<double>();
}

void to_json(json& j, const SlideSpec& s) {
    j = json{{"label", s.label},
             {"rows", s.rows},
             {"cols", s.cols},
             {"tile_px", s.tile_px},
             {"pixel_pitch", s.pixel_pitch_um},
             {"contrast_mode", to_string(s.contrast_mode)},
             {"texture_sigma", s.texture_sigma_px},
             {"texture_gain", s.texture_gain},
             {"topo_amplitude", s.topo_amplitude_um},
             {"adjacent_limit", s.adjacent_limit_um},
             {"bump_correlation", s.bump_correlation_tiles},
             {"units",
              {{"tile_px", "px"},
               {"pixel_pitch", "um/px"},
               {"texture_sigma", "px"},
               {"topo_amplitude", "um"},
               {"adjacent_limit", "um"},
               {"bump_correlation", "tiles"}}}};
}

void from_json(const json& j, SlideSpec& s) {
    SlideSpec d;
    s.label = j.value("label", d.label);
    s.rows = j.value("rows", d.rows);
    s.cols = j.value("cols", d.cols);
    s.tile_px = j.value("tile_px", d.tile_px);
    s.pixel_pitch_um = j.value("pixel_pitch", d.pixel_pitch_um);
    s.contrast_mode = contrast_mode_from_string(j.value("contrast_mode", std::string(to_string(d.contrast_mode))));
    s.texture_sigma_px = j.value("texture_sigma", d.texture_sigma_px);
    s.texture_gain = j.value("texture_gain", d.texture_gain);
    s.topo_amplitude_um = j.value("topo_amplitude", d.topo_amplitude_um);
    s.adjacent_limit_um = j.value("adjacent_limit", d.adjacent_limit_um);
    s.bump_correlation_tiles = j.value("bump_correlation", d.bump_correlation_tiles);
}

void to_json(json& j, const DefocusGeometry& g) {
    j = json{{"z_offset", g.z_offset_um},
             {"led_half_angle", g.led_half_angle_rad},
             {"pixel_pitch", g.pixel_pitch_um},
             {"coherence_alpha", g.coherence_alpha},
             {"defocus_beta", g.defocus_beta},
             {"detection_z_min", g.detection_z_min_um},
             {"detection_z_max", g.detection_z_max_um},
             {"units",
              {{"z_offset", "um"},
               {"led_half_angle", "rad"},
               {"pixel_pitch", "um/px"},
               {"coherence_alpha", "px/um"},
               {"defocus_beta", "px/um"},
               {"detection_z_min", "um"},
               {"detection_z_max", "um"}}}};
}

void from_json(const json& j, DefocusGeometry& g) {
    DefocusGeometry d;
    g.z_offset_um = j.value("z_offset", d.z_offset_um);
    g.led_half_angle_rad = j.value("led_half_angle", d.led_half_angle_rad);
    g.pixel_pitch_um = j.value("pixel_pitch", d.pixel_pitch_um);
    g.coherence_alpha = j.value("coherence_alpha", d.coherence_alpha);
    g.defocus_beta = j.value("defocus_beta", d.defocus_beta);
    g.detection_z_min_um = j.value("detection_z_min", d.detection_z_min_um);
    g.detection_z_max_um = j.value("detection_z_max", d.detection_z_max_um);
}

void to_json(json& j, const OpticsParams& o) {
    j = json{{"transparent_dc", o.transparent_dc_um},
             {"kohler_gamma", o.kohler_gamma},
             {"kohler_transparent_contrast", o.kohler_transparent_contrast},
             {"background", o.background},
             {"noise_model", to_string(o.noise_model)},
             {"shot_photons", o.shot_photons},
             {"units",
              {{"transparent_dc", "um"},
               {"kohler_gamma", "px/um"},
               {"background", "intensity"},
               {"shot_photons", "photons/intensity"}}}};
}

void from_json(const json& j, OpticsParams& o) {
    OpticsParams d;
    o.transparent_dc_um = j.value("transparent_dc", d.transparent_dc_um);
    o.kohler_gamma = j.value("kohler_gamma", d.kohler_gamma);
    o.kohler_transparent_contrast = j.value("kohler_transparent_contrast", d.kohler_transparent_contrast);
    o.background = j.value("background", d.background);
    o.noise_model = noise_model_from_string(j.value("noise_model", std::string(to_string(d.noise_model))));
    o.shot_photons = j.value("shot_photons", d.shot_photons);
}

void to_json(json& j, const SurveyConfig& c) {
    j = json{{"z_offset", c.z_offset_um},
             {"scan_axis", to_string(c.scan_axis)},
             {"blur_px", c.blur_px},
             {"quality_threshold", c.quality_threshold},
             {"median_window", c.median_window},
             {"skip_every", c.skip_every},
             {"frames_per_tile", c.frames_per_tile},
             {"noise_sigma", c.noise_sigma},
             {"allow_degraded", c.allow_degraded},
             {"max_reject_fraction", c.max_reject_fraction},
             {"seed", c.seed},
             {"units", {{"z_offset", "um"}, {"blur_px", "px"}, {"median_window", "lags"}, {"noise_sigma", "intensity"}}}};
}

void from_json(const json& j, SurveyConfig& c) {
    SurveyConfig d;
    c.z_offset_um = j.value("z_offset", d.z_offset_um);
    c.scan_axis = scan_axis_from_string(j.value("scan_axis", std::string(to_string(d.scan_axis))));
    c.blur_px = j.value("blur_px", d.blur_px);
    c.quality_threshold = j.value("quality_threshold", d.quality_threshold);
    c.median_window = j.value("median_window", d.median_window);
    c.skip_every = j.value("skip_every", d.skip_every);
    c.frames_per_tile = j.value("frames_per_tile", d.frames_per_tile);
    c.noise_sigma = j.value("noise_sigma", d.noise_sigma);
    c.allow_degraded = j.value("allow_degraded", d.allow_degraded);
    c.max_reject_fraction = j.value("max_reject_fraction", d.max_reject_fraction);
    c.seed = j.value("seed", d.seed);
    c.workers = j.value("workers", d.workers);
}

void to_json(json& j, const CalibrationPoint& p) {
    j = json{{"d_um", p.d_um}, {"separation_px", p.separation_px}, {"quality", p.quality}, {"accepted", p.accepted}};
}

void from_json(const json& j, CalibrationPoint& p) {
    p.d_um = j.at("d_um").get<double>();
    p.separation_px = j.at("separation_px").get<double>();
    p.quality = j.at("quality").get<double>();
    p.accepted = j.at("accepted").get<bool>();
}

void to_json(json& j, const CalibrationCurve& c) {
    json bps = json::array();
    for (const auto& b : c.breakpoints) bps.push_back({{"d_um", b.d_um}, {"separation_px", b.separation_px}});
    j = json{{"slope_px_per_um", c.slope_px_per_um},
             {"intercept_px", c.intercept_px},
             {"valid_d_range", {c.valid_d_min_um, c.valid_d_max_um}},
             {"valid_lag_window", c.valid_lag_window},
             {"rms_residual_px", c.rms_residual_px},
             {"fit_model", to_string(c.fit_model)},
             {"breakpoints", bps},
             {"range_tolerance", c.range_tolerance_um},
             {"search_margin", c.search_margin_um},
             {"sample_points", c.sample_points},
             {"units",
              {{"slope_px_per_um", "px/um"},
               {"intercept_px", "px"},
               {"valid_d_range", "um"},
               {"valid_lag_window", "px"},
               {"rms_residual_px", "px"},
               {"range_tolerance", "um"},
               {"search_margin", "um"}}}};
}

void from_json(const json& j, CalibrationCurve& c) {
    c.slope_px_per_um = j.at("slope_px_per_um").get<double>();
    c.intercept_px = j.at("intercept_px").get<double>();
    const auto& range = j.at("valid_d_range");
    c.valid_d_min_um = range.at(0).get<double>();
    c.valid_d_max_um = range.at(1).get<double>();
    c.valid_lag_window = j.at("valid_lag_window").get<LagWindow>();
    c.rms_residual_px = j.at("rms_residual_px").get<double>();
    c.fit_model = fit_model_from_string(j.value("fit_model", std::string("linear")));
    c.breakpoints.clear();
    for (const auto& b : j.value("breakpoints", json::array()))
        c.breakpoints.push_back({b.at("d_um").get<double>(), b.at("separation_px").get<double>()});
    c.range_tolerance_um = j.value("range_tolerance", 0.5);
    c.search_margin_um = j.value("search_margin", 3.0);
    c.sample_points = j.value("sample_points", std::vector<CalibrationPoint>{});
}

void to_json(json& j, const FocusEntry& e) {
    j = json{{"z_focus_um", std::isfinite(e.z_focus_um) ? json(e.z_focus_um) : json(nullptr)},
             {"quality", e.quality},
             {"source", to_string(e.source)},
             {"out_of_range", e.out_of_range}};
}

void from_json(const json& j, FocusEntry& e) {
    e.z_focus_um = number_or_nan(j, "z_focus_um");
    e.quality = j.at("quality").get<double>();
    const auto src = j.at("source").get<std::string>();
    e.source = src == "measured" ? FocusSource::measured
               : src == "interpolated" ? FocusSource::interpolated
                                       : FocusSource::missing;
    e.out_of_range = j.at("out_of_range").get<bool>();
}

void to_json(json& j, const FocusMap& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            json e = m.at({r, c});
            e["row"] = r;
            e["col"] = c;
            rows.push_back(std::move(e));
        }
    }
    j = json{{"rows", m.rows},
             {"cols", m.cols},
             {"calibration_id", m.calibration_id},
             {"config", m.config},
             {"entries", rows},
             {"units", {{"z_focus_um", "um"}}}};
}

void from_json(const json& j, FocusMap& m) {
    m.rows = j.at("rows").get<int>();
    m.cols = j.at("cols").get<int>();
    m.calibration_id = j.value("calibration_id", std::string());
    m.config = j.value("config", SurveyConfig{});
    m.entries.assign(static_cast<std::size_t>(m.rows) * m.cols, FocusEntry{});
    for (const auto& e : j.at("entries")) m.at({e.at("row").get<int>(), e.at("col").get<int>()}) = e.get<FocusEntry>();
}

void to_json(json& j, const SurveyReport& r) {
    json tiles = json::array();
    for (const auto& t : r.tiles)
        tiles.push_back({{"row", t.tile.row},
                         {"col", t.tile.col},
                         {"z_focus_um", t.z_focus_um},
                         {"z_true_um", t.z_true_um},
                         {"residual_um", t.residual_um},
                         {"source", to_string(t.source)}});
    j = json{{"slide", r.slide_label},
             {"n_tiles", r.n_tiles},
             {"n_measured", r.n_measured},
             {"n_interpolated", r.n_interpolated},
             {"mean_error_um", r.mean_error_um},
             {"std_error_um", r.std_error_um},
             {"max_error_um", r.max_error_um},
             {"dof_um", r.dof_um},
             {"fraction_within_dof", r.fraction_within_dof},
             {"tight_um", r.tight_um},
             {"fraction_within_tight", r.fraction_within_tight},
             {"blur_px", r.blur_px},
             {"exposure_ms", r.exposure_ms},
             {"derived_speed_mm_s", r.derived_speed_mm_s},
             {"tiles", tiles},
             {"units",
              {{"mean_error_um", "um"},
               {"std_error_um", "um"},
               {"dof_um", "um"},
               {"blur_px", "px"},
               {"exposure_ms", "ms"},
               {"derived_speed_mm_s", "mm/s"}}}};
    if (r.oracle)
        j["oracle"] = {{"agreement_fraction", r.oracle->agreement_fraction},
                       {"tolerance_um", r.oracle->tolerance_um},
                       {"mean_abs_difference_um", r.oracle->mean_abs_difference_um},
                       {"n_tiles", r.oracle->n_tiles}};
}

void to_json(json& j, const BrennerResult& r) {
    json scores = json::array();
    for (const auto& s : r.scores) scores.push_back({{"z_um", s.z_um}, {"score", s.score}});
    j = json{{"row", r.tile.row},
             {"col", r.tile.col},
             {"z_best", r.z_best_um},
             {"z_best_quantized", r.z_best_quantized_um},
             {"z_best_refined", r.z_best_refined_um},
             {"refined", r.refined},
             {"scores", scores}};
}

void to_json(json& j, const BenchCell& c) {
    j = json{{"blur_px", c.blur_px},
             {"mean_um", c.mean_um},
             {"std_um", c.std_um},
             {"max_um", c.max_um},
             {"fraction_within_dof", c.fraction_within_dof},
             {"n_tiles", c.n_tiles},
             {"rejected", c.rejected},
             {"out_of_range", c.out_of_range}};
    if (c.reference) j["reference"] = {{"mean_um", c.reference->mean_um}, {"std_um", c.reference->std_um}};
}

void to_json(json& j, const BenchReport& r) {
    json slides = json::array();
    for (const auto& s : r.slides) {
        json e{{"label", s.label},
               {"contrast_mode", to_string(s.contrast_mode)},
               {"n_tiles", s.n_tiles},
               {"cells", s.cells}};
        if (s.oracle)
            e["oracle"] = {{"agreement_fraction", s.oracle->agreement_fraction},
                           {"tolerance_um", s.oracle->tolerance_um},
                           {"mean_abs_difference_um", s.oracle->mean_abs_difference_um},
                           {"n_tiles", s.oracle->n_tiles}};
        if (!s.error.empty()) e["error"] = s.error;
        slides.push_back(std::move(e));
    }
    j = json{{"calibration", r.calibration},
             {"calibration_id", r.calibration.id()},
             {"blur_levels", r.blur_levels},
             {"slides", slides},
             {"summary", r.summary},
             {"units", {{"blur_levels", "px"}, {"mean_um", "um"}, {"std_um", "um"}, {"max_um", "um"}}}};
}

void from_json(const json& j, BenchPlan& p) {
    p = default_bench_plan();
    if (j.contains("slides")) {
        p.slides.clear();
        for (const auto& s : j.at("slides")) {
            BenchSlide bs;
            bs.spec = s.get<SlideSpec>();
            for (const auto& r : s.value("reference", json::array()))
                bs.reference.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
            p.slides.push_back(std::move(bs));
        }
    }
    p.blur_levels = j.value("blur_levels", p.blur_levels);
    p.seed = j.value("seed", p.seed);
    if (j.contains("geometry")) p.geometry = j.at("geometry").get<DefocusGeometry>();
    if (j.contains("optics")) p.optics = j.at("optics").get<OpticsParams>();
    if (j.contains("survey")) p.survey = j.at("survey").get<SurveyConfig>();
    p.run_oracle = j.value("run_oracle", p.run_oracle);
    p.workers = j.value("workers", p.workers);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("invalid JSON in '" + path + "': " + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

std::string format_number(double v, int precision) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    // Avoid "-0.000000".
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

void write_focus_map_csv(std::ostream& os, const FocusMap& map) {
    os << "row,col,z_focus_um,quality,source,out_of_range\n";
    for (int r = 0; r < map.rows; ++r)
        for (int c = 0; c < map.cols; ++c) {
            const auto& e = map.at({r, c});
            os << r << ',' << c << ',' << format_number(e.z_focus_um) << ',' << format_number(e.quality, 3) << ','
               << to_string(e.source) << ',' << (e.out_of_range ? "true" : "false") << '\n';
        }
}

void write_oracle_csv(std::ostream& os, const std::vector<BrennerResult>& results) {
    os << "row,col,z_best,z_best_refined\n";
    for (const auto& r : results)
        os << r.tile.row << ',' << r.tile.col << ',' << format_number(r.z_best_quantized_um) << ','
           << format_number(r.z_best_refined_um) << '\n';
}

} // namespace dualfocus
