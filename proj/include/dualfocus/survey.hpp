#pragma once

#include "dualfocus/calibration.hpp"
#include "dualfocus/core.hpp"
#include "dualfocus/errors.hpp"
#include "dualfocus/optics.hpp"
#include "dualfocus/slide.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dualfocus {

struct BrennerResult;

struct SurveyConfig {
    double z_offset_um = 60.0;
    ScanAxis scan_axis = ScanAxis::y;
    /// Motion blur per frame along scan_axis (px); 0 is the static mode.
    double blur_px = 0.0;
    double quality_threshold = 3.0;
    int median_window = 31;
    /// Measure every Nth tile in visiting order; 1 measures all tiles.
    int skip_every = 1;
    /// Frames averaged per tile before estimation.
    int frames_per_tile = 1;
    double noise_sigma = 0.01;
    /// Permit blur along the two-copy axis (x).
    bool allow_degraded = false;
    /// Fraction of tiles allowed to end without a measurement before the survey fails.
    double max_reject_fraction = 0.5;
    std::uint64_t seed = 1;
    /// Worker threads; results do not depend on this.
    int workers = 1;

    /// Throws ConfigError on invalid settings, including x-scan with blur unless allow_degraded.
    void validate() const;
};

enum class FocusSource { measured, interpolated, missing };

std::string_view to_string(FocusSource s);

struct FocusEntry {
    double z_focus_um = std::numeric_limits<double>::quiet_NaN();
    double quality = 0.0;
    FocusSource source = FocusSource::missing;
    bool out_of_range = false;
};

struct FocusMap {
    int rows = 0;
    int cols = 0;
    std::vector<FocusEntry> entries;
    SurveyConfig config;
    std::string calibration_id;

    FocusEntry& at(TileIndex t) { return entries.at(static_cast<std::size_t>(t.row) * cols + t.col); }
    const FocusEntry& at(TileIndex t) const { return entries.at(static_cast<std::size_t>(t.row) * cols + t.col); }
    bool complete() const;
};

struct StageMove {
    enum class Kind { axial, lateral, illumination };
    Kind kind = Kind::lateral;
    TileIndex tile;
    double z_um = 0.0;
};

/// Every stage/illumination command issued by a survey, in order.
struct StageLog {
    std::vector<StageMove> moves;
    std::size_t axial_moves() const;
};

struct SurveyTimings {
    double render_seconds = 0.0;
    double estimate_seconds = 0.0;
    double total_seconds = 0.0;
};

struct SurveyRun {
    FocusMap map;
    StageLog stage_log;
    SurveyTimings timings;
    int rejected = 0;
    int out_of_range = 0;
    int skipped = 0;
};

class SurveyFailed : public Error {
public:
    SurveyFailed(const std::string& what, FocusMap partial) : Error(what), partial_(std::move(partial)) {}
    const FocusMap& partial_map() const noexcept { return partial_; }

private:
    FocusMap partial_;
};

class CannotFill : public Error {
public:
    using Error::Error;
};

/// Offset the stage once, switch to dual-LED light, visit tiles in serpentine
/// order, estimate each tile's focus, then fill tiles without a measurement.
SurveyRun run_survey(const SlideModel& model, const DefocusGeometry& geom, const OpticsParams& optics,
                     const CalibrationCurve& curve, const SurveyConfig& cfg);

inline FocusMap survey(const SlideModel& model, const DefocusGeometry& geom, const OpticsParams& optics,
                       const CalibrationCurve& curve, const SurveyConfig& cfg) {
    return run_survey(model, geom, optics, curve, cfg).map;
}

/// Fill missing entries by quality-weighted inverse-distance averaging of the
/// (up to) 4 nearest measured tiles. Measured entries are returned untouched.
FocusMap fill_missing(FocusMap map);

struct TileResidual {
    TileIndex tile;
    double z_focus_um = 0.0;
    double z_true_um = 0.0;
    double residual_um = 0.0;
    FocusSource source = FocusSource::measured;
};

struct OracleComparison {
    double agreement_fraction = 0.0;
    double tolerance_um = 0.5;
    double mean_abs_difference_um = 0.0;
    std::size_t n_tiles = 0;
};

struct SurveyReport {
    std::string slide_label;
    std::size_t n_tiles = 0;
    std::size_t n_measured = 0;
    std::size_t n_interpolated = 0;
    double mean_error_um = 0.0;
    double std_error_um = 0.0;
    double max_error_um = 0.0;
    double dof_um = 1.3;
    double fraction_within_dof = 0.0;
    double tight_um = 0.5;
    double fraction_within_tight = 0.0;
    double blur_px = 0.0;
    double exposure_ms = 1.0;
    /// Stage speed implied by the blur length over one exposure (mm/s).
    double derived_speed_mm_s = 0.0;
    std::vector<TileResidual> tiles;
    std::optional<OracleComparison> oracle;
};

struct VerifyOptions {
    /// Depth of field of the acquisition objective under Koehler light (um).
    double dof_um = 1.3;
    double tight_um = 0.5;
    double exposure_ms = 1.0;
    double pixel_pitch_um = 0.275;
    double oracle_tolerance_um = 0.5;
};

/// Compare a complete focus map against the simulator ground truth, and
/// optionally against Brenner oracle results (matched by tile).
SurveyReport verify_acquisition(const SlideModel& model, const FocusMap& map, const VerifyOptions& opts = {},
                                const std::vector<BrennerResult>* oracle = nullptr);

} // namespace dualfocus
